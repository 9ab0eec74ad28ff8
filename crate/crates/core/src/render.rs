//! Concrete syntax printing. The output re-parses to the same canonical
//! formula.

use std::fmt;

use crate::formula::{Atom, Formula};
use crate::term::Term;

fn is_unit(t: &Term) -> bool {
    t == &Term::one()
}

fn write_equation(f: &mut fmt::Formatter<'_>, t: &Term, op: &str) -> fmt::Result {
    let lin = t.linear_part();
    let c = -t.constant_part();
    if lin.is_zero() {
        return write!(f, "{} {op} 0", t.constant_part());
    }
    write!(f, "{lin} {op} {c}")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Eq(t) => write_equation(f, t, "="),
            Atom::Div(m, t) => write!(f, "D{m}({t})"),
            Atom::ValLe { p, k, lhs, rhs } => {
                let k = *k;
                if is_unit(lhs) {
                    write!(f, "v{p}({rhs}) >= {k}")
                } else if is_unit(rhs) {
                    match k {
                        0 => write!(f, "v{p}({lhs}) <= 0"),
                        k if k < 0 => write!(f, "v{p}({lhs}) <= {}", -k),
                        k => write!(f, "v{p}({lhs}) + {k} <= 0"),
                    }
                } else {
                    match k {
                        0 => write!(f, "v{p}({lhs}) <= v{p}({rhs})"),
                        k if k > 0 => write!(f, "v{p}({lhs}) + {k} <= v{p}({rhs})"),
                        k => write!(f, "v{p}({lhs}) <= v{p}({rhs}) + {}", -k),
                    }
                }
            }
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, parent_is_and: bool) -> fmt::Result {
    let wrap = match child {
        Formula::Or(_) => parent_is_and,
        Formula::Exists(..) | Formula::Forall(..) => true,
        _ => false,
    };
    if wrap {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => match g.as_ref() {
                Formula::Atom(Atom::Eq(t)) => write_equation(f, t, "!="),
                Formula::Atom(a) => write!(f, "!{a}"),
                other => write!(f, "!({other})"),
            },
            Formula::And(gs) | Formula::Or(gs) => {
                let is_and = matches!(self, Formula::And(_));
                let sep = if is_and { " && " } else { " || " };
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write_child(f, g, is_and)?;
                }
                Ok(())
            }
            Formula::Exists(v, g) => write!(f, "E {v}. {g}"),
            Formula::Forall(v, g) => write!(f, "A {v}. {g}"),
        }
    }
}

/// Prints a formula in concrete syntax.
pub fn render(f: &Formula) -> String {
    f.to_string()
}
