//! Atoms and formulas, with canonical simplification, negation normal form
//! and capture-checked substitution.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::{valuation, ValN};
use crate::error::{Error, Result};
use crate::term::Term;

/// The three atom kinds every surface construct normalizes to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// `t = 0`
    Eq(Term),
    /// `D_m(t)`: `m` divides `t`.
    Div(BigInt, Term),
    /// `v_p(lhs) + k <= v_p(rhs)`, read with `v_p(0) = inf` and `inf + k = inf`.
    ValLe { p: u64, k: i64, lhs: Term, rhs: Term },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

/// A possibly negated atom. Negative literals only ever wrap `Eq` or `Div`
/// once in negation normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

fn pv(p: u64, n: &BigInt) -> i64 {
    match valuation(p, n) {
        ValN::Fin(v) => v as i64,
        ValN::Infinity => unreachable!("valuation of a nonzero content"),
    }
}

impl Atom {
    pub fn eq(t: Term) -> Atom {
        Atom::Eq(t)
    }

    pub fn div(m: impl Into<BigInt>, t: Term) -> Atom {
        Atom::Div(m.into(), t)
    }

    pub fn val_le(p: u64, k: i64, lhs: Term, rhs: Term) -> Atom {
        Atom::ValLe { p, k, lhs, rhs }
    }

    /// `v_p(t) >= c`
    pub fn val_ge_const(p: u64, t: Term, c: i64) -> Atom {
        Atom::val_le(p, c, Term::one(), t)
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Eq(t) | Atom::Div(_, t) => vec![t],
            Atom::ValLe { lhs, rhs, .. } => vec![lhs, rhs],
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.terms().iter().any(|t| t.mentions(var))
    }

    pub fn is_ground(&self) -> bool {
        self.terms().iter().all(|t| t.is_ground())
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Atom {
        match self {
            Atom::Eq(t) => Atom::Eq(f(t)),
            Atom::Div(m, t) => Atom::Div(m.clone(), f(t)),
            Atom::ValLe { p, k, lhs, rhs } => Atom::ValLe {
                p: *p,
                k: *k,
                lhs: f(lhs),
                rhs: f(rhs),
            },
        }
    }

    /// Canonical form of the atom; ground atoms fold to `True`/`False`.
    pub fn canonical(&self) -> Formula {
        match self {
            Atom::Eq(t) => {
                if t.is_ground() {
                    return Formula::from_bool(t.constant_part().is_zero());
                }
                let g = t.coeff_content();
                if !t.constant_part().is_multiple_of(&g) {
                    return Formula::False;
                }
                Formula::Atom(Atom::Eq(t.div_exact(&g).sign_normalized()))
            }
            Atom::Div(m, t) => {
                if m.is_one() {
                    return Formula::True;
                }
                let r = t.reduce_mod(m);
                let g = m.gcd(&r.content());
                let m2 = m / &g;
                let r = r.div_exact(&g);
                if m2.is_one() {
                    return Formula::True;
                }
                if r.is_ground() {
                    return Formula::from_bool(r.constant_part().is_zero());
                }
                Formula::Atom(Atom::Div(m2, r))
            }
            Atom::ValLe { p, k, lhs, rhs } => {
                let p = *p;
                if rhs.is_zero() {
                    return Formula::True;
                }
                if lhs.is_zero() {
                    return Atom::Eq(rhs.clone()).canonical();
                }
                let g1 = lhs.content();
                let g2 = rhs.content();
                let k = *k + pv(p, &g1) - pv(p, &g2);
                let lhs = lhs.div_exact(&g1).sign_normalized();
                let rhs = rhs.div_exact(&g2).sign_normalized();
                if lhs == rhs {
                    if k <= 0 {
                        return Formula::True;
                    }
                    return Atom::Eq(lhs).canonical();
                }
                if lhs.is_ground() && k <= 0 {
                    return Formula::True;
                }
                if rhs.is_ground() && k > 0 {
                    return Formula::False;
                }
                Formula::Atom(Atom::ValLe { p, k, lhs, rhs })
            }
        }
    }

    /// The negation as a formula in negation normal form.
    pub fn negated(&self) -> Formula {
        match self {
            Atom::Eq(_) | Atom::Div(..) => Formula::Not(Box::new(Formula::Atom(self.clone()))),
            Atom::ValLe { p, k, lhs, rhs } => Formula::And(vec![
                Formula::Atom(Atom::val_le(*p, 1 - k, rhs.clone(), lhs.clone())),
                Formula::Not(Box::new(Formula::Atom(Atom::Eq(rhs.clone())))),
            ]),
        }
    }
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { positive: true, atom }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { positive: false, atom }
    }

    pub fn to_formula(&self) -> Formula {
        let a = Formula::Atom(self.atom.clone());
        if self.positive {
            a
        } else {
            Formula::Not(Box::new(a))
        }
    }

    /// Reads a literal back from a canonical formula leaf.
    pub fn from_formula(f: &Formula) -> Option<Literal> {
        match f {
            Formula::Atom(a) => Some(Literal::pos(a.clone())),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(a) => Some(Literal::neg(a.clone())),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.atom.mentions(var)
    }
}

impl Formula {
    pub fn from_bool(b: bool) -> Formula {
        if b {
            Formula::True
        } else {
            Formula::False
        }
    }

    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::True,
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::And(parts),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::False,
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Or(vec![Formula::not(a), b])
    }

    pub fn exists(var: &str, body: Formula) -> Formula {
        Formula::Exists(var.to_string(), Box::new(body))
    }

    pub fn forall(var: &str, body: Formula) -> Formula {
        Formula::Forall(var.to_string(), Box::new(body))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|f| f.is_quantifier_free()),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    pub fn quantifier_count(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(f) => f.quantifier_count(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(|f| f.quantifier_count()).sum(),
            Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.quantifier_count(),
        }
    }

    /// Number of atom occurrences.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 0,
            Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.size(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(|f| f.size()).sum(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                for t in a.terms() {
                    for v in t.vars() {
                        if !bound.iter().any(|b| b == v) {
                            out.insert(v.to_string());
                        }
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable name appearing anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_names(&mut out);
        out
    }

    fn visit_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                for t in a.terms() {
                    t.collect_vars(out);
                }
            }
            Formula::Not(f) => f.visit_names(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit_names(out)),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                out.insert(v.clone());
                f.visit_names(out);
            }
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.free_vars().contains(var)
    }

    pub fn map_atoms(&self, f: &impl Fn(&Atom) -> Formula) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => f(a),
            Formula::Not(g) => Formula::not(g.map_atoms(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_atoms(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_atoms(f)).collect()),
            Formula::Exists(v, g) => Formula::Exists(v.clone(), Box::new(g.map_atoms(f))),
            Formula::Forall(v, g) => Formula::Forall(v.clone(), Box::new(g.map_atoms(f))),
        }
    }

    /// Replaces the free occurrences of `var` by `t`, then re-canonicalizes.
    pub fn substitute(&self, var: &str, t: &Term) -> Result<Formula> {
        Ok(canonicalize(&self.substitute_raw(var, t)?))
    }

    pub(crate) fn substitute_raw(&self, var: &str, t: &Term) -> Result<Formula> {
        Ok(match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.map_terms(|s| s.substitute(var, t))),
            Formula::Not(g) => Formula::not(g.substitute_raw(var, t)?),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.substitute_raw(var, t)).collect::<Result<_>>()?),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.substitute_raw(var, t)).collect::<Result<_>>()?),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                if v == var {
                    return Ok(self.clone());
                }
                if t.mentions(v) && g.mentions(var) {
                    return Err(Error::Capture(var.to_string()));
                }
                let body = Box::new(g.substitute_raw(var, t)?);
                match self {
                    Formula::Exists(..) => Formula::Exists(v.clone(), body),
                    _ => Formula::Forall(v.clone(), body),
                }
            }
        })
    }

    /// Renames a bound or free variable everywhere (no capture checks).
    pub(crate) fn rename_var(&self, from: &str, to: &str) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.map_terms(|s| s.rename(from, to))),
            Formula::Not(g) => Formula::not(g.rename_var(from, to)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.rename_var(from, to)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.rename_var(from, to)).collect()),
            Formula::Exists(v, g) => {
                let v = if v == from { to.to_string() } else { v.clone() };
                Formula::Exists(v, Box::new(g.rename_var(from, to)))
            }
            Formula::Forall(v, g) => {
                let v = if v == from { to.to_string() } else { v.clone() };
                Formula::Forall(v, Box::new(g.rename_var(from, to)))
            }
        }
    }
}

/// Negation normal form: negations reach atoms, quantifiers are dualized,
/// and a negated valuation comparison flips sides with a unit shift
/// (`!(v(a)+k <= v(b))` becomes `v(b)+1-k <= v(a) && b != 0`).
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, false)
}

fn nnf(f: &Formula, negate: bool) -> Formula {
    match (f, negate) {
        (Formula::True, false) | (Formula::False, true) => Formula::True,
        (Formula::True, true) | (Formula::False, false) => Formula::False,
        (Formula::Atom(a), false) => Formula::Atom(a.clone()),
        (Formula::Atom(a), true) => a.negated(),
        (Formula::Not(g), _) => nnf(g, !negate),
        (Formula::And(gs), false) => Formula::And(gs.iter().map(|g| nnf(g, false)).collect()),
        (Formula::And(gs), true) => Formula::Or(gs.iter().map(|g| nnf(g, true)).collect()),
        (Formula::Or(gs), false) => Formula::Or(gs.iter().map(|g| nnf(g, false)).collect()),
        (Formula::Or(gs), true) => Formula::And(gs.iter().map(|g| nnf(g, true)).collect()),
        (Formula::Exists(v, g), false) => Formula::Exists(v.clone(), Box::new(nnf(g, false))),
        (Formula::Exists(v, g), true) => Formula::Forall(v.clone(), Box::new(nnf(g, true))),
        (Formula::Forall(v, g), false) => Formula::Forall(v.clone(), Box::new(nnf(g, false))),
        (Formula::Forall(v, g), true) => Formula::Exists(v.clone(), Box::new(nnf(g, true))),
    }
}

/// Canonical form: negation normal form, canonical atoms, flattened and
/// sorted connectives, constants folded. Idempotent.
pub fn canonicalize(f: &Formula) -> Formula {
    let mut cur = simplify(&to_nnf(f));
    loop {
        let next = simplify(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn complement(f: &Formula) -> Option<Formula> {
    match f {
        Formula::Atom(a @ (Atom::Eq(_) | Atom::Div(..))) => Some(Formula::not(Formula::Atom(a.clone()))),
        Formula::Not(g) => match g.as_ref() {
            Formula::Atom(_) => Some((**g).clone()),
            _ => None,
        },
        _ => None,
    }
}

fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(a) => a.canonical(),
        Formula::Not(g) => match simplify(g) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(a) => match a {
                Atom::ValLe { .. } => simplify(&a.negated()),
                _ => Formula::not(Formula::Atom(a)),
            },
            Formula::Not(h) => *h,
            other => simplify(&nnf(&other, true)),
        },
        Formula::And(gs) => {
            let mut parts = Vec::new();
            for g in gs {
                match simplify(g) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    Formula::And(hs) => parts.extend(hs),
                    h => parts.push(h),
                }
            }
            parts.sort();
            parts.dedup();
            for p in &parts {
                if let Some(c) = complement(p) {
                    if parts.binary_search(&c).is_ok() {
                        return Formula::False;
                    }
                }
            }
            Formula::and(parts)
        }
        Formula::Or(gs) => {
            let mut parts = Vec::new();
            for g in gs {
                match simplify(g) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    Formula::Or(hs) => parts.extend(hs),
                    h => parts.push(h),
                }
            }
            parts.sort();
            parts.dedup();
            for p in &parts {
                if let Some(c) = complement(p) {
                    if parts.binary_search(&c).is_ok() {
                        return Formula::True;
                    }
                }
            }
            Formula::or(parts)
        }
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let body = simplify(g);
            if !body.mentions(v) {
                return body;
            }
            match f {
                Formula::Exists(..) => Formula::Exists(v.clone(), Box::new(body)),
                _ => Formula::Forall(v.clone(), Box::new(body)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Term {
        Term::var("x")
    }

    #[test]
    fn div_one_is_true() {
        assert_eq!(Atom::div(1, x()).canonical(), Formula::True);
        assert_eq!(Atom::div(3, Term::constant(6)).canonical(), Formula::True);
        assert_eq!(Atom::div(3, Term::constant(7)).canonical(), Formula::False);
    }

    #[test]
    fn div_content_is_divided_out() {
        let t = &x().scale(&BigInt::from(2)) + &Term::constant(4);
        assert_eq!(
            Atom::div(6, t).canonical(),
            Formula::Atom(Atom::div(3, &x() + &Term::constant(2)))
        );
    }

    #[test]
    fn val_le_content_becomes_offset() {
        // v2(4x) >= 3  <=>  v2(x) >= 1
        let a = Atom::val_ge_const(2, x().scale(&BigInt::from(4)), 3);
        assert_eq!(a.canonical(), Formula::Atom(Atom::val_ge_const(2, x(), 1)));
        // v2(x) >= 0 is trivial
        assert_eq!(Atom::val_ge_const(2, x(), 0).canonical(), Formula::True);
        // v2(x) + 1 <= v2(x) forces x = 0
        assert_eq!(Atom::val_le(2, 1, x(), x()).canonical(), Formula::Atom(Atom::Eq(x())));
    }

    #[test]
    fn nnf_examples() {
        let a = Formula::Atom(Atom::div(2, x()));
        let b = Formula::Atom(Atom::div(3, x()));
        let f = Formula::not(Formula::And(vec![a.clone(), b.clone()]));
        assert_eq!(
            to_nnf(&f),
            Formula::Or(vec![Formula::not(a.clone()), Formula::not(b.clone())])
        );
        let e = Formula::not(Formula::exists("x", a.clone()));
        assert_eq!(to_nnf(&e), Formula::forall("x", Formula::not(a)));
        let y = Term::var("y");
        let v = Formula::not(Formula::Atom(Atom::val_le(2, 0, x(), y.clone())));
        assert_eq!(
            to_nnf(&v),
            Formula::And(vec![
                Formula::Atom(Atom::val_le(2, 1, y.clone(), x())),
                Formula::not(Formula::Atom(Atom::Eq(y))),
            ])
        );
    }

    #[test]
    fn substitution_grounds_out() {
        let f = Formula::Atom(Atom::Eq(x()));
        assert_eq!(f.substitute("x", &Term::constant(6)).unwrap(), Formula::False);
        let g = Formula::exists("y", Formula::Atom(Atom::Eq(&x() - &Term::var("y"))));
        assert!(matches!(g.substitute("x", &Term::var("y")), Err(Error::Capture(_))));
    }

    #[test]
    fn complementary_literals_fold() {
        let a = Formula::Atom(Atom::div(2, x()));
        assert_eq!(
            canonicalize(&Formula::And(vec![a.clone(), Formula::not(a.clone())])),
            Formula::False
        );
        assert_eq!(
            canonicalize(&Formula::Or(vec![a.clone(), Formula::not(a)])),
            Formula::True
        );
    }
}
