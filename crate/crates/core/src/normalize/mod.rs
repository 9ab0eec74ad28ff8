//! Rewrite passes that bring a conjunction of literals in one variable to
//! the normal form: one congruence with modulus coprime to every prime,
//! disequalities, and per prime a list of lower bounds (balls the variable
//! must lie in) and upper bounds (holes it must avoid).

mod bounds;
mod congruence;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{lcm, split_prime_power, valuation, ValN};
use crate::error::{Error, Result};
use crate::formula::{canonicalize, Atom, Formula, Literal};
use crate::primes::PrimeSet;
use crate::term::Term;

pub use bounds::{reduce_bounds, ReducedBounds};
pub use congruence::{merge_congruences, split_congruence, split_prime_part, Congruence, CongruenceLit, PrimeParts};

/// A quantifier-free guard on the parameters paired with what holds under it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guarded<T> {
    pub guard: Formula,
    pub body: T,
}

/// `v_p(base) + offset` where `base` does not mention the eliminated
/// variable and is assumed nonzero; `base = 1` makes it a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValExpr {
    pub base: Term,
    pub offset: i64,
}

impl ValExpr {
    pub fn constant(c: i64) -> ValExpr {
        ValExpr {
            base: Term::one(),
            offset: c,
        }
    }

    pub fn new(base: Term, offset: i64) -> ValExpr {
        ValExpr { base, offset }
    }

    pub fn shifted(&self, d: i64) -> ValExpr {
        ValExpr::new(self.base.clone(), self.offset + d)
    }

    /// Value for a ground base.
    pub fn value(&self, p: u64) -> Option<i64> {
        if !self.base.is_ground() {
            return None;
        }
        match valuation(p, self.base.constant_part()) {
            ValN::Fin(v) => Some(v as i64 + self.offset),
            ValN::Infinity => None,
        }
    }

    /// `self <= other`
    pub fn le(&self, p: u64, other: &ValExpr) -> Formula {
        Formula::Atom(Atom::val_le(
            p,
            self.offset - other.offset,
            self.base.clone(),
            other.base.clone(),
        ))
    }

    /// `self < other`
    pub fn lt(&self, p: u64, other: &ValExpr) -> Formula {
        Formula::Atom(Atom::val_le(
            p,
            self.offset - other.offset + 1,
            self.base.clone(),
            other.base.clone(),
        ))
    }

    /// `v_p(t) >= self`
    pub fn below_val_of(&self, p: u64, t: Term) -> Formula {
        Formula::Atom(Atom::val_le(p, self.offset, self.base.clone(), t))
    }

    pub fn show(&self, p: u64) -> String {
        if self.base == Term::one() {
            return self.offset.to_string();
        }
        match self.offset {
            0 => format!("v{p}({})", self.base),
            o if o > 0 => format!("v{p}({}) + {o}", self.base),
            o => format!("v{p}({}) - {}", self.base, -o),
        }
    }
}

/// `v_p(y - center) >= threshold`: membership in the ball around `center`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bound {
    pub center: Term,
    pub threshold: ValExpr,
}

impl Bound {
    pub fn new(center: Term, threshold: ValExpr) -> Bound {
        Bound { center, threshold }
    }

    /// The whole line: `v_p(y) >= 0`.
    pub fn everything() -> Bound {
        Bound::new(Term::zero(), ValExpr::constant(0))
    }

    /// `point` lies in this ball.
    pub fn holds_at(&self, p: u64, point: &Term) -> Formula {
        self.threshold.below_val_of(p, point - &self.center)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrimeBounds {
    pub lowers: Vec<Bound>,
    pub uppers: Vec<Bound>,
}

/// A literal in the scaled variable `y`, whose coefficient is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum YLit {
    Lower(u64, Bound),
    Upper(u64, Bound),
    /// `m | y + shift`, or its negation.
    Cong(CongruenceLit),
    /// `y + shift != 0`
    Diseq(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalForm1V {
    pub var: String,
    /// The variable of this form is `scale` times the original one.
    pub scale: BigInt,
    pub congruence: Congruence,
    pub disequalities: Vec<Term>,
    pub per_prime: BTreeMap<u64, PrimeBounds>,
}

fn y_term(y: &str, shift: &Term) -> Term {
    &Term::var(y) + shift
}

impl YLit {
    /// The literal as a formula in `y` (not canonicalized, so the unit
    /// coefficient stays visible).
    pub fn to_formula(&self, y: &str) -> Formula {
        match self {
            YLit::Lower(p, b) => b.holds_at(*p, &Term::var(y)),
            YLit::Upper(p, b) => Formula::not(b.holds_at(*p, &Term::var(y))),
            YLit::Cong(c) => c.to_formula(y),
            YLit::Diseq(s) => Formula::not(Formula::Atom(Atom::Eq(y_term(y, s)))),
        }
    }
}

impl fmt::Display for NormalForm1V {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let y = &self.var;
        writeln!(f, "{y} = {} * (original variable)", self.scale)?;
        let rs: Vec<String> = self.congruence.residues.iter().map(|r| r.to_string()).collect();
        writeln!(
            f,
            "congruence: {y} mod {} in {{{}}}",
            self.congruence.modulus,
            rs.join(", ")
        )?;
        for d in &self.disequalities {
            writeln!(f, "disequality: {} != 0", y_term(y, d))?;
        }
        for (p, pb) in &self.per_prime {
            for b in &pb.lowers {
                writeln!(
                    f,
                    "p={p} lower: v{p}({}) >= {}",
                    y_term(y, &-&b.center),
                    b.threshold.show(*p)
                )?;
            }
            for b in &pb.uppers {
                writeln!(
                    f,
                    "p={p} upper: v{p}({}) < {}",
                    y_term(y, &-&b.center),
                    b.threshold.show(*p)
                )?;
            }
        }
        Ok(())
    }
}

fn split_var(t: &Term, x: &str) -> (BigInt, Term) {
    (t.coeff(x), t.without(x))
}

/// Rewrites a valuation comparison with the variable on both sides into one
/// where it occurs on one side only. With both sides scaled to the common
/// coefficient `C` and `z = C*x`, the atom `v(z + b1) + k <= v(z + b2)`
/// with `d = b2 - b1` is equivalent to `v(z + b1) + k <= v(d)` when
/// `k <= 0` and to `v(d) + k <= v(z + b2)` when `k > 0`.
pub fn one_sided_valuations(atom: &Atom, x: &str) -> Formula {
    let Atom::ValLe { p, k, lhs, rhs } = atom else {
        return canonicalize(&Formula::Atom(atom.clone()));
    };
    let (c1, _) = split_var(lhs, x);
    let (c2, _) = split_var(rhs, x);
    if c1.is_zero() || c2.is_zero() {
        return canonicalize(&Formula::Atom(atom.clone()));
    }
    let c = c1.lcm(&c2);
    let f1 = &c / &c1;
    let f2 = &c / &c2;
    let vf = |n: &BigInt| valuation(*p, n).finite().expect("nonzero") as i64;
    let k = *k - vf(&f1) + vf(&f2);
    let t1 = lhs.scale(&f1);
    let t2 = rhs.scale(&f2);
    let d = &t2 - &t1;
    let out = if k <= 0 {
        Atom::val_le(*p, k, t1, d)
    } else {
        Atom::val_le(*p, k, d, t2)
    };
    canonicalize(&Formula::Atom(out))
}

/// A literal in `x` with its `x`-coefficient pulled out.
enum Classified {
    Lower(u64, BigInt, Term, ValExpr),
    Upper(u64, BigInt, Term, ValExpr),
    Cong(BigInt, bool, BigInt, Term),
    Diseq(BigInt, Term),
}

fn classify(lit: &Literal, x: &str) -> Result<Classified> {
    let bad = || Error::IllFormed(format!("literal `{}` is not in normal-form shape", lit.to_formula()));
    Ok(match (&lit.atom, lit.positive) {
        (Atom::Eq(t), false) => {
            let (c, rest) = split_var(t, x);
            Classified::Diseq(c, rest)
        }
        (Atom::Div(m, t), pos) => {
            let (c, rest) = split_var(t, x);
            Classified::Cong(m.clone(), pos, c, rest)
        }
        (Atom::ValLe { p, k, lhs, rhs }, true) => match (lhs.mentions(x), rhs.mentions(x)) {
            (false, true) => {
                let (c, rest) = split_var(rhs, x);
                Classified::Lower(*p, c, rest, ValExpr::new(lhs.clone(), *k))
            }
            (true, false) => {
                let (c, rest) = split_var(lhs, x);
                Classified::Upper(*p, c, rest, ValExpr::new(rhs.clone(), 1 - *k))
            }
            _ => return Err(bad()),
        },
        _ => return Err(bad()),
    })
}

/// Scales every literal so the variable has coefficient `N` (the lcm of
/// the coefficients) and renames `N*x` to `x`. Valuation thresholds shift
/// by `v_p(N/c)`; moduli grow by `|N/c|`; `D_N(x)` records the scaling.
pub fn unify_coefficient(lits: &[Literal], x: &str) -> Result<(BigInt, Vec<YLit>)> {
    let classified: Vec<Classified> = lits
        .iter()
        .filter(|l| l.mentions(x))
        .map(|l| classify(l, x))
        .collect::<Result<_>>()?;
    let n = classified.iter().fold(BigInt::one(), |acc, c| {
        let coeff = match c {
            Classified::Lower(_, c, ..) | Classified::Upper(_, c, ..) | Classified::Diseq(c, _) => c,
            Classified::Cong(_, _, c, _) => c,
        };
        lcm(&acc, &coeff.abs())
    });
    let shift_of = |p: u64, f: &BigInt| valuation(p, f).finite().expect("nonzero") as i64;
    let mut out = Vec::new();
    for c in classified {
        out.push(match c {
            Classified::Lower(p, c, rest, thr) => {
                let f = &n / &c;
                let e = shift_of(p, &f);
                YLit::Lower(p, Bound::new(-rest.scale(&f), thr.shifted(e)))
            }
            Classified::Upper(p, c, rest, thr) => {
                let f = &n / &c;
                let e = shift_of(p, &f);
                YLit::Upper(p, Bound::new(-rest.scale(&f), thr.shifted(e)))
            }
            Classified::Cong(m, positive, c, rest) => {
                if c.is_zero() {
                    return Err(Error::IllFormed("congruence without the variable".into()));
                }
                let f = &n / &c;
                YLit::Cong(CongruenceLit {
                    modulus: &m * f.abs(),
                    positive,
                    coeff: BigInt::one(),
                    shift: rest.scale(&f),
                })
            }
            Classified::Diseq(c, rest) => YLit::Diseq(rest.scale(&(&n / &c))),
        });
    }
    if !n.is_one() {
        out.push(YLit::Cong(CongruenceLit {
            modulus: n.clone(),
            positive: true,
            coeff: BigInt::one(),
            shift: Term::zero(),
        }));
    }
    Ok((n, out))
}

/// A negated congruence `not D_m(y + s)` with `m = m' * prod p^k` holds iff
/// `not D_m'(y + s)` or some `v_p(y + s) < k`; these are its alternatives.
#[derive(Debug, Clone)]
enum NegAlt {
    Cong(CongruenceLit),
    Upper(u64, Bound),
}

/// Moves the prime-power part of every congruence into valuation bounds,
/// so only the part coprime to every prime is left for residue merging.
fn peel_prime_powers(
    congs: Vec<CongruenceLit>,
    primes: &PrimeSet,
    per_prime: &mut BTreeMap<u64, PrimeBounds>,
) -> (Vec<CongruenceLit>, Vec<Vec<NegAlt>>) {
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for c in congs {
        let mut rest = c.modulus.clone();
        let mut parts = Vec::new();
        for p in primes.iter() {
            let (k, r) = split_prime_power(&rest, p);
            rest = r;
            if k > 0 {
                let center = -&c.shift;
                parts.push((p, Bound::new(center, ValExpr::constant(k as i64))));
            }
        }
        let coprime = CongruenceLit {
            modulus: rest.clone(),
            ..c.clone()
        };
        if c.positive {
            for (p, b) in parts {
                per_prime.entry(p).or_default().lowers.push(b);
            }
            if !rest.is_one() {
                positive.push(coprime);
            }
        } else {
            let mut alts: Vec<NegAlt> = parts.into_iter().map(|(p, b)| NegAlt::Upper(p, b)).collect();
            if !rest.is_one() {
                alts.push(NegAlt::Cong(coprime));
            }
            negative.push(alts);
        }
    }
    (positive, negative)
}

/// Runs the passes on a conjunction of literals in `x` (no equalities in
/// `x`, valuation atoms one-sided, every threshold base nonzero). The
/// conjunction is equivalent to the disjunction over the returned cases of
/// the guard together with any one of the case's forms. Within the cases
/// coming from one choice of alternatives for the negated congruences the
/// guards partition the parameter space.
pub fn normal_form(
    lits: &[Literal],
    x: &str,
    primes: &PrimeSet,
    residue_cap: u64,
) -> Result<Vec<Guarded<Vec<NormalForm1V>>>> {
    let (n, ylits) = unify_coefficient(lits, x)?;
    let mut congs = Vec::new();
    let mut diseqs = Vec::new();
    let mut per_prime: BTreeMap<u64, PrimeBounds> = BTreeMap::new();
    for l in ylits {
        match l {
            YLit::Lower(p, b) => per_prime.entry(p).or_default().lowers.push(b),
            YLit::Upper(p, b) => per_prime.entry(p).or_default().uppers.push(b),
            YLit::Cong(c) => congs.push(c),
            YLit::Diseq(s) => diseqs.push(s),
        }
    }
    let (positive, negative) = peel_prime_powers(congs, primes, &mut per_prime);
    let choices = negative.iter().fold(1usize, |acc, a| acc.saturating_mul(a.len()));
    if choices as u64 > residue_cap {
        return Err(Error::ResidueCap {
            needed: choices as u128,
            cap: residue_cap,
        });
    }
    let mut out = Vec::new();
    let mut digits = vec![0usize; negative.len()];
    for _ in 0..choices {
        let mut congs = positive.clone();
        let mut pp = per_prime.clone();
        for (alts, &d) in negative.iter().zip(&digits) {
            match &alts[d] {
                NegAlt::Cong(c) => congs.push(c.clone()),
                NegAlt::Upper(p, b) => pp.entry(*p).or_default().uppers.push(b.clone()),
            }
        }
        for case in merge_congruences(&congs, residue_cap)? {
            let mut forms = Vec::new();
            for (tuple, cong) in split_congruence(&case.body, primes) {
                let mut pp = pp.clone();
                for (p, (rho, e)) in tuple {
                    if e > 0 {
                        pp.entry(p)
                            .or_default()
                            .lowers
                            .push(Bound::new(Term::constant(rho), ValExpr::constant(e as i64)));
                    }
                }
                forms.push(NormalForm1V {
                    var: x.to_string(),
                    scale: n.clone(),
                    congruence: cong,
                    disequalities: diseqs.clone(),
                    per_prime: pp,
                });
            }
            out.push(Guarded {
                guard: case.guard,
                body: forms,
            });
        }
        for (d, alts) in digits.iter_mut().zip(&negative) {
            *d += 1;
            if *d < alts.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}
