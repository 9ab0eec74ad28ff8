//! Quantifier elimination, sentence decision, concrete solving and
//! subgroup recognition.

mod emptiness;
mod solve;
mod subgroup;

use std::collections::BTreeSet;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::formula::{canonicalize, to_nnf, Atom, Formula, Literal};
use crate::normalize::{normal_form, one_sided_valuations};
use crate::primes::PrimeSet;
use crate::term::{Assignment, Term};
use crate::zmodel::eval_qf;

pub use emptiness::{covered_condition, nonempty_condition};
pub use solve::{solve_grounded_1v, ExistenceCertificate, Solution};
pub use subgroup::{recognize_subgroup, Subgroup};

pub const DEFAULT_NODE_CAP: usize = 100_000;
pub const DEFAULT_RESIDUE_CAP: u64 = 360;

#[derive(Debug, Clone)]
pub struct QeConfig {
    pub primes: PrimeSet,
    pub node_cap: usize,
    pub residue_cap: u64,
}

impl QeConfig {
    pub fn new(primes: PrimeSet) -> Self {
        QeConfig {
            primes,
            node_cap: DEFAULT_NODE_CAP,
            residue_cap: DEFAULT_RESIDUE_CAP,
        }
    }
}

impl Default for QeConfig {
    fn default() -> Self {
        QeConfig::new(PrimeSet::new(vec![2, 3]).expect("valid primes"))
    }
}

/// All `k`-element index subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    if k <= n {
        go(0, n, k, &mut cur, &mut out);
    }
    out
}

/// Disjunctive normal form of a quantifier-free formula in negation normal
/// form. Conjunctions with complementary literals are dropped.
pub fn dnf(f: &Formula, node_cap: usize) -> Result<Vec<Vec<Literal>>> {
    let mut size = 0usize;
    dnf_rec(f, node_cap, &mut size)
}

fn dnf_rec(f: &Formula, cap: usize, size: &mut usize) -> Result<Vec<Vec<Literal>>> {
    Ok(match f {
        Formula::True => vec![vec![]],
        Formula::False => vec![],
        Formula::Atom(_) | Formula::Not(_) => {
            let l = Literal::from_formula(f)
                .ok_or_else(|| Error::IllFormed("formula is not in negation normal form".into()))?;
            vec![vec![l]]
        }
        Formula::Or(gs) => {
            let mut out = Vec::new();
            for g in gs {
                out.extend(dnf_rec(g, cap, size)?);
            }
            out
        }
        Formula::And(gs) => {
            let mut acc: Vec<Vec<Literal>> = vec![vec![]];
            for g in gs {
                let part = dnf_rec(g, cap, size)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &part {
                        let mut c: Vec<Literal> = a.iter().chain(b).cloned().collect();
                        c.sort();
                        c.dedup();
                        let lits: BTreeSet<&Literal> = c.iter().collect();
                        if c.iter().any(|l| {
                            lits.contains(&Literal {
                                positive: !l.positive,
                                atom: l.atom.clone(),
                            })
                        }) {
                            continue;
                        }
                        *size += c.len();
                        if *size > cap {
                            return Err(Error::NodeCap { size: *size, cap });
                        }
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        Formula::Exists(..) | Formula::Forall(..) => return Err(Error::NotQuantifierFree),
    })
}

/// `exists x` of a conjunction of literals, as a quantifier-free formula
/// in the remaining variables.
pub fn eliminate_exists_1v(lits: &[Literal], x: &str, cfg: &QeConfig) -> Result<Formula> {
    let (with_x, without): (Vec<Literal>, Vec<Literal>) = lits.iter().cloned().partition(|l| l.mentions(x));
    let mut parts: Vec<Formula> = without.iter().map(|l| l.to_formula()).collect();
    parts.push(eliminate_core(with_x, x, cfg, &BTreeSet::new())?);
    Ok(canonicalize(&Formula::And(parts)))
}

fn is_x_eq(l: &Literal, x: &str) -> bool {
    l.positive && matches!(&l.atom, Atom::Eq(t) if t.mentions(x))
}

/// Rewrites every literal through `n*x = -s`: a term `c*x + r` becomes
/// `n*r - c*s`, which is `n` times its old value. Valuation atoms scale
/// both sides; moduli grow by `|n|`.
fn discharge_equality(lits: &[Literal], idx: usize, x: &str) -> Formula {
    let Atom::Eq(t) = &lits[idx].atom else {
        unreachable!("discharging a non-equality")
    };
    let n = t.coeff(x);
    let s = t.without(x);
    let replace = |u: &Term| -> Term { &u.without(x).scale(&n) - &s.scale(&u.coeff(x)) };
    let mut parts = vec![Formula::Atom(Atom::Div(n.abs(), s.clone()))];
    for (i, l) in lits.iter().enumerate() {
        if i == idx {
            continue;
        }
        let atom = match &l.atom {
            Atom::Eq(u) => Atom::Eq(replace(u)),
            Atom::Div(m, u) => Atom::Div(m * n.abs(), replace(u)),
            Atom::ValLe { p, k, lhs, rhs } => Atom::val_le(*p, *k, replace(lhs), replace(rhs)),
        };
        parts.push(
            Literal {
                positive: l.positive,
                atom,
            }
            .to_formula(),
        );
    }
    canonicalize(&Formula::And(parts))
}

/// The variable-free side of a one-sided valuation literal, and whether
/// the variable is on the right (a lower bound).
fn threshold_base<'a>(l: &'a Literal, x: &str) -> Option<(&'a Term, bool)> {
    match &l.atom {
        Atom::ValLe { lhs, rhs, .. } if l.positive => match (lhs.mentions(x), rhs.mentions(x)) {
            (false, true) => Some((lhs, true)),
            (true, false) => Some((rhs, false)),
            _ => None,
        },
        _ => None,
    }
}

fn eliminate_core(lits: Vec<Literal>, x: &str, cfg: &QeConfig, nonzero: &BTreeSet<Term>) -> Result<Formula> {
    if lits.is_empty() {
        return Ok(Formula::True);
    }
    if let Some(i) = lits.iter().position(|l| is_x_eq(l, x)) {
        return Ok(discharge_equality(&lits, i, x));
    }
    // Valuation atoms with the variable on both sides become one-sided.
    let mut flat = Vec::new();
    let mut changed = false;
    for l in lits {
        match &l.atom {
            Atom::ValLe { lhs, rhs, .. } if l.positive && lhs.mentions(x) && rhs.mentions(x) => {
                changed = true;
                match one_sided_valuations(&l.atom, x) {
                    Formula::True => {}
                    Formula::False => return Ok(Formula::False),
                    Formula::Atom(a) => flat.push(Literal::pos(a)),
                    other => return Err(Error::IllFormed(format!("unexpected rewrite result {other}"))),
                }
            }
            _ => flat.push(l),
        }
    }
    if changed {
        let rest: Vec<Literal> = flat.iter().filter(|l| !l.mentions(x)).cloned().collect();
        let with_x: Vec<Literal> = flat.into_iter().filter(|l| l.mentions(x)).collect();
        let mut parts: Vec<Formula> = rest.iter().map(|l| l.to_formula()).collect();
        parts.push(eliminate_core(with_x, x, cfg, nonzero)?);
        return Ok(canonicalize(&Formula::And(parts)));
    }
    // Split on whether a symbolic threshold base vanishes.
    for (i, l) in flat.iter().enumerate() {
        let Some((base, lower)) = threshold_base(l, x) else {
            continue;
        };
        if base.is_ground() || nonzero.contains(base) {
            continue;
        }
        let base = base.clone();
        let mut zero_case = flat.clone();
        if lower {
            let Atom::ValLe { rhs, .. } = &l.atom else {
                unreachable!()
            };
            zero_case[i] = Literal::pos(Atom::Eq(rhs.clone()));
        } else {
            zero_case.remove(i);
        }
        let zero_branch = Formula::And(vec![
            Formula::Atom(Atom::Eq(base.clone())),
            eliminate_core(zero_case, x, cfg, nonzero)?,
        ]);
        let mut nz = nonzero.clone();
        nz.insert(base.clone());
        let nonzero_branch = Formula::And(vec![
            Formula::not(Formula::Atom(Atom::Eq(base))),
            eliminate_core(flat, x, cfg, &nz)?,
        ]);
        return Ok(canonicalize(&Formula::Or(vec![zero_branch, nonzero_branch])));
    }
    let mut cases = Vec::new();
    for case in normal_form(&flat, x, &cfg.primes, cfg.residue_cap)? {
        let mut alternatives = Vec::new();
        for nf in &case.body {
            let conds: Vec<Formula> = nf.per_prime.iter().map(|(p, pb)| nonempty_condition(*p, pb)).collect();
            alternatives.push(canonicalize(&Formula::And(conds)));
        }
        cases.push(Formula::And(vec![case.guard, Formula::Or(alternatives)]));
    }
    Ok(canonicalize(&Formula::Or(cases)))
}

/// `exists x. f` for quantifier-free canonical `f`.
fn exists_qf(x: &str, f: &Formula, cfg: &QeConfig) -> Result<Formula> {
    if !f.mentions(x) {
        return Ok(f.clone());
    }
    Ok(match f {
        Formula::Or(gs) => canonicalize(&Formula::Or(
            gs.iter().map(|g| exists_qf(x, g, cfg)).collect::<Result<_>>()?,
        )),
        Formula::And(gs) => {
            let (with_x, without): (Vec<&Formula>, Vec<&Formula>) = gs.iter().partition(|g| g.mentions(x));
            let mut parts: Vec<Formula> = without.into_iter().cloned().collect();
            let body = Formula::And(with_x.into_iter().cloned().collect());
            let mut alts = Vec::new();
            for conj in dnf(&body, cfg.node_cap)? {
                alts.push(eliminate_exists_1v(&conj, x, cfg)?);
            }
            parts.push(Formula::Or(alts));
            canonicalize(&Formula::And(parts))
        }
        _ => {
            let l = Literal::from_formula(f).ok_or_else(|| Error::IllFormed("unexpected formula shape".into()))?;
            eliminate_exists_1v(&[l], x, cfg)?
        }
    })
}

fn eliminate(f: &Formula, cfg: &QeConfig) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Atom(_) | Formula::Not(_) => f.clone(),
        Formula::And(gs) => canonicalize(&Formula::And(
            gs.iter().map(|g| eliminate(g, cfg)).collect::<Result<_>>()?,
        )),
        Formula::Or(gs) => canonicalize(&Formula::Or(
            gs.iter().map(|g| eliminate(g, cfg)).collect::<Result<_>>()?,
        )),
        Formula::Exists(x, body) => {
            let b = eliminate(body, cfg)?;
            exists_qf(x, &b, cfg)?
        }
        Formula::Forall(x, body) => {
            let b = eliminate(body, cfg)?;
            let neg = canonicalize(&to_nnf(&Formula::not(b)));
            let e = exists_qf(x, &neg, cfg)?;
            canonicalize(&Formula::not(e))
        }
    })
}

/// An equivalent quantifier-free formula. Quantifiers are removed
/// innermost first; `forall` goes through `not exists not`.
pub fn eliminate_quantifiers(f: &Formula, cfg: &QeConfig) -> Result<Formula> {
    Ok(prefer_divisibility(&eliminate_keeping_valuations(f, cfg)?))
}

pub(crate) fn eliminate_keeping_valuations(f: &Formula, cfg: &QeConfig) -> Result<Formula> {
    eliminate(&canonicalize(f), cfg)
}

/// Writes `v_p(t) >= k` as `D_{p^k}(t)`.
fn prefer_divisibility(f: &Formula) -> Formula {
    canonicalize(&f.map_atoms(&|a| match a {
        Atom::ValLe { p, k, lhs, rhs } if *k >= 1 && *lhs == Term::one() => {
            Formula::Atom(Atom::Div(crate::arith::pow(*p, *k as u64), rhs.clone()))
        }
        _ => Formula::Atom(a.clone()),
    }))
}

/// Truth value of a sentence.
pub fn decide_sentence(f: &Formula, cfg: &QeConfig) -> Result<bool> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(Error::IllFormed(format!("sentence has free variable `{v}`")));
    }
    eval_qf(&eliminate_quantifiers(f, cfg)?, &Assignment::new())
}
