//! Concrete one-variable solving: pick a residual ball per prime, combine
//! with the congruence by CRT, and step past disequality roots.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{dnf, eliminate_keeping_valuations, QeConfig};
use crate::arith::{crt_pair, pow};
use crate::ball::{find_free_ball, Ball};
use crate::error::{Error, Result};
use crate::formula::{canonicalize, Atom, Formula, Literal};
use crate::normalize::{normal_form, one_sided_valuations, reduce_bounds, NormalForm1V};
use crate::term::Assignment;
use crate::zmodel::{eval_qf, SatResult};

/// How a witness was assembled. Balls and the congruence live in the
/// scaled variable `scale * x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistenceCertificate {
    pub scale: BigInt,
    pub per_prime: BTreeMap<u64, Ball>,
    /// `(modulus, residue)` after combining everything by CRT.
    pub congruence: (BigInt, BigInt),
    pub witness: Option<BigInt>,
}

impl fmt::Display for ExistenceCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scale {}", self.scale)?;
        for (p, b) in &self.per_prime {
            write!(f, "; p={p} ball {b}")?;
        }
        write!(f, "; residue {} mod {}", self.congruence.1, self.congruence.0)?;
        if let Some(w) = &self.witness {
            write!(f, "; witness {w}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub var: Option<String>,
    pub result: SatResult,
    pub certificate: Option<ExistenceCertificate>,
}

fn order_key(x: &BigInt) -> (bool, BigInt) {
    (x.is_negative(), x.abs())
}

fn holds(lits: &[Literal], x: &str, v: &BigInt) -> Result<bool> {
    let env: Assignment = [(x.to_string(), v.clone())].into_iter().collect();
    for l in lits {
        if !eval_qf(&l.to_formula(), &env)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn ground_value(t: &crate::term::Term) -> Result<BigInt> {
    if !t.is_ground() {
        return Err(Error::IllFormed("parameters must be concrete".into()));
    }
    Ok(t.constant_part().clone())
}

/// Builds a witness for one normal form, or `None` if it is empty.
fn solve_form(nf: &NormalForm1V, lits: &[Literal], x: &str) -> Result<Option<(BigInt, ExistenceCertificate)>> {
    let Some(first) = nf.congruence.residues.first() else {
        return Ok(None);
    };
    let mut residue = first.clone();
    let mut modulus = nf.congruence.modulus.clone();
    let mut balls = BTreeMap::new();
    for (&p, pb) in &nf.per_prime {
        let cases = reduce_bounds(p, pb);
        let Some(case) = cases.into_iter().find(|c| c.guard == Formula::True) else {
            return Err(Error::IllFormed("bound reduction left a symbolic guard".into()));
        };
        let Some(rb) = case.body else {
            return Ok(None);
        };
        let value = |t: &crate::normalize::ValExpr| {
            t.value(p)
                .ok_or_else(|| Error::IllFormed("threshold base is zero".into()))
        };
        let theta = value(&rb.lower.threshold)?.max(0) as u64;
        let outer = Ball::finite(p, ground_value(&rb.lower.center)?, theta);
        let mut holes = Vec::new();
        let mut depth = 0;
        for h in &rb.uppers {
            let eta = value(&h.threshold)?.max(0) as u64;
            depth = depth.max(eta.saturating_sub(theta));
            holes.push(Ball::finite(p, ground_value(&h.center)?, eta));
        }
        let Some(free) = find_free_ball(&outer, &holes) else {
            return Ok(None);
        };
        let chosen = Ball::finite(p, free.center().clone(), theta + depth);
        let (r, m) = crt_pair(&residue, &modulus, chosen.center(), &pow(p, theta + depth))
            .ok_or_else(|| Error::IllFormed("incompatible prime-power residues".into()))?;
        residue = r;
        modulus = m;
        balls.insert(p, chosen);
    }
    let n = &nf.scale;
    if !residue.is_multiple_of(n) || !modulus.is_multiple_of(n) {
        return Err(Error::IllFormed("scaled residue is not a multiple of the scale".into()));
    }
    let step = &modulus / n;
    let mut cand = &residue / n;
    for _ in 0..=nf.disequalities.len() {
        if holds(lits, x, &cand)? {
            let cert = ExistenceCertificate {
                scale: n.clone(),
                per_prime: balls,
                congruence: (modulus, residue),
                witness: Some(cand.clone()),
            };
            return Ok(Some((cand, cert)));
        }
        cand += &step;
    }
    Err(Error::IllFormed("residue class exhausted by disequalities".into()))
}

fn solve_conj(lits: Vec<Literal>, x: &str, cfg: &QeConfig) -> Result<Option<(BigInt, ExistenceCertificate)>> {
    let original = lits.clone();
    if let Some(l) = lits
        .iter()
        .find(|l| l.positive && matches!(&l.atom, Atom::Eq(t) if t.mentions(x)))
    {
        let Atom::Eq(t) = &l.atom else { unreachable!() };
        let (n, s) = (t.coeff(x), ground_value(&t.without(x))?);
        if !s.is_multiple_of(&n) {
            return Ok(None);
        }
        let root = -(s / &n);
        if !holds(&original, x, &root)? {
            return Ok(None);
        }
        let cert = ExistenceCertificate {
            scale: n.abs(),
            per_prime: BTreeMap::new(),
            congruence: (BigInt::zero(), root.clone()),
            witness: Some(root.clone()),
        };
        return Ok(Some((root, cert)));
    }
    let mut flat = Vec::new();
    for l in lits {
        match &l.atom {
            Atom::ValLe { lhs, rhs, .. } if l.positive && lhs.mentions(x) && rhs.mentions(x) => {
                match one_sided_valuations(&l.atom, x) {
                    Formula::True => {}
                    Formula::False => return Ok(None),
                    Formula::Atom(a) => flat.push(Literal::pos(a)),
                    other => return Err(Error::IllFormed(format!("unexpected rewrite {other}"))),
                }
            }
            _ => flat.push(l),
        }
    }
    if flat
        .iter()
        .any(|l| l.positive && matches!(&l.atom, Atom::Eq(t) if t.mentions(x)))
    {
        return Ok(solve_conj(flat, x, cfg)?.filter(|(w, _)| holds(&original, x, w).unwrap_or(false)));
    }
    let mut best: Option<(BigInt, ExistenceCertificate)> = None;
    for case in normal_form(&flat, x, &cfg.primes, cfg.residue_cap)? {
        if case.guard != Formula::True {
            continue;
        }
        for nf in &case.body {
            if let Some((w, c)) = solve_form(nf, &original, x)? {
                if best.as_ref().is_none_or(|(b, _)| order_key(&w) < order_key(b)) {
                    best = Some((w, c));
                }
            }
        }
    }
    Ok(best)
}

/// Solves a formula whose only free variable is the unknown. Quantifiers,
/// if any, are eliminated first. A sentence is reported as `Sat(0)` when
/// true.
pub fn solve_grounded_1v(f: &Formula, cfg: &QeConfig) -> Result<Solution> {
    let g = canonicalize(&eliminate_keeping_valuations(f, cfg)?);
    let free: Vec<String> = g.free_vars().into_iter().collect();
    let x = match free.as_slice() {
        [] => {
            let truth = eval_qf(&g, &Assignment::new())?;
            return Ok(Solution {
                var: None,
                result: if truth {
                    SatResult::Sat(BigInt::zero())
                } else {
                    SatResult::Unsat
                },
                certificate: None,
            });
        }
        [x] => x.clone(),
        _ => {
            return Err(Error::IllFormed(format!(
                "expected one free variable, found {}",
                free.join(", ")
            )))
        }
    };
    let mut best: Option<(BigInt, ExistenceCertificate)> = None;
    for conj in dnf(&g, cfg.node_cap)? {
        if let Some((w, c)) = solve_conj(conj, &x, cfg)? {
            if best.as_ref().is_none_or(|(b, _)| order_key(&w) < order_key(b)) {
                best = Some((w, c));
            }
        }
    }
    let env = |w: &BigInt| -> Assignment { [(x.clone(), w.clone())].into_iter().collect() };
    match best {
        Some((w, c)) => {
            if !eval_qf(&g, &env(&w))? {
                return Err(Error::IllFormed(format!("witness {w} fails validation")));
            }
            Ok(Solution {
                var: Some(x),
                result: SatResult::Sat(w),
                certificate: Some(c),
            })
        }
        None => Ok(Solution {
            var: Some(x),
            result: SatResult::Unsat,
            certificate: None,
        }),
    }
}
