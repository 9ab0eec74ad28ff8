//! Recognizing when a one-variable definable set is a subgroup of the
//! integers, and writing its generator as `n' * prod p^gamma_p`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{eliminate_keeping_valuations, QeConfig};
use crate::arith::split_prime_power;
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::term::Assignment;
use crate::zmodel::{eval_qf, exceptional_points, period_bound, QfEvaluator};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subgroup {
    Zero,
    /// `n' * prod_p p^gamma_p * Z` with `n'` coprime to every prime.
    Multiples {
        n_prime: BigInt,
        gammas: BTreeMap<u64, u64>,
    },
}

impl Subgroup {
    pub fn generator(&self) -> BigInt {
        match self {
            Subgroup::Zero => BigInt::zero(),
            Subgroup::Multiples { n_prime, gammas } => gammas.iter().fold(n_prime.clone(), |acc, (p, g)| {
                acc * num_traits::pow(BigInt::from(*p), *g as usize)
            }),
        }
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subgroup::Zero => write!(f, "{{0}}"),
            Subgroup::Multiples { n_prime, gammas } => {
                write!(f, "{}Z (n' = {n_prime}", self.generator())?;
                for (p, g) in gammas {
                    write!(f, ", gamma_{p} = {g}")?;
                }
                write!(f, ")")
            }
        }
    }
}

const MAX_SCAN: i128 = 20_000_000;

fn scan(ev: &QfEvaluator, radius: i128, extra: &[i128], mut visit: impl FnMut(i128, bool) -> bool) -> Result<bool> {
    if radius > MAX_SCAN {
        return Err(Error::IllFormed("membership window too large".into()));
    }
    for x in (-radius..=radius).chain(extra.iter().copied()) {
        if !visit(x, ev.eval(&[x])?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Returns the subgroup a one-variable formula defines, or `None` if the
/// defined set is not a subgroup. Membership is computed exactly on a window
/// that periodicity makes sufficient, and the candidate `gZ` is confirmed
/// on a second window covering a common period of both sets.
pub fn recognize_subgroup(f: &Formula, cfg: &QeConfig) -> Result<Option<Subgroup>> {
    let g = eliminate_keeping_valuations(f, cfg)?;
    let free: Vec<String> = g.free_vars().into_iter().collect();
    let x = match free.as_slice() {
        [] => {
            let all = eval_qf(&g, &Assignment::new())?;
            return Ok(all.then(|| Subgroup::Multiples {
                n_prime: BigInt::one(),
                gammas: cfg.primes.iter().map(|p| (p, 0)).collect(),
            }));
        }
        [x] => x.clone(),
        _ => return Err(Error::IllFormed("expected one free variable".into())),
    };
    let (m, d) = period_bound(&g, &x)?;
    let m = m.to_i128().ok_or_else(|| Error::IllFormed("period too large".into()))?;
    let exc: Vec<i128> = exceptional_points(&g, &x)?.iter().filter_map(|e| e.to_i128()).collect();
    let d = d.max(exc.len()) as i128;
    let ev = QfEvaluator::new(&g, std::slice::from_ref(&x))?;
    if !ev.eval(&[0])? {
        return Ok(None);
    }
    let mut gen: i128 = 0;
    scan(&ev, (d + 2) * m, &exc, |v, member| {
        if member {
            gen = gen.gcd(&v);
        }
        true
    })?;
    if gen == 0 {
        return Ok(Some(Subgroup::Zero));
    }
    let l = m.lcm(&gen);
    let agrees = scan(&ev, (d + 1) * l, &exc, |v, member| member == (v % gen == 0))?;
    if !agrees {
        return Ok(None);
    }
    let mut rest = BigInt::from(gen.abs());
    let mut gammas = BTreeMap::new();
    for p in cfg.primes.iter() {
        let (e, r) = split_prime_power(&rest, p);
        rest = r;
        gammas.insert(p, e);
    }
    Ok(Some(Subgroup::Multiples { n_prime: rest, gammas }))
}
