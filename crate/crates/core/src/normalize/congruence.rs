//! Congruence passes: merging all `D_m` literals into one residue set,
//! and splitting a modulus into its prime-power parts.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::Guarded;
use crate::arith::{lcm, pow, split_prime_power};
use crate::error::{Error, Result};
use crate::formula::{canonicalize, Atom, Formula};
use crate::primes::PrimeSet;
use crate::term::Term;

/// `modulus | coeff*y + shift`, or its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceLit {
    pub modulus: BigInt,
    pub positive: bool,
    pub coeff: BigInt,
    pub shift: Term,
}

impl CongruenceLit {
    pub fn to_formula(&self, y: &str) -> Formula {
        let t = &Term::monomial(y, self.coeff.clone()) + &self.shift;
        let a = Formula::Atom(Atom::Div(self.modulus.clone(), t));
        if self.positive {
            a
        } else {
            Formula::not(a)
        }
    }
}

/// `y mod modulus` lies in `residues`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Congruence {
    pub modulus: BigInt,
    pub residues: Vec<BigInt>,
}

impl Congruence {
    pub fn to_formula(&self, y: &str) -> Formula {
        canonicalize(&Formula::or(
            self.residues
                .iter()
                .map(|r| {
                    Formula::Atom(Atom::Div(
                        self.modulus.clone(),
                        &Term::var(y) - &Term::constant(r.clone()),
                    ))
                })
                .collect(),
        ))
    }
}

fn cap_check(needed: &BigInt, cap: u64) -> Result<u64> {
    match needed.to_u64() {
        Some(n) if n <= cap => Ok(n),
        _ => Err(Error::ResidueCap {
            needed: needed.to_u128().unwrap_or(u128::MAX),
            cap,
        }),
    }
}

/// Combines congruence literals into one residue set modulo the lcm `N` of
/// their moduli. Symbolic shifts are resolved by enumerating the residues
/// of each distinct parametric part modulo the lcm of the moduli it meets;
/// each residue pattern becomes a guard.
pub fn merge_congruences(lits: &[CongruenceLit], cap: u64) -> Result<Vec<Guarded<Congruence>>> {
    let n = lits.iter().fold(BigInt::one(), |acc, l| lcm(&acc, &l.modulus));
    let n_small = cap_check(&n, cap)?;
    let mut groups: BTreeMap<Term, BigInt> = BTreeMap::new();
    // (literal, group key, sign of the parametric part)
    let mut keyed = Vec::new();
    for l in lits {
        let lin = l.shift.linear_part();
        if lin.is_zero() {
            keyed.push((l, None, BigInt::one()));
            continue;
        }
        let key = lin.sign_normalized();
        let sign = if key == lin { BigInt::one() } else { -BigInt::one() };
        let m = groups.entry(key.clone()).or_insert_with(BigInt::one);
        *m = lcm(m, &l.modulus);
        keyed.push((l, Some(key), sign));
    }
    let keys: Vec<(Term, BigInt)> = groups.into_iter().collect();
    let patterns = keys.iter().fold(BigInt::one(), |acc, (_, m)| acc * m);
    let patterns = cap_check(&patterns, cap)?;
    let mut out = Vec::new();
    let mut digits = vec![BigInt::zero(); keys.len()];
    for _ in 0..patterns {
        let guard = canonicalize(&Formula::and(
            keys.iter()
                .zip(&digits)
                .map(|((key, m), rho)| Formula::Atom(Atom::Div(m.clone(), key - &Term::constant(rho.clone()))))
                .collect(),
        ));
        if guard != Formula::False {
            let value: BTreeMap<&Term, &BigInt> = keys.iter().map(|(k, _)| k).zip(&digits).collect();
            let residues = (0..n_small)
                .map(BigInt::from)
                .filter(|r| {
                    keyed.iter().all(|(l, key, sign)| {
                        let mut v = &l.coeff * r + l.shift.constant_part();
                        if let Some(k) = key {
                            v += sign * value[k];
                        }
                        v.is_multiple_of(&l.modulus) == l.positive
                    })
                })
                .collect();
            out.push(Guarded {
                guard,
                body: Congruence {
                    modulus: n.clone(),
                    residues,
                },
            });
        }
        for (d, (_, m)) in digits.iter_mut().zip(&keys) {
            *d += 1;
            if &*d < m {
                break;
            }
            *d = BigInt::zero();
        }
    }
    Ok(out)
}

/// `D_m(y - r)` with `m = p^k * m'`, `gcd(m', p) = 1`, as
/// `D_{m'}(y - r mod m') && v_p(y - r mod p^k) >= k`.
pub fn split_prime_part(m: &BigInt, r: &BigInt, y: &str, p: u64) -> Formula {
    let (k, rest) = split_prime_power(m, p);
    let pk = pow(p, k);
    let y = Term::var(y);
    canonicalize(&Formula::And(vec![
        Formula::Atom(Atom::Div(rest.clone(), &y - &Term::constant(r.mod_floor(&rest)))),
        Formula::Atom(Atom::val_ge_const(p, &y - &Term::constant(r.mod_floor(&pk)), k as i64)),
    ]))
}

/// Per-prime residue data `p -> (residue mod p^e, e)` of one group.
pub type PrimeParts = BTreeMap<u64, (BigInt, u64)>;

/// Splits a residue set modulo `N = N' * prod p^e_p` into groups sharing
/// the same residues modulo each `p^e_p`; each group keeps its residues
/// modulo the part `N'` coprime to every prime.
pub fn split_congruence(c: &Congruence, primes: &PrimeSet) -> Vec<(PrimeParts, Congruence)> {
    let mut rest = c.modulus.clone();
    let mut parts = Vec::new();
    for p in primes.iter() {
        let (e, r) = split_prime_power(&rest, p);
        rest = r;
        parts.push((p, e, pow(p, e)));
    }
    let mut groups: BTreeMap<Vec<BigInt>, BTreeSet<BigInt>> = BTreeMap::new();
    for r in &c.residues {
        let tuple = parts.iter().map(|(_, _, pe)| r.mod_floor(pe)).collect();
        groups.entry(tuple).or_default().insert(r.mod_floor(&rest));
    }
    groups
        .into_iter()
        .map(|(tuple, rs)| {
            let pp = parts
                .iter()
                .zip(tuple)
                .map(|((p, e, _), rho)| (*p, (rho, *e)))
                .collect();
            (
                pp,
                Congruence {
                    modulus: rest.clone(),
                    residues: rs.into_iter().collect(),
                },
            )
        })
        .collect()
}
