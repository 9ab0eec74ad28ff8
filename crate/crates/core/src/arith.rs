//! Exact integer helpers shared across the crate.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A p-adic valuation value: a natural number or infinity (the valuation of zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValN {
    Fin(u64),
    Infinity,
}

impl ValN {
    pub fn is_infinite(self) -> bool {
        matches!(self, ValN::Infinity)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ValN::Fin(n) => Some(n),
            ValN::Infinity => None,
        }
    }

    /// Adds an integer offset; `Infinity + k = Infinity`. Returns the result as a
    /// signed quantity since offsets may push a finite value below zero.
    pub fn shifted(self, k: i64) -> ExtInt {
        match self {
            ValN::Fin(n) => ExtInt::Fin(n as i64 + k),
            ValN::Infinity => ExtInt::Infinity,
        }
    }
}

impl PartialOrd for ValN {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ValN {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ValN::Fin(a), ValN::Fin(b)) => a.cmp(b),
            (ValN::Fin(_), ValN::Infinity) => Ordering::Less,
            (ValN::Infinity, ValN::Fin(_)) => Ordering::Greater,
            (ValN::Infinity, ValN::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ValN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValN::Fin(n) => write!(f, "{n}"),
            ValN::Infinity => write!(f, "inf"),
        }
    }
}

/// Integers extended with a top element, used for shifted valuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtInt {
    Fin(i64),
    Infinity,
}

/// Exact p-adic valuation by repeated division.
pub fn valuation(p: u64, a: &BigInt) -> ValN {
    if a.is_zero() {
        return ValN::Infinity;
    }
    let p = BigInt::from(p);
    let mut a = a.abs();
    let mut n = 0u64;
    loop {
        let (q, r) = a.div_rem(&p);
        if !r.is_zero() {
            return ValN::Fin(n);
        }
        a = q;
        n += 1;
    }
}

/// Valuation of a nonzero machine integer.
pub fn valuation_u(p: u64, mut a: u64) -> u64 {
    debug_assert!(a != 0);
    let mut n = 0;
    while a % p == 0 {
        a /= p;
        n += 1;
    }
    n
}

pub fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

pub fn pow(p: u64, e: u64) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        return BigInt::zero();
    }
    a.lcm(b)
}

pub fn lcm_u(a: u64, b: u64) -> u64 {
    a / gcd_u(a, b) * b
}

pub fn gcd_u(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Least nonnegative residue.
pub fn modulo(a: &BigInt, m: &BigInt) -> BigInt {
    a.mod_floor(m)
}

/// Splits `m` into its `p`-part and the cofactor: `m = p^k * rest`, `gcd(rest, p) = 1`.
pub fn split_prime_power(m: &BigInt, p: u64) -> (u64, BigInt) {
    let pb = BigInt::from(p);
    let mut rest = m.clone();
    let mut k = 0;
    while !rest.is_zero() && (&rest % &pb).is_zero() {
        rest /= &pb;
        k += 1;
    }
    (k, rest)
}

/// Extended gcd: returns `(g, s, t)` with `a*s + b*t = g`.
pub fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    (e.gcd, e.x, e.y)
}

/// Combines `x ≡ r1 (mod m1)` and `x ≡ r2 (mod m2)`. Returns `None` when incompatible.
pub fn crt_pair(r1: &BigInt, m1: &BigInt, r2: &BigInt, m2: &BigInt) -> Option<(BigInt, BigInt)> {
    let (g, s, _) = ext_gcd(m1, m2);
    let diff = r2 - r1;
    if !(&diff % &g).is_zero() {
        return None;
    }
    let m = m1 / &g * m2;
    let k = (&diff / &g * s).mod_floor(&(m2 / &g));
    let r = (r1 + m1 * k).mod_floor(&m);
    Some((r, m))
}

pub fn to_i64(a: &BigInt) -> Option<i64> {
    a.to_i64()
}

pub fn is_one(a: &BigInt) -> bool {
    a.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(2, &big(12)), ValN::Fin(2));
        assert_eq!(valuation(2, &big(0)), ValN::Infinity);
        assert_eq!(valuation(3, &big(-9)), ValN::Fin(2));
        assert_eq!(valuation(5, &big(7)), ValN::Fin(0));
    }

    #[test]
    fn crt_combines() {
        let (r, m) = crt_pair(&big(1), &big(4), &big(0), &big(3)).unwrap();
        assert_eq!((r, m), (big(9), big(12)));
        assert!(crt_pair(&big(0), &big(2), &big(1), &big(4)).is_none());
        let (r, m) = crt_pair(&big(2), &big(4), &big(0), &big(6)).unwrap();
        assert_eq!((r, m), (big(6), big(12)));
    }

    #[test]
    fn prime_power_split() {
        assert_eq!(split_prime_power(&big(12), 2), (2, big(3)));
        assert_eq!(split_prime_power(&big(7), 2), (0, big(7)));
    }
}
