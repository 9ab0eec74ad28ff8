use std::fmt;

use crate::error::{Error, Result};

/// A finite, nonempty, strictly increasing set of primes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimeSet(Vec<u64>);

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeSet {
    pub fn new(mut primes: Vec<u64>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidPrimes("prime set is empty".into()));
        }
        if let Some(&bad) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::InvalidPrimes(format!("{bad} is not prime")));
        }
        primes.sort_unstable();
        let len = primes.len();
        primes.dedup();
        if primes.len() != len {
            return Err(Error::InvalidPrimes("duplicate prime".into()));
        }
        Ok(PrimeSet(primes))
    }

    pub fn contains(&self, p: u64) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

impl std::str::FromStr for PrimeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let primes = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidPrimes(format!("cannot parse `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        PrimeSet::new(primes)
    }
}

impl fmt::Display for PrimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_checked() {
        let ps: PrimeSet = "5,2,3".parse().unwrap();
        assert_eq!(ps.as_slice(), &[2, 3, 5]);
        assert!(PrimeSet::new(vec![]).is_err());
        assert!(PrimeSet::new(vec![4]).is_err());
        assert!(PrimeSet::new(vec![2, 2]).is_err());
    }
}
