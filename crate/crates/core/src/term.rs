//! Affine integer terms `c_1*x_1 + ... + c_n*x_n + c`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Assignment = HashMap<String, BigInt>;

/// Canonical affine term: zero coefficients are never stored, so structural
/// equality is semantic equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Term {
    coeffs: BTreeMap<String, BigInt>,
    constant: BigInt,
}

impl Term {
    pub fn zero() -> Self {
        Term::default()
    }

    pub fn one() -> Self {
        Term::constant(BigInt::one())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Term {
            coeffs: BTreeMap::new(),
            constant: c.into(),
        }
    }

    pub fn var(name: &str) -> Self {
        Term::monomial(name, BigInt::one())
    }

    pub fn monomial(name: &str, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(name.to_string(), c);
        }
        Term {
            coeffs,
            constant: BigInt::zero(),
        }
    }

    pub fn constant_part(&self) -> &BigInt {
        &self.constant
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&str, &BigInt)> {
        self.coeffs.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn coeff(&self, var: &str) -> BigInt {
        self.coeffs.get(var).cloned().unwrap_or_default()
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.coeffs.contains_key(var)
    }

    pub fn is_ground(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(|s| s.as_str())
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        out.extend(self.coeffs.keys().cloned());
    }

    /// The term with `var` removed.
    pub fn without(&self, var: &str) -> Term {
        let mut t = self.clone();
        t.coeffs.remove(var);
        t
    }

    /// The term with its constant dropped.
    pub fn linear_part(&self) -> Term {
        Term {
            coeffs: self.coeffs.clone(),
            constant: BigInt::zero(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> Term {
        if k.is_zero() {
            return Term::zero();
        }
        Term {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add_constant(&self, c: &BigInt) -> Term {
        let mut t = self.clone();
        t.constant += c;
        t
    }

    /// Replaces `var` by `t`.
    pub fn substitute(&self, var: &str, t: &Term) -> Term {
        match self.coeffs.get(var) {
            None => self.clone(),
            Some(c) => &self.without(var) + &t.scale(c),
        }
    }

    pub fn rename(&self, from: &str, to: &str) -> Term {
        self.substitute(from, &Term::var(to))
    }

    /// gcd of all coefficients and the constant (zero for the zero term).
    pub fn content(&self) -> BigInt {
        let mut g = self.constant.abs();
        for c in self.coeffs.values() {
            g = g.gcd(c);
        }
        g
    }

    /// gcd of the variable coefficients only.
    pub fn coeff_content(&self) -> BigInt {
        self.coeffs.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Exact division; caller guarantees `d` divides every coefficient.
    pub fn div_exact(&self, d: &BigInt) -> Term {
        Term {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c / d)).collect(),
            constant: &self.constant / d,
        }
    }

    /// Sign of the first variable coefficient, or of the constant for ground terms.
    pub fn leading_negative(&self) -> bool {
        match self.coeffs.values().next() {
            Some(c) => c.is_negative(),
            None => self.constant.is_negative(),
        }
    }

    /// `t` or `-t`, whichever has a positive leading coefficient.
    pub fn sign_normalized(&self) -> Term {
        if self.leading_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Reduces every coefficient and the constant into `[0, m)`.
    pub fn reduce_mod(&self, m: &BigInt) -> Term {
        let mut coeffs = BTreeMap::new();
        for (v, c) in &self.coeffs {
            let r = c.mod_floor(m);
            if !r.is_zero() {
                coeffs.insert(v.clone(), r);
            }
        }
        Term {
            coeffs,
            constant: self.constant.mod_floor(m),
        }
    }

    pub fn eval(&self, env: &Assignment) -> Result<BigInt> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            let val = env.get(v).ok_or_else(|| Error::Unassigned(v.clone()))?;
            acc += c * val;
        }
        Ok(acc)
    }

    /// Substitutes every variable bound in `env`, leaving the others symbolic.
    pub fn partial_eval(&self, env: &Assignment) -> Term {
        let mut out = Term::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match env.get(v) {
                Some(val) => out.constant += c * val,
                None => {
                    out.coeffs.insert(v.clone(), c.clone());
                }
            }
        }
        out
    }

    fn normalize(mut self) -> Self {
        self.coeffs.retain(|_, c| !c.is_zero());
        self
    }
}

impl Add for &Term {
    type Output = Term;

    fn add(self, rhs: &Term) -> Term {
        let mut out = self.clone();
        for (v, c) in &rhs.coeffs {
            *out.coeffs.entry(v.clone()).or_default() += c;
        }
        out.constant += &rhs.constant;
        out.normalize()
    }
}

impl Sub for &Term {
    type Output = Term;

    fn sub(self, rhs: &Term) -> Term {
        self + &(-rhs)
    }
}

impl Neg for &Term {
    type Output = Term;

    fn neg(self) -> Term {
        Term {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            constant: -&self.constant,
        }
    }
}

impl Add for Term {
    type Output = Term;

    fn add(self, rhs: Term) -> Term {
        &self + &rhs
    }
}

impl Sub for Term {
    type Output = Term;

    fn sub(self, rhs: Term) -> Term {
        &self - &rhs
    }
}

impl Neg for Term {
    type Output = Term;

    fn neg(self) -> Term {
        -&self
    }
}

impl From<i64> for Term {
    fn from(c: i64) -> Self {
        Term::constant(c)
    }
}

fn write_coeff_var(f: &mut fmt::Formatter<'_>, c: &BigInt, v: &str, first: bool) -> fmt::Result {
    let neg = c.is_negative();
    let mag = c.abs();
    match (first, neg) {
        (true, true) => write!(f, "-")?,
        (true, false) => {}
        (false, true) => write!(f, " - ")?,
        (false, false) => write!(f, " + ")?,
    }
    if mag.is_one() {
        write!(f, "{v}")
    } else {
        write!(f, "{mag}*{v}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            write_coeff_var(f, c, v, first)?;
            first = false;
        }
        if first {
            return write!(f, "{}", self.constant);
        }
        if !self.constant.is_zero() {
            if self.constant.is_negative() {
                write!(f, " - {}", self.constant.abs())?;
            } else {
                write!(f, " + {}", self.constant)?;
            }
        }
        Ok(())
    }
}
