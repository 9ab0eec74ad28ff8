//! Finite-radius p-adic balls and swiss cheeses over the integers.
//!
//! `B(a, r)` is the residue class `a mod p^r`; radius `inf` is the
//! singleton `{a}`. A swiss cheese is a ball minus pairwise disjoint
//! strictly smaller balls.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::arith::{pow, valuation, ValN};
use crate::error::{Error, Result};

/// Refuse to enumerate more sub-balls than this.
pub const MAX_SUBDIVISION: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ball {
    prime: u64,
    center: BigInt,
    radius: ValN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallRelation {
    Disjoint,
    Equal,
    FirstInsideSecond,
    SecondInsideFirst,
}

impl Ball {
    /// The center is reduced to its least nonnegative residue mod `p^radius`.
    pub fn new(prime: u64, center: impl Into<BigInt>, radius: ValN) -> Ball {
        let mut center = center.into();
        if let ValN::Fin(r) = radius {
            center = center.mod_floor(&pow(prime, r));
        }
        Ball { prime, center, radius }
    }

    pub fn finite(prime: u64, center: impl Into<BigInt>, radius: u64) -> Ball {
        Ball::new(prime, center, ValN::Fin(radius))
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn center(&self) -> &BigInt {
        &self.center
    }

    pub fn radius(&self) -> ValN {
        self.radius
    }

    fn finite_radius(&self) -> Result<u64> {
        self.radius.finite().ok_or(Error::InfiniteRadius)
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        valuation(self.prime, &(x - &self.center)) >= self.radius
    }

    /// `other ⊆ self`.
    pub fn contains_ball(&self, other: &Ball) -> bool {
        other.radius >= self.radius && self.contains(&other.center)
    }

    pub fn meets(&self, other: &Ball) -> bool {
        self.contains_ball(other) || other.contains_ball(self)
    }

    /// The `p^k` sub-balls of radius `radius + k`, ordered by center.
    pub fn subdivide(&self, k: u64) -> Result<Vec<Ball>> {
        let r = self.finite_radius()?;
        let count = (self.prime as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if count > MAX_SUBDIVISION as u128 {
            return Err(Error::IllFormed(format!("subdivision into {count} balls is too large")));
        }
        let step = pow(self.prime, r);
        Ok((0..count as u64)
            .map(|j| Ball::finite(self.prime, &self.center + &step * j, r + k))
            .collect())
    }

    pub fn children(&self) -> Result<Vec<Ball>> {
        self.subdivide(1)
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {})", self.center, self.radius)
    }
}

fn same_prime(a: &Ball, b: &Ball) -> Result<()> {
    if a.prime != b.prime {
        return Err(Error::PrimeMismatch(a.prime, b.prime));
    }
    Ok(())
}

pub fn ball_compare(b1: &Ball, b2: &Ball) -> Result<BallRelation> {
    same_prime(b1, b2)?;
    let in12 = b2.contains_ball(b1);
    let in21 = b1.contains_ball(b2);
    Ok(match (in12, in21) {
        (true, true) => BallRelation::Equal,
        (true, false) => BallRelation::FirstInsideSecond,
        (false, true) => BallRelation::SecondInsideFirst,
        (false, false) => BallRelation::Disjoint,
    })
}

/// Whether the union of `holes` covers `ball`. Holes may overlap.
pub fn covered(ball: &Ball, holes: &[Ball]) -> bool {
    if holes.iter().any(|h| h.contains_ball(ball)) {
        return true;
    }
    let inside: Vec<Ball> = holes.iter().filter(|h| ball.contains_ball(h)).cloned().collect();
    if inside.is_empty() || ball.radius.is_infinite() {
        return false;
    }
    ball.children()
        .expect("finite radius")
        .iter()
        .all(|c| covered(c, &inside))
}

/// A largest sub-ball of `outer` avoiding every hole, found by descending
/// into the first uncovered child; `None` if the holes cover `outer`.
pub fn find_free_ball(outer: &Ball, holes: &[Ball]) -> Option<Ball> {
    if covered(outer, holes) {
        return None;
    }
    if !holes.iter().any(|h| h.meets(outer)) {
        return Some(outer.clone());
    }
    outer.children().ok()?.iter().find_map(|c| find_free_ball(c, holes))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SwissCheese {
    outer: Ball,
    holes: Vec<Ball>,
}

impl SwissCheese {
    /// Validates that holes are strictly inside the outer ball, pairwise
    /// disjoint, and leave something behind. Holes are sorted.
    pub fn new(outer: Ball, mut holes: Vec<Ball>) -> Result<SwissCheese> {
        for h in &holes {
            same_prime(&outer, h)?;
            if !(outer.contains_ball(h) && h.radius > outer.radius) {
                return Err(Error::HoleOutside);
            }
        }
        for (i, a) in holes.iter().enumerate() {
            if holes[i + 1..].iter().any(|b| a.meets(b)) {
                return Err(Error::HolesOverlap);
            }
        }
        if covered(&outer, &holes) {
            return Err(Error::EmptyCheese);
        }
        holes.sort();
        Ok(SwissCheese { outer, holes })
    }

    pub fn ball(b: Ball) -> SwissCheese {
        SwissCheese {
            outer: b,
            holes: Vec::new(),
        }
    }

    pub fn outer(&self) -> &Ball {
        &self.outer
    }

    pub fn holes(&self) -> &[Ball] {
        &self.holes
    }

    pub fn prime(&self) -> u64 {
        self.outer.prime
    }

    pub fn radius(&self) -> ValN {
        self.outer.radius
    }

    pub fn member(&self, x: &BigInt) -> bool {
        self.outer.contains(x) && !self.holes.iter().any(|h| h.contains(x))
    }

    /// Whether the cheese meets a ball.
    pub fn meets_ball(&self, b: &Ball) -> bool {
        if !self.outer.meets(b) {
            return false;
        }
        let region = if self.outer.contains_ball(b) { b } else { &self.outer };
        !covered(region, &self.holes)
    }
}

impl fmt::Display for SwissCheese {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.outer)?;
        if !self.holes.is_empty() {
            let hs: Vec<String> = self.holes.iter().map(|h| h.to_string()).collect();
            write!(f, " \\ {{{}}}", hs.join(", "))?;
        }
        Ok(())
    }
}

/// Cuts `f` along the sub-balls of radius `rad(f) + k`, dropping pieces
/// that the holes eat completely.
pub fn split_cheese(f: &SwissCheese, k: u64) -> Result<Vec<SwissCheese>> {
    let mut out = Vec::new();
    for sub in f.outer.subdivide(k)? {
        if covered(&sub, &f.holes) {
            continue;
        }
        let holes = f
            .holes
            .iter()
            .filter(|h| sub.contains_ball(h) && h.radius > sub.radius)
            .cloned()
            .collect();
        out.push(SwissCheese::new(sub, holes)?);
    }
    Ok(out)
}

/// Union of two intersecting cheeses as one cheese; `None` if disjoint.
pub fn union_cheeses(f: &SwissCheese, g: &SwissCheese) -> Result<Option<SwissCheese>> {
    same_prime(&f.outer, &g.outer)?;
    if !f.outer.meets(&g.outer) {
        return Ok(None);
    }
    let (big, small) = if f.outer.radius <= g.outer.radius {
        (f, g)
    } else {
        (g, f)
    };
    let all: Vec<Ball> = big.holes.iter().chain(&small.holes).cloned().collect();
    if covered(&small.outer, &all) {
        return Ok(None);
    }
    let mut holes: Vec<Ball> = big
        .holes
        .iter()
        .filter(|h| !h.meets(&small.outer) || small.holes.iter().any(|s| s.contains_ball(h)))
        .cloned()
        .collect();
    for s in &small.holes {
        if big.holes.iter().any(|h| h.contains_ball(s)) && !holes.contains(s) {
            holes.push(s.clone());
        }
    }
    SwissCheese::new(big.outer.clone(), holes).map(Some)
}

/// The unique smallest ball containing a nonempty cheese.
pub fn minimal_outer_ball(f: &SwissCheese) -> Result<Ball> {
    if covered(&f.outer, &f.holes) {
        return Err(Error::EmptyCheese);
    }
    let mut ball = f.outer.clone();
    loop {
        if ball.radius.is_infinite() || !f.holes.iter().any(|h| ball.contains_ball(h)) {
            return Ok(ball);
        }
        let meeting: Vec<Ball> = ball.children()?.into_iter().filter(|c| !covered(c, &f.holes)).collect();
        if meeting.len() != 1 {
            return Ok(ball);
        }
        ball = meeting.into_iter().next().unwrap();
    }
}

/// `p^{k_N} - sum_m p^{k_N - k_m}` for depth offsets `k_m`, `k_N = max k_m`.
pub fn residual_count(p: u64, offsets: &[u64]) -> BigInt {
    let kn = offsets.iter().copied().max().unwrap_or(0);
    let total = pow(p, kn);
    offsets.iter().fold(total, |acc, &k| acc - pow(p, kn - k))
}

/// The balls of radius `rad(outer) + k_N` making up `outer` minus an
/// antichain of holes, ordered by center. Empty exactly when the holes
/// tile `outer`.
pub fn residual_balls(outer: &Ball, holes: &[Ball]) -> Result<Vec<Ball>> {
    let r0 = outer.finite_radius()?;
    let mut kn = 0;
    for h in holes {
        same_prime(outer, h)?;
        let r = h.finite_radius()?;
        if !outer.contains_ball(h) {
            return Err(Error::HoleOutside);
        }
        kn = kn.max(r - r0);
    }
    for (i, a) in holes.iter().enumerate() {
        if holes[i + 1..].iter().any(|b| a.meets(b)) {
            return Err(Error::HolesOverlap);
        }
    }
    Ok(outer
        .subdivide(kn)?
        .into_iter()
        .filter(|b| !holes.iter().any(|h| h.contains_ball(b)))
        .collect())
}

/// Depth offsets of holes below the outer ball.
pub fn offsets(outer: &Ball, holes: &[Ball]) -> Result<Vec<u64>> {
    let r0 = outer.finite_radius()?;
    holes.iter().map(|h| Ok(h.finite_radius()? - r0)).collect()
}

/// Number of residues mod `p^e` (given as `u64`) in a ball, for brute-force checks.
pub fn residues_in(ball: &Ball, e: u64) -> Vec<u64> {
    let m = pow(ball.prime, e).to_u64().expect("small modulus");
    (0..m).filter(|&x| ball.contains(&BigInt::from(x))).collect()
}
