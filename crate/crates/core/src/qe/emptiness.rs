//! Symbolic nonemptiness of a ball minus holes.
//!
//! A ball is covered by finitely many holes iff one hole contains it, or
//! all `p` children contain a hole center and each such child is covered.
//! When the holes exactly tile a ball, every hole sits at most `n - 1`
//! levels below it (`n` the number of holes), so the recursion stops at
//! depth `n - 1`.

use std::collections::HashMap;

use super::combinations;
use crate::formula::{canonicalize, Atom, Formula};
use crate::normalize::{Bound, PrimeBounds, ValExpr};
use crate::term::Term;

struct Cover<'a> {
    p: u64,
    holes: &'a [Bound],
    theta: &'a ValExpr,
    memo: HashMap<(Option<usize>, usize), Formula>,
}

impl Cover<'_> {
    /// `B(center, theta + depth)` is covered by the holes.
    fn covered(&mut self, center_idx: Option<usize>, center: &Term, depth: usize) -> Formula {
        if let Some(f) = self.memo.get(&(center_idx, depth)) {
            return f.clone();
        }
        let p = self.p;
        let n = self.holes.len();
        let radius = self.theta.shifted(depth as i64);
        let one_hole = Formula::Or(
            self.holes
                .iter()
                .map(|h| Formula::And(vec![h.threshold.le(p, &radius), h.holds_at(p, center)]))
                .collect(),
        );
        let result = if depth + 1 >= n || n < p as usize {
            canonicalize(&one_hole)
        } else {
            let (u0, o0) = (&self.theta.base, self.theta.offset + depth as i64);
            let here = Bound::new(center.clone(), radius.clone());
            let inside: Vec<Formula> = self.holes.iter().map(|h| here.holds_at(p, &h.center)).collect();
            // centers i, j in different children: v(d_i - d_j) <= theta + depth
            let apart = |i: usize, j: usize| {
                Formula::Atom(Atom::val_le(
                    p,
                    -o0,
                    &self.holes[i].center - &self.holes[j].center,
                    u0.clone(),
                ))
            };
            let mut occupied = Vec::new();
            for s in combinations(n, p as usize) {
                let mut parts: Vec<Formula> = s.iter().map(|&j| inside[j].clone()).collect();
                for (a, &i) in s.iter().enumerate() {
                    for &j in &s[a + 1..] {
                        parts.push(apart(i, j));
                    }
                }
                occupied.push(Formula::And(parts));
            }
            let occupied = canonicalize(&Formula::Or(occupied));
            if occupied == Formula::False {
                canonicalize(&one_hole)
            } else {
                let mut children = Vec::new();
                for j in 0..n {
                    let outside = Formula::Atom(Atom::val_le(p, 1 - o0, &self.holes[j].center - center, u0.clone()));
                    let c = self.holes[j].center.clone();
                    let sub = self.covered(Some(j), &c, depth + 1);
                    children.push(Formula::Or(vec![outside, sub]));
                }
                canonicalize(&Formula::Or(vec![
                    one_hole,
                    Formula::And(vec![occupied, Formula::And(children)]),
                ]))
            }
        };
        self.memo.insert((center_idx, depth), result.clone());
        result
    }
}

/// Whether `B(center, theta)` is covered by `holes`. Requires the base of
/// `theta` to be nonzero and `theta >= 0`.
pub fn covered_condition(p: u64, center: &Term, theta: &ValExpr, holes: &[Bound]) -> Formula {
    let mut c = Cover {
        p,
        holes,
        theta,
        memo: HashMap::new(),
    };
    c.covered(None, center, 0)
}

/// Condition on the parameters for the intersection of the lower-bound
/// balls minus the holes to be nonempty. The whole line (threshold 0) is
/// always among the lower bounds, so the chosen ball has a nonnegative
/// radius.
pub fn nonempty_condition(p: u64, pb: &PrimeBounds) -> Formula {
    let mut lowers = pb.lowers.clone();
    lowers.push(Bound::everything());
    let mut cases = Vec::new();
    for (i0, top) in lowers.iter().enumerate() {
        let mut parts = Vec::new();
        for (i, b) in lowers.iter().enumerate() {
            if i == i0 {
                continue;
            }
            parts.push(if i < i0 {
                b.threshold.lt(p, &top.threshold)
            } else {
                b.threshold.le(p, &top.threshold)
            });
            parts.push(b.holds_at(p, &top.center));
        }
        let guard = canonicalize(&Formula::And(parts));
        if guard == Formula::False {
            continue;
        }
        let cov = covered_condition(p, &top.center, &top.threshold, &pb.uppers);
        cases.push(Formula::And(vec![guard, Formula::not(cov)]));
    }
    canonicalize(&Formula::Or(cases))
}
