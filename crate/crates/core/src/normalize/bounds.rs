//! Reducing the per-prime bounds to one lower bound and an antichain of
//! relevant upper bounds, with symbolic comparisons emitted as guards.

use super::{Bound, Guarded, PrimeBounds};
use crate::formula::{canonicalize, Formula};

/// One ball `lower` minus pairwise disjoint holes strictly inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedBounds {
    pub lower: Bound,
    pub uppers: Vec<Bound>,
}

fn refine(guard: &Formula, cond: Formula) -> Option<Formula> {
    let g = canonicalize(&Formula::And(vec![guard.clone(), cond]));
    (g != Formula::False).then_some(g)
}

/// Splits on which lower bound is the smallest ball (ties go to the lowest
/// index), drops or refutes upper bounds that do not cut into it, and keeps
/// only maximal holes. `None` bodies mark inconsistent cases.
pub fn reduce_bounds(p: u64, pb: &PrimeBounds) -> Vec<Guarded<Option<ReducedBounds>>> {
    let mut lowers = pb.lowers.clone();
    lowers.push(Bound::everything());
    let mut out = Vec::new();
    for i0 in 0..lowers.len() {
        let top = &lowers[i0];
        let mut order = Vec::new();
        let mut consistent = Vec::new();
        for (i, b) in lowers.iter().enumerate() {
            if i == i0 {
                continue;
            }
            order.push(if i < i0 {
                b.threshold.lt(p, &top.threshold)
            } else {
                b.threshold.le(p, &top.threshold)
            });
            consistent.push(b.holds_at(p, &top.center));
        }
        let Some(g) = refine(&Formula::True, Formula::and(order)) else {
            continue;
        };
        let cons = Formula::and(consistent);
        if let Some(bad) = refine(&g, Formula::not(cons.clone())) {
            out.push(Guarded { guard: bad, body: None });
        }
        let Some(g) = refine(&g, cons) else {
            continue;
        };
        // Classify each hole against the chosen ball.
        let mut states: Vec<(Formula, Option<Vec<Bound>>)> = vec![(g, Some(Vec::new()))];
        for h in &pb.uppers {
            let contains = Formula::And(vec![h.threshold.le(p, &top.threshold), h.holds_at(p, &top.center)]);
            let inside = Formula::And(vec![top.threshold.lt(p, &h.threshold), top.holds_at(p, &h.center)]);
            let apart = Formula::And(vec![Formula::not(contains.clone()), Formula::not(inside.clone())]);
            let mut next = Vec::new();
            for (g, kept) in states {
                let Some(kept) = kept else {
                    next.push((g, None));
                    continue;
                };
                if let Some(g2) = refine(&g, contains.clone()) {
                    next.push((g2, None));
                }
                if let Some(g2) = refine(&g, inside.clone()) {
                    let mut k = kept.clone();
                    k.push(h.clone());
                    next.push((g2, Some(k)));
                }
                if let Some(g2) = refine(&g, apart.clone()) {
                    next.push((g2, Some(kept)));
                }
            }
            states = next;
        }
        for (g, kept) in states {
            match kept {
                None => out.push(Guarded { guard: g, body: None }),
                Some(kept) => {
                    for (g2, anti) in antichain(p, g, &kept) {
                        out.push(Guarded {
                            guard: g2,
                            body: Some(ReducedBounds {
                                lower: top.clone(),
                                uppers: anti,
                            }),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Keeps the maximal balls among `holes`, splitting on containment.
fn antichain(p: u64, guard: Formula, holes: &[Bound]) -> Vec<(Formula, Vec<Bound>)> {
    let mut states = vec![(guard, Vec::<Bound>::new())];
    for h in holes {
        let mut next = Vec::new();
        for (g, anti) in states {
            // (guard, accepted so far, h still pending)
            let mut partial = vec![(g, Vec::new(), true)];
            for a in &anti {
                let h_in_a = Formula::And(vec![a.threshold.le(p, &h.threshold), a.holds_at(p, &h.center)]);
                let a_in_h = Formula::And(vec![h.threshold.lt(p, &a.threshold), h.holds_at(p, &a.center)]);
                let apart = Formula::And(vec![Formula::not(h_in_a.clone()), Formula::not(a_in_h.clone())]);
                let mut step = Vec::new();
                for (g, acc, pending) in partial {
                    if !pending {
                        let mut acc = acc;
                        acc.push(a.clone());
                        step.push((g, acc, false));
                        continue;
                    }
                    if let Some(g2) = refine(&g, h_in_a.clone()) {
                        let mut acc2 = acc.clone();
                        acc2.push(a.clone());
                        step.push((g2, acc2, false));
                    }
                    if let Some(g2) = refine(&g, a_in_h.clone()) {
                        step.push((g2, acc.clone(), true));
                    }
                    if let Some(g2) = refine(&g, apart.clone()) {
                        let mut acc2 = acc;
                        acc2.push(a.clone());
                        step.push((g2, acc2, true));
                    }
                }
                partial = step;
            }
            for (g, mut acc, pending) in partial {
                if pending {
                    acc.push(h.clone());
                }
                next.push((g, acc));
            }
        }
        states = next;
    }
    states
}
