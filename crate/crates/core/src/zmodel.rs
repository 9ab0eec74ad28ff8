//! Semantics over the standard model and an exhaustive satisfiability
//! oracle for formulas in one free variable.
//!
//! The oracle is deliberately independent of the elimination engine: it
//! only evaluates atoms. One-variable decisions rest on periodicity: away
//! from finitely many exceptional points every atom is periodic in the
//! variable, so one period of residues decides satisfiability exactly.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::arith::{valuation, ValN};
use crate::error::{Error, Result};
use crate::formula::{Atom, Formula};
use crate::term::{Assignment, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Unsat,
    Sat(BigInt),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

impl std::fmt::Display for SatResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SatResult::Unsat => write!(f, "Unsat"),
            SatResult::Sat(w) => write!(f, "Sat({w})"),
        }
    }
}

/// Largest period the oracle is willing to scan.
pub const MAX_PERIOD: i128 = 50_000_000;

/// Default half-width cap for the window scanned by an outer quantifier
/// whose body still contains quantifiers.
pub const NESTED_WINDOW_CAP: i128 = 160;

/// `v_p(a) + k <= v_p(b)` with `v_p(0) = inf`.
pub fn val_le_holds(p: u64, k: i64, a: &BigInt, b: &BigInt) -> bool {
    match (valuation(p, a), valuation(p, b)) {
        (_, ValN::Infinity) => true,
        (ValN::Infinity, _) => false,
        (ValN::Fin(va), ValN::Fin(vb)) => va as i128 + k as i128 <= vb as i128,
    }
}

pub fn eval_atom(a: &Atom, env: &Assignment) -> Result<bool> {
    Ok(match a {
        Atom::Eq(t) => t.eval(env)?.is_zero(),
        Atom::Div(m, t) => t.eval(env)?.is_multiple_of(m),
        Atom::ValLe { p, k, lhs, rhs } => val_le_holds(*p, *k, &lhs.eval(env)?, &rhs.eval(env)?),
    })
}

/// Truth value of a quantifier-free formula under an assignment.
pub fn eval_qf(f: &Formula, env: &Assignment) -> Result<bool> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => eval_atom(a, env)?,
        Formula::Not(g) => !eval_qf(g, env)?,
        Formula::And(gs) => {
            for g in gs {
                if !eval_qf(g, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval_qf(g, env)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Exists(..) | Formula::Forall(..) => return Err(Error::NotQuantifierFree),
    })
}

// Fixed-width evaluation. Every oracle routine below works on a compiled
// copy of the formula with variables resolved to slots.

#[derive(Debug, Clone)]
struct CTerm {
    coeffs: Vec<(usize, i128)>,
    constant: i128,
}

#[derive(Debug, Clone)]
enum Node {
    Const(bool),
    Eq(CTerm),
    Div(i128, CTerm),
    ValLe(u64, i64, CTerm, CTerm),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Exists(usize, Box<Node>, bool),
}

#[derive(Debug)]
struct Overflow;

type Fx<T> = std::result::Result<T, Overflow>;

fn vp(p: u64, mut a: i128) -> u32 {
    debug_assert!(a != 0);
    if p == 2 {
        return a.trailing_zeros();
    }
    let p = p as i128;
    let mut v = 0;
    while a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

fn gcd_i(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm_i(a: i128, b: i128) -> Fx<i128> {
    if a == 0 || b == 0 {
        return Ok(0);
    }
    (a / gcd_i(a, b)).checked_mul(b).map(|v| v.abs()).ok_or(Overflow)
}

impl CTerm {
    fn eval(&self, env: &[i128]) -> Fx<i128> {
        let mut acc = self.constant;
        for &(s, c) in &self.coeffs {
            acc = c.checked_mul(env[s]).and_then(|v| v.checked_add(acc)).ok_or(Overflow)?;
        }
        Ok(acc)
    }

    /// Splits into (coefficient of `slot`, value of the rest).
    fn split(&self, slot: usize, env: &[i128]) -> Fx<(i128, i128)> {
        let mut acc = self.constant;
        let mut c = 0;
        for &(s, k) in &self.coeffs {
            if s == slot {
                c = k;
            } else {
                acc = k.checked_mul(env[s]).and_then(|v| v.checked_add(acc)).ok_or(Overflow)?;
            }
        }
        Ok((c, acc))
    }
}

fn val_le_i(p: u64, k: i64, a: i128, b: i128) -> bool {
    if b == 0 {
        return true;
    }
    if a == 0 {
        return false;
    }
    vp(p, a) as i64 + k <= vp(p, b) as i64
}

struct Compiler {
    slots: Vec<String>,
}

impl Compiler {
    fn slot(&mut self, name: &str) -> usize {
        if let Some(i) = self.slots.iter().rposition(|s| s == name) {
            return i;
        }
        self.slots.push(name.to_string());
        self.slots.len() - 1
    }

    fn term(&mut self, t: &Term) -> Option<CTerm> {
        let mut coeffs = Vec::new();
        for (v, c) in t.coeffs() {
            coeffs.push((self.slot(v), small(c)?));
        }
        Some(CTerm {
            coeffs,
            constant: small(t.constant_part())?,
        })
    }

    fn node(&mut self, f: &Formula) -> Option<Node> {
        Some(match f {
            Formula::True => Node::Const(true),
            Formula::False => Node::Const(false),
            Formula::Atom(Atom::Eq(t)) => Node::Eq(self.term(t)?),
            Formula::Atom(Atom::Div(m, t)) => Node::Div(small(m)?, self.term(t)?),
            Formula::Atom(Atom::ValLe { p, k, lhs, rhs }) => Node::ValLe(*p, *k, self.term(lhs)?, self.term(rhs)?),
            Formula::Not(g) => Node::Not(Box::new(self.node(g)?)),
            Formula::And(gs) => Node::And(gs.iter().map(|g| self.node(g)).collect::<Option<_>>()?),
            Formula::Or(gs) => Node::Or(gs.iter().map(|g| self.node(g)).collect::<Option<_>>()?),
            Formula::Exists(v, g) | Formula::Forall(v, g) if !g.mentions(v) => self.node(g)?,
            Formula::Exists(v, g) | Formula::Forall(v, g) if !g.is_quantifier_free() => {
                match distribute(matches!(f, Formula::Exists(..)), v, g) {
                    Some(h) => self.node(&h)?,
                    None => self.quantifier(f, v, g)?,
                }
            }
            Formula::Exists(v, g) | Formula::Forall(v, g) => self.quantifier(f, v, g)?,
        })
    }

    fn quantifier(&mut self, f: &Formula, v: &str, g: &Formula) -> Option<Node> {
        self.slots.push(v.to_string());
        let s = self.slots.len() - 1;
        let body = self.node(g)?;
        // shadowing: later lookups of `v` outside this scope must not hit
        self.slots[s] = format!("\u{0}{v}");
        let qf = !has_quantifier(&body);
        Some(if matches!(f, Formula::Exists(..)) {
            Node::Exists(s, Box::new(body), qf)
        } else {
            Node::Not(Box::new(Node::Exists(s, Box::new(Node::Not(Box::new(body))), qf)))
        })
    }
}

/// Moves a quantifier over a nested body inward where that is an exact
/// equivalence: into the disjuncts of an existential, the conjuncts of a
/// universal, and past parts not mentioning its variable.
fn distribute(exists: bool, v: &str, g: &Formula) -> Option<Formula> {
    let wrap = |h: Formula| {
        if exists {
            Formula::Exists(v.to_string(), Box::new(h))
        } else {
            Formula::Forall(v.to_string(), Box::new(h))
        }
    };
    let negated = |parts: &[Formula]| parts.iter().cloned().map(Formula::not).collect::<Vec<_>>();
    let pushed = match g {
        Formula::Not(h) => match &**h {
            Formula::Or(parts) => Some(Formula::And(negated(parts))),
            Formula::And(parts) => Some(Formula::Or(negated(parts))),
            Formula::Not(k) => Some((**k).clone()),
            _ => None,
        },
        _ => None,
    };
    if let Some(h) = pushed {
        return Some(distribute(exists, v, &h).unwrap_or_else(|| wrap(h)));
    }
    match (exists, g) {
        (true, Formula::Or(parts)) | (false, Formula::And(parts)) => {
            let inner: Vec<Formula> = parts.iter().cloned().map(wrap).collect();
            Some(if exists {
                Formula::Or(inner)
            } else {
                Formula::And(inner)
            })
        }
        (true, Formula::And(parts)) | (false, Formula::Or(parts)) => {
            let (with, without): (Vec<Formula>, Vec<Formula>) = parts.iter().cloned().partition(|p| p.mentions(v));
            if without.is_empty() {
                return None;
            }
            let mut out = without;
            out.push(wrap(if exists { Formula::And(with) } else { Formula::Or(with) }));
            Some(if exists { Formula::And(out) } else { Formula::Or(out) })
        }
        _ => None,
    }
}

fn has_quantifier(n: &Node) -> bool {
    match n {
        Node::Exists(..) => true,
        Node::Not(g) => has_quantifier(g),
        Node::And(gs) | Node::Or(gs) => gs.iter().any(has_quantifier),
        _ => false,
    }
}

fn small(n: &BigInt) -> Option<i128> {
    let v = n.to_i128()?;
    if v.abs() > (1i128 << 62) {
        return None;
    }
    Some(v)
}

struct Program {
    root: Node,
    slots: usize,
    index: BTreeMap<String, usize>,
}

fn compile(f: &Formula, free: &[String]) -> Result<Program> {
    let mut c = Compiler { slots: free.to_vec() };
    let root = c
        .node(f)
        .ok_or_else(|| Error::IllFormed("coefficient too large for the oracle".into()))?;
    let index = free.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    Ok(Program {
        root,
        slots: c.slots.len(),
        index,
    })
}

fn overflow() -> Error {
    Error::IllFormed("arithmetic overflow in the oracle".into())
}

/// Periodicity data of a quantifier-free node in one slot, all other slots
/// fixed: outside `exceptions` the truth value is `period`-periodic.
struct Periodicity {
    /// Exponent of each prime in the period.
    factors: BTreeMap<u64, u32>,
    exceptions: BTreeSet<i128>,
    exceptional_atoms: usize,
}

fn root_of(c: i128, g: i128) -> Option<i128> {
    if c != 0 && g % c == 0 {
        Some(-g / c)
    } else {
        None
    }
}

fn periodicity(node: &Node, slot: usize, env: &[i128]) -> Fx<Periodicity> {
    let mut modulus: i128 = 1;
    let mut exps: BTreeMap<u64, u32> = BTreeMap::new();
    let mut exceptions = BTreeSet::new();
    let mut exceptional_atoms = 0;
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        match n {
            Node::Const(_) => {}
            Node::Not(g) => stack.push(g),
            Node::And(gs) | Node::Or(gs) => stack.extend(gs.iter()),
            Node::Exists(..) => unreachable!("periodicity of a quantified node"),
            Node::Eq(t) => {
                let (c, g) = t.split(slot, env)?;
                if c != 0 {
                    exceptional_atoms += 1;
                    exceptions.extend(root_of(c, g));
                }
            }
            Node::Div(m, t) => {
                let (c, _) = t.split(slot, env)?;
                if c % m != 0 {
                    modulus = lcm_i(modulus, *m)?;
                }
            }
            Node::ValLe(p, k, t1, t2) => {
                let (c1, g1) = t1.split(slot, env)?;
                let (c2, g2) = t2.split(slot, env)?;
                let need: i64 = match (c1 != 0, c2 != 0) {
                    (false, false) => 0,
                    (false, true) => {
                        if g1 == 0 {
                            exceptional_atoms += 1;
                            exceptions.extend(root_of(c2, g2));
                            0
                        } else {
                            (vp(*p, g1) as i64 + k).max(0)
                        }
                    }
                    (true, false) => {
                        if g2 == 0 {
                            0
                        } else {
                            (vp(*p, g2) as i64 - k + 1).max(0)
                        }
                    }
                    (true, true) => {
                        exceptions.extend(root_of(c1, g1));
                        exceptions.extend(root_of(c2, g2));
                        let d = c2
                            .checked_mul(g1)
                            .and_then(|a| c1.checked_mul(g2).and_then(|b| a.checked_sub(b)))
                            .ok_or(Overflow)?;
                        if d == 0 {
                            exceptional_atoms += 1;
                            0
                        } else {
                            vp(*p, d) as i64 + vp(*p, c1) as i64 + vp(*p, c2) as i64 + k.abs() + 1
                        }
                    }
                };
                if need > 0 {
                    let e = exps.entry(*p).or_insert(0);
                    *e = (*e).max(need as u32);
                }
            }
        }
    }
    let mut factors: BTreeMap<u64, u32> = BTreeMap::new();
    for (q, e) in factor(modulus)? {
        factors.insert(q, e);
    }
    for (p, e) in exps {
        let f = factors.entry(p).or_insert(0);
        *f = (*f).max(e);
    }
    Ok(Periodicity {
        factors,
        exceptions,
        exceptional_atoms,
    })
}

impl Periodicity {
    fn period(&self) -> Fx<i128> {
        let mut period: i128 = 1;
        for (&p, &e) in &self.factors {
            let pe = (p as i128).checked_pow(e).ok_or(Overflow)?;
            period = period.checked_mul(pe).ok_or(Overflow)?;
        }
        Ok(period)
    }
}

const MAX_TRIAL_DIVISOR: i128 = 1 << 22;

fn factor(mut m: i128) -> Fx<Vec<(u64, u32)>> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= m {
        if d > MAX_TRIAL_DIVISOR {
            return Err(Overflow);
        }
        let mut e = 0;
        while m % d == 0 {
            m /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d as u64, e));
        }
        d += 1;
    }
    if m > 1 {
        out.push((m as u64, 1));
    }
    Ok(out)
}

fn eval_node(node: &Node, env: &mut Vec<i128>, nested_cap: i128) -> Fx<bool> {
    Ok(match node {
        Node::Const(b) => *b,
        Node::Eq(t) => t.eval(env)? == 0,
        Node::Div(m, t) => t.eval(env)? % m == 0,
        Node::ValLe(p, k, a, b) => val_le_i(*p, *k, a.eval(env)?, b.eval(env)?),
        Node::Not(g) => !eval_node(g, env, nested_cap)?,
        Node::And(gs) => {
            for g in gs {
                if !eval_node(g, env, nested_cap)? {
                    return Ok(false);
                }
            }
            true
        }
        Node::Or(gs) => {
            for g in gs {
                if eval_node(g, env, nested_cap)? {
                    return Ok(true);
                }
            }
            false
        }
        Node::Exists(slot, body, qf) => {
            if *qf {
                decide_exists(body, *slot, env)?
            } else {
                let w = nested_window(body, *slot, env, nested_cap)?;
                let saved = env[*slot];
                let mut found = false;
                for x in witness_order(w) {
                    env[*slot] = x;
                    if eval_node(body, env, nested_cap)? {
                        found = true;
                        break;
                    }
                }
                env[*slot] = saved;
                found
            }
        }
    })
}

/// 0, 1, -1, 2, -2, ... within `[-w, w]`.
fn witness_order(w: i128) -> impl Iterator<Item = i128> {
    (0..=w).flat_map(|i| if i == 0 { vec![0] } else { vec![i, -i] })
}

/// Exact decision of `exists slot. body` for quantifier-free `body`.
///
/// Away from the exceptional points every atom depends on the variable
/// only through the `q`-adic valuations of its linear terms, capped at the
/// exponent of `q` in the period. The classes of equal capped valuations
/// are enumerated per prime, and one representative of every combination
/// of classes is evaluated.
fn decide_exists(body: &Node, slot: usize, env: &mut [i128]) -> Fx<bool> {
    Ok(exists_witness(body, slot, env)?.is_some())
}

fn exists_witness(body: &Node, slot: usize, env: &mut [i128]) -> Fx<Option<i128>> {
    let per = periodicity(body, slot, env)?;
    let mut env_v = env.to_vec();
    for &e in &per.exceptions {
        env_v[slot] = e;
        if eval_node(body, &mut env_v, 0)? {
            return Ok(Some(e));
        }
    }
    let mut classes: Vec<Vec<(i128, i128)>> = Vec::new();
    for (&q, &cap) in &per.factors {
        let terms = prime_terms(body, q, slot, env)?;
        classes.push(valuation_classes(q, cap, &terms)?);
    }
    let mut digits = vec![0usize; classes.len()];
    loop {
        let (mut r, mut m) = (0i128, 1i128);
        for (cs, &d) in classes.iter().zip(&digits) {
            (r, m) = crt_i(r, m, cs[d].0, cs[d].1)?;
        }
        let mut x = r;
        while per.exceptions.contains(&x) {
            x = x.checked_add(m).ok_or(Overflow)?;
        }
        env_v[slot] = x;
        if eval_node(body, &mut env_v, 0)? {
            return Ok(Some(x));
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(None);
            }
            digits[i] += 1;
            if digits[i] < classes[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// The linear terms `(c, g)` (value `c*x + g`, `c != 0`) whose `q`-adic
/// valuation some atom looks at.
fn prime_terms(body: &Node, q: u64, slot: usize, env: &[i128]) -> Fx<Vec<(i128, i128)>> {
    let mut out = Vec::new();
    let mut stack = vec![body];
    while let Some(n) = stack.pop() {
        match n {
            Node::Const(_) | Node::Eq(_) => {}
            Node::Not(g) => stack.push(g),
            Node::And(gs) | Node::Or(gs) => stack.extend(gs.iter()),
            Node::Exists(..) => unreachable!("valuation classes of a quantified node"),
            Node::Div(m, t) => {
                if m % q as i128 == 0 {
                    out.push(t.split(slot, env)?);
                }
            }
            Node::ValLe(p, _, a, b) => {
                if *p == q {
                    out.push(a.split(slot, env)?);
                    out.push(b.split(slot, env)?);
                }
            }
        }
    }
    out.retain(|&(c, _)| c != 0);
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Residue classes `(r, q^j)` on which every term has a constant valuation
/// once capped at `cap`, one class per distinct vector of capped
/// valuations. Walks the `q`-adic digits; a ball is split only while some
/// term may still vanish to higher order on it, and a term does so on at
/// most one ball per level.
fn valuation_classes(q: u64, cap: u32, terms: &[(i128, i128)]) -> Fx<Vec<(i128, i128)>> {
    let qi = q as i128;
    let mut seen: BTreeMap<Vec<u32>, (i128, i128)> = BTreeMap::new();
    let mut frontier = vec![(0i128, 1i128, 0u32)];
    while let Some((r, m, j)) = frontier.pop() {
        let mut key = Vec::with_capacity(terms.len());
        let mut pending = false;
        for &(c, g) in terms {
            let v = c.checked_mul(r).and_then(|a| a.checked_add(g)).ok_or(Overflow)?;
            let floor = vp(q, c) + j;
            let a = if v == 0 { u32::MAX } else { vp(q, v) };
            if a < floor {
                key.push(a.min(cap));
            } else if floor >= cap {
                key.push(cap);
            } else {
                pending = true;
                break;
            }
        }
        if pending {
            let child = m.checked_mul(qi).ok_or(Overflow)?;
            for d in 0..qi {
                frontier.push((r + d * m, child, j + 1));
            }
        } else {
            seen.entry(key).or_insert((r, m));
        }
    }
    Ok(seen.into_values().collect())
}

fn crt_i(r1: i128, m1: i128, r2: i128, m2: i128) -> Fx<(i128, i128)> {
    // moduli are coprime powers of distinct primes
    let (mut a, mut b) = (m1.rem_euclid(m2), m2);
    let (mut x0, mut x1) = (1i128, 0i128);
    while b != 0 {
        let t = a / b;
        (a, b) = (b, a - t * b);
        (x0, x1) = (x1, x0 - t * x1);
    }
    debug_assert_eq!(a, 1);
    let inv = x0.rem_euclid(m2);
    let k = (r2 - r1)
        .rem_euclid(m2)
        .checked_mul(inv)
        .ok_or(Overflow)?
        .rem_euclid(m2);
    let m = m1.checked_mul(m2).ok_or(Overflow)?;
    let r = k
        .checked_mul(m1)
        .and_then(|v| v.checked_add(r1))
        .ok_or(Overflow)?
        .rem_euclid(m);
    Ok((r, m))
}

/// Search radius for an outer quantifier whose body has further
/// quantifiers. This is a heuristic bound: the constants and moduli of the
/// body determine a period-like length, which is clamped to `cap`.
fn nested_window(body: &Node, slot: usize, env: &[i128], cap: i128) -> Fx<i128> {
    let mut modulus: i128 = 1;
    let mut exps: BTreeMap<u64, i64> = BTreeMap::new();
    let mut atoms = 0i128;
    let mut stack = vec![body];
    let mut vals: Vec<i128> = Vec::new();
    while let Some(n) = stack.pop() {
        match n {
            Node::Const(_) => {}
            Node::Not(g) | Node::Exists(_, g, _) => stack.push(g),
            Node::And(gs) | Node::Or(gs) => stack.extend(gs.iter()),
            Node::Eq(t) => {
                atoms += 1;
                vals.push(t.split(slot, env)?.1);
            }
            Node::Div(m, _) => modulus = lcm_i(modulus, *m)?,
            Node::ValLe(p, k, a, b) => {
                atoms += 2;
                let mut g = 0;
                for t in [a, b] {
                    let (c, rest) = t.split(slot, env)?;
                    for v in [c, rest] {
                        if v != 0 {
                            g = g.max(vp(*p, v) as i64);
                        }
                    }
                    for &(_, c) in &t.coeffs {
                        if c != 0 {
                            g = g.max(vp(*p, c) as i64);
                        }
                    }
                }
                let e = exps.entry(*p).or_insert(0);
                *e = (*e).max(g + k.abs() + 2);
            }
        }
    }
    let mut m = modulus;
    for (p, e) in exps {
        let pe = (p as i128).checked_pow(e.min(40) as u32).ok_or(Overflow)?;
        m = lcm_i(m, pe)?.min(cap * 4);
    }
    let spread = vals.iter().map(|v| v.abs()).max().unwrap_or(0);
    Ok(((atoms + 1).saturating_mul(m) + spread).min(cap))
}

fn single_free_var(f: &Formula, var: &str) -> Result<Vec<String>> {
    let free = f.free_vars();
    if let Some(other) = free.iter().find(|v| v.as_str() != var) {
        return Err(Error::IllFormed(format!(
            "expected a formula in `{var}` only, found free `{other}`"
        )));
    }
    Ok(vec![var.to_string()])
}

/// Period `M` and number `d` of exceptional atoms for a quantifier-free
/// formula in `var`: deleting the exceptional atoms (equalities and
/// degenerate valuation comparisons, each true or false at one point only)
/// leaves an `M`-periodic solution set.
pub fn period_bound(f: &Formula, var: &str) -> Result<(BigInt, usize)> {
    if !f.is_quantifier_free() {
        return Err(Error::NotQuantifierFree);
    }
    let free = single_free_var(f, var)?;
    let prog = compile(f, &free)?;
    let env = vec![0; prog.slots];
    let per = periodicity(&prog.root, 0, &env).map_err(|_| overflow())?;
    let period = per.period().map_err(|_| overflow())?;
    Ok((BigInt::from(period), per.exceptional_atoms))
}

/// Points where an equality or degenerate valuation atom may break the
/// periodicity reported by [`period_bound`].
pub fn exceptional_points(f: &Formula, var: &str) -> Result<Vec<BigInt>> {
    if !f.is_quantifier_free() {
        return Err(Error::NotQuantifierFree);
    }
    let free = single_free_var(f, var)?;
    let prog = compile(f, &free)?;
    let env = vec![0; prog.slots];
    let per = periodicity(&prog.root, 0, &env).map_err(|_| overflow())?;
    Ok(per.exceptions.into_iter().map(BigInt::from).collect())
}

/// Decides a quantifier-free formula in one variable by checking every
/// exceptional point and one representative of every residue class of the
/// period. Returns the witness that comes first in the order
/// 0, 1, 2, ... then -1, -2, ...
pub fn brute_force_sat_1v(f: &Formula, var: &str) -> Result<SatResult> {
    if !f.is_quantifier_free() {
        return Err(Error::NotQuantifierFree);
    }
    let free = single_free_var(f, var)?;
    let prog = compile(f, &free)?;
    let mut env = vec![0; prog.slots.max(1)];
    let run = |env: &mut Vec<i128>| -> Fx<SatResult> {
        if !decide_exists(&prog.root, 0, env)? {
            return Ok(SatResult::Unsat);
        }
        let per = periodicity(&prog.root, 0, env)?;
        let period = per.period()?;
        if period > MAX_PERIOD {
            return Err(Overflow);
        }
        let reach = (per.exceptions.len() as i128 + 1) * period;
        let mut candidates: Vec<i128> = per.exceptions.iter().copied().filter(|e| e.abs() > reach).collect();
        candidates.sort_by_key(|&x| (x < 0, x.abs()));
        for x in (0..=reach).chain(candidates.iter().copied().filter(|&x| x >= 0)) {
            env[0] = x;
            if eval_node(&prog.root, env, 0)? {
                return Ok(SatResult::Sat(BigInt::from(x)));
            }
        }
        for x in (1..=reach)
            .map(|x| -x)
            .chain(candidates.iter().copied().filter(|&x| x < 0))
        {
            env[0] = x;
            if eval_node(&prog.root, env, 0)? {
                return Ok(SatResult::Sat(BigInt::from(x)));
            }
        }
        unreachable!("a satisfiable formula has a witness in the scanned window")
    };
    run(&mut env).map_err(|_| overflow())
}

/// Some solution of a quantifier-free formula in one variable, not
/// necessarily the least; works for periods too long to scan.
pub fn witness_1v(f: &Formula, var: &str) -> Result<Option<BigInt>> {
    if !f.is_quantifier_free() {
        return Err(Error::NotQuantifierFree);
    }
    let free = single_free_var(f, var)?;
    let prog = compile(f, &free)?;
    let mut env = vec![0; prog.slots.max(1)];
    let w = exists_witness(&prog.root, 0, &mut env).map_err(|_| overflow())?;
    Ok(w.map(BigInt::from))
}

/// Evaluates an arbitrary formula. Innermost quantifiers over
/// quantifier-free bodies are decided exactly; a quantifier whose body
/// contains further quantifiers is searched over a window of half-width at
/// most `nested_cap`.
pub fn eval_with_quantifiers(f: &Formula, env: &Assignment, nested_cap: i128) -> Result<bool> {
    let free: Vec<String> = f.free_vars().into_iter().collect();
    let prog = compile(f, &free)?;
    let mut slots = vec![0i128; prog.slots.max(1)];
    for (v, &i) in &prog.index {
        let val = env.get(v).ok_or_else(|| Error::Unassigned(v.clone()))?;
        slots[i] = small(val).ok_or_else(overflow)?;
    }
    eval_node(&prog.root, &mut slots, nested_cap).map_err(|_| overflow())
}

/// Fast evaluator for repeated evaluation of one quantifier-free formula.
pub struct QfEvaluator {
    prog: Program,
    order: Vec<String>,
}

impl QfEvaluator {
    /// `order` fixes the positions of variables in the value slices passed
    /// to [`QfEvaluator::eval`].
    pub fn new(f: &Formula, order: &[String]) -> Result<Self> {
        if !f.is_quantifier_free() {
            return Err(Error::NotQuantifierFree);
        }
        if let Some(v) = f.free_vars().iter().find(|v| !order.contains(v)) {
            return Err(Error::Unassigned(v.clone()));
        }
        Ok(QfEvaluator {
            prog: compile(f, order)?,
            order: order.to_vec(),
        })
    }

    pub fn eval(&self, values: &[i128]) -> Result<bool> {
        let mut env = vec![0i128; self.prog.slots.max(self.order.len())];
        env[..values.len()].copy_from_slice(values);
        eval_node(&self.prog.root, &mut env, 0).map_err(|_| overflow())
    }
}

/// Integer value of a big integer that fits the oracle's fixed width.
pub fn to_small(n: &BigInt) -> Option<i128> {
    small(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::primes::PrimeSet;

    fn f(s: &str) -> Formula {
        parse(s, &PrimeSet::new(vec![2, 3, 5]).unwrap()).unwrap()
    }

    fn at(x: i64) -> Assignment {
        [("x".to_string(), BigInt::from(x))].into_iter().collect()
    }

    #[test]
    fn eval_examples() {
        assert!(eval_qf(&f("v2(x - 1) >= 2"), &at(5)).unwrap());
        assert!(!eval_qf(&f("v2(x - 1) >= 2"), &at(3)).unwrap());
        assert!(!eval_qf(&f("D8(x) && !(v2(x) >= 3)"), &at(8)).unwrap());
    }

    #[test]
    fn period_examples() {
        assert_eq!(
            period_bound(&f("D3(x) && v2(x - 1) >= 2"), "x").unwrap(),
            (BigInt::from(12), 0)
        );
        assert_eq!(period_bound(&f("v2(x) >= 3"), "x").unwrap(), (BigInt::from(8), 0));
        assert_eq!(period_bound(&f("D3(x) && x != 5"), "x").unwrap(), (BigInt::from(3), 1));
    }

    #[test]
    fn brute_force_examples() {
        let sat = |s: &str| brute_force_sat_1v(&f(s), "x").unwrap();
        assert_eq!(sat("v2(x - 1) >= 2 && x != 1"), SatResult::Sat(BigInt::from(5)));
        assert_eq!(sat("v2(x) >= 1 && !D2(x)"), SatResult::Unsat);
        assert_eq!(sat("x = 4 && D8(x)"), SatResult::Unsat);
        assert_eq!(sat("x = -7 && D7(x)"), SatResult::Sat(BigInt::from(-7)));
    }

    #[test]
    fn witness_beyond_scannable_period() {
        for s in [
            "D1000003(x - 5) && D999983(x - 7) && v2(x) >= 3 && v3(x + 1) = 2",
            "D65537(x + 3) && D65521(x) && v5(x - 2) >= 4",
        ] {
            let g = f(s);
            assert!(brute_force_sat_1v(&g, "x").is_err());
            let w = witness_1v(&g, "x").unwrap().unwrap();
            assert!(eval_qf(&g, &at(w.to_i64().unwrap())).unwrap(), "{s} at {w}");
        }
        assert_eq!(
            witness_1v(&f("D1000003(x) && D999983(x - 1) && x = 0"), "x").unwrap(),
            None
        );
    }

    #[test]
    fn two_sided_atoms_are_periodic_away_from_roots() {
        for (c1, a1, c2, a2, k) in [(1, 0, 1, -4, 0), (2, 1, 3, 5, 1), (1, 3, 4, -2, -2), (3, 0, 1, 9, 2)] {
            let x = Term::var("x");
            let t1 = &x.scale(&BigInt::from(c1)) + &Term::constant(a1);
            let t2 = &x.scale(&BigInt::from(c2)) + &Term::constant(a2);
            for p in [2u64, 3] {
                let g = Formula::Atom(Atom::val_le(p, k, t1.clone(), t2.clone()));
                let (m, _) = period_bound(&g, "x").unwrap();
                let m: i64 = m.try_into().unwrap();
                for x0 in -3 * m..3 * m {
                    let (u, v) = (eval_qf(&g, &at(x0)).unwrap(), eval_qf(&g, &at(x0 + m)).unwrap());
                    let root = |c: i64, a: i64, x: i64| c * x + a == 0;
                    let near = root(c1, a1, x0) || root(c2, a2, x0) || root(c1, a1, x0 + m) || root(c2, a2, x0 + m);
                    assert!(u == v || near, "p={p} atom {g} x={x0} period {m}");
                }
            }
        }
    }

    fn random_body(rng: &mut rand_chacha::ChaCha8Rng) -> Formula {
        use rand::RngExt;
        let mut parts = Vec::new();
        for _ in 0..rng.random_range(1..=4) {
            let mut term = || {
                let c: i64 = rng.random_range(-4..=4);
                &Term::monomial("x", c) + &Term::constant(rng.random_range(-9..=9i64))
            };
            let (t1, t2) = (term(), term());
            let atom = match rng.random_range(0..4) {
                0 => Atom::Div(BigInt::from(rng.random_range(2..=12i64)), t1),
                1 => Atom::Eq(t1),
                2 => Atom::val_ge_const([2, 3][rng.random_range(0..2)], t1, rng.random_range(0..=3)),
                _ => Atom::val_le([2, 3][rng.random_range(0..2)], rng.random_range(-2..=2), t1, t2),
            };
            let lit = Formula::Atom(atom);
            parts.push(if rng.random_bool(0.4) { Formula::not(lit) } else { lit });
        }
        if rng.random_bool(0.3) {
            let k = parts.len() / 2;
            let rest = parts.split_off(k.max(1));
            Formula::Or(vec![Formula::And(parts), Formula::And(rest)])
        } else {
            Formula::And(parts)
        }
    }

    #[test]
    fn class_search_matches_period_scan() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..3000 {
            let body = random_body(&mut rng);
            let (m, _) = period_bound(&body, "x").unwrap();
            let exc = exceptional_points(&body, "x").unwrap();
            let m: i64 = m.try_into().unwrap();
            let reach = (exc.len() as i64 + 1) * m;
            if reach > 20_000 {
                continue;
            }
            let scan = (-reach..=reach).any(|x| eval_qf(&body, &at(x)).unwrap())
                || exc
                    .iter()
                    .any(|e| eval_qf(&body, &[("x".to_string(), e.clone())].into_iter().collect()).unwrap());
            let decided = eval_with_quantifiers(&Formula::exists("x", body.clone()), &Assignment::new(), 0).unwrap();
            assert_eq!(decided, scan, "{body}");
            checked += 1;
        }
        assert!(checked > 2000);
    }

    #[test]
    fn nested_quantifiers_evaluate() {
        let g = f("A y. E x. x = y + 1");
        assert!(eval_with_quantifiers(&g, &Assignment::new(), 50).unwrap());
        let h = f("E x. A y. v2(x) <= v2(y)");
        assert!(eval_with_quantifiers(&h, &Assignment::new(), 50).unwrap());
    }
}
