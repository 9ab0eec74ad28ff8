//! Seeded random formulas and the differential check of elimination
//! against the model oracle.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formula::{canonicalize, Atom, Formula};
use crate::parse::parse;
use crate::primes::PrimeSet;
use crate::qe::{eliminate_quantifiers, QeConfig};
use crate::render::render;
use crate::term::{Assignment, Term};
use crate::zmodel::{
    eval_with_quantifiers, exceptional_points, period_bound, witness_1v, QfEvaluator, NESTED_WINDOW_CAP,
};

const VARS: [&str; 3] = ["x", "y", "z"];
const MAX_QUANTIFIERS: usize = 2;
const SAMPLE_RANGE: i64 = 50;
const WINDOW_CAP: i128 = 10_000;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub primes: PrimeSet,
    pub max_coeff: i64,
    pub max_depth: usize,
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub gen: GenConfig,
    pub qe: QeConfig,
    pub trials: usize,
    pub seed: u64,
    pub samples: usize,
}

impl CheckConfig {
    pub fn new(primes: PrimeSet, trials: usize, seed: u64) -> Self {
        CheckConfig {
            gen: GenConfig {
                primes: primes.clone(),
                max_coeff: 6,
                max_depth: 5,
            },
            qe: QeConfig::new(primes),
            trials,
            seed,
            samples: 100,
        }
    }
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    cfg: &'a GenConfig,
}

impl Generator<'_> {
    fn coeff(&mut self) -> i64 {
        let c = self.cfg.max_coeff.max(1);
        let mut v = 0;
        while v == 0 {
            v = self.rng.random_range(-c..=c);
        }
        v
    }

    fn term(&mut self, scope: &[&str]) -> Term {
        let mut t = Term::constant(self.rng.random_range(-8..=8));
        let n = self.rng.random_range(1..=2.min(scope.len()));
        for _ in 0..n {
            let v = scope[self.rng.random_range(0..scope.len())];
            t = t + Term::monomial(v, self.coeff());
        }
        t
    }

    fn atom(&mut self, scope: &[&str]) -> Formula {
        let roll = self.rng.random_range(0..10);
        let primes = self.cfg.primes.as_slice();
        let atom = if roll < 6 {
            let p = primes[self.rng.random_range(0..primes.len())];
            if self.rng.random_bool(0.5) {
                let c = self.rng.random_range(0..=4);
                let t = self.term(scope);
                match self.rng.random_range(0..3) {
                    0 => Formula::atom(Atom::val_ge_const(p, t, c)),
                    1 => Formula::and(vec![
                        Formula::atom(Atom::val_ge_const(p, t.clone(), c)),
                        Formula::not(Formula::atom(Atom::val_ge_const(p, t, c + 1))),
                    ]),
                    _ => Formula::not(Formula::atom(Atom::val_ge_const(p, t, c))),
                }
            } else {
                let k = self.rng.random_range(-2..=2);
                let f = Formula::atom(Atom::val_le(p, k, self.term(scope), self.term(scope)));
                if self.rng.random_bool(0.3) {
                    Formula::not(f)
                } else {
                    f
                }
            }
        } else if roll < 9 {
            let m: i64 = self.rng.random_range(2..=12);
            let f = Formula::atom(Atom::div(m, self.term(scope)));
            if self.rng.random_bool(0.3) {
                Formula::not(f)
            } else {
                f
            }
        } else {
            let f = Formula::atom(Atom::eq(self.term(scope)));
            if self.rng.random_bool(0.4) {
                Formula::not(f)
            } else {
                f
            }
        };
        atom
    }

    fn formula(&mut self, depth: usize, quantifiers: usize, scope: &[&str], bound: &[&str]) -> Formula {
        if depth == 0 || self.rng.random_bool(0.25) {
            return self.atom(scope);
        }
        let roll = self.rng.random_range(0..10);
        if roll < 2 && quantifiers > 0 {
            let free: Vec<&str> = VARS.iter().copied().filter(|v| !bound.contains(v)).collect();
            let v = free[self.rng.random_range(0..free.len())];
            let mut inner = bound.to_vec();
            inner.push(v);
            let mut scope = scope.to_vec();
            if !scope.contains(&v) {
                scope.push(v);
            }
            let body = self.formula(depth - 1, quantifiers - 1, &scope, &inner);
            return if self.rng.random_bool(0.6) {
                Formula::exists(v, body)
            } else {
                Formula::forall(v, body)
            };
        }
        match roll {
            0..=5 => {
                let n = self.rng.random_range(2..=3);
                let j = self.rng.random_range(0..n);
                let parts = (0..n)
                    .map(|i| self.formula(depth - 1, if i == j { quantifiers } else { 0 }, scope, bound))
                    .collect();
                Formula::and(parts)
            }
            6..=8 => {
                let j = self.rng.random_range(0..2);
                let parts = (0..2)
                    .map(|i| self.formula(depth - 1, if i == j { quantifiers } else { 0 }, scope, bound))
                    .collect();
                Formula::or(parts)
            }
            _ => Formula::not(self.formula(depth - 1, quantifiers, scope, bound)),
        }
    }

    /// A formula with at least one quantifier wrapped around the outside so
    /// elimination always has work to do.
    fn trial_formula(&mut self) -> Formula {
        let n_vars = self.rng.random_range(1..=VARS.len());
        let scope = &VARS[..n_vars];
        let v = scope[self.rng.random_range(0..scope.len())];
        let depth = self.cfg.max_depth.max(2) - 1;
        let body = self.formula(depth, MAX_QUANTIFIERS - 1, scope, &[v]);
        if self.rng.random_bool(0.7) {
            Formula::exists(v, body)
        } else {
            Formula::forall(v, body)
        }
    }
}

/// Formulas whose elimination exceeds the resource caps are replaced, up
/// to this many times per trial.
const MAX_REGENERATIONS: u64 = 32;

/// The `attempt`-th candidate formula of trial `index`. Each candidate has
/// its own stream, so a single trial can be regenerated in isolation.
pub fn generate(cfg: &GenConfig, seed: u64, index: usize, attempt: u64) -> Formula {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 8) | attempt);
    let mut g = Generator { rng, cfg };
    g.trial_formula()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Agree,
    Mismatch(String),
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub index: usize,
    pub input: String,
    pub output: Option<String>,
    pub status: Status,
    pub checked: usize,
    /// Candidates discarded because elimination exceeded a cap.
    pub regenerated: u64,
    pub elapsed: Duration,
}

impl fmt::Display for TrialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            Status::Agree => write!(f, "trial {}: ok ({} points)", self.index, self.checked),
            Status::Mismatch(why) => write!(
                f,
                "trial {}: MISMATCH {why}\n  input:  {}\n  output: {}",
                self.index,
                self.input,
                self.output.as_deref().unwrap_or("-")
            ),
            Status::Failed(why) => write!(f, "trial {}: ERROR {why}\n  input:  {}", self.index, self.input),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub seed: u64,
    pub trials: Vec<TrialReport>,
}

impl CheckReport {
    pub fn agreements(&self) -> usize {
        self.trials.iter().filter(|t| t.status == Status::Agree).count()
    }

    pub fn all_agree(&self) -> bool {
        self.agreements() == self.trials.len()
    }

    pub fn regenerated(&self) -> u64 {
        self.trials.iter().map(|t| t.regenerated).sum()
    }

    pub fn summary(&self) -> String {
        format!(
            "seed {}: {}/{} agreements ({} candidates over the caps regenerated)",
            self.seed,
            self.agreements(),
            self.trials.len(),
            self.regenerated()
        )
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialReport> {
        self.trials.iter().filter(|t| t.status != Status::Agree)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.failures() {
            writeln!(f, "{t}")?;
        }
        write!(f, "{}", self.summary())
    }
}

fn env_of(vars: &[String], values: &[i64]) -> Assignment {
    vars.iter()
        .cloned()
        .zip(values.iter().map(|&v| BigInt::from(v)))
        .collect()
}

/// Re-parses the rendered output, eliminates again and demands the same
/// canonical text.
pub fn round_trip(output: &Formula, cfg: &QeConfig) -> Result<Option<String>> {
    let text = render(output);
    let reparsed = parse(&text, &cfg.primes)?;
    if render(&canonicalize(&reparsed)) != text {
        return Ok(Some(format!("re-render differs: {}", render(&canonicalize(&reparsed)))));
    }
    let again = render(&eliminate_quantifiers(&reparsed, cfg)?);
    if again != text {
        return Ok(Some(format!("re-elimination differs: {again}")));
    }
    Ok(None)
}

/// Compares `output` with `input` over the whole sound window of the output
/// when exactly one variable is free, returning the number of points
/// checked or a description of the first disagreement. Windows wider than
/// `WINDOW_CAP` on each side only have one solution of the output checked.
fn window_check(input: &Formula, output: &Formula, var: &str) -> Result<std::result::Result<usize, String>> {
    let (m, d) = period_bound(output, var)?;
    let exc: Vec<i128> = exceptional_points(output, var)?
        .iter()
        .filter_map(ToPrimitive::to_i128)
        .collect();
    let reach = m
        .to_i128()
        .unwrap_or(i128::MAX)
        .saturating_mul(d.max(exc.len()) as i128 + 1);
    if reach > WINDOW_CAP {
        return Ok(match witness_1v(output, var)? {
            Some(w) => {
                let env: Assignment = [(var.to_string(), w.clone())].into_iter().collect();
                if eval_with_quantifiers(input, &env, NESTED_WINDOW_CAP)? {
                    Ok(1)
                } else {
                    Err(format!("output holds at {var} = {w} but the input does not"))
                }
            }
            None => Ok(0),
        });
    }
    let ev = QfEvaluator::new(output, &[var.to_string()])?;
    let mut n = 0;
    for x in (-reach..=reach).chain(exc.iter().copied()) {
        let env: Assignment = [(var.to_string(), BigInt::from(x))].into_iter().collect();
        let want = eval_with_quantifiers(input, &env, NESTED_WINDOW_CAP)?;
        if ev.eval(&[x])? != want {
            return Ok(Err(format!("at {var} = {x}: oracle says {want}")));
        }
        n += 1;
    }
    Ok(Ok(n))
}

fn run_trial(cfg: &CheckConfig, index: usize) -> TrialReport {
    let start = Instant::now();
    let mut attempt = 0;
    let (input, eliminated) = loop {
        let input = generate(&cfg.gen, cfg.seed, index, attempt);
        let out = eliminate_quantifiers(&input, &cfg.qe);
        let capped = matches!(out, Err(Error::ResidueCap { .. } | Error::NodeCap { .. }));
        if !capped || attempt + 1 == MAX_REGENERATIONS {
            break (input, out);
        }
        attempt += 1;
    };
    let mut report = TrialReport {
        index,
        input: render(&input),
        output: None,
        status: Status::Agree,
        checked: 0,
        regenerated: attempt,
        elapsed: Duration::ZERO,
    };
    let outcome = (|| -> Result<Status> {
        let output = eliminated?;
        report.output = Some(render(&output));
        if !output.is_quantifier_free() {
            return Ok(Status::Mismatch("output has a quantifier".into()));
        }
        let vars: Vec<String> = input.free_vars().into_iter().collect();
        let ev = QfEvaluator::new(&output, &vars)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        rng.set_stream(index as u64);
        let samples = if vars.is_empty() { 1 } else { cfg.samples };
        for _ in 0..samples {
            let values: Vec<i64> = vars
                .iter()
                .map(|_| rng.random_range(-SAMPLE_RANGE..=SAMPLE_RANGE))
                .collect();
            let want = eval_with_quantifiers(&input, &env_of(&vars, &values), NESTED_WINDOW_CAP)?;
            let small: Vec<i128> = values.iter().map(|&v| v as i128).collect();
            if ev.eval(&small)? != want {
                let at: Vec<String> = vars.iter().zip(&values).map(|(v, x)| format!("{v} = {x}")).collect();
                return Ok(Status::Mismatch(format!("at {}: oracle says {want}", at.join(", "))));
            }
            report.checked += 1;
        }
        if let [var] = vars.as_slice() {
            match window_check(&input, &output, var)? {
                Ok(n) => report.checked += n,
                Err(why) => return Ok(Status::Mismatch(why)),
            }
        }
        if let Some(why) = round_trip(&output, &cfg.qe)? {
            return Ok(Status::Mismatch(why));
        }
        Ok(Status::Agree)
    })();
    report.status = outcome.unwrap_or_else(|e| Status::Failed(e.to_string()));
    report.elapsed = start.elapsed();
    report
}

/// Runs the differential check. Trials run in order and the report does
/// not depend on timing apart from the recorded durations.
pub fn check(cfg: &CheckConfig) -> Result<CheckReport> {
    check_with(cfg, |_| {})
}

/// As [`check`], calling `on_trial` as each trial finishes.
pub fn check_with(cfg: &CheckConfig, mut on_trial: impl FnMut(&TrialReport)) -> Result<CheckReport> {
    if cfg.trials == 0 {
        return Err(Error::IllFormed("trials must be at least 1".into()));
    }
    let trials = (0..cfg.trials)
        .map(|i| {
            let t = run_trial(cfg, i);
            on_trial(&t);
            t
        })
        .collect();
    Ok(CheckReport { seed: cfg.seed, trials })
}
