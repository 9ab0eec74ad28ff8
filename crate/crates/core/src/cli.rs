//! The `padiq` command line.

use std::io::{Read, Write};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::formula::{Atom, Formula, Literal};
use crate::fuzz::{check_with, CheckConfig, Status};
use crate::normalize::{
    merge_congruences, normal_form, one_sided_valuations, reduce_bounds, split_congruence, unify_coefficient, YLit,
};
use crate::parse::parse;
use crate::primes::PrimeSet;
use crate::qe::{decide_sentence, dnf, eliminate_quantifiers, solve_grounded_1v, QeConfig};
use crate::render::render;

#[derive(Parser, Debug)]
#[command(
    name = "padiq",
    version,
    about = "Quantifier elimination for Presburger arithmetic with p-adic valuations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Comma-separated primes whose valuations may appear.
    #[arg(long, global = true, default_value = "2,3")]
    primes: PrimeSet,
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 6)]
    max_coeff: i64,
    #[arg(long, global = true, default_value_t = 5)]
    max_depth: usize,
    /// Largest DNF, counted in literals.
    #[arg(long, global = true, default_value_t = crate::qe::DEFAULT_NODE_CAP)]
    node_cap: usize,
    /// Largest number of residues a merged congruence may enumerate.
    #[arg(long, global = true, default_value_t = crate::qe::DEFAULT_RESIDUE_CAP)]
    residue_cap: u64,
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print an equivalent quantifier-free formula.
    Qe { formula: String },
    /// Decide a sentence.
    Decide { formula: String },
    /// Find a solution of a formula in one free variable, with its certificate.
    Solve { formula: String },
    /// Compare elimination against the model oracle on random formulas.
    Check,
    /// Print the output of one normalization pass on `E x. body`.
    PassDebug {
        #[arg(long, value_enum)]
        pass: Pass,
        formula: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Pass {
    Nnf,
    Dnf,
    OneSided,
    Unify,
    MergeCongruences,
    SplitPrime,
    NormalForm,
    ReduceBounds,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ResidueCap { .. } | Error::NodeCap { .. } => 3,
        _ => 2,
    }
}

fn read_formula(text: &str, stdin: &mut dyn Read) -> Result<String> {
    if text != "-" {
        return Ok(text.to_string());
    }
    let mut s = String::new();
    stdin
        .read_to_string(&mut s)
        .map_err(|e| Error::IllFormed(format!("reading stdin: {e}")))?;
    Ok(s)
}

fn one_sided(conj: &[Literal], x: &str) -> Vec<Literal> {
    let mut out = Vec::new();
    for l in conj {
        match &l.atom {
            Atom::ValLe { lhs, rhs, .. } if l.positive && lhs.mentions(x) && rhs.mentions(x) => {
                match one_sided_valuations(&l.atom, x) {
                    Formula::True => {}
                    g => out.extend(Literal::from_formula(&g)),
                }
            }
            _ => out.push(l.clone()),
        }
    }
    out
}

fn show_guard(g: &Formula) -> String {
    if *g == Formula::True {
        String::new()
    } else {
        format!("[{}] ", render(g))
    }
}

fn pass_debug(pass: Pass, f: &Formula, cfg: &QeConfig) -> Result<String> {
    let mut out = String::new();
    match pass {
        Pass::Nnf => return Ok(render(&crate::formula::to_nnf(f))),
        Pass::Dnf => {
            let body = match f {
                Formula::Exists(_, b) => b,
                _ => f,
            };
            for conj in dnf(body, cfg.node_cap)? {
                let parts: Vec<String> = conj.iter().map(|l| render(&l.to_formula())).collect();
                out.push_str(&parts.join(" && "));
                out.push('\n');
            }
            return Ok(out.trim_end().to_string());
        }
        _ => {}
    }
    let Formula::Exists(x, body) = f else {
        return Err(Error::IllFormed(
            "this pass expects `E x. <quantifier-free body>`".into(),
        ));
    };
    let conjs = dnf(body, cfg.node_cap)?;
    for (i, conj) in conjs.iter().enumerate() {
        if conjs.len() > 1 {
            out.push_str(&format!("# disjunct {}\n", i + 1));
        }
        let lits: Vec<Literal> = one_sided(conj, x).into_iter().filter(|l| l.mentions(x)).collect();
        if lits.iter().any(|l| l.positive && matches!(&l.atom, Atom::Eq(_))) {
            out.push_str("equality in the variable: discharged by substitution before normalization\n");
            continue;
        }
        match pass {
            Pass::OneSided => {
                for l in &lits {
                    out.push_str(&format!("{}\n", render(&l.to_formula())));
                }
            }
            Pass::Unify => {
                let (n, ylits) = unify_coefficient(&lits, x)?;
                out.push_str(&format!("scale {n}\n"));
                for l in &ylits {
                    out.push_str(&format!("{}\n", render(&l.to_formula(x))));
                }
            }
            Pass::MergeCongruences | Pass::SplitPrime => {
                let (_, ylits) = unify_coefficient(&lits, x)?;
                let congs: Vec<_> = ylits
                    .into_iter()
                    .filter_map(|l| match l {
                        YLit::Cong(c) => Some(c),
                        _ => None,
                    })
                    .collect();
                for case in merge_congruences(&congs, cfg.residue_cap)? {
                    let g = show_guard(&case.guard);
                    if let Pass::MergeCongruences = pass {
                        out.push_str(&format!("{g}{}\n", render(&case.body.to_formula(x))));
                        continue;
                    }
                    for (parts, c) in split_congruence(&case.body, &cfg.primes) {
                        let ps: Vec<String> = parts
                            .iter()
                            .map(|(p, (r, e))| format!("{x} = {r} mod {p}^{e}"))
                            .collect();
                        out.push_str(&format!("{g}{}; {}\n", ps.join("; "), render(&c.to_formula(x))));
                    }
                }
            }
            Pass::NormalForm | Pass::ReduceBounds => {
                for case in normal_form(&lits, x, &cfg.primes, cfg.residue_cap)? {
                    let g = show_guard(&case.guard);
                    for nf in &case.body {
                        if let Pass::NormalForm = pass {
                            out.push_str(&format!("{g}\n{nf}"));
                            continue;
                        }
                        for (p, pb) in &nf.per_prime {
                            for r in reduce_bounds(*p, pb) {
                                let head = format!("{g}{}p={p}: ", show_guard(&r.guard));
                                match r.body {
                                    None => out.push_str(&format!("{head}empty\n")),
                                    Some(rb) => {
                                        let holes: Vec<String> = rb
                                            .uppers
                                            .iter()
                                            .map(|h| format!("B({}, {})", h.center, h.threshold.show(*p)))
                                            .collect();
                                        out.push_str(&format!(
                                            "{head}B({}, {}) minus {{{}}}\n",
                                            rb.lower.center,
                                            rb.lower.threshold.show(*p),
                                            holes.join(", ")
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Pass::Nnf | Pass::Dnf => unreachable!(),
        }
    }
    Ok(out.trim_end().to_string())
}

struct Reply {
    output: String,
    status: &'static str,
    extra: Option<serde_json::Value>,
    code: i32,
}

fn run_single(cli: &Cli, cfg: &QeConfig, text: &str) -> Result<Reply> {
    let f = parse(text, &cfg.primes)?;
    let ok = |output: String| Reply {
        output,
        status: "ok",
        extra: None,
        code: 0,
    };
    Ok(match &cli.command {
        Command::Qe { .. } => ok(render(&eliminate_quantifiers(&f, cfg)?)),
        Command::Decide { .. } => ok(decide_sentence(&f, cfg)?.to_string()),
        Command::Solve { .. } => {
            let s = solve_grounded_1v(&f, cfg)?;
            let mut r = ok(s.result.to_string());
            r.extra = s.certificate.map(|c| json!(c.to_string()));
            r
        }
        Command::PassDebug { pass, .. } => ok(pass_debug(*pass, &f, cfg)?),
        Command::Check => unreachable!(),
    })
}

fn run_check(cli: &Cli, cfg: &QeConfig, out: &mut dyn Write) -> Result<i32> {
    let mut cc = CheckConfig::new(cli.primes.clone(), cli.trials, cli.seed);
    cc.qe = cfg.clone();
    cc.gen.max_coeff = cli.max_coeff;
    cc.gen.max_depth = cli.max_depth;
    let json = cli.json;
    let report = check_with(&cc, |t| {
        if json {
            let (status, detail) = match &t.status {
                Status::Agree => ("ok", None),
                Status::Mismatch(d) => ("mismatch", Some(d.clone())),
                Status::Failed(d) => ("error", Some(d.clone())),
            };
            let v = json!({
                "input": t.input,
                "output": t.output,
                "status": status,
                "detail": detail,
                "regenerated": t.regenerated,
                "timings": {"total_ms": t.elapsed.as_secs_f64() * 1e3},
            });
            let _ = writeln!(out, "{v}");
        } else if t.status != Status::Agree {
            let _ = writeln!(out, "{t}");
        }
    })?;
    let code = if report.all_agree() { 0 } else { 1 };
    if !json {
        let _ = writeln!(out, "{}", report.summary());
    }
    Ok(code)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    if cli.node_cap == 0 || cli.residue_cap == 0 {
        let _ = writeln!(err, "error: caps must be positive");
        return 2;
    }
    let cfg = QeConfig {
        primes: cli.primes.clone(),
        node_cap: cli.node_cap,
        residue_cap: cli.residue_cap,
    };
    if let Command::Check = cli.command {
        if cli.trials == 0 {
            let _ = writeln!(err, "error: --trials must be at least 1");
            return 2;
        }
        return match run_check(&cli, &cfg, out) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                exit_code(&e)
            }
        };
    }
    let text = match &cli.command {
        Command::Qe { formula } | Command::Decide { formula } | Command::Solve { formula } => formula,
        Command::PassDebug { formula, .. } => formula,
        Command::Check => unreachable!(),
    };
    let start = Instant::now();
    let result = read_formula(text, stdin).and_then(|t| Ok((run_single(&cli, &cfg, &t), t)));
    let (result, input) = match result {
        Ok(pair) => pair,
        Err(e) => (Err(e), text.clone()),
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(r) => {
            if cli.json {
                let mut v = json!({
                    "input": input.trim(),
                    "output": r.output,
                    "status": r.status,
                    "timings": {"total_ms": ms},
                });
                if let Some(c) = r.extra {
                    v["certificate"] = c;
                }
                let _ = writeln!(out, "{v}");
            } else {
                let _ = writeln!(out, "{}", r.output);
            }
            r.code
        }
        Err(e) => {
            if cli.json {
                let v = json!({
                    "input": input.trim(),
                    "output": null,
                    "status": "error",
                    "error": e.to_string(),
                    "timings": {"total_ms": ms},
                });
                let _ = writeln!(out, "{v}");
            }
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
