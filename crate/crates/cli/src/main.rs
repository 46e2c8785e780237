//! Command-line front-end over the scorerep library: derive a proper rule
//! from a monotone component, check propriety on a grid, score forecasts,
//! and compare two rules.
//!
//! Exit codes: 0 success (or check passed), 1 a mathematically meaningful
//! failure (propriety violation, uniqueness or difference-verdict mismatch), 2
//! input or usage errors. All output is deterministic: identical inputs
//! produce byte-identical stdout; numbers print with 17 significant
//! digits and `-inf` is the token for minus infinity.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scorerep::catalog::{parse_rule_spec, serialize_rule_spec, RuleSpecDocument};
use scorerep::extreal::{ExtReal, Extended};
use scorerep::represent::{derive_false_score, ScoringRule};
use scorerep::verify::{
    difference_propriety, propriety_check, uniqueness_gap, GridSpec, ProprietyReport,
    VerifyError, DEFAULT_TOL,
};

#[derive(Parser)]
#[command(
    name = "scorerep",
    version,
    about = "Construct and verify proper binary scoring rules"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Complete the rule-spec's truth-score to a proper rule; print x,T,F
    /// on the default grid and optionally write the full rule-spec.
    Derive(DeriveArgs),
    /// Check the propriety inequality over all grid pairs.
    Check(CheckArgs),
    /// Score a CSV of forecasts (header `q,outcome`) under a rule.
    Score(ScoreArgs),
    /// Compare two rules: uniqueness gap when the truth-scores agree,
    /// difference propriety otherwise.
    Compare(CompareArgs),
}

#[derive(Args)]
struct DeriveArgs {
    /// Rule-spec file supplying the truth-score.
    input: PathBuf,
    /// Additive constant C of the representation (defaults to the file's C,
    /// then 0).
    #[arg(long = "C", value_name = "REAL", allow_negative_numbers = true)]
    offset: Option<f64>,
    /// Endpoint drop c >= 0 (defaults to the file's c, then 0).
    #[arg(long = "c", value_name = "REAL", allow_negative_numbers = true)]
    drop: Option<f64>,
    /// Write the completed rule-spec here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
    /// Uniform resolution of the probe grid (>= 3).
    #[arg(long = "grid-n", value_name = "INT", default_value_t = 201)]
    grid_n: usize,
    /// Propriety tolerance (>= 0).
    #[arg(long, value_name = "REAL", default_value_t = DEFAULT_TOL, allow_negative_numbers = true)]
    tol: f64,
}

#[derive(Args)]
struct ScoreArgs {
    /// Rule-spec file.
    input: PathBuf,
    /// CSV of forecasts with header `q,outcome`.
    forecasts: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Uniform resolution of the probe grid (>= 3).
    #[arg(long = "grid-n", value_name = "INT", default_value_t = 201)]
    grid_n: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Derive(args) => cmd_derive(args),
        Cmd::Check(args) => cmd_check(args),
        Cmd::Score(args) => cmd_score(args),
        Cmd::Compare(args) => cmd_compare(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// 17-significant-digit scientific notation; the canonical CSV number.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one line of bulk output. A closed pipe downstream (`... | head`)
/// ends the emission quietly; any other write failure is an error.
fn emit(out: &mut impl Write, line: &str) -> Result<bool, String> {
    match writeln!(out, "{line}") {
        Ok(()) => Ok(true),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(false),
        Err(e) => Err(format!("cannot write to stdout: {e}")),
    }
}

fn ext(v: ExtReal) -> String {
    match v {
        ExtReal::NegInf => "-inf".to_string(),
        ExtReal::Finite(x) => num(x),
    }
}

fn extended(v: Extended) -> String {
    match v {
        Extended::NegInf => "-inf".to_string(),
        Extended::Finite(x) => num(x),
        Extended::PosInf => "+inf".to_string(),
    }
}

fn read_doc(path: &Path) -> Result<RuleSpecDocument, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_rule_spec(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_rule(path: &Path) -> Result<(RuleSpecDocument, ScoringRule), String> {
    let doc = read_doc(path)?;
    let rule = doc.load().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((doc, rule))
}

fn cmd_derive(args: DeriveArgs) -> Result<u8, String> {
    let doc = read_doc(&args.input)?;
    let offset = args.offset.or(doc.offset).unwrap_or(0.0);
    let drop = args.drop.or(doc.drop_at_one).unwrap_or(0.0);
    let truth = doc
        .truth
        .to_score_fn()
        .map_err(|e| format!("{}: {e}", args.input.display()))?;
    let rule = derive_false_score(&truth, offset, drop).map_err(|e| e.to_string())?;
    if let Some(out) = &args.out {
        let outdoc = RuleSpecDocument::from_rule(&rule, &doc.name, &doc.notes)
            .map_err(|e| format!("cannot serialize derived rule: {e}"))?;
        fs::write(out, serialize_rule_spec(&outdoc))
            .map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    }
    let grid = GridSpec::default_grid();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if !emit(&mut out, "x,T,F")? {
        return Ok(0);
    }
    for &x in grid.points() {
        let line = format!(
            "{},{},{}",
            num(x),
            ext(rule.truth_score.eval(x)),
            ext(rule.false_score.eval(x))
        );
        if !emit(&mut out, &line)? {
            return Ok(0);
        }
    }
    Ok(0)
}

fn print_report(report: &ProprietyReport, tol: f64, grid: &GridSpec) {
    println!("grid points: {}", grid.points().len());
    println!("pairs checked: {}", report.checked_pairs);
    println!("tolerance: {}", num(tol));
    let worst = if report.worst_violation.is_infinite() {
        "+inf".to_string()
    } else {
        num(report.worst_violation)
    };
    println!("worst violation: {worst}");
    let basis = if report.grid_supported_only {
        "grid-supported (opaque segments present)"
    } else {
        "exact segment forms"
    };
    println!("basis: {basis}");
    println!("verdict: {}", if report.passed { "PASS" } else { "FAIL" });
    if let Some(w) = &report.witness {
        println!(
            "witness: p={} q={} truthful={} reported={}",
            num(w.p),
            num(w.q),
            extended(w.lhs),
            extended(w.rhs)
        );
    }
}

fn cmd_check(args: CheckArgs) -> Result<u8, String> {
    if args.tol < 0.0 {
        return Err(format!("--tol must be >= 0, got {}", args.tol));
    }
    let grid = GridSpec::new(args.grid_n, true).map_err(|e| e.to_string())?;
    let (doc, rule) = load_rule(&args.input)?;
    let report = propriety_check(&rule, &grid, args.tol);
    println!("rule: {}", doc.name);
    print_report(&report, args.tol, &grid);
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_score(args: ScoreArgs) -> Result<u8, String> {
    let (_, rule) = load_rule(&args.input)?;
    let text = fs::read_to_string(&args.forecasts)
        .map_err(|e| format!("cannot read {}: {e}", args.forecasts.display()))?;
    let mut lines = text.lines().map(str::trim_end).filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some("q,outcome") => {}
        other => {
            return Err(format!(
                "forecast CSV must start with header `q,outcome`, got {other:?}"
            ))
        }
    }
    let mut rows: Vec<(f64, u8)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let mut parse = || -> Option<(f64, u8)> {
            let q: f64 = parts.next()?.trim().parse().ok()?;
            let outcome: u8 = match parts.next()?.trim() {
                "0" => 0,
                "1" => 1,
                _ => return None,
            };
            if parts.next().is_some() || !(0.0..=1.0).contains(&q) {
                return None;
            }
            Some((q, outcome))
        };
        match parse() {
            Some(row) => rows.push(row),
            None => {
                return Err(format!(
                    "malformed forecast row {} ({line:?}); expected `q,outcome` with q in [0,1] and outcome 0|1",
                    i + 2
                ))
            }
        }
    }
    if rows.is_empty() {
        return Err("forecast CSV has no data rows".into());
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if !emit(&mut out, "q,outcome,score")? {
        return Ok(0);
    }
    let mut sum = 0.0;
    let mut saw_neg_inf = false;
    for (q, outcome) in &rows {
        let score = if *outcome == 1 {
            rule.truth_score.eval(*q)
        } else {
            rule.false_score.eval(*q)
        };
        match score {
            ExtReal::Finite(v) => sum += v,
            ExtReal::NegInf => saw_neg_inf = true,
        }
        if !emit(&mut out, &format!("{},{},{}", num(*q), outcome, ext(score)))? {
            return Ok(0);
        }
    }
    let mean = if saw_neg_inf {
        ExtReal::NegInf
    } else {
        ExtReal::finite(sum / rows.len() as f64)
    };
    emit(&mut out, &format!("mean,,{}", ext(mean)))?;
    Ok(0)
}

fn cmd_compare(args: CompareArgs) -> Result<u8, String> {
    let grid = GridSpec::new(args.grid_n, true).map_err(|e| e.to_string())?;
    let (doc_a, rule_a) = load_rule(&args.a)?;
    let (doc_b, rule_b) = load_rule(&args.b)?;
    println!("compare: {} vs {}", doc_a.name, doc_b.name);

    let truth_agrees = grid.points().iter().all(|&x| {
        match (
            rule_a.truth_score.eval(x).as_finite(),
            rule_b.truth_score.eval(x).as_finite(),
        ) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
            (None, None) => true,
            _ => false,
        }
    });

    if truth_agrees {
        println!("mode: uniqueness-gap");
        match uniqueness_gap(&rule_a.truth_score, &rule_a.false_score, &rule_b.false_score, &grid)
        {
            Ok(gap) => {
                println!("constant on [0,1): {}", gap.is_constant);
                println!("gap: {}", num(gap.gap));
                println!("c at 1: {}", ext(gap.c_at_1));
                if gap.is_constant {
                    Ok(0)
                } else {
                    println!("finding: completions of a common truth-score must differ by a constant");
                    Ok(1)
                }
            }
            Err(VerifyError::PreconditionFailed(msg)) => {
                println!("not proper: {msg}");
                Ok(1)
            }
            Err(e) => Err(e.to_string()),
        }
    } else {
        println!("mode: difference-propriety");
        match difference_propriety(&rule_a, &rule_b, &grid) {
            Ok(rep) => {
                println!("T1-T2 non-decreasing: {}", rep.t_diff_nondecreasing);
                println!("F1-F2 non-increasing: {}", rep.f_diff_nonincreasing);
                println!(
                    "monotonicity verdict: {}",
                    if rep.monotone_verdict { "proper" } else { "difference not proper" }
                );
                print_report(&rep.grid_verdict, DEFAULT_TOL, &grid);
                let agree = rep.monotone_verdict == rep.grid_verdict.passed;
                println!("agreement: {}", if agree { "yes" } else { "no" });
                Ok(if agree { 0 } else { 1 })
            }
            Err(VerifyError::HypothesisViolated(msg)) => Err(format!(
                "difference check needs both rules continuous at 0 and 1: {msg}"
            )),
            Err(e) => Err(e.to_string()),
        }
    }
}
