//! Command-line driver. [`run`] is the whole program minus process exit,
//! so tests can call it with in-memory streams.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calibration::{solve_exponent, CalibrationResult, CalibrationTarget, Statistic, DEFAULT_TOL};
use crate::diagnostics::{compare_methods, diagnose, DiagnosticsReport, DEFAULT_REPORTING_P};
use crate::error::Error;
use crate::io::{format_significant, read_universe, read_weight_file, RebalanceReport, WeightColumn};
use crate::transforms::{
    parse_rule_list, CapRule, LinearizedPowerRule, PowerRule, RebalanceRule, DEFAULT_CAP_TARGET,
    DEFAULT_CAP_THRESHOLD, DEFAULT_KNOT,
};
use crate::weights::{weights_from_market_caps, WeightVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_PATHOLOGY: i32 = 4;
pub const EXIT_NONCONVERGENCE: i32 = 5;

const SIG: usize = 6;

#[derive(Debug, Parser)]
#[command(name = "reweight", version, about = "Order-preserving reweighting of capitalization-weighted indexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Power,
    Linpower,
    Cap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetKind {
    Max,
    TopK,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reweight a universe and write a report file.
    Rebalance {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Exponent in [0, 1]; required for power and linpower.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_KNOT)]
        knot: f64,
        #[arg(long, default_value_t = DEFAULT_CAP_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_CAP_TARGET)]
        target_aggregate: f64,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_REPORTING_P)]
        reporting_p: f64,
    },
    /// Find the largest exponent meeting a concentration bound.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        target: TargetKind,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        bound: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Full-precision JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Compare two weight files; exits 4 when a pathology is found.
    Diagnose {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPORTING_P)]
        reporting_p: f64,
        #[arg(long)]
        json: bool,
    },
    /// Run several rules on one universe, e.g. `--methods power:p=0.5,cap`.
    Compare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        methods: String,
        #[arg(long, default_value_t = DEFAULT_REPORTING_P)]
        reporting_p: f64,
        #[arg(long)]
        json: bool,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::InvalidParameter(_) => EXIT_USAGE,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name) and executes the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_weights(path: &PathBuf) -> Result<WeightVector, Error> {
    weights_from_market_caps(&read_universe(path)?)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Error> {
    match command {
        Command::Rebalance {
            input,
            method,
            p,
            knot,
            threshold,
            target_aggregate,
            output,
            format,
            reporting_p,
        } => {
            let need_p = || p.ok_or_else(|| Error::InvalidParameter("--p is required for this method".into()));
            let rule = match method {
                Method::Power => RebalanceRule::Power(PowerRule::new(need_p()?)?),
                Method::Linpower => RebalanceRule::LinearizedPower(LinearizedPowerRule::new(need_p()?, knot)?),
                Method::Cap => RebalanceRule::Cap(CapRule::new(threshold, target_aggregate)?),
            };
            let mu = load_weights(&input)?;
            let eta = rule.apply(&mu)?;
            let report = RebalanceReport::build(&rule, &mu, &eta, reporting_p)?;
            let body = match format {
                Format::Csv => report.to_csv()?,
                Format::Json => report.to_json()?,
            };
            fs::write(&output, body)?;
            let s = &report.summary;
            writeln!(out, "wrote {}", output.display())?;
            writeln!(out, "rule: {rule}")?;
            writeln!(out, "turnover: {}", format_significant(s.turnover, SIG))?;
            writeln!(
                out,
                "max weight: {} -> {}",
                format_significant(s.max_before, SIG),
                format_significant(s.max_after, SIG)
            )?;
            writeln!(out, "order violations: {}", s.order_violation_count)?;
            Ok(EXIT_OK)
        }
        Command::Solve {
            input,
            target,
            k,
            bound,
            tol,
            json,
        } => {
            let statistic = match (target, k) {
                (TargetKind::Max, None) => Statistic::MaxWeight,
                (TargetKind::Max, Some(_)) => {
                    return Err(Error::InvalidParameter("--k only applies to --target top-k".into()))
                }
                (TargetKind::TopK, Some(k)) => Statistic::TopKSum { k },
                (TargetKind::TopK, None) => {
                    return Err(Error::InvalidParameter("--target top-k needs --k".into()))
                }
            };
            let target = CalibrationTarget::new(statistic, bound)?;
            let mu = load_weights(&input)?;
            let result = solve_exponent(&mu, target, tol)?;
            if json {
                write_json(out, &SolveOutput { target, tol, result })?;
            } else {
                writeln!(out, "p_star: {}", format_significant(result.p_star, SIG))?;
                writeln!(out, "achieved: {}", format_significant(result.achieved, SIG))?;
                writeln!(out, "bound: {}", format_significant(bound, SIG))?;
                writeln!(out, "iterations: {}", result.iterations)?;
                writeln!(out, "converged: {}", result.converged)?;
            }
            Ok(if result.converged { EXIT_OK } else { EXIT_NONCONVERGENCE })
        }
        Command::Diagnose {
            before,
            after,
            reporting_p,
            json,
        } => {
            let mu = read_weight_file(&before, WeightColumn::Before)?;
            let eta = read_weight_file(&after, WeightColumn::After)?;
            let report = diagnose(&mu, &eta, reporting_p)?;
            if json {
                write_json(out, &report)?;
            } else {
                print_diagnostics(out, &report)?;
            }
            Ok(if report.is_clean() { EXIT_OK } else { EXIT_PATHOLOGY })
        }
        Command::Compare {
            input,
            methods,
            reporting_p,
            json,
        } => {
            let rules = parse_rule_list(&methods)?;
            let mu = load_weights(&input)?;
            let results = compare_methods(&mu, &rules, reporting_p)?;
            if json {
                let entries: Vec<CompareEntry> = results
                    .iter()
                    .map(|c| CompareEntry {
                        rule: c.rule.to_string(),
                        weights: c.weights.iter().map(|(id, w)| (id.to_owned(), w)).collect(),
                        report: &c.report,
                    })
                    .collect();
                write_json(out, &entries)?;
            } else {
                print_comparison(out, &mu, &results)?;
            }
            Ok(EXIT_OK)
        }
    }
}

#[derive(Serialize)]
struct SolveOutput {
    target: CalibrationTarget,
    tol: f64,
    result: CalibrationResult,
}

#[derive(Serialize)]
struct CompareEntry<'a> {
    rule: String,
    weights: Vec<(String, f64)>,
    report: &'a DiagnosticsReport,
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Error> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_diagnostics(out: &mut dyn Write, r: &DiagnosticsReport) -> Result<(), Error> {
    let g = |x| format_significant(x, SIG);
    writeln!(out, "order violations: {}", r.order_violations.len())?;
    for v in &r.order_violations {
        writeln!(
            out,
            "  {} < {} before ({} < {}) but after ({} > {})",
            v.identifier_low,
            v.identifier_high,
            g(v.mu_low),
            g(v.mu_high),
            g(v.eta_low),
            g(v.eta_high)
        )?;
    }
    writeln!(
        out,
        "max weight: {} -> {}{}",
        g(r.max_before),
        g(r.max_after),
        if r.max_increased { " (increased)" } else { "" }
    )?;
    writeln!(out, "turnover: {}", g(r.turnover))?;
    writeln!(out, "hhi: {} -> {}", g(r.hhi_before), g(r.hhi_after))?;
    for t in &r.top_k_sums {
        writeln!(out, "top-{}: {} -> {}", t.k, g(t.before), g(t.after))?;
    }
    writeln!(
        out,
        "diversity (p={}): {} -> {}",
        g(r.reporting_p),
        g(r.diversity_before),
        g(r.diversity_after)
    )?;
    writeln!(out, "status: {}", if r.is_clean() { "clean" } else { "pathology detected" })?;
    Ok(())
}

fn print_comparison(
    out: &mut dyn Write,
    mu: &WeightVector,
    results: &[crate::diagnostics::MethodComparison],
) -> Result<(), Error> {
    let g = |x| format_significant(x, SIG);
    writeln!(
        out,
        "{:<36} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "rule", "turnover", "max", "violations", "hhi", "top-6", "diversity"
    )?;
    for c in results {
        let r = &c.report;
        let top6 = r.top_k_sums.iter().find(|t| t.k == 6).map_or(f64::NAN, |t| t.after);
        writeln!(
            out,
            "{:<36} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            c.rule.to_string(),
            g(r.turnover),
            g(r.max_after),
            r.order_violations.len(),
            g(r.hhi_after),
            g(top6),
            g(r.diversity_after)
        )?;
    }
    writeln!(out)?;
    write!(out, "{:<12} {:>10}", "id", "before")?;
    for (i, _) in results.iter().enumerate() {
        write!(out, " {:>10}", format!("#{}", i + 1))?;
    }
    writeln!(out)?;
    for (id, before) in mu.iter() {
        write!(out, "{:<12} {:>10}", id, g(before))?;
        for c in results {
            write!(out, " {:>10}", g(c.weights.get(id).unwrap_or(0.0)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
