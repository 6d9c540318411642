//! Command-line front end over the library: `analyze` sweeps every
//! configured scenario across epsilon and emits a report, `sweep-eps`
//! does the same with a geometric epsilon ladder, and `estimate` prints a
//! human-readable account of one scenario's best-constant estimate.
//!
//! Exit codes: 0 on success, 2 on configuration or usage errors, 3 on
//! numerical failures or I/O errors (reports are still written before the
//! failure code is returned).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hardy_gauge::cli::{
    emit_report, materialize, parse_config, resolve_epsilons, run_analyze, witness_cell, Cell,
    ConditionChoice, EpsilonSpec, ReportFormat, ReportRow, RunConfig,
};
use hardy_gauge::conditions::{a_ps, mazya_rosin, muckenhoupt};
use hardy_gauge::estimator::estimate_best_constant;
use hardy_gauge::weights::VProfile;

#[derive(Parser)]
#[command(
    name = "hardy-gauge",
    version,
    about = "Numerical gauge for two-weight cumulative-averaging inequalities"
)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate all configured conditions and estimates; emit a report.
    Analyze {
        /// Path to the run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Report destination; overrides the configured path (stdout when
        /// neither is set).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format, `csv` or `jsonl`; overrides the configured one.
        #[arg(long)]
        format: Option<String>,
    },
    /// Analyze with the epsilon sweep replaced by a geometric ladder.
    SweepEps {
        /// Path to the run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Smallest epsilon (> 0).
        #[arg(long)]
        eps_min: f64,
        /// Largest epsilon (>= eps-min).
        #[arg(long)]
        eps_max: f64,
        /// Number of ladder points (>= 1), spaced geometrically.
        #[arg(long)]
        eps_steps: usize,
        /// Report destination; overrides the configured path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format, `csv` or `jsonl`; overrides the configured one.
        #[arg(long)]
        format: Option<String>,
    },
    /// Estimate the best constant for one scenario; print a summary.
    Estimate {
        /// Path to the run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Name of the scenario to estimate.
        #[arg(long)]
        scenario: String,
    },
}

fn main() -> ExitCode {
    if let Err(code) = init_threads() {
        return code;
    }
    match Args::parse().cmd {
        Cmd::Analyze {
            config,
            out,
            format,
        } => analyze(&config, None, out.as_deref(), format.as_deref()),
        Cmd::SweepEps {
            config,
            eps_min,
            eps_max,
            eps_steps,
            out,
            format,
        } => {
            let ladder = match geometric_ladder(eps_min, eps_max, eps_steps) {
                Ok(l) => l,
                Err(msg) => {
                    eprintln!("hardy-gauge: {msg}");
                    return ExitCode::from(2);
                }
            };
            analyze(&config, Some(ladder), out.as_deref(), format.as_deref())
        }
        Cmd::Estimate { config, scenario } => estimate(&config, &scenario),
    }
}

/// Applies the HARDY_GAUGE_THREADS cap to the global worker pool.
fn init_threads() -> Result<(), ExitCode> {
    let Ok(raw) = std::env::var("HARDY_GAUGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t >= 1 => t,
        _ => {
            eprintln!("hardy-gauge: HARDY_GAUGE_THREADS must be a positive integer, got `{raw}`");
            return Err(ExitCode::from(2));
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .expect("the global pool is only initialized once");
    Ok(())
}

fn geometric_ladder(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if !(min > 0.0 && min.is_finite()) {
        return Err(format!("--eps-min must be positive and finite, got {min}"));
    }
    if !(max >= min && max.is_finite()) {
        return Err(format!(
            "--eps-max must be finite and at least --eps-min, got {max}"
        ));
    }
    if steps == 0 {
        return Err("--eps-steps must be at least 1".to_string());
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let ratio = max / min;
    Ok((0..steps)
        .map(|i| min * ratio.powf(i as f64 / (steps - 1) as f64))
        .collect())
}

fn load_config(path: &Path) -> Result<RunConfig, ExitCode> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("hardy-gauge: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(3));
        }
    };
    parse_config(&text).map_err(|e| {
        eprintln!("hardy-gauge: {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn resolve_format(cfg: &RunConfig, flag: Option<&str>) -> Result<ReportFormat, ExitCode> {
    match flag {
        None => Ok(cfg.output.format),
        Some("csv") => Ok(ReportFormat::Csv),
        Some("jsonl") => Ok(ReportFormat::Jsonl),
        Some(other) => {
            eprintln!("hardy-gauge: --format must be `csv` or `jsonl`, got `{other}`");
            Err(ExitCode::from(2))
        }
    }
}

fn write_report(
    rows: &[ReportRow],
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<(), ExitCode> {
    let result = match path {
        Some(p) => fs::File::create(p)
            .map(io::BufWriter::new)
            .and_then(|mut f| {
                emit_report(rows, format, &mut f)?;
                f.flush()
            }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            emit_report(rows, format, &mut lock).and_then(|()| lock.flush())
        }
    };
    result.map_err(|e| {
        eprintln!("hardy-gauge: cannot write report: {e}");
        ExitCode::from(3)
    })
}

fn analyze(
    config: &Path,
    epsilons: Option<Vec<f64>>,
    out: Option<&Path>,
    format: Option<&str>,
) -> ExitCode {
    let mut cfg = match load_config(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(ladder) = epsilons {
        cfg.epsilons = EpsilonSpec::List(ladder);
    }
    let fmt = match resolve_format(&cfg, format) {
        Ok(f) => f,
        Err(code) => return code,
    };
    let rows = run_analyze(&cfg);
    let cfg_path = cfg.output.path.clone().map(PathBuf::from);
    let dest = out.or(cfg_path.as_deref());
    if let Err(code) = write_report(&rows, fmt, dest) {
        return code;
    }
    if rows.iter().any(ReportRow::any_failed) {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn print_cell(label: &str, cell: Cell) {
    match cell {
        Cell::Absent => {}
        Cell::Value(x) => println!("  {label}: {x}"),
        Cell::Failed => println!("  {label}: failed"),
    }
}

fn estimate(config: &Path, name: &str) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let Some(spec) = cfg.scenarios.iter().find(|s| s.name == name) else {
        eprintln!("hardy-gauge: no scenario named `{name}` in the config");
        return ExitCode::from(2);
    };
    let (scen, grid) = materialize(spec, &cfg.grid);
    let eps = resolve_epsilons(&cfg.epsilons, spec.p);
    let mut opts = cfg.estimator.clone();
    opts.witness_eps = Some(eps.clone());

    let est = match estimate_best_constant(&scen, &grid, &opts) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("hardy-gauge: estimation failed for `{name}`: {e}");
            return ExitCode::from(3);
        }
    };
    println!(
        "scenario {name}: p = {}, q = {}, interval ({}, {}), grid n = {}",
        spec.p,
        spec.q,
        spec.a,
        spec.b,
        grid.len()
    );
    println!("  best-constant estimate: {}", est.value);
    println!(
        "  ascent: {} iterations over {} starts, final residual {:.3e}",
        est.iterations, est.restarts_used, est.residual
    );
    if let Some(s) = est.spectral_crosscheck {
        println!("  spectral crosscheck: {s}");
    }

    let sentinel = VProfile::build(&spec.v, spec.p, &grid)
        .map(|prof| prof.is_infinite_sentinel())
        .unwrap_or(false);
    let mut best_witness: Option<(f64, f64)> = None;
    for &e in &eps {
        if let Cell::Value(r) = witness_cell(&scen, &grid, e, sentinel) {
            if best_witness.is_none_or(|(b, _)| r > b) {
                best_witness = Some((r, e));
            }
        }
    }
    if let Some((r, e)) = best_witness {
        println!("  best witness ratio: {r} (eps = {e})");
    }

    let chosen = |c: ConditionChoice| spec.conditions.contains(&c);
    if chosen(ConditionChoice::APs) {
        print_cell(
            "shifted-anchor value (eps = p' - 1)",
            match a_ps(&scen, &grid) {
                Ok(cv) => Cell::from_value(cv.value),
                Err(_) => Cell::Failed,
            },
        );
    }
    if chosen(ConditionChoice::Muckenhoupt) {
        print_cell(
            "endpoint supremum condition",
            match muckenhoupt(&scen, &grid) {
                Ok(cv) => Cell::from_value(cv.value),
                Err(_) => Cell::Failed,
            },
        );
    }
    if chosen(ConditionChoice::MazyaRosin) {
        match mazya_rosin(&scen, &grid) {
            Ok(cv) => {
                println!("  non-convex integral condition (raw): {}", cv.value);
                if let Some(r) = scen.exp.r {
                    println!(
                        "  non-convex integral condition (1/r root): {}",
                        cv.value.powf(1.0 / r)
                    );
                }
            }
            Err(_) => println!("  non-convex integral condition: failed"),
        }
    }
    ExitCode::SUCCESS
}
