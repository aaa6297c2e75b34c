//! `lrfit` command-line front end.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use lrfit::eval::{approximation_efficiency, compute_accuracy, Assignment};
use lrfit::io::{self as lrio, IoError, Provenance};
use lrfit::strategy::LabelError;
use lrfit::synth::{gen_synthetic, write_truth, SynthError, SynthKind};
use lrfit::{run, DriverError, LedgerRow, Locator, RunConfig, StagePredicate, StrategySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Exit code for usage and input errors.
const EXIT_INPUT: u8 = 4;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Label(#[from] LabelError),

    #[error(transparent)]
    Io(#[from] IoError),

    #[error(transparent)]
    Driver(#[from] DriverError),

    #[error(transparent)]
    Synth(#[from] SynthError),

    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
}

#[derive(Parser)]
#[command(name = "lrfit", version, about = "Adaptive LR B-spline approximation of scattered height data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a surface to a point cloud until the tolerance is met.
    Fit(FitArgs),
    /// Generate a synthetic point cloud.
    Synth(SynthArgs),
    /// Sample a surface on a regular grid.
    Raster(RasterArgs),
    /// Accuracy of a surface against a point cloud.
    Report(ReportArgs),
    /// Check that a surface file survives a write/read cycle.
    RoundtripCheck(RoundtripArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Point file with x y z per line.
    #[arg(long)]
    points: PathBuf,
    /// Strategy label, e.g. "eFA tn" or "bR/eFB tk/n".
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    tolerance: f64,
    /// Polynomial degree, either `P` or `P,Q`.
    #[arg(long, default_value = "2")]
    degree: String,
    #[arg(long, default_value_t = 40)]
    max_iter: usize,
    /// Output surface document.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output CSV report, one row per iteration.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Knot intervals no wider than this are not split.
    #[arg(long, default_value_t = 0.0)]
    min_interval: f64,
    /// Initial elements as `NxM`.
    #[arg(long)]
    initial_grid: Option<String>,
    /// Intermediate-stage predicate, e.g. "out<=0.1%,max<=2".
    #[arg(long)]
    intermediate: Option<String>,
    /// Keep iterating when no meshlines can be inserted.
    #[arg(long)]
    no_stagnation_stop: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// dunes, peaks, scanlines or steps.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Standard deviation of the vertical noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    #[arg(long)]
    out: PathBuf,
    /// CSV sidecar with ground truth and outlier flags.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct RasterArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long, default_value_t = 256)]
    nx: usize,
    #[arg(long, default_value_t = 256)]
    ny: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    tolerance: f64,
}

#[derive(Args)]
struct RoundtripArgs {
    #[arg(long)]
    surface: PathBuf,
    /// Random evaluation points compared after the cycle.
    #[arg(long, default_value_t = 500)]
    samples: usize,
}

fn parse_degree(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("invalid degree '{s}', expected P or P,Q"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: Vec<usize> = parts.iter().map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match nums[..] {
        [p] => Ok((p, p)),
        [p, q] => Ok((p, q)),
        _ => Err(bad()),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("invalid initial grid '{s}', expected NxM"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn fit(args: FitArgs) -> Result<u8, CliError> {
    let strategy: StrategySpec = args.strategy.parse()?;
    let degrees = parse_degree(&args.degree)?;
    if let (Some(out), Some(report)) = (&args.out, &args.report) {
        if out == report {
            return Err(CliError::Usage("--out and --report name the same file".into()));
        }
    }
    let mut cfg = RunConfig::new(args.tolerance, strategy);
    cfg.degrees = degrees;
    cfg.max_iterations = args.max_iter;
    cfg.min_interval = args.min_interval;
    cfg.initial_elements = args.initial_grid.as_deref().map(parse_grid).transpose()?;
    cfg.intermediate = args
        .intermediate
        .as_deref()
        .map(|s| s.parse::<StagePredicate>().map_err(|e| CliError::Usage(e.to_string())))
        .transpose()?;
    cfg.stop_on_stagnation = !args.no_stagnation_stop;

    let cloud = lrio::read_points(&args.points)?;
    info!("read {} points from {}", cloud.len(), args.points.display());
    let result = run(&cloud, &cfg)?;
    let ledger = &result.ledger;
    let outcome = result.outcome();

    if let Some(path) = &args.out {
        let mut config = BTreeMap::new();
        config.insert("tolerance".to_string(), args.tolerance.to_string());
        config.insert("degree".to_string(), format!("{},{}", degrees.0, degrees.1));
        config.insert("max_iter".to_string(), args.max_iter.to_string());
        config.insert("min_interval".to_string(), args.min_interval.to_string());
        if let Some(g) = cfg.initial_elements {
            config.insert("initial_grid".to_string(), format!("{}x{}", g.0, g.1));
        }
        let provenance = Provenance {
            strategy: Some(cfg.strategy.label.clone()),
            iterations: ledger.last().map(|r| r.iter),
            config,
        };
        lrio::write_surface(path, &result.surface, provenance)?;
    }
    if let Some(path) = &args.report {
        let mut w = create(path)?;
        lrio::write_report(&mut w, &ledger.rows)?;
        w.flush().map_err(|source| CliError::File { path: path.clone(), source })?;
    }

    let last = ledger.last().expect("ledger has the initial row");
    println!(
        "{outcome}: iter {} n_out {} n_coeff {} max {} avg {}",
        last.iter, last.n_out, last.n_coeff, last.max_dist, last.avg_dist
    );
    if let Some(it) = ledger.intermediate_iter {
        println!("intermediate stage at iter {it}, tail {}", ledger.tail_length.unwrap_or(0));
    }
    if let Some(it) = ledger.switched_at {
        println!("switched to full span at iter {it}");
    }
    Ok(outcome.exit_code() as u8)
}

fn synth(args: SynthArgs) -> Result<u8, CliError> {
    let kind: SynthKind = args.kind.parse()?;
    let s = gen_synthetic(kind, args.seed, args.n, args.noise, args.outliers)?;
    lrio::write_points(&args.out, &s.cloud)?;
    if let Some(path) = &args.truth {
        write_truth(path, &s).map_err(|source| CliError::File { path: path.clone(), source })?;
    }
    println!("{} points ({} outliers) written to {}", s.cloud.len(), s.num_outliers(), args.out.display());
    Ok(0)
}

fn raster(args: RasterArgs) -> Result<u8, CliError> {
    let (surface, _) = lrio::read_surface(&args.surface)?;
    lrio::sample_raster(&surface, args.nx, args.ny, &args.out)?;
    Ok(0)
}

fn report(args: ReportArgs) -> Result<u8, CliError> {
    if !(args.tolerance > 0.0) {
        return Err(CliError::Usage("tolerance must be positive".into()));
    }
    let (surface, provenance) = lrio::read_surface(&args.surface)?;
    let cloud = lrio::read_points(&args.points)?;
    let loc = Locator::new(&surface);
    let asg = Assignment::new(&loc, &cloud).map_err(IoError::from)?;
    let acc = compute_accuracy(&surface, &loc, &cloud, &asg, args.tolerance);
    let g = acc.global;
    let row = LedgerRow {
        iter: provenance.iterations.unwrap_or(0),
        n_points: g.n_points,
        n_out: g.n_out,
        n_coeff: surface.num_coefficients(),
        max_dist: g.max_dist,
        avg_dist: g.avg_dist,
        avg_out_dist: g.avg_out_dist,
        efficiency: approximation_efficiency(g.n_resolved(), surface.num_coefficients()).unwrap_or(0.0),
        wall_ms: 0.0,
        segments: 0,
        strategy: provenance.strategy.unwrap_or_default(),
    };
    lrio::write_report(io::stdout().lock(), &[row])?;
    Ok(0)
}

fn roundtrip_check(args: RoundtripArgs) -> Result<u8, CliError> {
    let (surface, provenance) = lrio::read_surface(&args.surface)?;
    let text = lrio::surface_to_string(&surface, provenance)?;
    let (again, provenance) = lrio::surface_from_str(&text)?;
    let stable = lrio::surface_to_string(&again, provenance)? == text;
    let d = surface.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    for _ in 0..args.samples {
        let (u, v) = (rng.random_range(d.u0..=d.u1), rng.random_range(d.v0..=d.v1));
        let a = surface.evaluate(u, v).map_err(IoError::from)?;
        let b = again.evaluate(u, v).map_err(IoError::from)?;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    println!("text stable: {stable}; max relative difference over {} points: {worst:e}", args.samples);
    Ok(if stable && worst == 0.0 { 0 } else { 1 })
}

fn configure_threads() {
    if let Some(n) = std::env::var("LRFIT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("LRFIT_THREADS ignored: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let res = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Synth(a) => synth(a),
        Command::Raster(a) => raster(a),
        Command::Report(a) => report(a),
        Command::RoundtripCheck(a) => roundtrip_check(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("lrfit: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
