use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use interval_rank::data::open_dataset;
use interval_rank::harness::fuzz::{oracle_check, TrialShape};
use interval_rank::harness::{
    average_runs, bound_check, labelled_pool, write_curve_csv, Algorithm, BoundReport, Experiment, Manifest,
    MetricMode, RunConfig, Sampling,
};
use interval_rank::{Dataset, FixedPointConfig};

#[derive(Parser)]
#[command(name = "interval-rank", version, about = "Online ranking with interval labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average-MAE curve for one algorithm over repeated seeded runs.
    Train(TrainArgs),
    /// Curves for every algorithm (PA-I/PA-II at C = 0.1, 1, 10) plus a summary table.
    Bench(BenchArgs),
    /// Compare closed-form updates against the exhaustive oracle on random trials.
    OracleCheck(OracleArgs),
    /// Check the PA, PA-I and PA-II mistake bounds; exits with 2 on any violation.
    BoundCheck(BoundArgs),
    /// Write the interval-labelled pool for one seed as CSV.
    GenIntervals(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Pa,
    Pa1,
    Pa2,
    Prank,
    Mcp,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Pa => Algorithm::Pa,
            AlgoArg::Pa1 => Algorithm::Pa1,
            AlgoArg::Pa2 => Algorithm::Pa2,
            AlgoArg::Prank => Algorithm::PRank,
            AlgoArg::Mcp => Algorithm::Mcp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Exact,
    Interval,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Replacement,
    Epochs,
}

#[derive(Args)]
struct DataArgs {
    /// Builtin name (abalone, california, parkinson, mslr, synthetic-separable,
    /// synthetic-noisy) or path to a TOML dataset spec.
    #[arg(long, default_value = "abalone")]
    dataset: String,
    /// Data file overriding the spec's path.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Share of instances given an interval label.
    #[arg(long, default_value_t = 0.0)]
    interval_fraction: f64,
    /// Root seed; run i uses seed + i.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 7000)]
    trials: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, value_enum, default_value = "exact")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "replacement")]
    sampling: SamplingArg,
    /// Report PA-I fixed-point non-convergence as an error instead of
    /// solving exactly.
    #[arg(long)]
    no_fallback: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum, default_value = "pa1")]
    algo: AlgoArg,
    /// Aggressiveness for PA-I and PA-II.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// CSV output; the manifest and model snapshot are written alongside.
    /// Without it the curve goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Random trials per variant.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fixed aggressiveness; drawn log-uniformly from [0.01, 10] when absent.
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long, default_value_t = 6)]
    max_dim: usize,
    #[arg(long, default_value_t = 8)]
    max_classes: usize,
    /// JSON summary output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Aggressiveness for PA-II.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Aggressiveness for PA-I; defaults to the bound-optimal value.
    #[arg(long = "pa1-C")]
    pa1_c: Option<f64>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 7000)]
    trials: usize,
    /// Number of seeds to check.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, value_enum, default_value = "replacement")]
    sampling: SamplingArg,
    /// JSON manifest output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(data: &DataArgs) -> Result<Dataset> {
    open_dataset(&data.dataset, data.data.as_deref()).with_context(|| format!("loading dataset '{}'", data.dataset))
}

fn run_config(algorithm: Algorithm, c: f64, data: &DataArgs, run: &RunArgs) -> RunConfig {
    RunConfig {
        algorithm,
        c,
        trials: run.trials,
        runs: run.runs,
        seed: data.seed,
        interval_fraction: data.interval_fraction,
        dataset: data.dataset.clone(),
        metric: match run.metric {
            MetricArg::Exact => MetricMode::ExactMae,
            MetricArg::Interval => MetricMode::IntervalMae,
        },
        sampling: sampling(run.sampling),
        solver: FixedPointConfig {
            fallback: !run.no_fallback,
            ..FixedPointConfig::default()
        },
    }
}

fn sampling(s: SamplingArg) -> Sampling {
    match s {
        SamplingArg::Replacement => Sampling::WithReplacement,
        SamplingArg::Epochs => Sampling::Epochs,
    }
}

/// `dir/stem.csv` -> `dir/stem.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes to stdout, treating a closed pipe as success.
fn stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn train(args: &TrainArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let config = run_config(args.algo.into(), args.c, &args.data, &args.run);
    let experiment = average_runs(&config, &dataset)?;
    match &args.out {
        Some(out) => {
            write_curve_csv(out, &experiment)?;
            Manifest::new("train", &config, &dataset)
                .with_experiment(&experiment)
                .write(&sibling(out, "manifest.json"))?;
            if let Some(model) = experiment.runs[0].final_model.ranking_model() {
                write_text(&sibling(out, "model.json"), &(model.to_json() + "\n"))?;
            }
        }
        None => stdout(&interval_rank::harness::curve_csv(&experiment))?,
    }
    eprintln!(
        "{} on {}: final average MAE {:.4} ± {:.4} over {} runs of {} trials",
        config.algorithm.name(),
        dataset.name,
        experiment.final_mean(),
        experiment.final_stderr(),
        config.runs,
        config.trials
    );
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let mut presets: Vec<(Algorithm, f64)> = vec![(Algorithm::Pa, 1.0)];
    for alg in [Algorithm::Pa1, Algorithm::Pa2] {
        presets.extend([0.1, 1.0, 10.0].map(|c| (alg, c)));
    }
    presets.extend([(Algorithm::PRank, 1.0), (Algorithm::Mcp, 1.0)]);

    let mut summary = String::from("algorithm,C,final_mean_avg_mae,final_stderr_avg_mae\n");
    println!("{:<8} {:>6} {:>10} {:>10} {:>9}", "algo", "C", "avg MAE", "stderr", "seconds");
    for (alg, c) in presets {
        let config = run_config(alg, c, &args.data, &args.run);
        let start = Instant::now();
        let experiment: Experiment = average_runs(&config, &dataset)?;
        let secs = start.elapsed().as_secs_f64();
        let name = if alg.uses_c() {
            format!("{}_C{c}", alg.name())
        } else {
            alg.name().to_string()
        };
        let csv = args.out.join(format!("{name}.csv"));
        write_curve_csv(&csv, &experiment)?;
        Manifest::new("bench", &config, &dataset)
            .with_experiment(&experiment)
            .write(&sibling(&csv, "manifest.json"))?;
        let c_field = if alg.uses_c() { c.to_string() } else { String::new() };
        let _ = writeln!(
            summary,
            "{},{c_field},{},{}",
            alg.name(),
            experiment.final_mean(),
            experiment.final_stderr()
        );
        println!(
            "{:<8} {:>6} {:>10.4} {:>10.4} {:>9.2}",
            alg.name(),
            c_field,
            experiment.final_mean(),
            experiment.final_stderr(),
            secs
        );
    }
    write_text(&args.out.join("summary.csv"), &summary)?;
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<bool> {
    if args.max_dim == 0 || args.max_classes < 2 {
        bail!("--max-dim must be >= 1 and --max-classes >= 2");
    }
    let shape = TrialShape {
        max_dim: args.max_dim,
        max_classes: args.max_classes,
    };
    let checks = oracle_check(args.trials, args.seed, &shape, args.c)?;
    let mut ok = true;
    for check in &checks {
        let pass = check.passes(1e-8, 1e-6);
        ok &= pass;
        println!(
            "{:<6} trials={} non_passive={} max_objective_gap={:.3e} max_parameter_gap={:.3e} max_kkt_residual={:.3e} {}",
            check.variant,
            check.trials,
            check.non_passive,
            check.max_objective_gap,
            check.max_parameter_gap,
            check.max_kkt_residual,
            if pass { "ok" } else { "MISMATCH" }
        );
    }
    if let Some(out) = &args.out {
        write_text(out, &(serde_json::to_string_pretty(&checks)? + "\n"))?;
    }
    Ok(ok)
}

fn print_report(r: &BoundReport) {
    println!(
        "seed={} {:<5} case={:?} R²={:.4} c={} D={:.4} ‖v‖²={:.4} ref_loss={:.4} measured={:.4} bound={:.4} {}",
        r.seed,
        r.variant,
        r.case,
        r.r_sq,
        r.min_width,
        r.d,
        r.v_norm_sq,
        r.reference_loss,
        r.measured,
        r.bound,
        if r.satisfied { "satisfied" } else { "VIOLATED" }
    );
}

fn bounds(args: &BoundArgs) -> Result<bool> {
    let dataset = load(&args.data)?;
    let config = RunConfig {
        algorithm: Algorithm::Pa,
        c: args.c,
        trials: args.trials,
        runs: args.runs,
        seed: args.data.seed,
        interval_fraction: args.data.interval_fraction,
        dataset: args.data.dataset.clone(),
        metric: MetricMode::ExactMae,
        sampling: sampling(args.sampling),
        solver: FixedPointConfig::default(),
    };
    let mut reports = Vec::new();
    for seed in config.seeds() {
        let cfg = RunConfig { seed, ..config.clone() };
        let batch = bound_check(&cfg, &dataset, args.pa1_c)?;
        batch.iter().for_each(print_report);
        reports.extend(batch);
    }
    if let Some(out) = &args.out {
        let mut manifest = Manifest::new("bound-check", &config, &dataset);
        manifest.bounds = reports.clone();
        manifest.write(out)?;
    }
    Ok(reports.iter().all(|r| r.satisfied))
}

fn gen_intervals(args: &GenArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let pool = labelled_pool(&dataset, args.data.interval_fraction, args.data.seed)?;
    let mut out = dataset.feature_names.join(",");
    out.push_str(",y,y_l,y_r\n");
    for inst in &pool {
        for v in &inst.features {
            let _ = write!(out, "{v},");
        }
        let y = inst.exact_label.map(|y| y.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{y},{},{}", inst.y_l, inst.y_r);
    }
    match &args.out {
        Some(path) => write_text(path, &out),
        None => stdout(&out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(a).map(|_| ExitCode::SUCCESS),
        Command::Bench(a) => bench(a).map(|_| ExitCode::SUCCESS),
        Command::OracleCheck(a) => oracle(a).map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE }),
        Command::BoundCheck(a) => bounds(a).map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(2) }),
        Command::GenIntervals(a) => gen_intervals(a).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
