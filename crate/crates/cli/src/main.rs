use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bb84z_core::config::{self, KeyValues, RunConfig};
use bb84z_core::experiments::{self, Grid, HoeffdingSpec, SweepSpec};
use bb84z_core::rng::PRNG_ALGORITHM;
use bb84z_core::CollectiveAttackSpec;

const BUILD_ID: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("BB84Z_GIT_REV"));

fn long_version() -> &'static str {
    Box::leak(format!("{BUILD_ID}\nprng: {PRNG_ALGORITHM}").into_boxed_str())
}

#[derive(Parser)]
#[command(name = "bb84z", version = BUILD_ID, long_version = long_version(), about = "BB84-INFO-z key distribution simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run protocol trials and write one CSV row per trial plus a summary.
    Run(RunArgs),
    /// Evaluate the security, reliability and rate bounds for parameter files.
    Bounds(BoundsArgs),
    /// Emit the asymptotic (p_ax, p_az) threshold curve.
    Curve(CurveArgs),
    /// Compare exact distances between Eve's states against the closed-form bound.
    VerifyDistance(VerifyArgs),
    /// Empirical sampling-without-replacement tails against the exponential bound.
    Hoeffding(HoeffdingArgs),
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn open(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Built-in attack id or path to an attack file; overrides the config.
    #[arg(long)]
    attack: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BoundsArgs {
    /// Parameter file; repeat for several rows.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 0.0)]
    grid_start: f64,
    #[arg(long, default_value_t = 0.245)]
    grid_end: f64,
    #[arg(long, default_value_t = 0.005)]
    grid_step: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Seed for the random codes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Attack to sweep; repeat for several. Defaults to the built-in suite.
    #[arg(long)]
    attack: Vec<String>,
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// Largest r + m.
    #[arg(long, default_value_t = 4)]
    max_rows: usize,
    /// Random codes per (n, r, m).
    #[arg(long, default_value_t = 1)]
    codes: usize,
    /// Largest probe-space dimension diagonalised; bigger instances are skipped.
    #[arg(long, default_value_t = experiments::DEFAULT_DENSE_DIM_CAP)]
    dense_cap: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct HoeffdingArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Sample size.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Size of the unsampled remainder.
    #[arg(long, default_value_t = 100)]
    n_x: usize,
    /// Population weight; repeat for several. Defaults to 10, 20 and 50.
    #[arg(long)]
    weight: Vec<usize>,
    /// Deviation ε; repeat for several.
    #[arg(long)]
    eps: Vec<f64>,
    #[command(flatten)]
    output: Output,
}

fn load_run(args: &RunArgs) -> Result<(RunConfig, CollectiveAttackSpec)> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut kv = KeyValues::parse(&text)?;
    if let Some(seed) = args.seed {
        kv.set("seed", seed.to_string());
    }
    if let Some(trials) = args.trials {
        kv.set("trials", trials.to_string());
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let mut cfg = RunConfig::from_key_values(&kv, base).with_context(|| format!("in {}", args.config.display()))?;
    if let Some(a) = &args.attack {
        cfg.attack = a.clone();
    }
    let attack = CollectiveAttackSpec::resolve(&cfg.attack).with_context(|| format!("attack {:?}", cfg.attack))?;
    Ok((cfg, attack))
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let (cfg, attack) = load_run(&args)?;
    let rows = experiments::run_trials(&cfg.protocol, &attack, cfg.trials)?;
    let summary = experiments::summarize(&cfg.protocol, &rows);
    let mut out = args.output.open()?;
    experiments::write_trial_csv(&rows, &mut out)?;
    out.flush()?;
    // The summary goes wherever the trial rows do not.
    if args.output.out.is_some() {
        experiments::write_summary_csv(&summary, io::stdout().lock())?;
    } else {
        experiments::write_summary_csv(&summary, io::stderr().lock())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode> {
    let mut rows = Vec::new();
    for path in &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let p = config::bound_params(&KeyValues::parse(&text)?).with_context(|| format!("in {}", path.display()))?;
        let report = bb84z_core::bounds::evaluate(&p).with_context(|| format!("in {}", path.display()))?;
        rows.push((p, report));
    }
    let mut out = args.output.open()?;
    experiments::write_bounds_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_curve(args: CurveArgs) -> Result<ExitCode> {
    let grid = Grid {
        start: args.grid_start,
        end: args.grid_end,
        step: args.grid_step,
    };
    let pts = experiments::curve(&grid)?;
    let mut out = args.output.open()?;
    experiments::write_curve_csv(&pts, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    if args.n_min == 0 || args.n_min > args.n_max {
        bail!("n range {}..={} is empty or starts at 0", args.n_min, args.n_max);
    }
    let mut spec = SweepSpec {
        n_range: args.n_min..=args.n_max,
        max_rows: args.max_rows,
        codes_per_shape: args.codes,
        seed: args.seed,
        dense_dim_cap: args.dense_cap,
        ..SweepSpec::default()
    };
    if !args.attack.is_empty() {
        spec.attacks = args.attack;
    }
    let rows = experiments::verify_distance(&spec)?;
    let mut out = args.output.open()?;
    experiments::write_verify_csv(&rows, &mut out)?;
    out.flush()?;
    let checked = rows.iter().filter(|r| r.is_checked()).count();
    let violated = rows
        .iter()
        .filter(|r| r.status == experiments::VerifyStatus::Violated)
        .count();
    eprintln!(
        "{checked} instances checked, {} skipped, {violated} violations",
        rows.len() - checked
    );
    Ok(if violated > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_hoeffding(args: HoeffdingArgs) -> Result<ExitCode> {
    let defaults = HoeffdingSpec::default();
    let spec = HoeffdingSpec {
        n: args.n,
        n_x: args.n_x,
        weights: if args.weight.is_empty() {
            defaults.weights
        } else {
            args.weight
        },
        eps_grid: if args.eps.is_empty() {
            defaults.eps_grid
        } else {
            args.eps
        },
        trials: args.trials,
        seed: args.seed,
    };
    let rows = experiments::hoeffding(&spec)?;
    let mut out = args.output.open()?;
    experiments::write_hoeffding_csv(&spec, &rows, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Curve(a) => cmd_curve(a),
        Command::VerifyDistance(a) => cmd_verify(a),
        Command::Hoeffding(a) => cmd_hoeffding(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
