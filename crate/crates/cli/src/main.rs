//! `timely-fl`: command-line driver for the age and training toolkit.
//!
//! Subcommands:
//! - `age-exact`: closed-form average-age breakdown at one operating point.
//! - `age-approx`: large-population age approximation from the fractions
//!   `alpha = m/n` and `beta = k/m`.
//! - `simulate`: Monte-Carlo run of one selection scheme
//!   (`--scheme all` is shorthand for `compare`).
//! - `compare`: mean iteration time of all three schemes on a shared seed.
//! - `sweep`: grid search over `(m, k)`, or one of the standard figure
//!   families (`fig3`..`fig6`).
//! - `fl-train`: federated linear-regression benchmark under timely
//!   client selection.
//!
//! All numerics live in the `timely-fl` library; this binary only
//! resolves inputs (flags override the optional `--config` TOML file),
//! runs the library, and formats results. Data goes to stdout or to
//! files; diagnostics go to stderr. Exit codes: 0 on success, 2 for
//! invalid arguments or configuration, 3 for I/O failures. Commands that
//! consume randomness require a seed (flag or config file) so no run is
//! silently nondeterministic.

mod config;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use timely_fl::age_model::{age_approx, age_exact, ApproxParams, Downlink, SystemParams};
use timely_fl::fl_bench::{train, FLConfig};
use timely_fl::protocol_sim::{
    compare_iteration_time, default_warmup, simulate, simulate_with_trace, SchemeComparison,
    SchemeKind,
};
use timely_fl::sweep_opt::{reproduce_figure, sweep, FigureId, IntRange, Objective, SweepSpec};

use config::{ExperimentConfig, LoadedConfig, RangeOrFixed, RunSection, SweepSection};

/// Process-level failure. Usage and validation problems exit with 2,
/// filesystem problems with 3 (clap reports its own parse failures with
/// 2 as well).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<timely_fl::Error> for CliError {
    fn from(err: timely_fl::Error) -> Self {
        CliError::Usage(err.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "timely-fl",
    version,
    about = "Average-age analysis and federated-training benchmark for timely client selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form average-age breakdown at one (n, m, k) operating point.
    AgeExact(AgeExactArgs),
    /// Large-population age approximation from alpha = m/n and beta = k/m.
    AgeApprox(AgeApproxArgs),
    /// Monte-Carlo simulation of one scheme (--scheme all compares all three).
    Simulate(SimulateArgs),
    /// Mean iteration time of every scheme on the same parameters and seed.
    Compare(CompareArgs),
    /// Grid search over (m, k), or a standard figure family.
    Sweep(SweepArgs),
    /// Federated linear-regression benchmark under timely selection.
    FlTrain(FlTrainArgs),
}

/// Protocol parameters; each flag falls back to the `[system]` section of
/// `--config` when absent.
#[derive(Args, Debug, Default)]
struct SystemFlags {
    /// Total number of clients.
    #[arg(long)]
    n: Option<usize>,
    /// Availability quorum: broadcast once this many clients are available.
    #[arg(long)]
    m: Option<usize>,
    /// Updates aggregated per iteration (the earliest k close it).
    #[arg(long)]
    k: Option<usize>,
    /// Exponential availability rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Exponential uplink rate.
    #[arg(long)]
    mu_up: Option<f64>,
    /// Downlink discipline: "instant" or a positive exponential rate.
    #[arg(long, value_parser = parse_downlink)]
    mu_down: Option<Downlink>,
    /// Deterministic per-client compute duration.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args, Debug)]
struct AgeExactArgs {
    #[command(flatten)]
    system: SystemFlags,
    /// TOML configuration file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the JSON result envelope instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct AgeApproxArgs {
    /// Participation fraction m/n, strictly inside (0, 1); defaults to the
    /// config file's [system] ratio.
    #[arg(long)]
    alpha: Option<f64>,
    /// Aggregation fraction k/m, strictly inside (0, 1); defaults to the
    /// config file's [system] ratio.
    #[arg(long)]
    beta: Option<f64>,
    /// Exponential availability rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Exponential uplink rate.
    #[arg(long)]
    mu_up: Option<f64>,
    /// Deterministic per-client compute duration.
    #[arg(long)]
    c: Option<f64>,
    /// TOML configuration file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the JSON result envelope instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemFlags,
    /// Selection scheme: earliest-k-of-m, random-k, first-k, or all.
    #[arg(long)]
    scheme: Option<SchemeArg>,
    /// Simulation horizon in iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Iterations excluded from measurement (default: the warmup convention).
    #[arg(long)]
    warmup: Option<usize>,
    /// RNG seed (required here or in the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// TOML configuration file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON envelope here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a per-iteration event trace CSV (single scheme only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    system: SystemFlags,
    /// Iterations simulated per scheme.
    #[arg(long)]
    iterations: Option<usize>,
    /// Shared seed; each scheme draws from its own substream of it.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML configuration file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON envelope here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON envelope to stdout instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Standard figure family (fig3 | fig4 | fig5 | fig6); exclusive with
    /// the custom-grid options.
    #[arg(
        long,
        conflicts_with_all = ["m", "sweep_k", "objective", "sim_iterations", "warmup",
                              "lambda", "mu_up", "mu_down", "c"]
    )]
    figure: Option<FigureId>,
    /// Swept quorum values: a single m or an inclusive lo..hi range
    /// (default: 1..n).
    #[arg(long)]
    m: Option<RangeOrFixed>,
    /// Swept aggregation counts (default: every k <= m at each m).
    #[arg(long)]
    sweep_k: Option<RangeOrFixed>,
    /// Scoring: analytic (closed form) or simulated (Monte-Carlo).
    #[arg(long, value_parser = parse_objective)]
    objective: Option<Objective>,
    /// Simulation horizon per grid point (simulated objective only).
    #[arg(long)]
    sim_iterations: Option<usize>,
    /// Warmup override per grid point (simulated objective only).
    #[arg(long)]
    warmup: Option<usize>,
    /// RNG seed; required for the simulated objective.
    #[arg(long)]
    seed: Option<u64>,
    /// Total number of clients.
    #[arg(long)]
    n: Option<usize>,
    /// Exponential availability rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Exponential uplink rate.
    #[arg(long)]
    mu_up: Option<f64>,
    /// Downlink discipline: "instant" or a positive exponential rate.
    #[arg(long, value_parser = parse_downlink)]
    mu_down: Option<Downlink>,
    /// Deterministic per-client compute duration.
    #[arg(long)]
    c: Option<f64>,
    /// TOML configuration file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts (default: $TIMELY_FL_OUT_DIR or ".").
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FlTrainArgs {
    /// Deliverers aggregated per iteration; comma-separate for multiple
    /// curves (one CSV/JSON pair each).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Availability quorum for the selection draw.
    #[arg(long)]
    m: Option<usize>,
    /// Selection scheme: earliest-k-of-m, random-k, or first-k.
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Model dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Number of clients.
    #[arg(long)]
    n_clients: Option<usize>,
    /// Training samples held by each client.
    #[arg(long)]
    samples_per_client: Option<usize>,
    /// Held-out samples for the test loss.
    #[arg(long)]
    test_samples: Option<usize>,
    /// Mini-batch size of each local step.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Local SGD steps per selected client per iteration.
    #[arg(long)]
    tau: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Global iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Independent repeats averaged in the reported history.
    #[arg(long)]
    repeats: Option<usize>,
    /// Label-noise standard deviation.
    #[arg(long)]
    noise_std: Option<f64>,
    /// Availability rate fed to the selection draw.
    #[arg(long)]
    lambda: Option<f64>,
    /// Uplink rate fed to the selection draw.
    #[arg(long)]
    mu_up: Option<f64>,
    /// Compute duration fed to the selection draw.
    #[arg(long)]
    c: Option<f64>,
    /// RNG seed (required here or in the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// TOML configuration file (flags override it).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts (default: $TIMELY_FL_OUT_DIR or ".").
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// A single scheme, or `all` to compare the three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SchemeArg {
    All,
    One(SchemeKind),
}

impl FromStr for SchemeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            Ok(SchemeArg::All)
        } else {
            s.parse::<SchemeKind>()
                .map(SchemeArg::One)
                .map_err(|e| e.to_string())
        }
    }
}

fn parse_downlink(s: &str) -> Result<Downlink, String> {
    if s == "instant" {
        return Ok(Downlink::Instant);
    }
    match s.parse::<f64>() {
        Ok(rate) if rate.is_finite() && rate > 0.0 => Ok(Downlink::Finite(rate)),
        _ => Err(format!("expected \"instant\" or a positive rate, got {s:?}")),
    }
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    match s {
        "analytic" => Ok(Objective::Analytic),
        "simulated" => Ok(Objective::Simulated),
        _ => Err(format!("expected \"analytic\" or \"simulated\", got {s:?}")),
    }
}

fn downlink_text(downlink: Downlink) -> String {
    match downlink {
        Downlink::Instant => "instant".to_string(),
        Downlink::Finite(rate) => rate.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::AgeExact(args) => run_age_exact(args),
        Command::AgeApprox(args) => run_age_approx(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Compare(args) => run_compare(args),
        Command::Sweep(args) => run_sweep(args),
        Command::FlTrain(args) => run_fl_train(args),
    }
}

fn load_optional(path: &Option<PathBuf>) -> Result<LoadedConfig, CliError> {
    match path {
        Some(path) => config::load(path),
        None => Ok(LoadedConfig::default()),
    }
}

/// Field-wise flag-over-config merge; every parameter must come from one
/// of the two sources.
fn resolve_system(
    flags: &SystemFlags,
    cfg: Option<SystemParams>,
) -> Result<SystemParams, CliError> {
    fn pick<T: Copy>(flag: Option<T>, cfg: Option<T>, name: &str) -> Result<T, CliError> {
        flag.or(cfg).ok_or_else(|| {
            CliError::Usage(format!(
                "missing parameter --{name} (pass the flag or a [system] config section)"
            ))
        })
    }
    let params = SystemParams {
        n: pick(flags.n, cfg.map(|s| s.n), "n")?,
        m: pick(flags.m, cfg.map(|s| s.m), "m")?,
        k: pick(flags.k, cfg.map(|s| s.k), "k")?,
        lambda: pick(flags.lambda, cfg.map(|s| s.lambda), "lambda")?,
        mu_up: pick(flags.mu_up, cfg.map(|s| s.mu_up), "mu-up")?,
        mu_down: flags.mu_down.or(cfg.map(|s| s.mu_down)).unwrap_or_default(),
        c: pick(flags.c, cfg.map(|s| s.c), "c")?,
    };
    params.validate()?;
    Ok(params)
}

fn run_age_exact(args: AgeExactArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let loaded = load_optional(&args.config)?;
    let params = resolve_system(&args.system, loaded.config.system)?;
    let breakdown = age_exact(&params)?;
    if args.json {
        let resolved = ExperimentConfig {
            system: Some(params),
            ..Default::default()
        };
        output::print_json(&output::envelope(
            "age-exact",
            resolved,
            None,
            started,
            &breakdown,
        ))?;
    } else {
        println!(
            "operating point: n={} m={} k={} lambda={} mu_up={} mu_down={} c={}",
            params.n,
            params.m,
            params.k,
            params.lambda,
            params.mu_up,
            downlink_text(params.mu_down),
            params.c
        );
        println!("delta1 (update staleness at aggregation) = {:.9}", breakdown.delta1);
        println!("delta2 (inter-delivery penalty)          = {:.9}", breakdown.delta2);
        println!("delta3 (iteration-time dispersion)       = {:.9}", breakdown.delta3);
        println!("average age                              = {:.9}", breakdown.total);
        println!("mean iteration time                      = {:.9}", breakdown.mean_y);
        println!("iteration time variance                  = {:.9}", breakdown.var_y);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ApproxReport {
    alpha: f64,
    beta: f64,
    lambda: f64,
    mu_up: f64,
    c: f64,
    age: f64,
}

fn run_age_approx(args: AgeApproxArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let loaded = load_optional(&args.config)?;
    let system = loaded.config.system;
    fn pick(flag: Option<f64>, cfg: Option<f64>, name: &str) -> Result<f64, CliError> {
        flag.or(cfg).ok_or_else(|| {
            CliError::Usage(format!(
                "missing parameter --{name} (pass the flag or a [system] config section)"
            ))
        })
    }
    let alpha = pick(args.alpha, system.map(|s| s.m as f64 / s.n as f64), "alpha")?;
    let beta = pick(args.beta, system.map(|s| s.k as f64 / s.m as f64), "beta")?;
    let lambda = pick(args.lambda, system.map(|s| s.lambda), "lambda")?;
    let mu_up = pick(args.mu_up, system.map(|s| s.mu_up), "mu-up")?;
    let c = pick(args.c, system.map(|s| s.c), "c")?;
    let approx = ApproxParams::new(alpha, beta)?;
    let age = age_approx(&approx, lambda, mu_up, c)?;
    let report = ApproxReport {
        alpha,
        beta,
        lambda,
        mu_up,
        c,
        age,
    };
    if args.json {
        let resolved = ExperimentConfig {
            system,
            ..Default::default()
        };
        output::print_json(&output::envelope("age-approx", resolved, None, started, &report))?;
    } else {
        println!(
            "alpha={alpha} beta={beta} lambda={lambda} mu_up={mu_up} c={c}"
        );
        println!("average age (large-population approximation) = {age:.9}");
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let loaded = load_optional(&args.config)?;
    let run_cfg = loaded.config.run.unwrap_or_default();
    let scheme_arg = args
        .scheme
        .or(run_cfg.scheme.map(SchemeArg::One))
        .unwrap_or(SchemeArg::One(SchemeKind::EarliestKofM));

    let scheme = match scheme_arg {
        SchemeArg::All => {
            if args.trace.is_some() {
                return Err(CliError::Usage(
                    "--trace needs a single scheme; --scheme all compares without traces".into(),
                ));
            }
            if args.warmup.is_some() {
                return Err(CliError::Usage(
                    "scheme comparison fixes warmup to the default convention; drop --warmup"
                        .into(),
                ));
            }
            return compare_schemes(
                &args.system,
                args.iterations,
                args.seed,
                &loaded,
                args.out.as_deref(),
                false,
                started,
            );
        }
        SchemeArg::One(scheme) => scheme,
    };

    let params = resolve_system(&args.system, loaded.config.system)?;
    let iterations = args
        .iterations
        .or(run_cfg.iterations)
        .ok_or_else(|| CliError::Usage("missing --iterations (flag or [run] config)".into()))?;
    let warmup = args
        .warmup
        .or(run_cfg.warmup)
        .unwrap_or_else(|| default_warmup(iterations));
    let seed = args
        .seed
        .or(run_cfg.seed)
        .ok_or_else(|| CliError::Usage("simulate needs --seed (flag or [run] config)".into()))?;

    let result = if let Some(trace_path) = &args.trace {
        let (result, trace) = simulate_with_trace(&params, scheme, iterations, warmup, seed)?;
        output::write_trace_csv(trace_path, &trace)?;
        eprintln!("wrote {}", trace_path.display());
        result
    } else {
        simulate(&params, scheme, iterations, warmup, seed)?
    };

    let resolved = ExperimentConfig {
        system: Some(params),
        run: Some(RunSection {
            scheme: Some(scheme),
            iterations: Some(iterations),
            warmup: Some(warmup),
            seed: Some(seed),
        }),
        ..Default::default()
    };
    let envelope = output::envelope("simulate", resolved, Some(seed), started, &result);
    match &args.out {
        Some(path) => {
            output::write_json(path, &envelope)?;
            eprintln!("wrote {}", path.display());
        }
        None => output::print_json(&envelope)?,
    }
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let loaded = load_optional(&args.config)?;
    compare_schemes(
        &args.system,
        args.iterations,
        args.seed,
        &loaded,
        args.out.as_deref(),
        args.json,
        started,
    )
}

fn compare_schemes(
    system_flags: &SystemFlags,
    iterations_flag: Option<usize>,
    seed_flag: Option<u64>,
    loaded: &LoadedConfig,
    out: Option<&Path>,
    json: bool,
    started: Instant,
) -> Result<(), CliError> {
    let run_cfg = loaded.config.run.unwrap_or_default();
    let params = resolve_system(system_flags, loaded.config.system)?;
    let iterations = iterations_flag
        .or(run_cfg.iterations)
        .ok_or_else(|| CliError::Usage("missing --iterations (flag or [run] config)".into()))?;
    let seed = seed_flag
        .or(run_cfg.seed)
        .ok_or_else(|| CliError::Usage("compare needs --seed (flag or [run] config)".into()))?;
    let comparison = compare_iteration_time(&params, iterations, seed)?;

    let resolved = ExperimentConfig {
        system: Some(params),
        run: Some(RunSection {
            scheme: None,
            iterations: Some(iterations),
            warmup: None,
            seed: Some(seed),
        }),
        ..Default::default()
    };
    let envelope = output::envelope("compare", resolved, Some(seed), started, &comparison);
    if let Some(path) = out {
        output::write_json(path, &envelope)?;
        eprintln!("wrote {}", path.display());
    }
    if json {
        output::print_json(&envelope)?;
    } else {
        print_comparison(&comparison);
    }
    Ok(())
}

fn print_comparison(comparison: &SchemeComparison) {
    println!("{:<18} {:>20}", "scheme", "mean_iteration_time");
    for row in &comparison.rows {
        println!("{:<18} {:>20.9}", row.scheme.name(), row.mean_iteration_time);
    }
    println!(
        "improvement of earliest-k-of-m over random-k: {:.2}%",
        comparison.improvement_over_random * 100.0
    );
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let loaded = load_optional(&args.config)?;
    let sweep_cfg = loaded.config.sweep.unwrap_or_default();
    let run_cfg = loaded.config.run.unwrap_or_default();

    if let Some(figure) = args.figure.or(sweep_cfg.figure) {
        // Figure families fix their own grids and rates; only n, the seed,
        // and the output directory remain free.
        let grid_keys = sweep_cfg.m.is_some()
            || sweep_cfg.k.is_some()
            || sweep_cfg.objective.is_some()
            || sweep_cfg.sim_iterations.is_some();
        if grid_keys {
            return Err(CliError::Usage(
                "figure sweeps cannot be combined with custom grid options".into(),
            ));
        }
        return run_sweep_figure(figure, &args, &loaded, started);
    }

    let system = loaded.config.system;
    fn pick<T: Copy>(flag: Option<T>, cfg: Option<T>, name: &str) -> Result<T, CliError> {
        flag.or(cfg).ok_or_else(|| {
            CliError::Usage(format!(
                "missing parameter --{name} (pass the flag or a [system] config section)"
            ))
        })
    }
    let base = SystemParams {
        n: pick(args.n, system.map(|s| s.n), "n")?,
        m: 0, // placeholders; every grid point overrides them
        k: 0,
        lambda: pick(args.lambda, system.map(|s| s.lambda), "lambda")?,
        mu_up: pick(args.mu_up, system.map(|s| s.mu_up), "mu-up")?,
        mu_down: args.mu_down.or(system.map(|s| s.mu_down)).unwrap_or_default(),
        c: pick(args.c, system.map(|s| s.c), "c")?,
    };
    let base = SystemParams {
        m: base.n,
        k: 1,
        ..base
    };
    base.validate()?;

    let objective = args
        .objective
        .or(sweep_cfg.objective)
        .unwrap_or(Objective::Analytic);
    let seed = match objective {
        Objective::Simulated => args.seed.or(run_cfg.seed).ok_or_else(|| {
            CliError::Usage("simulated sweeps need --seed (flag or [run] config)".into())
        })?,
        Objective::Analytic => args.seed.or(run_cfg.seed).unwrap_or(0),
    };
    let sweep_m = args
        .m
        .or(sweep_cfg.m)
        .map(RangeOrFixed::to_range)
        .unwrap_or(IntRange::new(1, base.n));
    let sweep_k = args.sweep_k.or(sweep_cfg.k).map(RangeOrFixed::to_range);
    let sim_iterations = args
        .sim_iterations
        .or(sweep_cfg.sim_iterations)
        .unwrap_or(0);
    let warmup = args.warmup.or(run_cfg.warmup);
    let spec = SweepSpec {
        base,
        sweep_m,
        sweep_k,
        objective,
        sim_iterations,
        warmup,
        seed,
    };
    let result = sweep(&spec)?;

    let dir = output::resolve_out_dir(args.out_dir);
    let csv_path = dir.join("sweep.csv");
    output::write_sweep_csv(&csv_path, &result.rows)?;
    let resolved = ExperimentConfig {
        system: Some(base),
        run: Some(RunSection {
            scheme: None,
            iterations: None,
            warmup,
            seed: Some(seed),
        }),
        sweep: Some(SweepSection {
            figure: None,
            m: Some(RangeOrFixed::from_range(sweep_m)),
            k: sweep_k.map(RangeOrFixed::from_range),
            objective: Some(objective),
            sim_iterations: (objective == Objective::Simulated).then_some(sim_iterations),
        }),
        ..Default::default()
    };
    let envelope = output::envelope("sweep", resolved, Some(seed), started, &result);
    let json_path = dir.join("sweep.json");
    output::write_json(&json_path, &envelope)?;
    println!(
        "argmin: m={} k={} age={:.9} mean_iteration_time={:.9}",
        result.argmin.m, result.argmin.k, result.argmin.age, result.argmin.mean_iteration_time
    );
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn run_sweep_figure(
    figure: FigureId,
    args: &SweepArgs,
    loaded: &LoadedConfig,
    started: Instant,
) -> Result<(), CliError> {
    let run_cfg = loaded.config.run.unwrap_or_default();
    let n = args
        .n
        .or(loaded.config.system.map(|s| s.n))
        .unwrap_or(100);
    let seed = args.seed.or(run_cfg.seed).unwrap_or(0);
    let curves = reproduce_figure(figure, n, seed)?;

    let dir = output::resolve_out_dir(args.out_dir.clone());
    for curve in &curves {
        let csv_path = dir.join(format!(
            "{}_{}_{}.csv",
            figure.name(),
            curve.param_name,
            curve.param_value
        ));
        output::write_sweep_csv(&csv_path, &curve.rows)?;
        println!(
            "{}={}: optimal m={} k={} age={:.9} ({})",
            curve.param_name,
            curve.param_value,
            curve.optimal_m,
            curve.optimal_k,
            curve.optimal_age,
            csv_path.display()
        );
    }

    // The base rates are placeholders (each family member fixes its own);
    // replaying this config only needs n, the seed, and the figure id.
    let resolved = ExperimentConfig {
        system: Some(SystemParams {
            n,
            m: n,
            k: 1,
            lambda: 1.0,
            mu_up: 1.0,
            mu_down: Downlink::Instant,
            c: 1.0,
        }),
        run: Some(RunSection {
            scheme: None,
            iterations: None,
            warmup: None,
            seed: Some(seed),
        }),
        sweep: Some(SweepSection {
            figure: Some(figure),
            ..Default::default()
        }),
        ..Default::default()
    };
    let envelope = output::envelope("sweep", resolved, Some(seed), started, &curves);
    let json_path = dir.join(format!("{}.json", figure.name()));
    output::write_json(&json_path, &envelope)?;
    eprintln!("wrote {}", json_path.display());
    Ok(())
}

/// Field-wise flag-over-config merge for one training run.
fn apply_fl_flags(base: FLConfig, args: &FlTrainArgs, k: usize, seed: u64) -> FLConfig {
    FLConfig {
        d: args.d.unwrap_or(base.d),
        n_clients: args.n_clients.unwrap_or(base.n_clients),
        samples_per_client: args.samples_per_client.unwrap_or(base.samples_per_client),
        test_samples: args.test_samples.unwrap_or(base.test_samples),
        batch_size: args.batch_size.unwrap_or(base.batch_size),
        tau: args.tau.unwrap_or(base.tau),
        eta: args.eta.unwrap_or(base.eta),
        iterations: args.iterations.unwrap_or(base.iterations),
        repeats: args.repeats.unwrap_or(base.repeats),
        m: args.m.unwrap_or(base.m),
        k,
        scheme: args.scheme.unwrap_or(base.scheme),
        noise_std: args.noise_std.unwrap_or(base.noise_std),
        lambda: args.lambda.unwrap_or(base.lambda),
        mu_up: args.mu_up.unwrap_or(base.mu_up),
        c: args.c.unwrap_or(base.c),
        seed,
    }
}

fn run_fl_train(args: FlTrainArgs) -> Result<(), CliError> {
    let loaded = load_optional(&args.config)?;
    let base = loaded.config.fl.unwrap_or_default();
    let run_cfg = loaded.config.run.unwrap_or_default();
    let seed = args
        .seed
        .or(loaded.fl_seed_present.then_some(base.seed))
        .or(run_cfg.seed)
        .ok_or_else(|| {
            CliError::Usage("fl-train needs --seed (flag, [fl] seed, or [run] seed)".into())
        })?;
    let k_values = args.k.clone().unwrap_or_else(|| vec![base.k]);
    let dir = output::resolve_out_dir(args.out_dir.clone());

    for k in k_values {
        let started = Instant::now();
        let config = apply_fl_flags(base, &args, k, seed);
        config.validate()?;
        let outcome = train(&config)?;

        let stem = format!("fl_{}_k{}", config.scheme.name(), config.k);
        let csv_path = dir.join(format!("{stem}.csv"));
        output::write_loss_csv(&csv_path, &outcome.averaged)?;
        let resolved = ExperimentConfig {
            fl: Some(config),
            ..Default::default()
        };
        let envelope = output::envelope("fl-train", resolved, Some(seed), started, &outcome);
        let json_path = dir.join(format!("{stem}.json"));
        output::write_json(&json_path, &envelope)?;

        let first = outcome.averaged.first().expect("history is never empty");
        let last = outcome.averaged.last().expect("history is never empty");
        println!(
            "k={k}: test loss {:.6} -> {:.6} over {} iterations, {} repeats",
            first.test_loss, last.test_loss, config.iterations, config.repeats
        );
        eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    }
    Ok(())
}
