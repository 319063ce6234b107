use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nanbu_core::harness::emit::{
    json_bytes, secondary_tables, sweep_csv, sweep_json, sweep_svg, trajectory_csv, trajectory_json,
    validation_csv, validation_json, write_file,
};
use nanbu_core::harness::sweep::Axis;
use nanbu_core::harness::{converge_in_dt, converge_in_n, validate, Config, Depth, Format, ModelSelector};
use nanbu_core::solvers::{run_with, RunOptions};
use nanbu_core::{Error, Scheme};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "nanbu", version, about = "Nanbu and TRMC particle solvers for kinetic collision models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its per-snapshot diagnostics.
    Simulate(Common),
    /// Sweep the particle count and fit the W1 convergence rate.
    ConvergeN(Common),
    /// Sweep the time step against a moment oracle.
    ConvergeDt(Common),
    /// Check domain closure, Lipschitz and growth bounds, conservation and reproducibility.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "quick")]
        depth: DepthArg,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file. Optional for `validate`, which then checks every model.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to NANBU_THREADS, then to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output format, repeatable. Defaults to the configured formats.
    #[arg(long = "format", value_enum)]
    formats: Vec<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DepthArg {
    Quick,
    Full,
}

enum Failure {
    Config(String),
    Runtime(String),
    Validation(usize),
}

impl Failure {
    fn runtime(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(n)) => {
            eprintln!("validation failed: {n} check(s) did not pass");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    let common = match &command {
        Command::Simulate(c) | Command::ConvergeN(c) | Command::ConvergeDt(c) => c,
        Command::Validate { common, .. } => common,
    };
    init_threads(common.threads)?;
    match &command {
        Command::Simulate(c) => simulate(c, &load(c)?),
        Command::ConvergeN(c) => sweep(c, &load(c)?, Axis::ParticleCount),
        Command::ConvergeDt(c) => sweep(c, &load(c)?, Axis::TimeStep),
        Command::Validate { common, depth } => run_validation(common, *depth),
    }
}

fn init_threads(flag: Option<usize>) -> Result<(), Failure> {
    let from_env = match std::env::var("NANBU_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Config(format!("NANBU_THREADS must be a positive integer, got {v:?}")))?,
        ),
        Err(_) => None,
    };
    let threads = match flag.or(from_env) {
        Some(0) => return Err(Failure::Config("--threads must be at least 1".into())),
        Some(k) => k,
        None => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))
}

fn load(common: &Common) -> Result<Config, Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required for this command".into()))?;
    let mut config = Config::load(path).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = common.seed {
        config.scheme.seed = seed;
    }
    Ok(config)
}

fn formats(common: &Common, config: Option<&Config>) -> Vec<Format> {
    let mut out: Vec<Format> = if common.formats.is_empty() {
        config.map_or_else(|| vec![Format::Csv, Format::Json], |c| c.output.formats.clone())
    } else {
        common.formats.iter().map(|&f| f.into()).collect()
    };
    out.dedup();
    out
}

fn target(common: &Common, prefix: &str, suffix: &str, format: Format) -> PathBuf {
    let stem = if suffix.is_empty() { prefix.to_string() } else { format!("{prefix}_{suffix}") };
    common.out.join(format!("{stem}.{}", format.extension()))
}

fn emit(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    write_file(path, bytes).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(common: &Common, config: &Config) -> Result<(), Failure> {
    let model = config.model_spec().map_err(Failure::runtime)?;
    let params = config.scheme_params().map_err(Failure::runtime)?;
    let options = RunOptions {
        keep_ensembles: false,
        moment_orders: config.output.moment_orders.clone(),
        equilibrium: config.equilibrium(&model),
    };
    if params.scheme == Scheme::Trmc && !options.equilibrium.as_ref().is_some_and(|e| e.is_available()) {
        return Err(Failure::Config(format!("TRMC needs an equilibrium sampler, none exists for {}", model.id())));
    }
    let traj = run_with(&params, &model, &config.initial_condition, &options).map_err(Failure::runtime)?;
    let echo = serde_json::to_value(config).map_err(|e| Failure::Runtime(e.to_string()))?;
    let prefix = &config.output.prefix;
    for format in formats(common, Some(config)) {
        match format {
            Format::Csv => {
                let bytes = trajectory_csv(&traj).map_err(Failure::runtime)?;
                emit(&target(common, prefix, "", format), &bytes)?;
            }
            Format::Json => {
                let value = trajectory_json(&traj, echo.clone());
                emit(&target(common, prefix, "", format), &json_bytes(&value))?;
            }
            Format::Svg => eprintln!("warning: svg output is only produced by sweeps; skipped"),
        }
    }
    Ok(())
}

fn sweep(common: &Common, config: &Config, axis: Axis) -> Result<(), Failure> {
    let plan = config.sweep_plan().map_err(Failure::runtime)?;
    if plan.axis != axis {
        let expected = match axis {
            Axis::ParticleCount => "particle_count",
            Axis::TimeStep => "time_step",
        };
        return Err(Failure::Config(format!("this command needs sweep.axis = \"{expected}\"")));
    }
    let outcome = match axis {
        Axis::ParticleCount => converge_in_n(&plan),
        Axis::TimeStep => converge_in_dt(&plan),
    }
    .map_err(Failure::runtime)?;
    for note in &outcome.diagnostics {
        eprintln!("note: {note}");
    }
    if let Some(fit) = outcome.fit() {
        println!("rate fit: slope {:.4}, R^2 {:.4}", fit.slope, fit.r_squared);
    }
    let prefix = &config.output.prefix;
    for format in formats(common, Some(config)) {
        match format {
            Format::Csv => {
                let bytes = sweep_csv(outcome.rows()).map_err(Failure::runtime)?;
                emit(&target(common, prefix, "", format), &bytes)?;
                for (suffix, table) in secondary_tables(&outcome) {
                    let bytes = sweep_csv(&table.rows).map_err(Failure::runtime)?;
                    emit(&target(common, prefix, suffix, format), &bytes)?;
                }
            }
            Format::Json => emit(&target(common, prefix, "", format), &json_bytes(&sweep_json(&outcome)))?,
            Format::Svg => emit(&target(common, prefix, "", format), sweep_svg(&outcome).as_bytes())?,
        }
    }
    Ok(())
}

fn run_validation(common: &Common, depth: DepthArg) -> Result<(), Failure> {
    let (selector, config, seed) = match &common.config {
        Some(_) => {
            let config = load(common)?;
            let model = config.model_spec().map_err(Failure::runtime)?;
            let seed = config.scheme.seed;
            (ModelSelector::One(model), Some(config), seed)
        }
        None => (ModelSelector::All, None, common.seed.unwrap_or(0)),
    };
    let depth = match depth {
        DepthArg::Quick => Depth::Quick,
        DepthArg::Full => Depth::Full,
    };
    let report = validate(&selector, depth, seed);
    for e in &report.entries {
        let verdict = if e.passed { "ok  " } else { "FAIL" };
        println!(
            "{verdict} {:<16} {:<12} measured {:.4e} bound {:.4e} violations {}",
            e.suite, e.model, e.measured, e.bound, e.violations
        );
    }
    let prefix = config.as_ref().map_or("validation", |c| c.output.prefix.as_str());
    for format in formats(common, config.as_ref()) {
        match format {
            Format::Csv => {
                let bytes = validation_csv(&report).map_err(Failure::runtime)?;
                emit(&target(common, prefix, "", format), &bytes)?;
            }
            Format::Json => emit(&target(common, prefix, "", format), &json_bytes(&validation_json(&report)))?,
            Format::Svg => eprintln!("warning: svg output is only produced by sweeps; skipped"),
        }
    }
    match report.failures().count() {
        0 => Ok(()),
        n => Err(Failure::Validation(n)),
    }
}
