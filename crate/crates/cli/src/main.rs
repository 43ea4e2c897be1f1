use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use ltvid::bench::{emit_report, run_suite, BenchConfig, BenchManifest, Suite};
use ltvid::control::{closed_loop, tracking_controller, tracking_errors, CostWeights, ReferenceSpec};
use ltvid::datagen::{
    build_dataset, chirp, load_dataset, save_dataset, write_trajectory_csv, DatasetConfig, ExcitationSpec,
};
use ltvid::dynamics::{ground_truth_ltv, ScenarioSpec, StateVec};
use ltvid::ident::{fit_method, tune, LtvModel, Method};
use ltvid::rng::substream;
use ltvid::DatasetF64;

#[derive(Parser)]
#[command(name = "ltvid", version, about = "Identify LTV models, synthesize LQR trackers and run benchmarks")]
struct Cli {
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one open-loop trajectory.
    Simulate(SimulateArgs),
    /// Generate train, validation and test splits.
    Dataset(DatasetArgs),
    /// Fit a model at a fixed hyperparameter.
    Identify(IdentifyArgs),
    /// Grid-search the hyperparameter on the validation split.
    Tune(TuneArgs),
    /// Track a reference in closed loop with an LQR designed on a model.
    Control(ControlArgs),
    /// Run the benchmark suites.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scenario name or scenario file.
    #[arg(long)]
    scenario: String,
    /// Initial state `position,velocity`.
    #[arg(long, default_value = "0,0", value_parser = parse_state)]
    x0: StateVec,
    /// `chirp` or `zero`.
    #[arg(long, default_value = "chirp")]
    input: String,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    scenario: String,
    /// Dataset configuration file; defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    method: Method,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Dataset directory, or one split of it.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long, default_value = "cosmic")]
    method: Method,
    /// Comma-separated hyperparameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    /// Dataset directory with `train` and `validation` splits.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct ControlArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    scenario: String,
    /// Reference file; a square wave otherwise.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "0,0", value_parser = parse_state)]
    x0: StateVec,
    #[arg(long, default_value_t = 1.0)]
    q_x: f64,
    #[arg(long, default_value_t = 0.1)]
    q_v: f64,
    #[arg(long, default_value_t = 1e-3)]
    r: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    /// Re-run from a previous manifest; overrides `--seed` and `--suite`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Benchmark configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_state(s: &str) -> Result<StateVec, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b] => Ok(StateVec::new(*a, *b)),
        _ => Err(format!("expected `position,velocity`, got `{s}`")),
    }
}

/// Error tagged with the pipeline stage that produced it.
struct Failure {
    stage: &'static str,
    err: anyhow::Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { stage, err: e.into() })
    }
}

/// Usage problems found after parsing (missing seed or output).
struct Usage(String);

enum RunError {
    Usage(Usage),
    Runtime(Failure),
}

impl From<Failure> for RunError {
    fn from(f: Failure) -> Self {
        RunError::Runtime(f)
    }
}

impl From<Usage> for RunError {
    fn from(u: Usage) -> Self {
        RunError::Usage(u)
    }
}

fn require_seed(seed: Option<u64>, cmd: &str) -> Result<u64, Usage> {
    seed.ok_or_else(|| Usage(format!("`{cmd}` is stochastic and needs --seed")))
}

fn require_out(out: &Option<PathBuf>, cmd: &str) -> Result<PathBuf, Usage> {
    out.clone().ok_or_else(|| Usage(format!("`{cmd}` needs --out")))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

fn write_manifest<M: Serialize>(path: &Path, manifest: &M) -> anyhow::Result<()> {
    let text = toml::to_string(manifest)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn seed_string(seed: u64) -> String {
    seed.to_string()
}

#[derive(Serialize)]
struct SimulateManifest {
    command: &'static str,
    version: &'static str,
    seed: String,
    input: String,
    x0: [f64; 2],
    output: String,
    scenario: ScenarioSpec,
}

fn simulate(args: &SimulateArgs, seed: u64, out: &Path) -> Result<(), RunError> {
    let spec = ScenarioSpec::resolve(&args.scenario).stage("loading scenario")?;
    let traj = match args.input.as_str() {
        "zero" => spec.simulate(args.x0, |_| 0.0, seed),
        "chirp" => {
            let cfg = DatasetConfig::default();
            let ex = ExcitationSpec {
                amplitude: cfg.amplitude,
                w0: cfg.train.w0,
                w1: cfg.train.w1,
                duration: spec.horizon,
                phase: 0.0,
                noise_var: cfg.chirp_noise_var,
            };
            let mut rng = substream(seed, "excite", 0);
            spec.simulate(args.x0, |t| chirp(&ex, t, &mut rng), seed)
        }
        other => return Err(Usage(format!("unknown input `{other}`, expected chirp or zero")).into()),
    }
    .stage("simulating")?;
    write_trajectory_csv(&traj, out).stage("writing trajectory")?;
    write_manifest(
        &manifest_path(out),
        &SimulateManifest {
            command: "simulate",
            version: env!("CARGO_PKG_VERSION"),
            seed: seed_string(seed),
            input: args.input.clone(),
            x0: [args.x0[0], args.x0[1]],
            output: out.display().to_string(),
            scenario: spec,
        },
    )
    .stage("writing manifest")?;
    Ok(())
}

#[derive(Serialize)]
struct DatasetManifest {
    command: &'static str,
    version: &'static str,
    seed: String,
    splits: Vec<&'static str>,
    config: DatasetConfig,
    scenario: ScenarioSpec,
}

fn dataset(args: &DatasetArgs, seed: u64, out: &Path) -> Result<(), RunError> {
    let spec = ScenarioSpec::resolve(&args.scenario).stage("loading scenario")?;
    let cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .stage("loading dataset config")?;
            toml::from_str::<DatasetConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .stage("loading dataset config")?
        }
        None => DatasetConfig::default(),
    };
    let splits = build_dataset(&spec, &cfg, seed).stage("simulating dataset")?;
    for ds in [&splits.train, &splits.validation, &splits.test] {
        save_dataset(ds, out.join(ds.split.name())).stage("writing dataset")?;
    }
    write_manifest(
        &out.join("manifest.toml"),
        &DatasetManifest {
            command: "dataset",
            version: env!("CARGO_PKG_VERSION"),
            seed: seed_string(seed),
            splits: vec!["train", "validation", "test"],
            config: cfg,
            scenario: spec,
        },
    )
    .stage("writing manifest")?;
    Ok(())
}

/// `dir/<split>` when present, else `dir` itself.
fn load_split(dir: &Path, split: &str) -> anyhow::Result<DatasetF64> {
    let sub = dir.join(split);
    let path = if sub.is_dir() { sub } else { dir.to_path_buf() };
    Ok(load_dataset(&path)?)
}

fn identify_model(method: Method, lambda: f64, train: &DatasetF64) -> anyhow::Result<LtvModel<f64>> {
    if method == Method::Linearization {
        let spec = train
            .scenario
            .as_ref()
            .ok_or_else(|| anyhow!("the dataset does not record the scenario it came from"))?;
        return Ok(ground_truth_ltv(spec)?);
    }
    Ok(fit_method(method, lambda, train)?)
}

#[derive(Serialize)]
struct ModelManifest {
    command: &'static str,
    version: &'static str,
    method: Method,
    lambda: f64,
    grid: Vec<f64>,
    /// Validation loss per grid point; empty entries failed.
    losses: Vec<String>,
    data: String,
    model: String,
}

fn identify(args: &IdentifyArgs, out: &Path) -> Result<(), RunError> {
    let train = load_split(&args.data, "train").stage("loading dataset")?;
    let model = identify_model(args.method, args.lambda, &train).stage("identification")?;
    model.save(out).stage("writing model")?;
    write_manifest(
        &manifest_path(out),
        &ModelManifest {
            command: "identify",
            version: env!("CARGO_PKG_VERSION"),
            method: args.method,
            lambda: args.lambda,
            grid: vec![args.lambda],
            losses: Vec::new(),
            data: args.data.display().to_string(),
            model: out.display().to_string(),
        },
    )
    .stage("writing manifest")?;
    Ok(())
}

fn tune_cmd(args: &TuneArgs, out: &Path) -> Result<(), RunError> {
    let train = load_split(&args.data, "train").stage("loading dataset")?;
    let validation = load_dataset::<f64>(args.data.join("validation")).stage("loading dataset")?;
    let (lambda, model, report) = tune(args.method, &args.grid, &train, &validation).stage("tuning")?;
    for p in &report.points {
        match (p.loss, &p.error) {
            (Some(l), _) => info!("lambda {} -> validation loss {l}", p.lambda),
            (None, e) => info!("lambda {} failed: {}", p.lambda, e.as_deref().unwrap_or("")),
        }
    }
    println!("best lambda {lambda}");
    model.save(out).stage("writing model")?;
    write_manifest(
        &manifest_path(out),
        &ModelManifest {
            command: "tune",
            version: env!("CARGO_PKG_VERSION"),
            method: args.method,
            lambda,
            grid: args.grid.clone(),
            losses: report
                .points
                .iter()
                .map(|p| p.loss.map(|l| l.to_string()).unwrap_or_default())
                .collect(),
            data: args.data.display().to_string(),
            model: out.display().to_string(),
        },
    )
    .stage("writing manifest")?;
    Ok(())
}

#[derive(Serialize)]
struct ControlManifest {
    command: &'static str,
    version: &'static str,
    seed: String,
    model: String,
    gains: String,
    x0: [f64; 2],
    q_x: f64,
    q_v: f64,
    r: f64,
    mean_tracking_error: f64,
    scenario: ScenarioSpec,
    reference: ReferenceSpec,
}

fn control(args: &ControlArgs, seed: u64, out: &Path) -> Result<(), RunError> {
    let model = LtvModel::<f64>::load(&args.model).stage("loading model")?;
    let spec = ScenarioSpec::resolve(&args.scenario).stage("loading scenario")?;
    let reference = match &args.reference {
        Some(path) => ReferenceSpec::load(path).stage("loading reference")?,
        None => ReferenceSpec::square_wave(spec.horizon),
    };
    let weights = CostWeights::position_velocity(args.q_x, args.q_v, args.r);
    let sched = tracking_controller(&model, &weights, &reference).stage("controller synthesis")?;
    let traj = closed_loop(&spec, &sched, &reference, args.x0, seed).stage("closed-loop simulation")?;
    let errors = tracking_errors(&traj, &reference);
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    println!("mean tracking error {mean}");
    write_trajectory_csv(&traj, out).stage("writing trajectory")?;
    let mut gains = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    gains.push(".gains.toml");
    let gains = out.with_file_name(gains);
    sched.save(&gains).stage("writing gain schedule")?;
    write_manifest(
        &manifest_path(out),
        &ControlManifest {
            command: "control",
            version: env!("CARGO_PKG_VERSION"),
            seed: seed_string(seed),
            model: args.model.display().to_string(),
            gains: gains.display().to_string(),
            x0: [args.x0[0], args.x0[1]],
            q_x: args.q_x,
            q_v: args.q_v,
            r: args.r,
            mean_tracking_error: mean,
            scenario: spec,
            reference,
        },
    )
    .stage("writing manifest")?;
    Ok(())
}

fn bench(args: &BenchArgs, seed: Option<u64>, out: &Path) -> Result<(), RunError> {
    let (cfg, suite) = match &args.manifest {
        Some(path) => {
            let m = BenchManifest::load(path).stage("loading manifest")?;
            (m.config, m.suite)
        }
        None => {
            let seed = require_seed(seed, "bench")?;
            let cfg = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))
                        .stage("loading bench config")?;
                    let mut cfg: BenchConfig = toml::from_str(&text)
                        .with_context(|| format!("parsing {}", path.display()))
                        .stage("loading bench config")?;
                    cfg.master_seed = seed;
                    cfg
                }
                None => BenchConfig::new(seed),
            };
            (cfg, args.suite)
        }
    };
    let outputs = run_suite(&cfg, suite).stage("benchmark")?;
    let files = emit_report(&outputs, &cfg, suite, out).stage("writing report")?;
    for f in files {
        info!("wrote {}", f.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), RunError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Usage("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| anyhow!(e))
            .stage("starting worker pool")?;
    }
    match &cli.command {
        Command::Simulate(a) => {
            let seed = require_seed(cli.seed, "simulate")?;
            let out = require_out(&cli.out, "simulate")?;
            simulate(a, seed, &out)
        }
        Command::Dataset(a) => {
            let seed = require_seed(cli.seed, "dataset")?;
            let out = require_out(&cli.out, "dataset")?;
            dataset(a, seed, &out)
        }
        Command::Identify(a) => identify(a, &require_out(&cli.out, "identify")?),
        Command::Tune(a) => tune_cmd(a, &require_out(&cli.out, "tune")?),
        Command::Control(a) => {
            let seed = require_seed(cli.seed, "control")?;
            let out = require_out(&cli.out, "control")?;
            control(a, seed, &out)
        }
        Command::Bench(a) => bench(a, cli.seed, &require_out(&cli.out, "bench")?),
    }
}

/// Error chain, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut text = err.to_string();
    let mut last = text.clone();
    for cause in err.chain().skip(1) {
        let c = cause.to_string();
        if !last.contains(&c) {
            text.push_str(": ");
            text.push_str(&c);
        }
        last = c;
    }
    text
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Runtime(Failure { stage, err })) => {
            eprintln!("error during {stage}: {}", describe(&err));
            ExitCode::from(2)
        }
    }
}

