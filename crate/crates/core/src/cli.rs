//! Command-line front end.
//!
//! Every command writes into `--out`; files are first written with a
//! `.partial` suffix and renamed once complete. Each command also leaves a
//! `manifest_<command>.json` recording its parameters and outputs.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aging::{self, OracleParams, RunOptions};
use crate::cbup::{self, DegradationCostParams};
use crate::dataprep::{self, Mode, PrepConfig};
use crate::error::{Error, Result};
use crate::mds::{self, ExtraConstraints, MicrogridConfig, ScheduleSolution};
use crate::nnbd::{self, DegradationModel, TrainConfig};
use crate::nnodh::{self, IterationRecord, Metrics, NnodhConfig, StopReason, Strategy};
use crate::pipeline;
use crate::scenario;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "nnodh", version, about = "Battery-degradation-aware microgrid scheduling")]
pub struct Cli {
    /// Master seed; defaults to 42 (7 for make-scenario).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel work; all cores when omitted.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Scenario JSON; the bundled scenario when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Simulate the aging-test matrix.
    SimulateAging(SimulateArgs),
    /// Pre-process an aging dataset.
    Prep(PrepArgs),
    /// Train the degradation surrogate.
    Train(TrainArgs),
    /// Schedule the microgrid with one pipeline or every strategy.
    Schedule(ScheduleArgs),
    /// Sensitivity sweeps.
    Sweep(SweepArgs),
    /// Write a synthetic scenario.
    MakeScenario(MakeScenarioArgs),
    /// Benchmark comparison and pre-processing preservation tables.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateAging(_) => "simulate-aging",
            Command::Prep(_) => "prep",
            Command::Train(_) => "train",
            Command::Schedule(_) => "schedule",
            Command::Sweep(_) => "sweep",
            Command::MakeScenario(_) => "make-scenario",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = aging::DEFAULT_TEMPS)]
    pub temps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = aging::DEFAULT_C_RATES)]
    pub c_rates: Vec<f64>,
    /// Give every cell its full tabulated number of tests.
    #[arg(long)]
    pub full_matrix: bool,
    /// Approximate number of recorded rows per test.
    #[arg(long, default_value_t = aging::DEFAULT_MAX_ROWS)]
    pub max_rows: usize,
    /// Record every cycle.
    #[arg(long, conflicts_with = "max_rows")]
    pub all_rows: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepArgs {
    /// Aging CSV; `<out>/aging_dataset.csv` when omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "regressed")]
    pub mode: Mode,
    #[arg(long, default_value_t = pipeline::DEFAULT_SPLIT)]
    pub split: f64,
    #[arg(long, default_value_t = dataprep::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = dataprep::DEFAULT_MAD_K)]
    pub mad_k: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Aging CSV; `<out>/aging_dataset.csv` when omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "regressed")]
    pub mode: Mode,
    #[arg(long, default_value_t = 65)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    pub decay_factor: f64,
    #[arg(long, default_value_t = 20)]
    pub decay_period: usize,
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long, default_value_t = pipeline::DEFAULT_SPLIT)]
    pub split: f64,
    /// Train once per batch size in {16, ..., 2048} and tabulate the results.
    #[arg(long)]
    pub batch_sweep: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Mds,
    CycleLimit,
    LinearBdc,
    NnodhBcl,
    NnodhPbcl,
    NnodhBrl,
    NnodhAll,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Mds => "mds",
            Pipeline::CycleLimit => "cycle-limit",
            Pipeline::LinearBdc => "linear-bdc",
            Pipeline::NnodhBcl => "nnodh-bcl",
            Pipeline::NnodhPbcl => "nnodh-pbcl",
            Pipeline::NnodhBrl => "nnodh-brl",
            Pipeline::NnodhAll => "nnodh-all",
        }
    }

    fn strategy(self) -> Option<Strategy> {
        match self {
            Pipeline::NnodhBcl => Some(Strategy::Bcl),
            Pipeline::NnodhPbcl => Some(Strategy::Pbcl),
            Pipeline::NnodhBrl => Some(Strategy::Brl),
            Pipeline::NnodhAll => Some(Strategy::All),
            _ => None,
        }
    }
}

/// Degradation pricing and benchmark settings shared by several commands.
#[derive(Debug, Args, Serialize)]
pub struct CostArgs {
    /// Model JSON; `<out>/model_regressed.json` when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Battery price, $/kWh.
    #[arg(long, default_value_t = cbup::DEFAULT_UNIT_PRICE)]
    pub unit_price: f64,
    #[arg(long, default_value_t = 0.0)]
    pub salvage: f64,
    #[arg(long, default_value_t = cbup::DEFAULT_SOH_EOL)]
    pub soh_eol: f64,
    #[arg(long, default_value_t = 0.03)]
    pub alpha: f64,
    #[arg(long, default_value_t = nnodh::DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ScheduleArgs {
    #[arg(long, value_enum, default_value = "nnodh-bcl")]
    pub pipeline: Pipeline,
    /// Run the four decoupled strategies and tabulate them side by side.
    #[arg(long)]
    pub all_strategies: bool,
    /// Linear degradation price, $/kWh; the plain schedule's average when omitted.
    #[arg(long)]
    pub linear_rate: Option<f64>,
    #[arg(long, default_value_t = nnodh::DEFAULT_CYCLE_LIMIT)]
    pub cycle_limit: u32,
    #[command(flatten)]
    pub cost: CostArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Borf,
    ResPenetration,
    SizePrice,
}

impl SweepKind {
    fn name(self) -> &'static str {
        match self {
            SweepKind::Borf => "borf",
            SweepKind::ResPenetration => "res-penetration",
            SweepKind::SizePrice => "size-price",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    #[arg(long, default_value = "bcl")]
    pub strategy: Strategy,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.03, 0.05, 0.1, 0.2])]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8])]
    pub penetrations: Vec<f64>,
    /// Battery sizes, kWh.
    #[arg(long, value_delimiter = ',', default_values_t = [200.0, 300.0, 400.0])]
    pub sizes: Vec<f64>,
    /// Battery prices, $/kWh.
    #[arg(long, value_delimiter = ',', default_values_t = [200.0, 250.0, 300.0, 400.0])]
    pub prices: Vec<f64>,
    /// Add a wall-time column; the table is then no longer reproducible byte for byte.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub cost: CostArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MakeScenarioArgs {
    #[arg(long, default_value_t = scenario::DEFAULT_PENETRATION)]
    pub penetration: f64,
    /// Battery energy capacity, kWh.
    #[arg(long, default_value_t = 300.0)]
    pub bess_kwh: f64,
    /// File stem of the written scenario.
    #[arg(long, default_value = "scenario")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub linear_rate: Option<f64>,
    #[arg(long, default_value_t = nnodh::DEFAULT_CYCLE_LIMIT)]
    pub cycle_limit: u32,
    #[arg(long, default_value = "bcl")]
    pub strategy: Strategy,
    /// Also tabulate how well pre-processing preserves cumulative degradation.
    #[arg(long)]
    pub preservation: bool,
    #[command(flatten)]
    pub cost: CostArgs,
}

/// Reproducibility record embedded in or written next to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub out_dir: String,
    pub tool_version: String,
}

struct Ctx {
    out: PathBuf,
    manifest: RunManifest,
    written: Vec<String>,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn input(&mut self, path: &Path) {
        self.manifest.inputs.push(path.display().to_string());
    }

    /// Runs `write` against `<name>.partial` and renames it into place.
    fn file(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let dest = self.path(name);
        let tmp = self.path(&format!("{name}.partial"));
        match write(&tmp) {
            Ok(()) => {
                std::fs::rename(&tmp, &dest)?;
                self.written.push(name.to_string());
                Ok(())
            }
            Err(e) => {
                let _ = std::fs::remove_file(&tmp);
                Err(e)
            }
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.file(name, |p| Ok(std::fs::write(p, text)?))
    }

    /// JSON with the manifest under a `manifest` key.
    fn json_with_manifest<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        #[derive(Serialize)]
        struct WithManifest<'a, T> {
            manifest: &'a RunManifest,
            #[serde(flatten)]
            body: &'a T,
        }
        let manifest = self.manifest.clone();
        self.json(
            name,
            &WithManifest {
                manifest: &manifest,
                body: value,
            },
        )
    }

    fn finish(mut self) -> Result<Vec<PathBuf>> {
        #[derive(Serialize)]
        struct Record<'a> {
            manifest: &'a RunManifest,
            outputs: &'a [String],
        }
        let name = format!("manifest_{}.json", self.manifest.command);
        let outputs = self.written.clone();
        let manifest = self.manifest.clone();
        self.json(
            &name,
            &Record {
                manifest: &manifest,
                outputs: &outputs,
            },
        )?;
        Ok(self.written.iter().map(|n| self.out.join(n)).collect())
    }
}

/// Exit code for an error: 1 for bad input, 2 for infeasible schedules, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Parameter(_) | Error::Domain { .. } => EXIT_USAGE,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns the files it wrote.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let default_seed = match cli.command {
        Command::MakeScenario(_) => scenario::DEFAULT_SEED,
        _ => pipeline::DEFAULT_SEED,
    };
    let seed = cli.seed.unwrap_or(default_seed);
    std::fs::create_dir_all(&cli.out)?;
    let mut ctx = Ctx {
        out: cli.out.clone(),
        manifest: RunManifest {
            command: cli.command.name().to_string(),
            inputs: Vec::new(),
            seed,
            parameters: serde_json::to_value(&cli.command)?,
            out_dir: cli.out.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        written: Vec::new(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::param(format!("cannot start {:?} worker threads: {e}", cli.jobs)))?;
    let config_path = cli.config.clone();
    pool.install(|| match &cli.command {
        Command::SimulateAging(a) => simulate_aging(&mut ctx, a, seed),
        Command::Prep(a) => prep(&mut ctx, a, seed),
        Command::Train(a) => train(&mut ctx, a, seed),
        Command::Schedule(a) => schedule(&mut ctx, a, config_path.as_deref()),
        Command::Sweep(a) => sweep(&mut ctx, a, config_path.as_deref()),
        Command::MakeScenario(a) => make_scenario(&mut ctx, a, seed),
        Command::Report(a) => report(&mut ctx, a, config_path.as_deref(), seed),
    })?;
    ctx.finish()
}

fn simulate_aging(ctx: &mut Ctx, a: &SimulateArgs, seed: u64) -> Result<()> {
    let specs = if a.full_matrix {
        aging::generate_full_matrix(&a.temps, &a.c_rates, seed)?
    } else {
        aging::generate_test_matrix(&a.temps, &a.c_rates, seed)?
    };
    let options = RunOptions {
        max_rows: if a.all_rows { None } else { Some(a.max_rows) },
        ..RunOptions::default()
    };
    let oracle = OracleParams::default();
    let results = aging::run_matrix(&specs, &oracle, &options)?;
    ctx.file("aging_dataset.csv", |p| aging::write_dataset_csv(p, &results))?;
    let meta = aging::DatasetMeta {
        oracle,
        options,
        master_seed: seed,
        tests: specs,
    };
    ctx.json_with_manifest("aging_params.json", &meta)
}

fn read_aging(ctx: &mut Ctx, dataset: &Option<PathBuf>) -> Result<Vec<aging::AgingTestResult>> {
    let path = dataset.clone().unwrap_or_else(|| ctx.path("aging_dataset.csv"));
    ctx.input(&path);
    aging::read_dataset_csv(&path)
}

fn prep(ctx: &mut Ctx, a: &PrepArgs, seed: u64) -> Result<()> {
    let results = read_aging(ctx, &a.dataset)?;
    let cfg = PrepConfig {
        mode: a.mode,
        window: a.window,
        mad_k: a.mad_k,
    };
    let ds = dataprep::build_dataset(&results, &cfg)?;
    let (train, val) = dataprep::split_by_test(&ds, a.split, seed)?;
    let (_, _, stats) = dataprep::standardize(&train, &[])?;
    ctx.file(&format!("processed_{}.csv", a.mode), |p| dataprep::write_processed_csv(p, &ds))?;

    #[derive(Serialize)]
    struct Stats<'a> {
        #[serde(flatten)]
        stats: &'a dataprep::NormStats,
        train_tests: Vec<u32>,
        val_tests: Vec<u32>,
    }
    ctx.json_with_manifest(
        &format!("norm_stats_{}.json", a.mode),
        &Stats {
            stats: &stats,
            train_tests: train.groups.iter().map(|g| g.test_id).collect(),
            val_tests: val.groups.iter().map(|g| g.test_id).collect(),
        },
    )
}

/// Batch sizes tried by `train --batch-sweep`.
pub const BATCH_SWEEP: [usize; 8] = [16, 32, 64, 128, 256, 512, 1024, 2048];

fn train(ctx: &mut Ctx, a: &TrainArgs, seed: u64) -> Result<()> {
    let results = read_aging(ctx, &a.dataset)?;
    let config = TrainConfig {
        batch_size: a.batch_size,
        max_epochs: a.epochs,
        learning_rate: a.learning_rate,
        decay_factor: a.decay_factor,
        decay_period: a.decay_period,
        seed,
        shuffle: a.shuffle,
        ..TrainConfig::default()
    };
    if a.batch_sweep {
        let fits: Vec<Result<pipeline::SurrogateFit>> = BATCH_SWEEP
            .par_iter()
            .map(|&b| {
                let c = TrainConfig {
                    batch_size: b,
                    ..config.clone()
                };
                pipeline::fit_surrogate(&results, a.mode, &c, seed, a.split)
            })
            .collect();
        return ctx.file("batch_sweep.csv", |p| {
            let mut w = csv::Writer::from_path(p)?;
            w.write_record(["batch_size", "best_epoch", "train_mse", "val_mse", "val_accuracy"])?;
            for (b, fit) in BATCH_SWEEP.iter().zip(fits) {
                let fit = fit?;
                let best = &fit.report.epochs[fit.report.best_epoch - 1];
                w.write_record([
                    b.to_string(),
                    fit.report.best_epoch.to_string(),
                    best.train_mse.to_string(),
                    best.val_mse.to_string(),
                    fit.val_accuracy.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        });
    }
    let fit = pipeline::fit_surrogate(&results, a.mode, &config, seed, a.split)?;
    ctx.json_with_manifest(&format!("model_{}.json", a.mode), &fit.model)?;
    ctx.file(&format!("train_report_{}.csv", a.mode), |p| nnbd::write_report_csv(p, &fit.report))?;

    #[derive(Serialize)]
    struct Summary<'a> {
        mode: Mode,
        val_accuracy: f64,
        tolerance: f64,
        best_epoch: usize,
        train_rows: usize,
        val_rows: usize,
        train_tests: &'a [u32],
        val_tests: &'a [u32],
        config: &'a TrainConfig,
    }
    ctx.json_with_manifest(
        &format!("train_summary_{}.json", a.mode),
        &Summary {
            mode: a.mode,
            val_accuracy: fit.val_accuracy,
            tolerance: nnbd::DEFAULT_TOLERANCE,
            best_epoch: fit.report.best_epoch,
            train_rows: fit.train_rows,
            val_rows: fit.val_rows,
            train_tests: &fit.train_tests,
            val_tests: &fit.val_tests,
            config: &config,
        },
    )
}

fn load_config(ctx: &mut Ctx, path: Option<&Path>) -> Result<MicrogridConfig> {
    match path {
        Some(p) => {
            ctx.input(p);
            mds::read_scenario(p)
        }
        None => Ok(scenario::bundled()),
    }
}

fn load_model(ctx: &mut Ctx, cost: &CostArgs) -> Result<DegradationModel> {
    let path = cost.model.clone().unwrap_or_else(|| ctx.path("model_regressed.json"));
    ctx.input(&path);
    let model = nnbd::load_model(&path)?;
    if !model.is_trained() {
        return Err(Error::State(format!("{} holds an untrained model", path.display())));
    }
    Ok(model)
}

fn cost_params(cost: &CostArgs, e_max: f64) -> DegradationCostParams {
    DegradationCostParams {
        capital: cost.unit_price * e_max,
        salvage: cost.salvage,
        soh_eol: cost.soh_eol,
    }
}

fn nnodh_config(cost: &CostArgs, strategy: Strategy, alpha: f64) -> NnodhConfig {
    NnodhConfig {
        max_iterations: cost.max_iterations,
        ..NnodhConfig::new(strategy, alpha)
    }
}

/// The outcome of one scheduling pipeline.
struct Outcome {
    trace: Vec<IterationRecord>,
    best_index: usize,
    stop_reason: Option<StopReason>,
    metrics: Metrics,
    solution: ScheduleSolution,
}

fn single_solve(
    config: &MicrogridConfig,
    model: &DegradationModel,
    cost: &DegradationCostParams,
    extra: ExtraConstraints,
) -> Result<Outcome> {
    let sol = mds::solve_mds(config, &extra)?;
    let eval = cbup::evaluate_schedule(config, &sol, model, cost)?;
    let trace = vec![IterationRecord {
        index: 1,
        throughput: sol.throughput(config.dt),
        bd: eval.bd,
        operation_cost: sol.operation_cost,
        degradation_cost: eval.cost,
        total_cost: sol.operation_cost + eval.cost,
        cycles: eval.cycles.len(),
        constraints: extra,
    }];
    Ok(Outcome {
        metrics: nnodh::compute_metrics(&trace, 1)?,
        trace,
        best_index: 1,
        stop_reason: None,
        solution: sol,
    })
}

fn plain_linear_rate(config: &MicrogridConfig, model: &DegradationModel, cost: &DegradationCostParams) -> Result<f64> {
    let plain = mds::solve_mds(config, &ExtraConstraints::default())?;
    let thr = plain.throughput(config.dt);
    if thr <= nnodh::ZERO_THROUGHPUT {
        return Ok(0.0);
    }
    Ok(cbup::evaluate_schedule(config, &plain, model, cost)?.cost / thr)
}

fn run_pipeline(
    config: &MicrogridConfig,
    model: &DegradationModel,
    pipeline: Pipeline,
    a: &ScheduleArgs,
) -> Result<Outcome> {
    let cost = cost_params(&a.cost, config.bess.e_max);
    if let Some(strategy) = pipeline.strategy() {
        let r = nnodh::run(config, model, &nnodh_config(&a.cost, strategy, a.cost.alpha), &cost)?;
        return Ok(Outcome {
            best_index: r.best_index,
            stop_reason: Some(r.stop_reason),
            metrics: r.metrics,
            solution: r.best_solution,
            trace: r.trace,
        });
    }
    let extra = match pipeline {
        Pipeline::CycleLimit => ExtraConstraints {
            cycle_transition_limit: Some(a.cycle_limit),
            ..Default::default()
        },
        Pipeline::LinearBdc => ExtraConstraints {
            linear_bdc_rate: Some(match a.linear_rate {
                Some(r) => r,
                None => plain_linear_rate(config, model, &cost)?,
            }),
            ..Default::default()
        },
        _ => ExtraConstraints::default(),
    };
    single_solve(config, model, &cost, extra)
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    pipeline: &'a str,
    iterations: usize,
    best_index: usize,
    stop_reason: Option<StopReason>,
    metrics: Metrics,
    best: &'a IterationRecord,
}

fn write_outcome(ctx: &mut Ctx, config: &MicrogridConfig, model: &DegradationModel, name: &str, o: &Outcome, unit: &CostArgs) -> Result<()> {
    let cost = cost_params(unit, config.bess.e_max);
    let eval = cbup::evaluate_schedule(config, &o.solution, model, &cost)?;
    ctx.file(&format!("schedule_{name}.csv"), |p| mds::write_solution_csv(p, config, &o.solution))?;
    ctx.file(&format!("cycles_{name}.csv"), |p| cbup::write_cycles_csv(p, &eval.cycles, &eval.predicted))?;
    ctx.file(&format!("trace_{name}.csv"), |p| nnodh::write_trace_csv(p, &o.trace))?;
    ctx.json_with_manifest(
        &format!("metrics_{name}.json"),
        &MetricsFile {
            pipeline: name,
            iterations: o.trace.len(),
            best_index: o.best_index,
            stop_reason: o.stop_reason,
            metrics: o.metrics,
            best: &o.trace[o.best_index - 1],
        },
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One column of the side-by-side strategy table.
type Column = fn(&Outcome) -> String;

fn schedule(ctx: &mut Ctx, a: &ScheduleArgs, config_path: Option<&Path>) -> Result<()> {
    let config = load_config(ctx, config_path)?;
    let model = load_model(ctx, &a.cost)?;
    if !a.all_strategies {
        let o = run_pipeline(&config, &model, a.pipeline, a)?;
        return write_outcome(ctx, &config, &model, a.pipeline.name(), &o, &a.cost);
    }
    let pipelines = [Pipeline::NnodhBcl, Pipeline::NnodhPbcl, Pipeline::NnodhBrl, Pipeline::NnodhAll];
    let outcomes: Vec<Outcome> = pipelines
        .par_iter()
        .map(|&p| run_pipeline(&config, &model, p, a))
        .collect::<Result<_>>()?;
    for (p, o) in pipelines.iter().zip(&outcomes) {
        write_outcome(ctx, &config, &model, p.name(), o, &a.cost)?;
    }
    ctx.file("strategies.csv", |path| {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["metric".to_string()];
        header.extend(Strategy::EVERY.iter().map(|s| s.name().to_string()));
        w.write_record(&header)?;
        let rows: [(&str, Column); 10] = [
            ("iterations", |o| o.trace.len().to_string()),
            ("best_iteration", |o| o.best_index.to_string()),
            ("operation_cost", |o| o.trace[o.best_index - 1].operation_cost.to_string()),
            ("degradation_cost", |o| o.trace[o.best_index - 1].degradation_cost.to_string()),
            ("total_cost", |o| o.trace[o.best_index - 1].total_cost.to_string()),
            ("bd", |o| o.trace[o.best_index - 1].bd.to_string()),
            ("tcr_pct", |o| o.metrics.tcr.to_string()),
            ("dcr_pct", |o| fmt_opt(o.metrics.dcr)),
            ("oci_pct", |o| fmt_opt(o.metrics.oci)),
            ("stop_reason", |o| o.stop_reason.map(|s| s.name()).unwrap_or_default().to_string()),
        ];
        for (name, f) in rows.iter() {
            let mut rec = vec![name.to_string()];
            rec.extend(outcomes.iter().map(f));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })
}

struct SweepPoint {
    labels: Vec<String>,
    config: MicrogridConfig,
    alpha: f64,
    unit_price: f64,
}

fn sweep(ctx: &mut Ctx, a: &SweepArgs, config_path: Option<&Path>) -> Result<()> {
    let base = load_config(ctx, config_path)?;
    let model = load_model(ctx, &a.cost)?;
    let (label_names, points): (Vec<&str>, Vec<SweepPoint>) = match a.kind {
        SweepKind::Borf => (
            vec!["alpha"],
            a.alphas
                .iter()
                .map(|&alpha| SweepPoint {
                    labels: vec![alpha.to_string()],
                    config: base.clone(),
                    alpha,
                    unit_price: a.cost.unit_price,
                })
                .collect(),
        ),
        SweepKind::ResPenetration => (
            vec!["penetration"],
            a.penetrations
                .iter()
                .map(|&p| {
                    Ok(SweepPoint {
                        labels: vec![p.to_string()],
                        config: scenario::with_penetration(&base, p)?,
                        alpha: a.cost.alpha,
                        unit_price: a.cost.unit_price,
                    })
                })
                .collect::<Result<_>>()?,
        ),
        SweepKind::SizePrice => (
            vec!["size_kwh", "unit_price"],
            a.sizes
                .iter()
                .flat_map(|&s| a.prices.iter().map(move |&u| (s, u)))
                .map(|(s, u)| {
                    Ok(SweepPoint {
                        labels: vec![s.to_string(), u.to_string()],
                        config: scenario::with_battery_size(&base, s)?,
                        alpha: a.cost.alpha,
                        unit_price: u,
                    })
                })
                .collect::<Result<_>>()?,
        ),
    };
    if points.is_empty() {
        return Err(Error::param("the sweep grid is empty"));
    }
    let results: Vec<(Result<nnodh::NnodhResult>, f64)> = points
        .par_iter()
        .map(|pt| {
            let t0 = Instant::now();
            let cost = DegradationCostParams {
                capital: pt.unit_price * pt.config.bess.e_max,
                salvage: a.cost.salvage,
                soh_eol: a.cost.soh_eol,
            };
            let r = nnodh::run(&pt.config, &model, &nnodh_config(&a.cost, a.strategy, pt.alpha), &cost);
            (r, t0.elapsed().as_secs_f64())
        })
        .collect();
    ctx.file(&format!("sweep_{}.csv", a.kind.name()), |p| {
        let mut w = csv::Writer::from_path(p)?;
        let mut header: Vec<String> = label_names.iter().map(|s| s.to_string()).collect();
        header.extend(
            [
                "status",
                "iterations",
                "best_iteration",
                "total_cost",
                "operation_cost",
                "degradation_cost",
                "tcr_pct",
                "dcr_pct",
                "oci_pct",
                "stop_reason",
                "error",
            ]
            .map(String::from),
        );
        if a.timing {
            header.push("wall_time_s".into());
        }
        w.write_record(&header)?;
        for (pt, (r, secs)) in points.iter().zip(&results) {
            let mut rec = pt.labels.clone();
            match r {
                Ok(r) => {
                    let b = r.best();
                    rec.extend([
                        "ok".to_string(),
                        r.iterations().to_string(),
                        r.best_index.to_string(),
                        b.total_cost.to_string(),
                        b.operation_cost.to_string(),
                        b.degradation_cost.to_string(),
                        r.metrics.tcr.to_string(),
                        fmt_opt(r.metrics.dcr),
                        fmt_opt(r.metrics.oci),
                        r.stop_reason.name().to_string(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    rec.push("failed".into());
                    rec.extend(std::iter::repeat_n(String::new(), 9));
                    rec.push(e.to_string());
                }
            }
            if a.timing {
                rec.push(format!("{secs:.3}"));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn make_scenario(ctx: &mut Ctx, a: &MakeScenarioArgs, seed: u64) -> Result<()> {
    let config = scenario::make_scenario(&scenario::ScenarioParams {
        seed,
        penetration: a.penetration,
        bess_kwh: a.bess_kwh,
    })?;
    if a.name.is_empty() || a.name.contains(['/', '\\']) {
        return Err(Error::param("scenario name must be a plain file stem"));
    }
    // the scenario JSON refers to its profile CSV by name, so both are
    // written under their final names inside a scratch directory first
    let scratch = ctx.path(&format!("{}.partial", a.name));
    std::fs::create_dir_all(&scratch)?;
    let written = mds::write_scenario(&scratch, &a.name, &config);
    let json = format!("{}.json", a.name);
    let csv_name = format!("{}_profiles.csv", a.name);
    let moved = written.and_then(|_| {
        for name in [&csv_name, &json] {
            std::fs::rename(scratch.join(name), ctx.path(name))?;
        }
        Ok(())
    });
    let _ = std::fs::remove_dir_all(&scratch);
    moved?;
    ctx.written.push(csv_name);
    ctx.written.push(json);
    Ok(())
}

fn report(ctx: &mut Ctx, a: &ReportArgs, config_path: Option<&Path>, seed: u64) -> Result<()> {
    let config = load_config(ctx, config_path)?;
    let model = load_model(ctx, &a.cost)?;
    let cost = cost_params(&a.cost, config.bess.e_max);
    let settings = nnodh::BenchmarkSettings {
        nnodh: nnodh_config(&a.cost, a.strategy, a.cost.alpha),
        cycle_limit: a.cycle_limit,
        linear_rate: a.linear_rate,
        oracle: OracleParams::default(),
    };
    let cmp = nnodh::compare_benchmarks(&config, &model, &cost, &settings)?;
    ctx.file("benchmarks.csv", |p| {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record([
            "model",
            "operation_cost",
            "throughput_kwh",
            "daily_bd",
            "oracle_bd",
            "daily_degradation_cost",
            "annual_degradation_cost",
            "annual_saving",
            "lifetime_years",
            "total_cost",
        ])?;
        for r in &cmp.rows {
            w.write_record([
                r.model.name().to_string(),
                r.operation_cost.to_string(),
                r.throughput.to_string(),
                r.daily_bd.to_string(),
                r.oracle_bd.to_string(),
                r.daily_degradation_cost.to_string(),
                r.annual_degradation_cost.to_string(),
                r.annual_saving.to_string(),
                fmt_opt(r.lifetime_years),
                r.total_cost.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;

    #[derive(Serialize)]
    struct Report<'a> {
        linear_rate: f64,
        rows: &'a [nnodh::BenchmarkRow],
        nnodh_best_index: usize,
        nnodh_iterations: usize,
        nnodh_metrics: Metrics,
    }
    ctx.json_with_manifest(
        "report.json",
        &Report {
            linear_rate: cmp.linear_rate,
            rows: &cmp.rows,
            nnodh_best_index: cmp.nnodh.best_index,
            nnodh_iterations: cmp.nnodh.iterations(),
            nnodh_metrics: cmp.nnodh.metrics,
        },
    )?;

    if a.preservation {
        let table = pipeline::preservation_table(
            &pipeline::reference_aging_spec(seed),
            &OracleParams::default(),
            &pipeline::PRESERVATION_CHECKPOINTS,
        )?;
        ctx.file("preservation.csv", |p| {
            let mut w = csv::Writer::from_path(p)?;
            for row in &table {
                w.serialize(row)?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}
