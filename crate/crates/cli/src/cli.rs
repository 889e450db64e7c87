//! Command-line surface. Every flag is optional so that unset flags fall
//! through to the config file and then to the experiment defaults.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{file_workers, load_file, resolve, OutputSpec};
use crate::experiments::*;
use crate::record::ResultRecord;

#[derive(Debug, Parser)]
#[command(name = "hwq", version, about = "Heavy-tailed many-server queue laboratory")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "HWQ_WORKERS")]
    pub workers: Option<usize>,
    /// TOML file with top-level defaults and per-experiment tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form bounds and constants.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Monte Carlo of the queue and of the comparison processes.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Renewal-function and variance bounds against simulation.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Quantiles of the scaled queue across several n.
    ScalingStudy(Flags<ScalingFlags>),
    /// Log-tail slope of a sample with a bootstrap band.
    LdSlope(Flags<LdSlopeFlags>),
    /// Lower curve, queue and upper supremum at the same thresholds.
    Dominance(Flags<DominanceFlags>),
    /// GI/D/n against the stable-walk supremum and the Levy tail.
    ReedCompare(Flags<ReedFlags>),
}

#[derive(Debug, Subcommand)]
pub enum BoundCmd {
    Eval(Flags<BoundEvalFlags>),
    Constants(Flags<BoundConstantsFlags>),
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    Queue(Flags<QueueFlags>),
    BoundProcess(Flags<ProcessFlags>),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    Renewal(Flags<RenewalFlags>),
}

/// Experiment flags plus the shared output flags.
#[derive(Debug, Args)]
pub struct Flags<F: Args> {
    #[command(flatten)]
    pub params: F,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputFlags {
    /// Print the record as JSON instead of the text report.
    #[arg(long)]
    pub json: bool,
    /// Write the table as CSV (and a matching .dat file).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Write the record as JSON to this path.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json_out: Option<PathBuf>,
}

macro_rules! flags {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Args, Serialize)]
        pub struct $name {
            $(
                $(#[$fm])*
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

flags! { QueueFlags {
    #[arg(long)] n: usize,
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] alpha: f64,
    /// e.g. `exp`, `pareto(alpha=1.5)`, `det`, `table(file=...)`.
    #[arg(long)] arrival: String,
    #[arg(long)] service: String,
    #[arg(long)] seed: u64,
    #[arg(long)] reps: usize,
    #[arg(long)] horizon: f64,
    #[arg(long)] warmup: f64,
    /// `empty` or `stationary`.
    #[arg(long)] initial: String,
    #[arg(long)] max_doublings: u32,
    #[arg(long, value_delimiter = ',')] x: Vec<f64>,
    #[arg(long)] scale: f64,
    #[arg(long)] trace: PathBuf,
    #[arg(long)] trace_horizon: f64,
}}

flags! { ProcessFlags {
    #[arg(long, value_enum)] kind: ProcessKind,
    /// `full`, `arrival-part` or `service-part`.
    #[arg(long)] part: String,
    #[arg(long)] n: usize,
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] alpha: f64,
    #[arg(long)] ca: f64,
    #[arg(long)] arrival: String,
    #[arg(long)] service: String,
    #[arg(long)] seed: u64,
    #[arg(long)] reps: usize,
    #[arg(long, value_delimiter = ',')] x: Vec<f64>,
    #[arg(long)] steps: u64,
    #[arg(long)] horizon_max: f64,
    #[arg(long)] grid_points: usize,
    #[arg(long)] out: PathBuf,
}}

flags! { BoundEvalFlags {
    #[arg(long, value_enum)] which: BoundKind,
    #[arg(long, value_delimiter = ',')] x: Vec<f64>,
    #[arg(long)] eps: f64,
    #[arg(long)] frac_moment: f64,
    #[arg(long)] laplace_one: f64,
    #[arg(long)] sigma_sq_a: f64,
    #[arg(long)] arrival: String,
    #[arg(long)] service: String,
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] n: f64,
    #[arg(long)] alpha: f64,
    #[arg(long)] alpha_s: f64,
    #[arg(long)] ca: f64,
    #[arg(long)] cs: f64,
    #[arg(long, value_delimiter = ',')] y: Vec<f64>,
    #[arg(long)] c1: f64,
    #[arg(long)] c2: f64,
    #[arg(long)] r1: f64,
    #[arg(long)] s1: f64,
    #[arg(long)] r2: f64,
    #[arg(long)] nu: f64,
    #[arg(long)] p: f64,
    #[arg(long)] theta: f64,
    #[arg(long)] laplace_theta: f64,
    #[arg(long)] k: f64,
    #[arg(long, value_delimiter = ',')] t: Vec<f64>,
}}

flags! { BoundConstantsFlags {
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] alpha: f64,
    #[arg(long)] alpha_s: f64,
    #[arg(long)] ca: f64,
    #[arg(long)] cs: f64,
}}

flags! { RenewalFlags {
    #[arg(long)] spec: String,
    #[arg(long, value_delimiter = ',')] t: Vec<f64>,
    #[arg(long)] reps: usize,
    #[arg(long)] variance_reps: usize,
    #[arg(long)] eps: f64,
    #[arg(long)] seed: u64,
}}

flags! { ScalingFlags {
    #[arg(long, value_delimiter = ',')] n_grid: Vec<usize>,
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] alpha: f64,
    #[arg(long)] arrival: String,
    #[arg(long)] service: String,
    #[arg(long)] quantile: f64,
    #[arg(long)] reps: usize,
    #[arg(long)] horizon_factor: f64,
    #[arg(long)] initial: String,
    #[arg(long)] max_spread: f64,
    #[arg(long)] seed: u64,
}}

flags! { LdSlopeFlags {
    /// Sample file, one value per line.
    #[arg(long)] input: PathBuf,
    #[arg(long, value_enum)] source: LdSource,
    #[arg(long)] gamma: f64,
    #[arg(long)] samples: usize,
    #[arg(long)] boot: usize,
    #[arg(long)] p_lo: f64,
    #[arg(long)] p_hi: f64,
    #[arg(long)] points: usize,
    #[arg(long)] rate: f64,
    #[arg(long)] shape: f64,
    #[arg(long)] scale: f64,
    #[arg(long)] alpha: f64,
    #[arg(long)] ca: f64,
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] n: usize,
    #[arg(long)] arrival: String,
    #[arg(long)] service: String,
    #[arg(long, allow_hyphen_values = true)] target: f64,
    #[arg(long)] tolerance: f64,
    #[arg(long)] seed: u64,
}}

flags! { DominanceFlags {
    #[arg(long)] n: usize,
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] alpha: f64,
    #[arg(long)] arrival: String,
    #[arg(long)] service: String,
    #[arg(long, value_delimiter = ',')] x: Vec<f64>,
    #[arg(long)] queue_reps: usize,
    #[arg(long)] upper_reps: usize,
    #[arg(long)] lower_reps: usize,
    #[arg(long)] grid_points: usize,
    #[arg(long)] horizon: f64,
    #[arg(long)] initial: String,
    #[arg(long)] seed: u64,
}}

flags! { ReedFlags {
    #[arg(long)] n: usize,
    #[arg(long)] alpha: f64,
    #[arg(long = "B")] #[serde(rename = "B")] b: f64,
    #[arg(long)] arrival: String,
    #[arg(long)] reps: usize,
    #[arg(long)] samples_per_rep: usize,
    #[arg(long)] warmup_cycles: usize,
    #[arg(long)] spacing: usize,
    #[arg(long)] walk_reps: usize,
    #[arg(long, value_delimiter = ',')] x: Vec<f64>,
    #[arg(long)] max_ks: f64,
    #[arg(long)] seed: u64,
}}

/// A record together with where it should be written.
pub struct Outcome {
    pub record: ResultRecord,
    pub output: OutputSpec,
}

fn go<P, F>(
    file: Option<&toml::Table>,
    section: &str,
    flags: &Flags<F>,
    run: impl FnOnce(&P, serde_json::Value) -> Result<ResultRecord>,
) -> Result<Outcome>
where
    P: DeserializeOwned + Serialize,
    F: Args + Serialize,
{
    let eff = resolve::<P, _, _>(file, section, &flags.params, &flags.output)?;
    let record = run(&eff.params, eff.echo)?;
    Ok(Outcome { record, output: eff.output })
}

/// Loads the config, sizes the worker pool and runs the chosen experiment.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let file = cli.config.as_deref().map(load_file).transpose()?;
    let file = file.as_ref();
    let workers = cli
        .workers
        .or_else(|| file_workers(file))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().context("building worker pool")?;
    pool.install(|| match &cli.command {
        Command::Bound(BoundCmd::Eval(f)) => go(file, "bound-eval", f, run_bound_eval),
        Command::Bound(BoundCmd::Constants(f)) => go(file, "bound-constants", f, run_bound_constants),
        Command::Simulate(SimulateCmd::Queue(f)) => go(file, "queue", f, run_simulate_queue),
        Command::Simulate(SimulateCmd::BoundProcess(f)) => go(file, "bound-process", f, run_bound_process),
        Command::Verify(VerifyCmd::Renewal(f)) => go(file, "renewal", f, run_verify_renewal),
        Command::ScalingStudy(f) => go(file, "scaling", f, run_scaling_study),
        Command::LdSlope(f) => go(file, "ld-slope", f, run_ld_slope),
        Command::Dominance(f) => go(file, "dominance", f, run_dominance),
        Command::ReedCompare(f) => go(file, "reed-compare", f, run_reed_compare),
    })
}

/// Prints and writes the record; returns the process exit code.
pub fn emit(outcome: &Outcome) -> Result<i32> {
    let Outcome { record, output } = outcome;
    if output.json {
        println!("{}", record.to_json());
    } else {
        print!("{}", record.render());
    }
    if let Some(path) = &output.csv {
        record.write_csv(path)?;
    }
    if let Some(path) = &output.json_out {
        std::fs::write(path, record.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(record.exit_code())
}
