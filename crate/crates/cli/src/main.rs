use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use harq_aoi::bounds::{self, BoundsReport, Population};
use harq_aoi::policies::PolicyConfig;
use harq_aoi::sim::{self, SimConfig};
use harq_aoi::sweep::{self, SweepSpec};
use harq_aoi::{Exactness, HarqModel, MomentMode, OutputFormat, PolicyKind};

#[derive(Parser)]
#[command(
    name = "harq-aoi",
    version,
    about = "Age-of-information scheduling over HARQ channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic lower and upper bounds for one population.
    Bounds(BoundsArgs),
    /// Simulate one policy on one population.
    Simulate(SimulateArgs),
    /// Sweep the population size and write one row per (N, policy).
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Fading,
    Fbl,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

impl From<TableFormat> for OutputFormat {
    fn from(f: TableFormat) -> Self {
        match f {
            TableFormat::Csv => OutputFormat::Csv,
            TableFormat::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct ModelOpts {
    #[arg(long, value_enum, default_value = "fading")]
    model: ModelArg,
    /// Per-retransmission decay factor of the fbl model.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
}

impl ModelOpts {
    fn model(&self) -> Result<HarqModel> {
        Ok(match self.model {
            ModelArg::Fading => HarqModel::ReciprocalDecay,
            ModelArg::Fbl => HarqModel::exponential(self.lambda)?,
        })
    }
}

#[derive(Args)]
struct PopulationOpts {
    #[command(flatten)]
    model: ModelOpts,
    /// Number of terminals on the grid p0 = 1/N, 2/N, ..., 1.
    #[arg(long, default_value_t = 10, conflicts_with = "p0")]
    n: usize,
    /// Explicit first-attempt error probabilities, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    p0: Vec<f64>,
}

impl PopulationOpts {
    fn population(&self) -> Result<Population> {
        let model = self.model.model()?;
        let pop = if self.p0.is_empty() {
            Population::linear_grid(model, self.n)?
        } else {
            Population::from_p0(model, &self.p0)?
        };
        Ok(pop)
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    population: PopulationOpts,
    /// Explicit series terms in the fbl E[K] bound.
    #[arg(long, default_value_t = 4)]
    r_trunc: u32,
    /// Use exact moments for the RR-P upper value instead of the closed-form bounds.
    #[arg(long)]
    exact_upper: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    population: PopulationOpts,
    #[arg(long, default_value = "rrp")]
    policy: PolicyKind,
    /// Sampling weights of the rand policy, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    weights: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    slots: u64,
    #[arg(long, default_value_t = 0)]
    warmup: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    #[arg(long, default_value_t = 100)]
    n_max: usize,
    #[arg(long, default_value_t = 1)]
    n_step: usize,
    #[arg(long, default_value_t = 1_000_000)]
    slots: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Repeat to sweep several policies.
    #[arg(long = "policy", default_value = "rrp")]
    policies: Vec<PolicyKind>,
    #[arg(long, default_value_t = 4)]
    r_trunc: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn exactness(e: Exactness) -> &'static str {
    match e {
        Exactness::Exact => "exact",
        Exactness::UpperBound => "upper bound",
    }
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let pop = args.population.population()?;
    let mode = if args.exact_upper {
        MomentMode::PreferExact
    } else {
        MomentMode::PreferBound {
            truncation: args.r_trunc,
        }
    };
    let report = BoundsReport::new(&pop, mode)?;
    let mut out = open_output(args.out.as_ref())?;
    match args.format {
        ReportFormat::Json => {
            let value = serde_json::json!({
                "model": pop.model(),
                "p0": pop.channels().iter().map(|c| c.p0).collect::<Vec<_>>(),
                "report": report,
            });
            serde_json::to_writer_pretty(&mut out, &value)?;
            writeln!(out)?;
        }
        ReportFormat::Text => {
            writeln!(out, "model             {}", pop.model())?;
            writeln!(out, "terminals         {}", report.terminals)?;
            writeln!(out, "lower_bound       {:.6}  (exact)", report.lower_bound)?;
            writeln!(out, "lb_relaxed        {:.6}  (exact)", report.lb_relaxed)?;
            writeln!(out, "rrp_exact         {:.6}  (exact)", report.rrp_exact)?;
            writeln!(
                out,
                "rrp_upper         {:.6}  ({})",
                report.rrp_upper,
                exactness(report.upper_exactness)
            )?;
            writeln!(
                out,
                "asymptotic_slope  {:.6}  (exact)",
                report.asymptotic_slope
            )?;
            writeln!(
                out,
                "gap_from_moments  {:.6}  (exact)",
                report.gap_from_moments
            )?;
            writeln!(
                out,
                "gamma_bound       {:.6}  (upper bound)",
                report.gamma_bound
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let pop = args.population.population()?;
    let policy = PolicyConfig {
        kind: args.policy,
        weights: (!args.weights.is_empty()).then(|| args.weights.clone()),
    };
    let mut config = SimConfig::new(&pop, policy, args.slots, args.seed);
    config.warmup = args.warmup;
    let result = sim::run(&config)?;
    let lower_bound = bounds::aoi_lower_bound(&pop);
    let check = sim::inter_delivery_check(&result);
    let mut out = open_output(args.out.as_ref())?;
    match args.format {
        ReportFormat::Json => {
            let check = match &check {
                Ok(v) => serde_json::json!({ "value": v }),
                Err(e) => serde_json::json!({ "error": e.to_string() }),
            };
            let value = serde_json::json!({
                "avg_aoi": result.avg_aoi,
                "aoi_std_err": result.aoi_std_err,
                "window": result.window,
                "seed": result.seed,
                "lower_bound": lower_bound,
                "inter_delivery_bound": check,
                "terminals": result.terminals,
            });
            serde_json::to_writer_pretty(&mut out, &value)?;
            writeln!(out)?;
        }
        ReportFormat::Text => {
            writeln!(out, "policy        {}", args.policy)?;
            writeln!(out, "model         {}", pop.model())?;
            writeln!(
                out,
                "slots         {} (window {})",
                args.slots, result.window
            )?;
            writeln!(out, "seed          {}", result.seed)?;
            writeln!(
                out,
                "avg_aoi       {:.6} +- {:.6}",
                result.avg_aoi, result.aoi_std_err
            )?;
            writeln!(out, "lower_bound   {lower_bound:.6}")?;
            match &check {
                Ok(v) => writeln!(out, "inter_delivery_bound  {v:.6}")?,
                Err(e) => writeln!(out, "inter_delivery_bound  unavailable: {e}")?,
            }
            writeln!(out)?;
            writeln!(
                out,
                "terminal  p0        deliveries  attempts  mean_gap    mean_gap_sq"
            )?;
            for (i, (t, c)) in result.terminals.iter().zip(pop.channels()).enumerate() {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
                writeln!(
                    out,
                    "{:<9} {:<9.4} {:<11} {:<9} {:<11} {}",
                    i + 1,
                    c.p0,
                    t.deliveries,
                    t.attempts,
                    fmt(t.inter_delivery_mean),
                    fmt(t.inter_delivery_sq_mean)
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let spec = SweepSpec {
        model: args.model.model()?,
        n_min: args.n_min,
        n_max: args.n_max,
        n_step: args.n_step,
        slots: args.slots,
        seed: args.seed,
        policies: args.policies.clone(),
        truncation: args.r_trunc,
    };
    let rows = sweep::run_sweep(&spec)?;
    let out = open_output(args.out.as_ref())?;
    sweep::write_rows(&rows, args.format.into(), out)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
