//! Population-size sweeps: simulate each policy on the `[1/N, ..., 1]`
//! channel grid and put the result next to the analytic bounds.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, Population};
use crate::error::{Error, Result};
use crate::harq::HarqModel;
use crate::moments::MomentMode;
use crate::policies::PolicyKind;
use crate::rng::derive_seed;
use crate::sim::{self, SimConfig};

pub const CSV_HEADER: &str =
    "N,policy,model,lambda,seed,sim_aoi,lower_bound,rrp_exact,rrp_upper,sim_norm,upper_norm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::param("format", format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: HarqModel,
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
    pub slots: u64,
    pub seed: u64,
    pub policies: Vec<PolicyKind>,
    /// Explicit series terms in the exponential-decay `E[K]` bound behind
    /// `rrp_upper`.
    pub truncation: u32,
}

impl SweepSpec {
    /// Default grid: `N = 3..=100`, `10^6` slots, seed 1, RR-P.
    pub fn standard(model: HarqModel) -> Self {
        SweepSpec {
            model,
            n_min: 3,
            n_max: 100,
            n_step: 1,
            slots: 1_000_000,
            seed: 1,
            policies: vec![PolicyKind::RoundRobinPersistent],
            truncation: crate::moments::DEFAULT_TRUNCATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.check()?;
        if self.n_min < 1 {
            return Err(Error::param("n_min", "need at least one terminal"));
        }
        if self.n_max < self.n_min {
            return Err(Error::param(
                "n_max",
                format!("{} is below n_min = {}", self.n_max, self.n_min),
            ));
        }
        if self.n_step < 1 {
            return Err(Error::param("n_step", "must be at least 1"));
        }
        if self.slots < 1 {
            return Err(Error::param("slots", "must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::param("policies", "no policy selected"));
        }
        if self.truncation < 1 {
            return Err(Error::param("truncation", "must be at least 1"));
        }
        Ok(())
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> {
        (self.n_min..=self.n_max).step_by(self.n_step.max(1))
    }
}

/// Run index of the point `(N, policy)`; independent of the order in which
/// policies were requested.
pub fn point_index(n: usize, policy: PolicyKind) -> u64 {
    let k = PolicyKind::ALL
        .iter()
        .position(|&p| p == policy)
        .unwrap_or(0);
    ((n as u64) << 8) | k as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub policy: PolicyKind,
    pub model: String,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub sim_aoi: f64,
    pub lower_bound: f64,
    pub rrp_exact: f64,
    pub rrp_upper: f64,
    pub sim_norm: f64,
    pub upper_norm: f64,
    /// Batch-means standard error of `sim_aoi`; not part of the table.
    #[serde(skip)]
    pub sim_std_err: f64,
}

pub fn run_point(spec: &SweepSpec, n: usize, policy: PolicyKind) -> Result<SweepRow> {
    let pop = Population::linear_grid(spec.model, n)?;
    let seed = derive_seed(spec.seed, point_index(n, policy));
    let result = sim::run(&SimConfig::new(&pop, policy, spec.slots, seed))?;
    let lower_bound = bounds::aoi_lower_bound(&pop);
    let rrp_upper = bounds::rrp_upper(
        &pop,
        MomentMode::PreferBound {
            truncation: spec.truncation,
        },
    )?;
    Ok(SweepRow {
        n,
        policy,
        model: spec.model.label().to_string(),
        lambda: spec.model.lambda(),
        seed: spec.seed,
        sim_aoi: result.avg_aoi,
        lower_bound,
        rrp_exact: bounds::rrp_exact(&pop),
        rrp_upper,
        sim_norm: result.avg_aoi / lower_bound,
        upper_norm: rrp_upper / lower_bound,
        sim_std_err: result.aoi_std_err,
    })
}

/// All `(N, policy)` points, evaluated in parallel and returned sorted by `N`
/// and then by the requested policy order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points: Vec<(usize, usize)> = spec
        .sizes()
        .flat_map(|n| (0..spec.policies.len()).map(move |k| (n, k)))
        .collect();
    let mut rows = points
        .par_iter()
        .map(|&(n, k)| run_point(spec, n, spec.policies[k]).map(|row| (n, k, row)))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|&(n, k, _)| (n, k));
    Ok(rows.into_iter().map(|(_, _, row)| row).collect())
}

pub fn write_rows<W: Write>(rows: &[SweepRow], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                w.write_record(CSV_HEADER.split(','))?;
            }
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
