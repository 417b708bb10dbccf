//! System-level AoI results for a terminal population.
//!
//! Notation used below: `E[K_n]` is the mean attempt count of terminal `n`,
//! `eta = sum_n E[K_n]` is the expected length of one persistent round-robin
//! cycle, and `mean(x)` is the average of `x` over the `N` terminals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harq::{check_lambda, validate, HarqModel, TerminalChannel};
use crate::moments::{self, Exactness, MomentMode, MomentSet};

/// A HARQ law shared by `N >= 1` terminals with individual channels.
///
/// Exact moments are computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    model: HarqModel,
    channels: Vec<TerminalChannel>,
    exact: Vec<MomentSet>,
}

impl Population {
    pub fn new(model: HarqModel, channels: Vec<TerminalChannel>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::param(
                "channels",
                "population needs at least one terminal",
            ));
        }
        for ch in &channels {
            validate(&model, ch)?;
        }
        let exact = channels
            .iter()
            .map(|ch| moments::moment_set(&model, ch, MomentMode::PreferExact))
            .collect::<Result<Vec<_>>>()?;
        Ok(Population {
            model,
            channels,
            exact,
        })
    }

    pub fn from_p0(model: HarqModel, p0: &[f64]) -> Result<Self> {
        let channels = p0
            .iter()
            .map(|&p| TerminalChannel::new(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, channels)
    }

    /// Channels `[1/n, ..., 1]`.
    pub fn linear_grid(model: HarqModel, n: usize) -> Result<Self> {
        Self::new(model, TerminalChannel::linear_grid(n))
    }

    pub fn model(&self) -> &HarqModel {
        &self.model
    }

    pub fn channels(&self) -> &[TerminalChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn exact_moments(&self) -> &[MomentSet] {
        &self.exact
    }

    pub fn moments(&self, mode: MomentMode) -> Result<Vec<MomentSet>> {
        match mode {
            MomentMode::PreferExact => Ok(self.exact.clone()),
            MomentMode::PreferBound { .. } => self
                .channels
                .iter()
                .map(|ch| moments::moment_set(&self.model, ch, mode))
                .collect(),
        }
    }
}

fn mean_ek(ms: &[MomentSet]) -> f64 {
    ms.iter().map(|m| m.ek).sum::<f64>() / ms.len() as f64
}

fn mean_sqrt_ek(ms: &[MomentSet]) -> f64 {
    ms.iter().map(|m| m.ek.sqrt()).sum::<f64>() / ms.len() as f64
}

/// `(sum_n sqrt(E[K_n]))^2 / (2N) + 1/2`, valid for any ergodic policy.
pub fn lower_bound_from(ms: &[MomentSet]) -> f64 {
    let n = ms.len() as f64;
    let s: f64 = ms.iter().map(|m| m.ek.sqrt()).sum();
    s * s / (2.0 * n) + 0.5
}

/// `sum_n E[K_n] / 2 + 1/2`; dominates [`lower_bound_from`].
pub fn lb_relaxed_from(ms: &[MomentSet]) -> f64 {
    ms.iter().map(|m| m.ek).sum::<f64>() / 2.0 + 0.5
}

/// Renewal-reward AoI of persistent round-robin:
/// `mean(E[K]) + E[S^2] / (2 eta) - 1/2` with `S = sum_m K_m`, and
/// `E[S^2] = sum_m Var[K_m] + eta^2` by independence.
pub fn rrp_exact_from(ms: &[MomentSet]) -> f64 {
    let eta: f64 = ms.iter().map(|m| m.ek).sum();
    let var: f64 = ms.iter().map(MomentSet::variance).sum();
    eta / ms.len() as f64 + (var + eta * eta) / (2.0 * eta) - 0.5
}

/// `(N+1)/2 mean(E[K]) + mean(E[K^2]) / (2 mean(E[K])) - 1/2`.
pub fn rrp_upper_from(ms: &[MomentSet]) -> f64 {
    let n = ms.len() as f64;
    let m1 = mean_ek(ms);
    let m2 = ms.iter().map(|m| m.ek2).sum::<f64>() / n;
    (n + 1.0) / 2.0 * m1 + 0.5 * m2 / m1 - 0.5
}

pub fn aoi_lower_bound(pop: &Population) -> f64 {
    lower_bound_from(pop.exact_moments())
}

pub fn lb_relaxed(pop: &Population) -> f64 {
    lb_relaxed_from(pop.exact_moments())
}

pub fn rrp_exact(pop: &Population) -> f64 {
    rrp_exact_from(pop.exact_moments())
}

/// Upper bound on the RR-P AoI, evaluated with exact or bounded moments.
pub fn rrp_upper(pop: &Population, mode: MomentMode) -> Result<f64> {
    Ok(rrp_upper_from(&pop.moments(mode)?))
}

/// Large-`N` growth rate of the RR-P AoI per terminal.
pub fn asymptotic_slope(pop: &Population) -> f64 {
    mean_ek(pop.exact_moments()) / 2.0
}

/// Constant `c` with `rrp_exact <= (N+1)/2 mean(E[K]) + c` for every `N`.
///
/// For exponential decay the constant `1 / (2 alpha) = -1 / ln(lambda)` only
/// holds for moderate decay rates: below roughly `lambda = 0.2` a single
/// terminal with `p0` near 0.5 already exceeds it.
pub fn asymptotic_offset(model: &HarqModel) -> f64 {
    match *model {
        HarqModel::ReciprocalDecay => 1.0,
        HarqModel::ExponentialDecay { lambda } => -1.0 / lambda.ln(),
    }
}

/// Relative gap between the relaxed and the tight lower bound,
/// `(mean(E[K]) - mean(sqrt E[K])^2) / mean(sqrt E[K])^2`.
pub fn gap_bound_from_moments(pop: &Population) -> f64 {
    let ms = pop.exact_moments();
    let r = mean_sqrt_ek(ms);
    (mean_ek(ms) - r * r) / (r * r)
}

/// Worst relative gap over any population whose mean attempt counts lie in
/// `[g_min, g_max]`.
pub fn two_point_gap(g_min: f64, g_max: f64) -> f64 {
    let d = g_max.sqrt() - g_min.sqrt();
    d * d / (4.0 * (g_max * g_min).sqrt())
}

/// Asymptotic optimality gap for reciprocal decay, `(sqrt(e) - 1)^2 / (4 sqrt(e))`.
pub fn gamma1_const() -> f64 {
    two_point_gap(1.0, std::f64::consts::E)
}

/// Asymptotic optimality gap for exponential decay. Without a truncation the
/// largest `E[K]` is bounded by `2 + sqrt(2 pi / -ln lambda)`; with one, by the
/// truncated series bound at `p0 = 1`.
pub fn gamma2_bound(lambda: f64, truncation: Option<u32>) -> Result<f64> {
    check_lambda(lambda)?;
    let g_max = match truncation {
        None => moments::ek2_upper(1.0, lambda)?,
        Some(r) => moments::ek2_upper_truncated(1.0, lambda, r)?,
    };
    Ok(two_point_gap(1.0, g_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub terminals: usize,
    pub lower_bound: f64,
    pub lb_relaxed: f64,
    pub rrp_exact: f64,
    pub rrp_upper: f64,
    pub upper_exactness: Exactness,
    pub asymptotic_slope: f64,
    pub gap_from_moments: f64,
    pub gamma_bound: f64,
}

impl BoundsReport {
    /// `upper_mode` selects the moments behind `rrp_upper`; for exponential
    /// decay its truncation also selects the `gamma_bound` variant.
    pub fn new(pop: &Population, upper_mode: MomentMode) -> Result<Self> {
        let upper_moments = pop.moments(upper_mode)?;
        let upper_exactness = if upper_moments
            .iter()
            .all(|m| m.exactness == Exactness::Exact)
        {
            Exactness::Exact
        } else {
            Exactness::UpperBound
        };
        let gamma_bound = match *pop.model() {
            HarqModel::ReciprocalDecay => gamma1_const(),
            HarqModel::ExponentialDecay { lambda } => match upper_mode {
                MomentMode::PreferExact => gamma2_bound(lambda, None)?,
                MomentMode::PreferBound { truncation } => gamma2_bound(lambda, Some(truncation))?,
            },
        };
        Ok(BoundsReport {
            terminals: pop.len(),
            lower_bound: aoi_lower_bound(pop),
            lb_relaxed: lb_relaxed(pop),
            rrp_exact: rrp_exact(pop),
            rrp_upper: rrp_upper_from(&upper_moments),
            upper_exactness,
            asymptotic_slope: asymptotic_slope(pop),
            gap_from_moments: gap_bound_from_moments(pop),
            gamma_bound,
        })
    }
}
