//! First and second moments of the attempt count `K` of one terminal.
//!
//! Every moment is a series over the survival products
//! `prod_{i<r} g(i)`:
//!
//! ```text
//! E[K]   = sum_r t_r
//! E[K^2] = sum_r (2r + 1) t_r
//! ```
//!
//! with `t_r = p0^r / r!` for reciprocal decay and
//! `t_r = p0^r * lambda^(r(r-1)/2)` for exponential decay. The reciprocal
//! model has closed forms; the exponential one only has upper bounds, so the
//! directly summed series serves as its exact value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harq::{check_lambda, check_probability, validate, HarqModel, TerminalChannel};

/// Tolerance used whenever an "exact" moment is taken from the series.
pub const SERIES_TOL: f64 = 1e-12;

/// Default number of explicitly summed terms in the truncated `E[K]` bound.
pub const DEFAULT_TRUNCATION: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    PreferExact,
    /// Closed-form bounds where no closed form exists. `truncation` is the
    /// number of explicitly summed series terms (1 gives the plain bound).
    PreferBound {
        truncation: u32,
    },
}

impl MomentMode {
    pub fn bound() -> Self {
        MomentMode::PreferBound {
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

/// `E[K]` and `E[K^2]` for one terminal, in slots and slots squared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub ek: f64,
    pub ek2: f64,
    pub exactness: Exactness,
}

impl MomentSet {
    pub const PERFECT: MomentSet = MomentSet {
        ek: 1.0,
        ek2: 1.0,
        exactness: Exactness::Exact,
    };

    pub fn variance(&self) -> f64 {
        self.ek2 - self.ek * self.ek
    }
}

pub fn ek1_closed(p0: f64) -> f64 {
    p0.exp()
}

pub fn ek1sq_closed(p0: f64) -> f64 {
    (1.0 + 2.0 * p0) * p0.exp()
}

/// Direct summation of the moment series, stopped once a geometric majorant
/// of the remaining tail drops below `tol`.
pub fn series_oracle(model: &HarqModel, p0: f64, which: Moment, tol: f64) -> Result<f64> {
    validate(model, &TerminalChannel { p0 })?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param("tol", format!("{tol} must be positive")));
    }

    // ratio of consecutive survival products t_{r+1} / t_r
    let step = |r: u64| -> f64 {
        match *model {
            HarqModel::ReciprocalDecay => p0 / (r as f64 + 1.0),
            HarqModel::ExponentialDecay { lambda } => p0 * lambda.powf(r as f64),
        }
    };
    let weight = |r: u64| -> f64 {
        match which {
            Moment::First => 1.0,
            Moment::Second => 2.0 * r as f64 + 1.0,
        }
    };

    let mut sum = 0.0;
    let mut t = 1.0;
    let mut r = 0u64;
    loop {
        let term = weight(r) * t;
        sum += term;
        if term == 0.0 {
            break;
        }
        // term ratios are nonincreasing in r for both laws and both weights,
        // so the remainder is dominated by a geometric series in `q`
        let q = step(r) * weight(r + 1) / weight(r);
        if q < 1.0 && term * q / (1.0 - q) < tol {
            break;
        }
        t *= step(r);
        r += 1;
    }
    Ok(sum)
}

fn tail_factor(lambda: f64) -> f64 {
    1.0 + (2.0 * std::f64::consts::PI / -lambda.ln()).sqrt()
}

/// Closed-form upper bound on `E[K]` under exponential decay.
pub fn ek2_upper(p0: f64, lambda: f64) -> Result<f64> {
    check_probability("p0", p0)?;
    check_lambda(lambda)?;
    Ok(1.0 + tail_factor(lambda) * p0)
}

/// Tighter `E[K]` bound: the first `truncation` series terms summed exactly,
/// the remainder replaced by the integral majorant.
pub fn ek2_upper_truncated(p0: f64, lambda: f64, truncation: u32) -> Result<f64> {
    check_probability("p0", p0)?;
    check_lambda(lambda)?;
    if truncation == 0 {
        return Err(Error::param("truncation", "must be at least 1"));
    }
    let mut head = 0.0;
    let mut t = 1.0;
    for r in 0..truncation {
        head += t;
        t *= p0 * lambda.powi(r as i32);
    }
    Ok(head + tail_factor(lambda) * t)
}

/// Closed-form bound on `E[K^2]` under exponential decay, linear in the
/// supplied `E[K]`:
///
/// `(2 - beta/alpha) E[K] + (beta + 1)/alpha - 1`, `alpha = -ln(lambda)/2`,
/// `beta = -ln(p0)`.
///
/// `p0 = 0` is rejected since `beta` diverges; use [`series_oracle`] there.
pub fn ek2sq_upper(p0: f64, lambda: f64, ek2: f64) -> Result<f64> {
    check_probability("p0", p0)?;
    check_lambda(lambda)?;
    if p0 == 0.0 {
        return Err(Error::param(
            "p0",
            "must be positive, log(p0) diverges at 0",
        ));
    }
    if ek2.is_nan() || ek2 < 1.0 {
        return Err(Error::param("ek2", format!("{ek2} is below 1")));
    }
    let alpha = -lambda.ln() / 2.0;
    let beta = -p0.ln();
    Ok((2.0 - beta / alpha) * ek2 + (beta + 1.0) / alpha - 1.0)
}

pub fn moment_set(model: &HarqModel, ch: &TerminalChannel, mode: MomentMode) -> Result<MomentSet> {
    validate(model, ch)?;
    let p0 = ch.p0;
    match (*model, mode) {
        (HarqModel::ReciprocalDecay, _) => Ok(MomentSet {
            ek: ek1_closed(p0),
            ek2: ek1sq_closed(p0),
            exactness: Exactness::Exact,
        }),
        (HarqModel::ExponentialDecay { .. }, _) if p0 == 0.0 => Ok(MomentSet::PERFECT),
        (HarqModel::ExponentialDecay { .. }, MomentMode::PreferExact) => Ok(MomentSet {
            ek: series_oracle(model, p0, Moment::First, SERIES_TOL)?,
            ek2: series_oracle(model, p0, Moment::Second, SERIES_TOL)?,
            exactness: Exactness::Exact,
        }),
        (HarqModel::ExponentialDecay { lambda }, MomentMode::PreferBound { truncation }) => {
            let ek = ek2_upper_truncated(p0, lambda, truncation)?;
            Ok(MomentSet {
                ek,
                ek2: ek2sq_upper(p0, lambda, ek)?,
                exactness: Exactness::UpperBound,
            })
        }
    }
}
