//! Packet-error laws for type-II HARQ and sampling of the attempt count `K`.
//!
//! Both laws start from the first-transmission error probability `p0` of a
//! terminal and decay with the number `r` of earlier (re)transmissions of the
//! same packet:
//!
//! - [`HarqModel::ReciprocalDecay`]: `g(r) = p0 / (r + 1)` (chase combining over
//!   i.i.d. fading);
//! - [`HarqModel::ExponentialDecay`]: `g(r) = p0 * lambda^r` (incremental
//!   redundancy in the finite-blocklength regime).

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarqModel {
    ReciprocalDecay,
    ExponentialDecay { lambda: f64 },
}

impl HarqModel {
    pub fn exponential(lambda: f64) -> Result<Self> {
        let model = HarqModel::ExponentialDecay { lambda };
        model.check()?;
        Ok(model)
    }

    /// Decay rate, if the model has one.
    pub fn lambda(&self) -> Option<f64> {
        match *self {
            HarqModel::ReciprocalDecay => None,
            HarqModel::ExponentialDecay { lambda } => Some(lambda),
        }
    }

    /// Short name used on the command line and in output tables.
    pub fn label(&self) -> &'static str {
        match self {
            HarqModel::ReciprocalDecay => "fading",
            HarqModel::ExponentialDecay { .. } => "fbl",
        }
    }

    pub fn check(&self) -> Result<()> {
        if let HarqModel::ExponentialDecay { lambda } = *self {
            check_lambda(lambda)?;
        }
        Ok(())
    }
}

impl fmt::Display for HarqModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarqModel::ReciprocalDecay => f.write_str("fading"),
            HarqModel::ExponentialDecay { lambda } => write!(f, "fbl(lambda={lambda})"),
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "lambda",
            format!("{lambda} is not in the open interval (0, 1)"),
        ))
    }
}

pub(crate) fn check_probability(field: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(
            field,
            format!("{p} is not a probability in [0, 1]"),
        ))
    }
}

/// First-transmission error probability of one terminal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalChannel {
    pub p0: f64,
}

impl TerminalChannel {
    pub fn new(p0: f64) -> Result<Self> {
        check_probability("p0", p0)?;
        Ok(TerminalChannel { p0 })
    }

    /// The channel set `[1/n, 2/n, ..., 1]` used for the heterogeneous
    /// population experiments.
    pub fn linear_grid(n: usize) -> Vec<TerminalChannel> {
        (1..=n)
            .map(|k| TerminalChannel {
                p0: k as f64 / n as f64,
            })
            .collect()
    }
}

pub fn validate(model: &HarqModel, ch: &TerminalChannel) -> Result<()> {
    model.check()?;
    check_probability("p0", ch.p0)
}

/// Error probability of a transmission that follows `r` failed attempts of
/// the same packet.
pub fn error_prob(model: &HarqModel, ch: &TerminalChannel, r: u64) -> f64 {
    match *model {
        HarqModel::ReciprocalDecay => ch.p0 / (r as f64 + 1.0),
        HarqModel::ExponentialDecay { lambda } => {
            if r == 0 {
                ch.p0
            } else {
                ch.p0 * lambda.powf(r as f64)
            }
        }
    }
}

/// Draws `K`, the 1-based index of the first successful attempt when a packet
/// is retransmitted until delivery. One uniform draw per attempt.
pub fn sample_attempts<R: Rng + ?Sized>(
    model: &HarqModel,
    ch: &TerminalChannel,
    rng: &mut R,
) -> u64 {
    let mut r = 0u64;
    loop {
        let u: f64 = rng.random();
        if u >= error_prob(model, ch, r) {
            return r + 1;
        }
        r += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn error_prob_examples() {
        let ch = TerminalChannel::new(1.0).unwrap();
        assert_eq!(error_prob(&HarqModel::ReciprocalDecay, &ch, 0), 1.0);

        let fbl = HarqModel::exponential(0.5).unwrap();
        let perfect = TerminalChannel::new(0.0).unwrap();
        for r in [0, 1, 7, 1_000_000] {
            assert_eq!(error_prob(&fbl, &perfect, r), 0.0);
        }

        let ch = TerminalChannel::new(0.6).unwrap();
        assert_relative_eq!(
            error_prob(&HarqModel::ReciprocalDecay, &ch, 2),
            0.2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn validation() {
        let fbl = HarqModel::ExponentialDecay { lambda: 0.5 };
        assert!(validate(&fbl, &TerminalChannel { p0: 0.3 }).is_ok());

        let err = validate(
            &HarqModel::ExponentialDecay { lambda: 1.0 },
            &TerminalChannel { p0: 0.3 },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "lambda",
                ..
            }
        ));
        assert!(HarqModel::exponential(0.0).is_err());
        assert!(HarqModel::exponential(f64::NAN).is_err());

        let err = validate(&fbl, &TerminalChannel { p0: 1.2 }).unwrap_err();
        assert!(matches!(err, Error::Parameter { field: "p0", .. }));
        assert!(TerminalChannel::new(-0.01).is_err());
    }

    #[test]
    fn huge_retransmission_counts_do_not_wrap() {
        let ch = TerminalChannel { p0: 1.0 };
        let r = u64::MAX - 1;
        let g = error_prob(&HarqModel::ReciprocalDecay, &ch, r);
        assert!(g > 0.0 && g < 1e-18);
        let g = error_prob(&HarqModel::ExponentialDecay { lambda: 0.5 }, &ch, r);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn perfect_channel_always_one_attempt() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = TerminalChannel { p0: 0.0 };
        for model in [
            HarqModel::ReciprocalDecay,
            HarqModel::ExponentialDecay { lambda: 0.3 },
        ] {
            for _ in 0..1000 {
                assert_eq!(sample_attempts(&model, &ch, &mut rng), 1);
            }
        }
    }

    #[test]
    fn dead_first_attempt_needs_at_least_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = TerminalChannel { p0: 1.0 };
        for _ in 0..1000 {
            assert!(sample_attempts(&HarqModel::ReciprocalDecay, &ch, &mut rng) >= 2);
        }
    }

    /// P(K = r + 1) = prod_{i<r} g(i) * (1 - g(r)), compared bin by bin.
    #[test]
    fn attempt_distribution_matches_product_form() {
        let draws = 200_000;
        for (model, p0) in [
            (HarqModel::ReciprocalDecay, 0.9),
            (HarqModel::ExponentialDecay { lambda: 0.5 }, 1.0),
        ] {
            let ch = TerminalChannel { p0 };
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut counts = [0u64; 16];
            for _ in 0..draws {
                let k = sample_attempts(&model, &ch, &mut rng) as usize;
                counts[k.min(15)] += 1;
            }
            let mut survive = 1.0;
            for r in 0..10u64 {
                let g = error_prob(&model, &ch, r);
                let mass = survive * (1.0 - g);
                survive *= g;
                let observed = counts[r as usize + 1] as f64 / draws as f64;
                let sd = (mass * (1.0 - mass) / draws as f64).sqrt();
                assert!(
                    (observed - mass).abs() <= 5.0 * sd + 1e-12,
                    "{model} K={} observed {observed} expected {mass}",
                    r + 1
                );
            }
        }
    }

    proptest! {
        #[test]
        fn error_prob_bounded_and_nonincreasing(
            p0 in 0.0f64..=1.0,
            lambda in 0.001f64..0.999,
            r in 0u64..10_000,
        ) {
            let ch = TerminalChannel { p0 };
            for model in [HarqModel::ReciprocalDecay, HarqModel::ExponentialDecay { lambda }] {
                let g = error_prob(&model, &ch, r);
                let next = error_prob(&model, &ch, r + 1);
                prop_assert!((0.0..=p0).contains(&g));
                prop_assert!(next <= g);
                prop_assert_eq!(error_prob(&model, &ch, 0), p0);
            }
        }
    }
}
