//! Slot-by-slot Monte-Carlo simulation of the multiaccess system.
//!
//! Conventions:
//! - slots are numbered `1..=T`; ages are read after the slot's transition;
//! - every terminal starts with `h = 1`, no packet in flight;
//! - a terminal that is not scheduled ages by one slot;
//! - a delivered fresh packet resets `h` to 1, a delivered retransmission
//!   after `r` earlier attempts resets it to `r + 1`.
//!
//! Ages are stored as generation stamps so a slot costs O(1) regardless of
//! the number of terminals (policy evaluation aside).

use serde::{Deserialize, Serialize};

use crate::bounds::Population;
use crate::error::{Error, Result};
use crate::harq::{error_prob, HarqModel, TerminalChannel};
use crate::policies::{Action, Packet, PolicyConfig, Scheduler};
use crate::rng::SlotRng;

/// Age `h` and retransmission counter `r` of one terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalState {
    pub h: u64,
    pub r: u64,
    pub in_flight: bool,
}

impl TerminalState {
    pub const INITIAL: TerminalState = TerminalState {
        h: 1,
        r: 0,
        in_flight: false,
    };
}

/// States of all terminals after slot `slot`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    slot: u64,
    // h_n = slot - stamp_n
    stamp: Vec<i64>,
    r: Vec<u64>,
    in_flight: Vec<bool>,
}

impl SystemState {
    pub fn initial(terminals: usize) -> Self {
        Self::from_terminals(0, &vec![TerminalState::INITIAL; terminals])
    }

    pub fn from_terminals(slot: u64, states: &[TerminalState]) -> Self {
        SystemState {
            slot,
            stamp: states.iter().map(|s| slot as i64 - s.h as i64).collect(),
            r: states.iter().map(|s| s.r).collect(),
            in_flight: states.iter().map(|s| s.in_flight).collect(),
        }
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn len(&self) -> usize {
        self.stamp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamp.is_empty()
    }

    pub fn age(&self, n: usize) -> u64 {
        (self.slot as i64 - self.stamp[n]) as u64
    }

    pub fn in_flight(&self, n: usize) -> bool {
        self.in_flight[n]
    }

    pub fn terminal(&self, n: usize) -> TerminalState {
        TerminalState {
            h: self.age(n),
            r: self.r[n],
            in_flight: self.in_flight[n],
        }
    }

    pub fn ages(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len()).map(|n| self.age(n))
    }

    pub fn terminals(&self) -> Vec<TerminalState> {
        (0..self.len()).map(|n| self.terminal(n)).collect()
    }

    /// First terminal with a packet in flight.
    pub fn first_in_flight(&self) -> Option<usize> {
        self.in_flight.iter().position(|&f| f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub terminal: usize,
    /// Attempts spent on the delivered packet, which is also its age.
    pub attempts: u64,
}

/// Advances `state` by one slot under `action`. `u` is the uniform draw that
/// decides the scheduled transmission: it fails iff `u < g(r)`.
///
/// A delivered retransmission sets the age to the attempt count `r + 1`,
/// which is the packet's true age when its attempts occupy consecutive slots
/// (every persistent policy here schedules them that way).
pub fn step(
    state: &mut SystemState,
    action: Action,
    model: &HarqModel,
    channels: &[TerminalChannel],
    u: f64,
) -> Result<Option<Delivery>> {
    let n = action.terminal;
    if n >= state.len() {
        return Err(Error::Contract(format!(
            "terminal {} scheduled but only {} exist",
            n + 1,
            state.len()
        )));
    }
    let r = match action.packet {
        Packet::New => 0,
        Packet::Old if state.in_flight[n] => state.r[n],
        Packet::Old => {
            return Err(Error::Contract(format!(
                "retransmission requested for terminal {} with no packet in flight",
                n + 1
            )))
        }
    };
    state.slot += 1;
    let t = state.slot as i64;
    if u < error_prob(model, &channels[n], r) {
        state.r[n] = r + 1;
        state.in_flight[n] = true;
        Ok(None)
    } else {
        let attempts = r + 1;
        state.stamp[n] = t - attempts as i64;
        state.r[n] = 0;
        state.in_flight[n] = false;
        Ok(Some(Delivery {
            terminal: n,
            attempts,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: HarqModel,
    pub channels: Vec<TerminalChannel>,
    pub policy: PolicyConfig,
    pub horizon: u64,
    pub seed: u64,
    #[serde(default)]
    pub warmup: u64,
}

impl SimConfig {
    pub fn new(pop: &Population, policy: impl Into<PolicyConfig>, horizon: u64, seed: u64) -> Self {
        SimConfig {
            model: *pop.model(),
            channels: pop.channels().to_vec(),
            policy: policy.into(),
            horizon,
            seed,
            warmup: 0,
        }
    }

    pub fn validate(&self) -> Result<Population> {
        if self.horizon <= self.warmup {
            return Err(Error::param(
                "horizon",
                format!(
                    "{} slots leave nothing after a warmup of {}",
                    self.horizon, self.warmup
                ),
            ));
        }
        Population::new(self.model, self.channels.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotEvent {
    pub slot: u64,
    pub action: Action,
    pub delivery: Option<Delivery>,
}

/// Drives a policy against the channel, one slot per call.
pub struct Simulator {
    model: HarqModel,
    channels: Vec<TerminalChannel>,
    state: SystemState,
    scheduler: Box<dyn Scheduler>,
    rng: SlotRng,
    age_sum: u64,
}

impl Simulator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let pop = config.validate()?;
        let scheduler = config.policy.build(&pop)?;
        let n = pop.len();
        Ok(Simulator {
            model: config.model,
            channels: config.channels.clone(),
            state: SystemState::initial(n),
            scheduler,
            rng: SlotRng::new(config.seed, n),
            age_sum: n as u64,
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    /// Sum of all ages after the last slot, maintained incrementally.
    pub fn age_sum(&self) -> u64 {
        self.age_sum
    }

    pub fn step(&mut self) -> Result<SlotEvent> {
        let action = self.scheduler.decide(&self.state, self.rng.policy());
        let slot = self.state.slot + 1;
        let n = action.terminal.min(self.state.len() - 1);
        let before = self.state.age(n);
        let u = self.rng.uniform(n, slot);
        let delivery = step(&mut self.state, action, &self.model, &self.channels, u)?;
        self.scheduler.observe(action, delivery.is_some());
        self.age_sum += self.state.len() as u64;
        if let Some(d) = delivery {
            self.age_sum -= before + 1 - d.attempts;
        }
        Ok(SlotEvent {
            slot,
            action,
            delivery,
        })
    }
}

/// Per-terminal counters over the measurement window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalStats {
    pub deliveries: u64,
    pub attempts: u64,
    /// Sample mean of the slots between consecutive deliveries.
    pub inter_delivery_mean: Option<f64>,
    /// Sample second moment of the same intervals.
    pub inter_delivery_sq_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub avg_aoi: f64,
    /// Batch-means standard error of `avg_aoi`.
    pub aoi_std_err: f64,
    pub window: u64,
    pub terminals: Vec<TerminalStats>,
    pub seed: u64,
    pub config: SimConfig,
}

#[derive(Default, Clone, Copy)]
struct Accum {
    deliveries: u64,
    attempts: u64,
    delta_sum: u128,
    delta_sq_sum: u128,
}

pub fn run(config: &SimConfig) -> Result<SimResult> {
    let mut sim = Simulator::new(config)?;
    let n = sim.state.len();
    let window = config.horizon - config.warmup;
    let batches = (window / 5_000).clamp(2, 100).min(window);
    let batch_len = window / batches;

    let mut acc = vec![Accum::default(); n];
    let mut last_delivery = vec![0u64; n];
    let mut total: u128 = 0;
    let mut batch_sum: u128 = 0;
    let mut batch_slots = 0u64;
    let mut batch_means = Vec::with_capacity(batches as usize);

    for _ in 0..config.horizon {
        let ev = sim.step()?;
        let counted = ev.slot > config.warmup;
        if let Some(d) = ev.delivery {
            if counted {
                let delta = u128::from(ev.slot - last_delivery[d.terminal]);
                let a = &mut acc[d.terminal];
                a.deliveries += 1;
                a.delta_sum += delta;
                a.delta_sq_sum += delta * delta;
            }
            last_delivery[d.terminal] = ev.slot;
        }
        if !counted {
            continue;
        }
        acc[ev.action.terminal].attempts += 1;
        let s = u128::from(sim.age_sum);
        total += s;
        batch_sum += s;
        batch_slots += 1;
        // the last batch absorbs the remainder
        if batch_slots == batch_len && (batch_means.len() as u64) < batches - 1 {
            batch_means.push(batch_sum as f64 / (batch_slots as f64 * n as f64));
            batch_sum = 0;
            batch_slots = 0;
        }
    }
    if batch_slots > 0 {
        batch_means.push(batch_sum as f64 / (batch_slots as f64 * n as f64));
    }

    let avg_aoi = total as f64 / (window as f64 * n as f64);
    let terminals = acc
        .iter()
        .map(|a| {
            let d = a.deliveries as f64;
            TerminalStats {
                deliveries: a.deliveries,
                attempts: a.attempts,
                inter_delivery_mean: (a.deliveries > 0).then(|| a.delta_sum as f64 / d),
                inter_delivery_sq_mean: (a.deliveries > 0).then(|| a.delta_sq_sum as f64 / d),
            }
        })
        .collect();

    Ok(SimResult {
        avg_aoi,
        aoi_std_err: std_err(&batch_means),
        window,
        terminals,
        seed: config.seed,
        config: config.clone(),
    })
}

fn std_err(means: &[f64]) -> f64 {
    let b = means.len();
    if b < 2 {
        return 0.0;
    }
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Empirical inter-delivery lower bound
/// `(1/2N) sum_n mean(delta_n^2) / mean(delta_n) + 1/2` of a finished run.
pub fn inter_delivery_check(result: &SimResult) -> Result<f64> {
    let n = result.terminals.len();
    let mut acc = 0.0;
    for (i, t) in result.terminals.iter().enumerate() {
        match (t.inter_delivery_mean, t.inter_delivery_sq_mean) {
            (Some(m1), Some(m2)) if t.deliveries >= 2 => acc += m2 / m1,
            _ => {
                return Err(Error::InsufficientSamples {
                    terminal: i + 1,
                    deliveries: t.deliveries,
                    required: 2,
                })
            }
        }
    }
    Ok(acc / (2.0 * n as f64) + 0.5)
}
