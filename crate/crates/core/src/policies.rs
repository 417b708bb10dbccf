//! Scheduling policies: one `(terminal, New | Old)` decision per slot.
//!
//! Persistent round-robin ([`PolicyKind::RoundRobinPersistent`]) is the
//! policy under study; the others are baselines used to exercise the
//! policy-independent lower bound. Terminal indices are 0-based here and
//! 1-based in anything printed for people. Ties always go to the lowest index.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::Population;
use crate::error::{Error, Result};
use crate::moments::MomentSet;
use crate::sim::SystemState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Packet {
    /// Fresh status, generated at the moment of transmission.
    New,
    /// Retransmission of the packet already in flight.
    Old,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub terminal: usize,
    pub packet: Packet,
}

impl Action {
    pub fn new(terminal: usize) -> Self {
        Action {
            terminal,
            packet: Packet::New,
        }
    }

    pub fn old(terminal: usize) -> Self {
        Action {
            terminal,
            packet: Packet::Old,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "rrp")]
    RoundRobinPersistent,
    #[serde(rename = "rr1")]
    RoundRobinType1,
    #[serde(rename = "greedy")]
    GreedyMaxAge,
    #[serde(rename = "rand")]
    StationaryRandomized,
    #[serde(rename = "index")]
    AgeIndex,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::RoundRobinPersistent,
        PolicyKind::RoundRobinType1,
        PolicyKind::GreedyMaxAge,
        PolicyKind::StationaryRandomized,
        PolicyKind::AgeIndex,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            PolicyKind::RoundRobinPersistent => "rrp",
            PolicyKind::RoundRobinType1 => "rr1",
            PolicyKind::GreedyMaxAge => "greedy",
            PolicyKind::StationaryRandomized => "rand",
            PolicyKind::AgeIndex => "index",
        }
    }

    /// Everything except RR-P is a comparison baseline.
    pub fn is_baseline(&self) -> bool {
        *self != PolicyKind::RoundRobinPersistent
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                Error::param(
                    "policy",
                    format!("unknown policy `{s}`, expected one of rrp|rr1|greedy|rand|index"),
                )
            })
    }
}

/// A policy id plus its optional parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Access weights for [`PolicyKind::StationaryRandomized`]; defaults to
    /// `sqrt(E[K_n])` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl From<PolicyKind> for PolicyConfig {
    fn from(kind: PolicyKind) -> Self {
        PolicyConfig {
            kind,
            weights: None,
        }
    }
}

impl PolicyConfig {
    pub fn build(&self, pop: &Population) -> Result<Box<dyn Scheduler>> {
        if self.weights.is_some() && self.kind != PolicyKind::StationaryRandomized {
            return Err(Error::param(
                "weights",
                format!("policy `{}` takes no weights", self.kind),
            ));
        }
        let n = pop.len();
        Ok(match self.kind {
            PolicyKind::RoundRobinPersistent => Box::new(RoundRobin::persistent(n)),
            PolicyKind::RoundRobinType1 => Box::new(RoundRobin::type1(n)),
            PolicyKind::GreedyMaxAge => Box::new(GreedyMaxAge),
            PolicyKind::StationaryRandomized => {
                let weights = match &self.weights {
                    Some(w) => w.clone(),
                    None => default_weights(pop.exact_moments()),
                };
                Box::new(StationaryRandomized::new(&weights, n)?)
            }
            PolicyKind::AgeIndex => Box::new(AgeIndex::new(pop.exact_moments())),
        })
    }
}

/// Decision rule driven slot by slot by the simulator.
pub trait Scheduler: Send {
    fn decide(&mut self, states: &SystemState, rng: &mut dyn rand::RngCore) -> Action;

    /// Outcome of the action chosen in the same slot.
    fn observe(&mut self, _action: Action, _delivered: bool) {}
}

/// Stays on the cursor terminal, retransmitting while its packet is in flight.
pub fn rr_persistent(states: &SystemState, cursor: usize) -> Action {
    if states.in_flight(cursor) {
        Action::old(cursor)
    } else {
        Action::new(cursor)
    }
}

/// Stays on the cursor terminal but sends a fresh packet every attempt.
pub fn rr_type1(_states: &SystemState, cursor: usize) -> Action {
    Action::new(cursor)
}

fn first_argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Fresh packet to the terminal with the highest age.
pub fn greedy_max_age(states: &SystemState) -> Action {
    Action::new(first_argmax(states.ages().map(|h| h as f64)))
}

/// Terminal drawn from `weights` each slot; an in-flight packet of the drawn
/// terminal is always continued.
pub fn stationary_randomized<R: Rng + ?Sized>(
    states: &SystemState,
    weights: &WeightedIndex<f64>,
    rng: &mut R,
) -> Action {
    let n = weights.sample(rng);
    if states.in_flight(n) {
        Action::old(n)
    } else {
        Action::new(n)
    }
}

/// Finishes the burst in progress, otherwise starts one at the largest
/// `h_n / sqrt(E[K_n])`.
pub fn age_index(states: &SystemState, moments: &[MomentSet]) -> Action {
    if let Some(n) = states.first_in_flight() {
        return Action::old(n);
    }
    Action::new(first_argmax(
        states
            .ages()
            .zip(moments)
            .map(|(h, m)| h as f64 / m.ek.sqrt()),
    ))
}

pub fn default_weights(moments: &[MomentSet]) -> Vec<f64> {
    let w: Vec<f64> = moments.iter().map(|m| m.ek.sqrt()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

#[derive(Debug, Clone)]
pub struct RoundRobin {
    cursor: usize,
    terminals: usize,
    persistent: bool,
}

impl RoundRobin {
    pub fn persistent(terminals: usize) -> Self {
        RoundRobin {
            cursor: 0,
            terminals,
            persistent: true,
        }
    }

    pub fn type1(terminals: usize) -> Self {
        RoundRobin {
            persistent: false,
            ..Self::persistent(terminals)
        }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }
}

impl Scheduler for RoundRobin {
    fn decide(&mut self, states: &SystemState, _rng: &mut dyn rand::RngCore) -> Action {
        if self.persistent {
            rr_persistent(states, self.cursor)
        } else {
            rr_type1(states, self.cursor)
        }
    }

    fn observe(&mut self, _action: Action, delivered: bool) {
        if delivered {
            self.cursor = (self.cursor + 1) % self.terminals;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyMaxAge;

impl Scheduler for GreedyMaxAge {
    fn decide(&mut self, states: &SystemState, _rng: &mut dyn rand::RngCore) -> Action {
        greedy_max_age(states)
    }
}

#[derive(Debug, Clone)]
pub struct StationaryRandomized {
    weights: WeightedIndex<f64>,
}

impl StationaryRandomized {
    pub fn new(weights: &[f64], terminals: usize) -> Result<Self> {
        if weights.len() != terminals {
            return Err(Error::param(
                "weights",
                format!("{} weights for {terminals} terminals", weights.len()),
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("weights", "weights must be finite"));
        }
        let weights =
            WeightedIndex::new(weights).map_err(|e| Error::param("weights", e.to_string()))?;
        Ok(StationaryRandomized { weights })
    }
}

impl Scheduler for StationaryRandomized {
    fn decide(&mut self, states: &SystemState, rng: &mut dyn rand::RngCore) -> Action {
        stationary_randomized(states, &self.weights, rng)
    }
}

#[derive(Debug, Clone)]
pub struct AgeIndex {
    moments: Vec<MomentSet>,
}

impl AgeIndex {
    pub fn new(moments: &[MomentSet]) -> Self {
        AgeIndex {
            moments: moments.to_vec(),
        }
    }
}

impl Scheduler for AgeIndex {
    fn decide(&mut self, states: &SystemState, _rng: &mut dyn rand::RngCore) -> Action {
        age_index(states, &self.moments)
    }
}
