//! Age of Information (AoI) under HARQ for slotted multiaccess channels.
//!
//! The crate has two halves that are meant to be checked against each other:
//!
//! - an analytic side ([`harq`], [`moments`], [`bounds`]) that evaluates the
//!   retransmission-count moments, the policy-independent AoI lower bound and
//!   the exact and upper-bounded AoI of persistent round-robin (RR-P);
//! - a Monte-Carlo side ([`sim`], [`policies`], [`rng`]) that plays the slotted
//!   system forward one scheduling decision at a time.
//!
//! [`sweep`] ties both together over a grid of population sizes and produces
//! the CSV/JSON tables the command-line tool writes.

pub mod bounds;
pub mod error;
pub mod harq;
pub mod moments;
pub mod policies;
pub mod rng;
pub mod sim;
pub mod sweep;

pub use bounds::{BoundsReport, Population};
pub use error::{Error, Result};
pub use harq::{HarqModel, TerminalChannel};
pub use moments::{Exactness, MomentMode, MomentSet};
pub use policies::{Action, Packet, PolicyKind};
pub use sim::{SimConfig, SimResult, TerminalState};
pub use sweep::{OutputFormat, SweepRow, SweepSpec};
