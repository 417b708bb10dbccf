//! Counter-addressed random streams.
//!
//! Every terminal owns its own ChaCha8 stream and the channel outcome of that
//! terminal in slot `t` is always read from word position `2t` of it. The draw
//! for `(run seed, terminal, slot)` is therefore fixed no matter which policy
//! produced the schedule or how many other draws happened before. Policies
//! that need randomness get one extra, sequentially consumed stream.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POLICY_STREAM: u64 = u64::MAX;

/// Seed of run `run_index` under `master_seed`.
pub fn derive_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng.next_u64()
}

#[derive(Debug, Clone)]
pub struct SlotRng {
    terminals: Vec<ChaCha8Rng>,
    policy: ChaCha8Rng,
}

impl SlotRng {
    pub fn new(seed: u64, terminals: usize) -> Self {
        let base = ChaCha8Rng::seed_from_u64(seed);
        let stream = |id: u64| {
            let mut rng = base.clone();
            rng.set_stream(id);
            rng
        };
        SlotRng {
            terminals: (0..terminals as u64).map(stream).collect(),
            policy: stream(POLICY_STREAM),
        }
    }

    /// Uniform draw in `[0, 1)` for `terminal` in `slot`.
    pub fn uniform(&mut self, terminal: usize, slot: u64) -> f64 {
        let rng = &mut self.terminals[terminal];
        let pos = u128::from(slot) * 2;
        // consecutive slots on one terminal need no reseek
        if rng.get_word_pos() != pos {
            rng.set_word_pos(pos);
        }
        rng.random()
    }

    pub fn policy(&mut self) -> &mut ChaCha8Rng {
        &mut self.policy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_depend_only_on_terminal_and_slot() {
        let mut a = SlotRng::new(42, 3);
        let mut b = SlotRng::new(42, 3);
        let forward: Vec<f64> = (0..50).map(|t| a.uniform(1, t)).collect();
        // different access order, interleaved with other terminals
        let mut backward: Vec<f64> = (0..50)
            .rev()
            .map(|t| {
                b.uniform(0, t * 3);
                b.uniform(1, t)
            })
            .collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn streams_differ() {
        let mut r = SlotRng::new(7, 2);
        assert_ne!(r.uniform(0, 5), r.uniform(1, 5));
        let mut other = SlotRng::new(8, 2);
        assert_ne!(SlotRng::new(7, 2).uniform(0, 5), other.uniform(0, 5));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(1, 9), derive_seed(1, 9));
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = SlotRng::new(0, 1);
        for t in 0..10_000 {
            let u = r.uniform(0, t);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
