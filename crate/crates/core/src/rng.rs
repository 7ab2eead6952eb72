//! Counter-based draws. Every random decision is addressed by
//! `(master seed, trial, lane, index)` and computed independently of the
//! order in which decisions are made, so results do not depend on
//! scheduling or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lane for per-variable draws.
pub const VAR_LANE: u64 = 0;
/// Lane for per-block draws.
pub const BLOCK_LANE: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream {
    pub master: u64,
    pub trial: u64,
}

impl SeedStream {
    pub fn new(master: u64, trial: u64) -> Self {
        SeedStream { master, trial }
    }

    /// A derived stream, used to give pipeline stages their own seeds.
    pub fn child(&self, tag: u64) -> SeedStream {
        let mut rng = self.lane(u64::MAX);
        rng.seek(tag);
        SeedStream { master: rng.next(), trial: self.trial }
    }

    pub fn lane(&self, lane: u64) -> LaneDraws {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.trial.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(lane);
        LaneDraws { rng }
    }

    /// The `index`-th 64-bit draw of a lane.
    pub fn draw(&self, lane: u64, index: u64) -> u64 {
        self.lane(lane).at(index)
    }
}

/// Random access into one lane. Sequential access avoids re-seeking.
pub struct LaneDraws {
    rng: ChaCha8Rng,
}

impl LaneDraws {
    fn seek(&mut self, index: u64) {
        let pos = index as u128 * 2;
        if self.rng.get_word_pos() != pos {
            self.rng.set_word_pos(pos);
        }
    }

    fn next(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn at(&mut self, index: u64) -> u64 {
        self.seek(index);
        self.next()
    }
}

/// Bernoulli event of probability `num/den` from one uniform 64-bit draw.
/// Exact whenever `den` is a power of two.
pub fn bernoulli(draw: u64, num: u64, den: u64) -> bool {
    (draw as u128) * (den as u128) < (num as u128) << 64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_order_independent() {
        let s = SeedStream::new(7, 3);
        let mut lane = s.lane(VAR_LANE);
        let forward: Vec<u64> = (0..16).map(|i| lane.at(i)).collect();
        let mut lane = s.lane(VAR_LANE);
        let backward: Vec<u64> = (0..16).rev().map(|i| lane.at(i)).collect();
        assert_eq!(forward, backward.into_iter().rev().collect::<Vec<_>>());
        assert_eq!(s.draw(VAR_LANE, 5), forward[5]);
    }

    #[test]
    fn lanes_trials_and_children_differ() {
        let s = SeedStream::new(7, 3);
        assert_ne!(s.draw(VAR_LANE, 0), s.draw(BLOCK_LANE, 0));
        assert_ne!(s.draw(VAR_LANE, 0), SeedStream::new(7, 4).draw(VAR_LANE, 0));
        assert_ne!(s.child(1), s.child(2));
        assert_eq!(s.child(1), s.child(1));
    }

    #[test]
    fn bernoulli_thresholds() {
        assert!(bernoulli(0, 1, 2));
        assert!(bernoulli((1u64 << 63) - 1, 1, 2));
        assert!(!bernoulli(1u64 << 63, 1, 2));
        assert!(bernoulli(u64::MAX, 1, 1));
        assert!(!bernoulli(0, 0, 5));
        // 1/4: exactly the lowest quarter of draws
        assert!(bernoulli((1u64 << 62) - 1, 1, 4));
        assert!(!bernoulli(1u64 << 62, 1, 4));
    }
}
