//! Seeded random streams.
//!
//! A run seed fans out into independent ChaCha streams so that changing how
//! one component consumes randomness never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Theta = 1,
    Decisions = 2,
    Rewards = 3,
    NodeNoise = 4,
    Padding = 5,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Stream keyed by `(seed, index)`, used where a draw must be reproducible on
/// demand (e.g. per-round padding noise).
pub fn keyed_stream(seed: u64, which: Stream, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(splitmix64(seed ^ splitmix64(index)));
    rng.set_stream(which as u64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream(7, Stream::Theta).random();
        let b: u64 = stream(7, Stream::Decisions).random();
        let c: u64 = stream(7, Stream::Theta).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
        let p: u64 = keyed_stream(7, Stream::Padding, 3).random();
        let q: u64 = keyed_stream(7, Stream::Padding, 4).random();
        assert_ne!(p, q);
        assert_eq!(p, keyed_stream(7, Stream::Padding, 3).random::<u64>());
    }
}
