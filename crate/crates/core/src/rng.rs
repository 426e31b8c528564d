//! Keyed random streams.
//!
//! Every consumer of randomness derives its own generator from the run seed,
//! a domain tag and a short list of indices (layer, epoch, anchor, sample).
//! Streams therefore never depend on evaluation order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Split = 1,
    Init = 2,
    Shuffle = 3,
    PairSample = 4,
    Perturb = 5,
    Background = 6,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 generator keyed by `(seed, domain, indices)`.
pub fn keyed(seed: u64, domain: Domain, indices: &[u64]) -> ChaCha8Rng {
    let mut state = seed;
    let mut acc = splitmix64(&mut state) ^ (domain as u64);
    for &i in indices {
        state ^= acc;
        acc = splitmix64(&mut state) ^ i.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    }
    state ^= acc;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
