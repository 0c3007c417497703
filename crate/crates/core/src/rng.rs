//! Keyed random-number substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose
//! 256-bit key is `seed (u64 LE) || domain tag (u64 LE) || 0^128` and whose
//! stream id is the item index (shot id, resample id, ...). Any item can be
//! regenerated in isolation, so parallel and serial runs produce identical
//! output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Shot = 1,
    Noise = 2,
    Calibration = 3,
    Bootstrap = 4,
    Oracle = 5,
    Campaign = 6,
    Search = 7,
}

pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
