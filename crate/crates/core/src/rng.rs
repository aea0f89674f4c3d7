//! Explicit, splittable random state.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream addressed by
//! `(master seed, domain, index)`. ChaCha is counter-based, so streams are
//! independent and reproducible regardless of how trials are scheduled.

use rand::{RngCore, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

/// Stream domain for source/side-information draws.
pub const DOMAIN_SOURCE: u64 = 0x736f_7572_6365;
/// Stream domain for channel noise.
pub const DOMAIN_CHANNEL: u64 = 0x0063_6861_6e6e_656c;
/// Stream domain for tree-code seeds.
pub const DOMAIN_CODE: u64 = 0x636f_6465;

pub fn stream(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// 128-bit tree-code seed for code index `index` under `master`.
pub fn code_seed(master: u64, index: u64) -> u128 {
    let mut rng = stream(master, DOMAIN_CODE, index);
    (u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64())
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
