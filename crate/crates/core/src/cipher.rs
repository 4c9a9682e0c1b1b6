//! Programmable-bit-width bijective cipher for address-space randomization.
//!
//! The memory controller needs a keyed permutation over an `n`-bit address
//! domain for any `n` in the 4..=32 range (the width tracks the geometry and
//! gang size). An alternating unbalanced Feistel network gives a bijection
//! at every width; each round xors one half with a keyed mix of the other,
//! so decryption is the same rounds in reverse. This trades cryptographic
//! strength for structural guarantees — the simulator only needs a
//! uniform-looking, invertible scatter.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Result, SimError};

/// Nominal pipeline latency of the address cipher, in controller cycles.
/// Informational only; the simulator folds address translation into the
/// access path without extra delay.
pub const CIPHER_LATENCY_CYCLES: u32 = 3;

pub const MIN_WIDTH: u32 = 4;
pub const MAX_WIDTH: u32 = 32;

const ROUNDS: usize = 12;

/// A cipher key bound to a domain width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherKey {
    /// 96 bits of key material, drawn from a seeded PRNG at construction.
    key_material: u128,
    width: u32,
    round_keys: [u64; ROUNDS],
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn expand_round_keys(material: u128) -> [u64; ROUNDS] {
    let lo = material as u64;
    let hi = (material >> 64) as u64; // upper 32 bits of the 96
    let mut state = lo;
    let mut keys = [0u64; ROUNDS];
    for (i, k) in keys.iter_mut().enumerate() {
        state = mix64(state ^ hi.rotate_left(i as u32 * 7) ^ (i as u64) << 1);
        *k = state;
    }
    keys
}

/// Derives a key for an `width`-bit domain from a 64-bit boot seed.
pub fn keygen(seed: u64, width: u32) -> Result<CipherKey> {
    if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
        return Err(SimError::Config(format!(
            "cipher width {width} outside supported range {MIN_WIDTH}..={MAX_WIDTH}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut bytes = [0u8; 12];
    rng.fill_bytes(&mut bytes);
    let mut material = 0u128;
    for b in bytes {
        material = (material << 8) | b as u128;
    }
    Ok(CipherKey {
        key_material: material,
        width,
        round_keys: expand_round_keys(material),
    })
}

impl CipherKey {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn domain(&self) -> u64 {
        1u64 << self.width
    }

    fn check_domain(&self, value: u64) -> Result<()> {
        if value < self.domain() {
            Ok(())
        } else {
            Err(SimError::AddressRange {
                line: value,
                limit: self.domain(),
            })
        }
    }

    fn halves(&self) -> (u32, u32) {
        // low half gets floor(w/2) bits, high half the remainder
        let low = self.width / 2;
        (low, self.width - low)
    }

    /// Permutes `value` within `[0, 2^width)`.
    pub fn encrypt(&self, value: u64) -> Result<u64> {
        self.check_domain(value)?;
        let (low_bits, high_bits) = self.halves();
        let low_mask = (1u64 << low_bits) - 1;
        let high_mask = (1u64 << high_bits) - 1;
        let mut lo = value & low_mask;
        let mut hi = value >> low_bits;
        for (r, key) in self.round_keys.iter().enumerate() {
            if r % 2 == 0 {
                hi ^= mix64(lo ^ key) & high_mask;
            } else {
                lo ^= mix64(hi ^ key) & low_mask;
            }
        }
        Ok((hi << low_bits) | lo)
    }

    /// Exact inverse of [`CipherKey::encrypt`].
    pub fn decrypt(&self, value: u64) -> Result<u64> {
        self.check_domain(value)?;
        let (low_bits, high_bits) = self.halves();
        let low_mask = (1u64 << low_bits) - 1;
        let high_mask = (1u64 << high_bits) - 1;
        let mut lo = value & low_mask;
        let mut hi = value >> low_bits;
        for (r, key) in self.round_keys.iter().enumerate().rev() {
            if r % 2 == 0 {
                hi ^= mix64(lo ^ key) & high_mask;
            } else {
                lo ^= mix64(hi ^ key) & low_mask;
            }
        }
        Ok((hi << low_bits) | lo)
    }
}
