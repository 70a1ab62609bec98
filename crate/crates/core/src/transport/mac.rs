//! One-time polynomial-evaluation MAC over GF(2^61 - 1).
//!
//! The message is split into 7-byte big-endian chunks `m_1..m_L`, followed by
//! the byte length as a final coefficient. With a key block `(r, s)` drawn
//! uniformly from the field,
//!
//! ```text
//! h_r(m) = Σ_i c_i · r^(L+2-i)      (Horner over c_1..c_L, len)
//! tag    = (h_r(m) + s) mod p, truncated to its low `width` bits
//! ```
//!
//! Two distinct messages of at most `L` chunks collide under a fixed `r` with
//! probability at most `(L+1)/p`, so a forger who has seen one tagged message
//! succeeds with probability about `2^-width + (L+1)/p`. Each key block must
//! authenticate a single message.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// The Mersenne prime `2^61 - 1`.
pub const FIELD_PRIME: u64 = (1 << 61) - 1;
pub const MAX_TAG_BITS: u32 = 61;
pub const DEFAULT_TAG_BITS: u32 = 61;

fn reduce(x: u128) -> u64 {
    let p = FIELD_PRIME as u128;
    let folded = (x & p) + (x >> 61);
    let folded = (folded & p) + (folded >> 61);
    let v = folded as u64;
    if v >= FIELD_PRIME {
        v - FIELD_PRIME
    } else {
        v
    }
}

fn add(a: u64, b: u64) -> u64 {
    reduce(a as u128 + b as u128)
}

fn mul(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

/// 128 bits of shared key material: an evaluation point and a one-time pad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBlock {
    pub point: u64,
    pub pad: u64,
}

impl KeyBlock {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self { point: rng.random_range(0..FIELD_PRIME), pad: rng.random_range(0..FIELD_PRIME) }
    }
}

/// Polynomial hash `h_r(data)`.
pub fn poly_hash(point: u64, data: &[u8]) -> u64 {
    let r = point % FIELD_PRIME;
    let mut acc = 0u64;
    for chunk in data.chunks(7) {
        let c = chunk.iter().fold(0u64, |v, &b| (v << 8) | b as u64);
        acc = mul(add(acc, c), r);
    }
    mul(add(acc, data.len() as u64), r)
}

fn mask(width: u32) -> u64 {
    debug_assert!((1..=MAX_TAG_BITS).contains(&width));
    (1u64 << width) - 1
}

pub fn tag(key: &KeyBlock, data: &[u8], width: u32) -> u64 {
    add(poly_hash(key.point, data), key.pad % FIELD_PRIME) & mask(width)
}

pub fn verify(key: &KeyBlock, data: &[u8], width: u32, claimed: u64) -> bool {
    tag(key, data, width) == claimed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn field_arithmetic_matches_bigint() {
        let mut rng = seed::rng(1, "mac-test", 0);
        for _ in 0..1000 {
            let a = rng.random_range(0..FIELD_PRIME);
            let b = rng.random_range(0..FIELD_PRIME);
            assert_eq!(mul(a, b) as u128, (a as u128 * b as u128) % FIELD_PRIME as u128);
            assert_eq!(add(a, b) as u128, (a as u128 + b as u128) % FIELD_PRIME as u128);
        }
        assert_eq!(reduce(FIELD_PRIME as u128), 0);
    }

    #[test]
    fn hash_separates_lengths_and_trailing_zeros() {
        let r = 123_456_789;
        assert_ne!(poly_hash(r, b""), poly_hash(r, b"\0"));
        assert_ne!(poly_hash(r, b"ab"), poly_hash(r, b"ab\0"));
    }

    #[test]
    fn tag_roundtrip_and_bit_flip() {
        let mut rng = seed::rng(2, "mac-test", 0);
        let key = KeyBlock::random(&mut rng);
        let msg = b"ticket commitment notice".to_vec();
        let t = tag(&key, &msg, 61);
        assert!(verify(&key, &msg, 61, t));
        let mut bad = msg.clone();
        bad[3] ^= 0x10;
        assert!(!verify(&key, &bad, 61, t));
    }
}
