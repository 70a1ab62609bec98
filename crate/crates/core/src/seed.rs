//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from the scenario's master seed and
//! a purpose label, so adding a party or a phase never perturbs unrelated
//! streams.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Derives a sub-seed for `label` and `index` from `master`.
pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ label_hash(label)) ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// Seeded generator for the given purpose.
pub fn rng(master: u64, label: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive(master, label, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_indices_separate_streams() {
        let a = derive(7, "ticket", 0);
        assert_ne!(a, derive(7, "ticket", 1));
        assert_ne!(a, derive(7, "keys", 0));
        assert_ne!(a, derive(8, "ticket", 0));
        assert_eq!(a, derive(7, "ticket", 0));
    }
}
