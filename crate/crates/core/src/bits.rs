//! Fixed-length bit strings: lottery tickets and serialized bids.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("bit string must contain at least one bit")]
    Empty,
    #[error("invalid bit character {0:?}")]
    InvalidChar(char),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("value {value} does not fit in {width} bits")]
    Overflow { value: u64, width: u32 },
    #[error("width {0} outside 1..=64")]
    BadWidth(u32),
}

/// A non-empty ordered sequence of bits. Index 0 is the most significant.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Result<Self, BitsError> {
        if bits.is_empty() {
            return Err(BitsError::Empty);
        }
        Ok(Self { bits })
    }

    pub fn zeros(len: usize) -> Result<Self, BitsError> {
        Self::new(vec![false; len])
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Result<Self, BitsError> {
        Self::new((0..len).map(|_| rng.random::<bool>()).collect())
    }

    /// Big-endian encoding of `value` in exactly `width` bits.
    pub fn from_u64(value: u64, width: u32) -> Result<Self, BitsError> {
        if !(1..=64).contains(&width) {
            return Err(BitsError::BadWidth(width));
        }
        if width < 64 && value >> width != 0 {
            return Err(BitsError::Overflow { value, width });
        }
        Ok(Self { bits: (0..width).rev().map(|i| (value >> i) & 1 == 1).collect() })
    }

    /// Big-endian value; `None` if longer than 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn with_flipped(&self, i: usize) -> Self {
        let mut bits = self.bits.clone();
        bits[i] = !bits[i];
        Self { bits }
    }

    pub fn xor(&self, other: &Self) -> Result<Self, BitsError> {
        self.check_len(other)?;
        Ok(Self { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect() })
    }

    /// Number of positions where the two strings differ.
    pub fn hamming(&self, other: &Self) -> Result<usize, BitsError> {
        self.check_len(other)?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    /// Packs MSB-first into `ceil(len / 8)` bytes; trailing padding bits are zero.
    pub fn to_packed(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    /// Inverse of [`to_packed`](Self::to_packed). Returns `None` when the byte
    /// count is wrong or a padding bit is set.
    pub fn from_packed(bytes: &[u8], len: usize) -> Option<Self> {
        if len == 0 || bytes.len() != len.div_ceil(8) {
            return None;
        }
        let bits: Vec<bool> = (0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect();
        let s = Self { bits };
        (s.to_packed() == bytes).then_some(s)
    }

    fn check_len(&self, other: &Self) -> Result<(), BitsError> {
        if self.len() != other.len() {
            return Err(BitsError::LengthMismatch(self.len(), other.len()));
        }
        Ok(())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::InvalidChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(BitString::new(vec![]), Err(BitsError::Empty));
        assert_eq!("".parse::<BitString>(), Err(BitsError::Empty));
        assert_eq!("01x".parse::<BitString>(), Err(BitsError::InvalidChar('x')));
    }

    #[test]
    fn big_endian_integers() {
        assert_eq!(BitString::from_u64(5, 4).unwrap(), bs("0101"));
        assert_eq!(bs("0101").to_u64(), Some(5));
        assert!(matches!(BitString::from_u64(16, 4), Err(BitsError::Overflow { .. })));
        assert_eq!(BitString::from_u64(u64::MAX, 64).unwrap().to_u64(), Some(u64::MAX));
    }

    #[test]
    fn packing_rejects_dirty_padding() {
        let s = bs("101");
        assert_eq!(s.to_packed(), vec![0b1010_0000]);
        assert_eq!(BitString::from_packed(&[0b1010_0000], 3), Some(s));
        assert_eq!(BitString::from_packed(&[0b1011_0000], 3), None);
        assert_eq!(BitString::from_packed(&[0, 0], 3), None);
    }

    #[test]
    fn xor_and_hamming() {
        assert_eq!(bs("0101").xor(&bs("0011")).unwrap(), bs("0110"));
        assert_eq!(bs("0101").hamming(&bs("0011")).unwrap(), 2);
        assert!(bs("01").xor(&bs("011")).is_err());
    }

    proptest! {
        #[test]
        fn packed_roundtrip(bits in proptest::collection::vec(any::<bool>(), 1..80)) {
            let s = BitString::new(bits).unwrap();
            prop_assert_eq!(BitString::from_packed(&s.to_packed(), s.len()), Some(s.clone()));
            prop_assert_eq!(s.to_string().parse::<BitString>().unwrap(), s);
        }
    }
}
