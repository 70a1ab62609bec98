//! Protocol participants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Player,
    Buyer,
    Seller,
    Miner,
}

impl Role {
    fn letter(self) -> char {
        match self {
            Role::Player => 'P',
            Role::Buyer => 'B',
            Role::Seller => 'S',
            Role::Miner => 'M',
        }
    }

    /// Fixed byte code used in canonical record encodings.
    pub fn code(self) -> u8 {
        match self {
            Role::Player => 1,
            Role::Buyer => 2,
            Role::Seller => 3,
            Role::Miner => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => Role::Player,
            2 => Role::Buyer,
            3 => Role::Seller,
            4 => Role::Miner,
            _ => return None,
        })
    }
}

/// Identity of one party in a scenario, e.g. `P0`, `B2`, `S0`, `M3`.
/// Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartyId {
    pub role: Role,
    pub index: u32,
}

impl PartyId {
    pub const fn new(role: Role, index: u32) -> Self {
        Self { role, index }
    }

    pub const fn player(index: u32) -> Self {
        Self::new(Role::Player, index)
    }

    pub const fn buyer(index: u32) -> Self {
        Self::new(Role::Buyer, index)
    }

    pub const fn seller() -> Self {
        Self::new(Role::Seller, 0)
    }

    pub const fn miner(index: u32) -> Self {
        Self::new(Role::Miner, index)
    }

    /// Five-byte canonical encoding: role code then big-endian index.
    pub fn to_bytes(self) -> [u8; 5] {
        let i = self.index.to_be_bytes();
        [self.role.code(), i[0], i[1], i[2], i[3]]
    }

    pub fn from_bytes(b: &[u8]) -> Option<Self> {
        let [code, a, b2, c, d] = <[u8; 5]>::try_from(b).ok()?;
        Some(Self::new(Role::from_code(code)?, u32::from_be_bytes([a, b2, c, d])))
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.role.letter(), self.index)
    }
}

#[derive(Debug, Error)]
#[error("invalid party id {0:?}")]
pub struct ParsePartyError(String);

impl FromStr for PartyId {
    type Err = ParsePartyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePartyError(s.to_string());
        let mut chars = s.chars();
        let role = match chars.next().ok_or_else(err)? {
            'P' => Role::Player,
            'B' => Role::Buyer,
            'S' => Role::Seller,
            'M' => Role::Miner,
            _ => return Err(err()),
        };
        let index = chars.as_str().parse().map_err(|_| err())?;
        Ok(Self::new(role, index))
    }
}

impl Serialize for PartyId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PartyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse_roundtrip() {
        for p in [PartyId::player(0), PartyId::buyer(12), PartyId::seller(), PartyId::miner(3)] {
            assert_eq!(p.to_string().parse::<PartyId>().unwrap(), p);
            assert_eq!(PartyId::from_bytes(&p.to_bytes()), Some(p));
        }
        assert!("X1".parse::<PartyId>().is_err());
        assert!("M".parse::<PartyId>().is_err());
        assert_eq!(PartyId::from_bytes(&[9, 0, 0, 0, 0]), None);
    }
}
