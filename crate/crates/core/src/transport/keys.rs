use std::collections::BTreeMap;

use rand_chacha::ChaCha12Rng;

use super::mac::KeyBlock;
use super::TransportError;
use crate::party::PartyId;
use crate::seed;

/// Unordered pair of parties sharing a key stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Link(PartyId, PartyId);

impl Link {
    pub fn new(a: PartyId, b: PartyId) -> Self {
        if a <= b {
            Link(a, b)
        } else {
            Link(b, a)
        }
    }

    fn code(&self, master: u64) -> u64 {
        let pack = |p: PartyId| ((p.role.code() as u64) << 32) | p.index as u64;
        seed::derive(seed::derive(master, "qkd-link", pack(self.0)), "qkd-peer", pack(self.1))
    }
}

#[derive(Debug)]
struct LinkKeys {
    rng: ChaCha12Rng,
    issued: u64,
    outstanding: BTreeMap<u64, KeyBlock>,
}

/// Pre-distributed pairwise key material, standing in for QKD output.
///
/// Each link has a budget of key blocks. A block is issued to exactly one
/// message and is destroyed when that message is verified.
#[derive(Debug)]
pub struct KeyStore {
    master: u64,
    budget: u64,
    links: BTreeMap<Link, LinkKeys>,
    reuse_attempts: u64,
}

impl KeyStore {
    pub fn new(master: u64, budget: u64) -> Self {
        Self { master, budget, links: BTreeMap::new(), reuse_attempts: 0 }
    }

    fn link_mut(&mut self, link: Link) -> &mut LinkKeys {
        let master = self.master;
        self.links.entry(link).or_insert_with(|| LinkKeys {
            rng: rand::SeedableRng::seed_from_u64(link.code(master)),
            issued: 0,
            outstanding: BTreeMap::new(),
        })
    }

    /// Issues the next unused block on the link between `a` and `b`.
    pub fn issue(&mut self, a: PartyId, b: PartyId) -> Result<(u64, KeyBlock), TransportError> {
        let budget = self.budget;
        let keys = self.link_mut(Link::new(a, b));
        if keys.issued >= budget {
            return Err(TransportError::KeyExhausted { a, b, budget });
        }
        let index = keys.issued;
        let block = KeyBlock::random(&mut keys.rng);
        keys.issued += 1;
        keys.outstanding.insert(index, block);
        Ok((index, block))
    }

    /// Removes and returns the block at `index`; `None` if it was never
    /// issued or was already used.
    pub fn consume(&mut self, a: PartyId, b: PartyId, index: u64) -> Option<KeyBlock> {
        let block = self.links.get_mut(&Link::new(a, b)).and_then(|k| k.outstanding.remove(&index));
        if block.is_none() {
            self.reuse_attempts += 1;
        }
        block
    }

    /// Lookups of blocks that were never issued or already destroyed.
    /// Zero in every run that keeps the one-time discipline.
    pub fn reuse_attempts(&self) -> u64 {
        self.reuse_attempts
    }

    pub fn issued(&self, a: PartyId, b: PartyId) -> u64 {
        self.links.get(&Link::new(a, b)).map_or(0, |k| k.issued)
    }

    pub fn total_issued(&self) -> u64 {
        self.links.values().map(|k| k.issued).sum()
    }
}
