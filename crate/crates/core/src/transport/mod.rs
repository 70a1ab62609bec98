//! Simulated pairwise channels with one-time MAC authentication and a
//! deterministic, seeded delivery scheduler.

pub mod keys;
pub mod mac;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::Event;
use crate::party::PartyId;
use crate::seed;
use keys::KeyStore;
use mac::MAX_TAG_BITS;

pub const DEFAULT_KEY_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("sender and receiver are both {0}")]
    SelfSend(PartyId),
    #[error("key material between {a} and {b} exhausted (budget {budget} blocks)")]
    KeyExhausted { a: PartyId, b: PartyId, budget: u64 },
    #[error("no message in flight")]
    EmptyQueue,
    #[error("tag width {0} outside 1..=61")]
    BadTagWidth(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthenticatedMessage {
    pub id: MessageId,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub payload: Vec<u8>,
    pub tag: u64,
    pub key_index: u64,
}

impl AuthenticatedMessage {
    /// Header and payload as covered by the tag.
    pub fn authenticated_bytes(&self) -> Vec<u8> {
        authenticated_bytes(self.id, self.sender, self.receiver, self.key_index, &self.payload)
    }
}

fn authenticated_bytes(id: MessageId, from: PartyId, to: PartyId, key_index: u64, payload: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(26 + payload.len());
    v.extend_from_slice(&id.0.to_be_bytes());
    v.extend_from_slice(&from.to_bytes());
    v.extend_from_slice(&to.to_bytes());
    v.extend_from_slice(&key_index.to_be_bytes());
    v.extend_from_slice(payload);
    v
}

/// Scripted interference on the directed link `from -> to`, applied to the
/// `nth` message (zero-based) sent on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryHook {
    pub from: PartyId,
    pub to: PartyId,
    pub nth: u64,
    pub action: HookAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HookAction {
    /// Flip payload bit `bit` (taken modulo the payload length in bits).
    FlipBit {
        bit: u64,
    },
    /// Replace the tag with an adversary-chosen value.
    ForgeTag {
        tag: u64,
    },
    /// Hold the message for `steps` scheduler steps.
    Delay {
        steps: u64,
    },
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub id: MessageId,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub step: u64,
    /// The payload, or `Err(AuthFailure)` if the tag did not verify.
    pub result: Result<Vec<u8>, AuthFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuthFailure;

#[derive(Debug)]
struct InFlight {
    msg: AuthenticatedMessage,
    release_step: u64,
}

/// Network parameters derived from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkConfig {
    pub seed: u64,
    pub key_budget: u64,
    pub tag_bits: u32,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { seed: 0, key_budget: DEFAULT_KEY_BUDGET, tag_bits: mac::DEFAULT_TAG_BITS }
    }
}

/// The deterministic event loop over authenticated links.
///
/// Links are FIFO. Each step the scheduler picks uniformly, from its seeded
/// generator, one link whose head message is due, so the global interleaving
/// depends only on the seed and the sequence of sends.
#[derive(Debug)]
pub struct Network {
    parties: BTreeSet<PartyId>,
    keys: KeyStore,
    tag_bits: u32,
    queues: BTreeMap<(PartyId, PartyId), VecDeque<InFlight>>,
    sent_on_link: BTreeMap<(PartyId, PartyId), u64>,
    hooks: Vec<AdversaryHook>,
    rng: ChaCha12Rng,
    step: u64,
    next_id: u64,
    in_flight: usize,
    events: Vec<Event>,
}

impl Network {
    pub fn new(config: NetworkConfig, parties: impl IntoIterator<Item = PartyId>) -> Result<Self, TransportError> {
        if !(1..=MAX_TAG_BITS).contains(&config.tag_bits) {
            return Err(TransportError::BadTagWidth(config.tag_bits));
        }
        Ok(Self {
            parties: parties.into_iter().collect(),
            keys: KeyStore::new(seed::derive(config.seed, "qkd", 0), config.key_budget),
            tag_bits: config.tag_bits,
            queues: BTreeMap::new(),
            sent_on_link: BTreeMap::new(),
            hooks: Vec::new(),
            rng: seed::rng(config.seed, "scheduler", 0),
            step: 0,
            next_id: 0,
            in_flight: 0,
            events: Vec::new(),
        })
    }

    pub fn add_hook(&mut self, hook: AdversaryHook) {
        self.hooks.push(hook);
    }

    pub fn parties(&self) -> &BTreeSet<PartyId> {
        &self.parties
    }

    pub fn tag_bits(&self) -> u32 {
        self.tag_bits
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn pending(&self) -> usize {
        self.in_flight
    }

    pub fn keys(&self) -> &KeyStore {
        &self.keys
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    fn check_party(&self, p: PartyId) -> Result<(), TransportError> {
        if self.parties.contains(&p) {
            Ok(())
        } else {
            Err(TransportError::UnknownParty(p))
        }
    }

    /// Tags `payload` with the next key block on the link and enqueues it.
    pub fn send(&mut self, from: PartyId, to: PartyId, payload: Vec<u8>) -> Result<MessageId, TransportError> {
        self.check_party(from)?;
        self.check_party(to)?;
        if from == to {
            return Err(TransportError::SelfSend(from));
        }
        let (key_index, block) = self.keys.issue(from, to)?;
        let id = MessageId(self.next_id);
        self.next_id += 1;
        let tag = mac::tag(&block, &authenticated_bytes(id, from, to, key_index, &payload), self.tag_bits);
        let mut msg = AuthenticatedMessage { id, sender: from, receiver: to, payload, tag, key_index };
        self.events.push(Event::Send { msg: id.0, from, to, key_index, len: msg.payload.len(), step: self.step });

        let nth = {
            let c = self.sent_on_link.entry((from, to)).or_insert(0);
            *c += 1;
            *c - 1
        };
        let mut release_step = self.step;
        let actions: Vec<HookAction> = self
            .hooks
            .iter()
            .filter(|h| h.from == from && h.to == to && h.nth == nth)
            .map(|h| h.action.clone())
            .collect();
        for action in actions {
            self.events.push(Event::Intercept { msg: id.0, from, to, action: format!("{action:?}") });
            match action {
                HookAction::FlipBit { bit } => {
                    if !msg.payload.is_empty() {
                        let bit = (bit % (msg.payload.len() as u64 * 8)) as usize;
                        msg.payload[bit / 8] ^= 0x80 >> (bit % 8);
                    }
                }
                HookAction::ForgeTag { tag } => msg.tag = tag,
                HookAction::Delay { steps } => release_step = release_step.max(self.step + steps),
                HookAction::Drop => {
                    // The key block stays burned.
                    self.keys.consume(from, to, key_index);
                    return Ok(id);
                }
            }
        }
        self.queues.entry((from, to)).or_default().push_back(InFlight { msg, release_step });
        self.in_flight += 1;
        Ok(id)
    }

    /// Delivers exactly one message. The receiver gets the payload only if
    /// its tag verifies under the link key.
    pub fn deliver_next(&mut self) -> Result<Delivery, TransportError> {
        if self.in_flight == 0 {
            return Err(TransportError::EmptyQueue);
        }
        let heads = || self.queues.iter().filter_map(|(link, q)| q.front().map(|m| (*link, m.release_step)));
        let mut due: Vec<(PartyId, PartyId)> = heads().filter(|&(_, r)| r <= self.step).map(|(l, _)| l).collect();
        if due.is_empty() {
            // Everything is held back: idle until the earliest release.
            let next = heads().map(|(_, r)| r).min().unwrap_or(self.step);
            self.step = next;
            due = heads().filter(|&(_, r)| r <= self.step).map(|(l, _)| l).collect();
        }
        let link = due[self.rng.random_range(0..due.len())];
        let queue = self.queues.get_mut(&link).expect("due link has a queue");
        let InFlight { msg, .. } = queue.pop_front().expect("due link is non-empty");
        if queue.is_empty() {
            self.queues.remove(&link);
        }
        self.in_flight -= 1;
        let step = self.step;
        self.step += 1;

        let ok = self
            .keys
            .consume(msg.sender, msg.receiver, msg.key_index)
            .is_some_and(|block| mac::verify(&block, &msg.authenticated_bytes(), self.tag_bits, msg.tag));
        let (from, to) = (msg.sender, msg.receiver);
        let result = if ok {
            self.events.push(Event::Deliver { msg: msg.id.0, from, to, step });
            Ok(msg.payload)
        } else {
            self.events.push(Event::AuthFailure { msg: msg.id.0, from, to, step });
            Err(AuthFailure)
        };
        Ok(Delivery { id: msg.id, sender: from, receiver: to, step, result })
    }

    /// Delivers everything in flight, in scheduler order.
    pub fn drain(&mut self) -> Vec<Delivery> {
        let mut out = Vec::with_capacity(self.in_flight);
        while let Ok(d) = self.deliver_next() {
            out.push(d);
        }
        out
    }
}
