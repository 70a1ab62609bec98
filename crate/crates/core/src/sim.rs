//! One scenario instance: network, commitment registry, and the merged log.

use thiserror::Error;

use crate::bits::BitString;
use crate::commitment::{Backend, CheatNotice, CommitError, CommitmentId, OpenResult, Registry};
use crate::consensus::ConsensusError;
use crate::events::{Event, EventLog};
use crate::ledger::LedgerError;
use crate::party::PartyId;
use crate::seed;
use crate::transport::{Delivery, MessageId, Network, NetworkConfig, TransportError};

#[derive(Debug)]
pub struct Sim {
    pub net: Network,
    pub registry: Registry,
    log: EventLog,
    phases: u32,
}

impl Sim {
    pub fn new(config: NetworkConfig, parties: &[PartyId]) -> Result<Self, TransportError> {
        let seed = config.seed;
        Ok(Self {
            net: Network::new(config, parties.iter().copied())?,
            registry: Registry::new(parties.iter().copied(), seed::rng(seed, "registry", 0)),
            log: Vec::new(),
            phases: 0,
        })
    }

    fn sync(&mut self) {
        self.log.extend(self.net.take_events());
        self.log.extend(self.registry.take_events());
    }

    pub fn phase(&mut self, name: &str) {
        self.sync();
        self.phases += 1;
        self.log.push(Event::Phase { name: name.to_string() });
    }

    pub fn record(&mut self, event: Event) {
        self.sync();
        self.log.push(event);
    }

    pub fn send(&mut self, from: PartyId, to: PartyId, payload: Vec<u8>) -> Result<MessageId, TransportError> {
        let r = self.net.send(from, to, payload);
        self.sync();
        r
    }

    pub fn drain(&mut self) -> Vec<Delivery> {
        let d = self.net.drain();
        self.sync();
        d
    }

    pub fn commit(
        &mut self,
        committer: PartyId,
        receiver: PartyId,
        value: BitString,
        backend: Backend,
    ) -> Result<CommitmentId, CommitError> {
        let r = self.registry.commit(committer, receiver, value, backend);
        self.sync();
        r
    }

    pub fn open(&mut self, caller: PartyId, id: CommitmentId, claimed: &BitString) -> Result<OpenResult, CommitError> {
        let r = self.registry.open(caller, id, claimed);
        self.sync();
        r
    }

    pub fn equivocate(
        &mut self,
        caller: PartyId,
        id: CommitmentId,
        value: &BitString,
    ) -> Result<OpenResult, CommitError> {
        let r = self.registry.equivocate_attempt(caller, id, value);
        self.sync();
        r
    }

    pub fn cheat_notices(&self) -> &[CheatNotice] {
        self.registry.cheat_notices()
    }

    pub fn phases(&self) -> u32 {
        self.phases
    }

    pub fn finish(mut self) -> Trace {
        self.sync();
        Trace {
            events: self.log,
            steps: self.net.step(),
            messages: self.net.keys().total_issued(),
            phases: self.phases,
            key_reuse: self.net.keys().reuse_attempts(),
        }
    }
}

/// What a finished instance leaves behind. Counts are simulated, not wall
/// clock, so reports stay reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub events: EventLog,
    pub steps: u64,
    pub messages: u64,
    pub phases: u32,
    pub key_reuse: u64,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("scenario is not a {0} scenario")]
    WrongProtocol(&'static str),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Commit(#[from] CommitError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

pub(crate) const NOTICE_COMMIT: u8 = 1;
pub(crate) const NOTICE_OPEN: u8 = 2;

/// Tells the receiver which registry session a commit or open refers to.
pub(crate) fn notice(kind: u8, id: CommitmentId) -> Vec<u8> {
    let mut out = vec![kind];
    out.extend_from_slice(&id.0.to_be_bytes());
    out
}

pub(crate) fn parse_notice(bytes: &[u8]) -> Option<(u8, CommitmentId)> {
    let (&kind, rest) = bytes.split_first()?;
    Some((kind, CommitmentId(u64::from_be_bytes(rest.try_into().ok()?))))
}
