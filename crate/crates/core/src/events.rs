//! Scenario event log. One entry per transport, commitment, consensus, or
//! protocol-level event, in global execution order.

use serde::{Deserialize, Serialize};

use crate::party::PartyId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Phase {
        name: String,
    },
    Send {
        msg: u64,
        from: PartyId,
        to: PartyId,
        key_index: u64,
        len: usize,
        step: u64,
    },
    Deliver {
        msg: u64,
        from: PartyId,
        to: PartyId,
        step: u64,
    },
    AuthFailure {
        msg: u64,
        from: PartyId,
        to: PartyId,
        step: u64,
    },
    Intercept {
        msg: u64,
        from: PartyId,
        to: PartyId,
        action: String,
    },
    Commit {
        commitment: u64,
        committer: PartyId,
        receiver: PartyId,
        backend: String,
        length: usize,
    },
    Open {
        commitment: u64,
        committer: PartyId,
        receiver: PartyId,
        backend: String,
        result: String,
    },
    Equivocation {
        commitment: u64,
        committer: PartyId,
        receiver: PartyId,
        backend: String,
        result: String,
    },
    CheatDetected {
        commitment: u64,
        committer: PartyId,
        receiver: PartyId,
    },
    ConsensusDecided {
        instance: u64,
        /// Hex of the decided value per honest miner, `None` for ⊥.
        decisions: Vec<(PartyId, Option<String>)>,
        guarantees_void: bool,
    },
    Excluded {
        party: PartyId,
        reason: String,
    },
    Complaint {
        miner: PartyId,
        buyer: PartyId,
        verdict: String,
    },
    Verdict {
        miner: PartyId,
        verdict: String,
    },
}

pub type EventLog = Vec<Event>;
