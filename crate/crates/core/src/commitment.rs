//! Commit/open sessions as an ideal functionality.
//!
//! The registry holds each committed value privately. A receiver can see only
//! the session id, the committer, and the length until the committer opens.
//! Strings are committed bitwise under a single session id.
//!
//! Two backends:
//! * [`Backend::Ideal`]: perfectly concealing and binding. Any open with a
//!   different value is rejected.
//! * [`Backend::CheatSensitive`]: each bit where the claimed value differs
//!   from the committed one is caught independently with probability `p`.
//!   If no check fires the false value is accepted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::events::Event;
use crate::party::PartyId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Ideal,
    CheatSensitive {
        detection_prob: f64,
    },
}

impl Backend {
    pub fn validate(&self) -> Result<(), CommitError> {
        match *self {
            Backend::Ideal => Ok(()),
            Backend::CheatSensitive { detection_prob: p } if p > 0.0 && p <= 1.0 => Ok(()),
            Backend::CheatSensitive { detection_prob } => Err(CommitError::BadDetectionProbability(detection_prob)),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Ideal => f.write_str("ideal"),
            Backend::CheatSensitive { detection_prob } => write!(f, "cheat:{detection_prob}"),
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = CommitError;

    /// `ideal` or `cheat:<p>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = match s {
            "ideal" => Backend::Ideal,
            _ => {
                let p = s
                    .strip_prefix("cheat:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| CommitError::BadBackend(s.to_string()))?;
                Backend::CheatSensitive { detection_prob: p }
            }
        };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommitError {
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("commitment {0} is already finalized")]
    AlreadyFinalized(CommitmentId),
    #[error("detection probability {0} outside (0, 1]")]
    BadDetectionProbability(f64),
    #[error("invalid backend {0:?}, expected `ideal` or `cheat:<p>`")]
    BadBackend(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CommitmentId(pub u64);

impl fmt::Display for CommitmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommitStatus {
    Committed,
    Opened,
    CheatDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Equivocation,
    UnknownCommitment,
    WrongParty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpenResult {
    Accepted(BitString),
    Rejected(RejectReason),
}

impl OpenResult {
    pub fn accepted(&self) -> Option<&BitString> {
        match self {
            OpenResult::Accepted(v) => Some(v),
            OpenResult::Rejected(_) => None,
        }
    }
}

impl fmt::Display for OpenResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpenResult::Accepted(v) => write!(f, "accepted({v})"),
            OpenResult::Rejected(r) => write!(f, "rejected({r:?})"),
        }
    }
}

#[derive(Debug, Clone)]
struct CommitmentRecord {
    committer: PartyId,
    receiver: PartyId,
    value: BitString,
    status: CommitStatus,
    backend: Backend,
}

/// Everything a receiver may learn about a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverView {
    pub id: CommitmentId,
    pub committer: PartyId,
    pub length: usize,
    pub status: CommitStatus,
    /// Present only once the session is `Opened`.
    pub opened: Option<BitString>,
}

/// Public notice that a committer was caught equivocating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheatNotice {
    pub id: CommitmentId,
    pub committer: PartyId,
    pub receiver: PartyId,
}

#[derive(Debug)]
pub struct Registry {
    parties: BTreeSet<PartyId>,
    records: BTreeMap<CommitmentId, CommitmentRecord>,
    opened_values: BTreeMap<CommitmentId, BitString>,
    cheats: Vec<CheatNotice>,
    rng: ChaCha12Rng,
    next_id: u64,
    events: Vec<Event>,
}

impl Registry {
    pub fn new(parties: impl IntoIterator<Item = PartyId>, rng: ChaCha12Rng) -> Self {
        Self {
            parties: parties.into_iter().collect(),
            records: BTreeMap::new(),
            opened_values: BTreeMap::new(),
            cheats: Vec::new(),
            rng,
            next_id: 0,
            events: Vec::new(),
        }
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    pub fn commit(
        &mut self,
        committer: PartyId,
        receiver: PartyId,
        value: BitString,
        backend: Backend,
    ) -> Result<CommitmentId, CommitError> {
        for p in [committer, receiver] {
            if !self.parties.contains(&p) {
                return Err(CommitError::UnknownParty(p));
            }
        }
        backend.validate()?;
        let id = CommitmentId(self.next_id);
        self.next_id += 1;
        self.events.push(Event::Commit {
            commitment: id.0,
            committer,
            receiver,
            backend: backend.to_string(),
            length: value.len(),
        });
        self.records
            .insert(id, CommitmentRecord { committer, receiver, value, status: CommitStatus::Committed, backend });
        Ok(id)
    }

    /// Opens session `id` with `claimed`.
    ///
    /// Unknown ids and callers other than the committer are rejected without
    /// touching the session. Opening a finalized session is an error.
    pub fn open(&mut self, caller: PartyId, id: CommitmentId, claimed: &BitString) -> Result<OpenResult, CommitError> {
        self.open_inner(caller, id, claimed, false)
    }

    /// Same semantics as [`open`](Self::open); logged as an equivocation
    /// attempt so adversary scripts are explicit.
    pub fn equivocate_attempt(
        &mut self,
        caller: PartyId,
        id: CommitmentId,
        new_value: &BitString,
    ) -> Result<OpenResult, CommitError> {
        self.open_inner(caller, id, new_value, true)
    }

    fn open_inner(
        &mut self,
        caller: PartyId,
        id: CommitmentId,
        claimed: &BitString,
        scripted_cheat: bool,
    ) -> Result<OpenResult, CommitError> {
        let Some(rec) = self.records.get_mut(&id) else {
            return Ok(OpenResult::Rejected(RejectReason::UnknownCommitment));
        };
        if rec.committer != caller {
            return Ok(OpenResult::Rejected(RejectReason::WrongParty));
        }
        if rec.status != CommitStatus::Committed {
            return Err(CommitError::AlreadyFinalized(id));
        }
        let caught = if claimed.len() != rec.value.len() {
            true
        } else {
            let differing = rec.value.hamming(claimed).unwrap_or(0);
            match rec.backend {
                Backend::Ideal => differing > 0,
                Backend::CheatSensitive { detection_prob } => {
                    // Draw for every differing bit so the stream does not
                    // depend on where the first detection lands.
                    let mut hit = false;
                    for _ in 0..differing {
                        hit |= self.rng.random::<f64>() < detection_prob;
                    }
                    hit
                }
            }
        };
        let result = if caught {
            rec.status = CommitStatus::CheatDetected;
            self.cheats.push(CheatNotice { id, committer: rec.committer, receiver: rec.receiver });
            OpenResult::Rejected(RejectReason::Equivocation)
        } else {
            rec.status = CommitStatus::Opened;
            self.opened_values.insert(id, claimed.clone());
            OpenResult::Accepted(claimed.clone())
        };
        let (committer, receiver, backend) = (rec.committer, rec.receiver, rec.backend.to_string());
        let result_text = result.to_string();
        if scripted_cheat {
            self.events.push(Event::Equivocation {
                commitment: id.0,
                committer,
                receiver,
                backend,
                result: result_text,
            });
        } else {
            self.events.push(Event::Open { commitment: id.0, committer, receiver, backend, result: result_text });
        }
        if caught {
            self.events.push(Event::CheatDetected { commitment: id.0, committer, receiver });
        }
        Ok(result)
    }

    /// What `receiver` knows about session `id`; `None` if it is not the
    /// session's receiver.
    pub fn receiver_view(&self, receiver: PartyId, id: CommitmentId) -> Option<ReceiverView> {
        let rec = self.records.get(&id).filter(|r| r.receiver == receiver)?;
        Some(ReceiverView {
            id,
            committer: rec.committer,
            length: rec.value.len(),
            status: rec.status,
            opened: self.opened_values.get(&id).cloned(),
        })
    }

    pub fn status(&self, id: CommitmentId) -> Option<CommitStatus> {
        self.records.get(&id).map(|r| r.status)
    }

    /// Every detected equivocation so far, in detection order.
    pub fn cheat_notices(&self) -> &[CheatNotice] {
        &self.cheats
    }
}
