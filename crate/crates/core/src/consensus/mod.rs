//! Miner agreement over authenticated links.
//!
//! Every message travels through the [`Sim`] network. A message that fails
//! authentication, is malformed, or carries a value outside the instance's
//! domain is read as ⊥_D (the empty byte string), and so is a missing one.

pub mod phase_king;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::Event;
use crate::party::PartyId;
use crate::seed;
use crate::sim::Sim;
use crate::transport::TransportError;
use phase_king::{decision_phase, king, HonestMiner};
pub use phase_king::{tolerance, Msg, Round, BOT};

/// Finite input domain D. ⊥_D is always a member.
pub trait Domain {
    fn contains(&self, value: &[u8]) -> bool;
}

#[derive(Debug, Clone, Default)]
pub struct ExplicitDomain(BTreeSet<Vec<u8>>);

impl ExplicitDomain {
    pub fn new(values: impl IntoIterator<Item = Vec<u8>>) -> Self {
        Self(values.into_iter().collect())
    }
}

impl Domain for ExplicitDomain {
    fn contains(&self, value: &[u8]) -> bool {
        value == BOT || self.0.contains(value)
    }
}

/// Domain given by a membership test, for sets too large to list.
pub struct PredicateDomain<F>(pub F);

impl<F: Fn(&[u8]) -> bool> Domain for PredicateDomain<F> {
    fn contains(&self, value: &[u8]) -> bool {
        value == BOT || (self.0)(value)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("{0} is not a participant")]
    NotParticipant(PartyId),
    #[error("value proposed by {0} is outside the domain")]
    OutsideDomain(PartyId),
    #[error("{0} already proposed a different value")]
    ConflictingProposal(PartyId),
    #[error("honest miner {0} has no input")]
    MissingInput(PartyId),
    #[error("consensus needs at least one participant")]
    NoParticipants,
    #[error(transparent)]
    Transport(#[from] TransportError),
}

pub struct ConsensusInstance<'d> {
    id: u64,
    participants: Vec<PartyId>,
    domain: &'d dyn Domain,
    inputs: BTreeMap<PartyId, Vec<u8>>,
}

impl<'d> ConsensusInstance<'d> {
    pub fn new(id: u64, participants: Vec<PartyId>, domain: &'d dyn Domain) -> Result<Self, ConsensusError> {
        if participants.is_empty() {
            return Err(ConsensusError::NoParticipants);
        }
        Ok(Self { id, participants, domain, inputs: BTreeMap::new() })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn participants(&self) -> &[PartyId] {
        &self.participants
    }

    /// Registers `miner`'s input. Re-proposing the same value is a no-op.
    pub fn propose(&mut self, miner: PartyId, value: Vec<u8>) -> Result<(), ConsensusError> {
        if !self.participants.contains(&miner) {
            return Err(ConsensusError::NotParticipant(miner));
        }
        if !self.domain.contains(&value) {
            return Err(ConsensusError::OutsideDomain(miner));
        }
        match self.inputs.get(&miner) {
            Some(v) if *v != value => Err(ConsensusError::ConflictingProposal(miner)),
            Some(_) => Ok(()),
            None => {
                self.inputs.insert(miner, value);
                Ok(())
            }
        }
    }

    pub fn input(&self, miner: PartyId) -> Option<&[u8]> {
        self.inputs.get(&miner).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ByzantineBehavior {
    /// Sends independently chosen candidate values to each recipient.
    Equivocate,
    Silent,
    /// Malformed envelopes and out-of-domain values.
    Garbage,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultModel {
    pub byzantine: BTreeMap<PartyId, ByzantineBehavior>,
}

impl FaultModel {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn is_byzantine(&self, p: PartyId) -> bool {
        self.byzantine.contains_key(&p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub phase: u32,
    pub round: u8,
    pub from: PartyId,
    pub to: PartyId,
    /// `value:<hex>`, `no_proposal`, `invalid`, or `auth_failure`.
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusReport {
    pub instance: u64,
    /// Honest miners' inputs.
    pub inputs: BTreeMap<PartyId, Vec<u8>>,
    /// Honest miners only.
    pub decisions: BTreeMap<PartyId, Vec<u8>>,
    /// First phase (1-based) after which every honest value was final.
    pub decision_phase: u32,
    pub phases_run: u32,
    /// Set when `3f ≥ n`, where agreement and validity are not promised.
    pub guarantees_void: bool,
    pub transcript: Vec<TranscriptEntry>,
}

impl ConsensusReport {
    pub fn decision_of(&self, miner: PartyId) -> Option<&[u8]> {
        self.decisions.get(&miner).map(Vec::as_slice)
    }

    /// The common honest decision, if there is one.
    /// Validity premise: every honest input is the same value.
    pub fn unanimous_input(&self) -> Option<&[u8]> {
        let mut it = self.inputs.values();
        let first = it.next()?;
        it.all(|v| v == first).then_some(first.as_slice())
    }

    pub fn agreed(&self) -> Option<&[u8]> {
        let mut it = self.decisions.values();
        let first = it.next()?;
        it.all(|v| v == first).then_some(first.as_slice())
    }

    pub fn summary(&self) -> ConsensusSummary {
        ConsensusSummary {
            instance: self.instance,
            inputs: self.inputs.iter().map(|(p, v)| (*p, hex::encode(v))).collect(),
            decisions: self.decisions.iter().map(|(p, v)| (*p, hex::encode(v))).collect(),
            decision_phase: self.decision_phase,
            phases_run: self.phases_run,
            guarantees_void: self.guarantees_void,
            transcript: self.transcript.clone(),
        }
    }
}

/// Serializable form of a [`ConsensusReport`], values in hex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusSummary {
    pub instance: u64,
    pub inputs: Vec<(PartyId, String)>,
    pub decisions: Vec<(PartyId, String)>,
    pub decision_phase: u32,
    pub phases_run: u32,
    pub guarantees_void: bool,
    pub transcript: Vec<TranscriptEntry>,
}

fn encode(instance: u64, phase: u32, round: Round, msg: &Msg) -> Vec<u8> {
    let mut out = Vec::with_capacity(14);
    out.extend_from_slice(&instance.to_be_bytes());
    out.extend_from_slice(&phase.to_be_bytes());
    out.push(round as u8);
    match msg {
        Msg::Value(v) => {
            out.push(0);
            out.extend_from_slice(v);
        }
        Msg::NoProposal => out.push(1),
    }
    out
}

fn decode(bytes: &[u8], instance: u64, phase: u32, round: Round) -> Option<Msg> {
    if bytes.len() < 14
        || bytes[..8] != instance.to_be_bytes()
        || bytes[8..12] != phase.to_be_bytes()
        || bytes[12] != round as u8
    {
        return None;
    }
    match (bytes[13], round) {
        (0, _) => Some(Msg::Value(bytes[14..].to_vec())),
        (1, Round::Propose) if bytes.len() == 14 => Some(Msg::NoProposal),
        _ => None,
    }
}

/// Runs phase king among the instance's participants over the simulated
/// network. Honest participants must all have proposed.
pub fn run_consensus(
    sim: &mut Sim,
    instance: &ConsensusInstance<'_>,
    faults: &FaultModel,
    seed: u64,
) -> Result<ConsensusReport, ConsensusError> {
    let ps = &instance.participants;
    let n = ps.len();
    let t = tolerance(n);
    let byz_count = ps.iter().filter(|p| faults.is_byzantine(**p)).count();
    let mut honest = Vec::new();
    for &p in ps {
        if !faults.is_byzantine(p) {
            let x = instance.inputs.get(&p).ok_or(ConsensusError::MissingInput(p))?;
            honest.push(HonestMiner::new(p, n, x.clone()));
        }
    }
    let mut candidates: Vec<Vec<u8>> = instance.inputs.values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if !candidates.iter().any(|c| c.is_empty()) {
        candidates.push(BOT.to_vec());
    }
    let mut rng = seed::rng(seed, "byzantine", instance.id);

    let mut transcript = Vec::new();
    let mut history = Vec::new();
    for phase in 0..=t as u32 {
        let k = king(ps, phase);
        for round in Round::ALL {
            let mut inboxes: BTreeMap<PartyId, BTreeMap<PartyId, Msg>> = BTreeMap::new();
            for &from in ps {
                let me = honest.iter().find(|m| m.id == from);
                for to in honest.iter().map(|m| m.id) {
                    let payload = match (me, faults.byzantine.get(&from)) {
                        (Some(m), _) => match m.outgoing(round, from == k) {
                            Some(msg) if to == from => {
                                inboxes.entry(to).or_default().insert(from, msg);
                                continue;
                            }
                            Some(msg) => encode(instance.id, phase, round, &msg),
                            None => continue,
                        },
                        (None, _) if round == Round::King && from != k => continue,
                        (None, Some(ByzantineBehavior::Silent)) | (None, None) => continue,
                        (None, Some(ByzantineBehavior::Equivocate)) => {
                            let msg = if round == Round::Propose && rng.random_bool(0.25) {
                                Msg::NoProposal
                            } else {
                                Msg::Value(candidates.choose(&mut rng).expect("non-empty").clone())
                            };
                            encode(instance.id, phase, round, &msg)
                        }
                        (None, Some(ByzantineBehavior::Garbage)) => {
                            let len = rng.random_range(0..24);
                            let junk: Vec<u8> = (0..len).map(|_| rng.random()).collect();
                            if rng.random_bool(0.5) {
                                encode(instance.id, phase, round, &Msg::Value(junk))
                            } else {
                                junk
                            }
                        }
                    };
                    sim.send(from, to, payload)?;
                }
            }
            for d in sim.drain() {
                let (message, msg) = match &d.result {
                    Err(_) => ("auth_failure".to_string(), None),
                    Ok(bytes) => match decode(bytes, instance.id, phase, round) {
                        Some(Msg::Value(v)) if instance.domain.contains(&v) => {
                            (format!("value:{}", hex::encode(&v)), Some(Msg::Value(v)))
                        }
                        Some(Msg::NoProposal) => ("no_proposal".to_string(), Some(Msg::NoProposal)),
                        _ => ("invalid".to_string(), None),
                    },
                };
                transcript.push(TranscriptEntry {
                    phase: phase + 1,
                    round: round as u8,
                    from: d.sender,
                    to: d.receiver,
                    message,
                });
                inboxes.entry(d.receiver).or_default().insert(d.sender, msg.unwrap_or(Msg::Value(BOT.to_vec())));
            }
            for m in &mut honest {
                let inbox = inboxes.entry(m.id).or_default();
                if round != Round::King {
                    for &p in ps {
                        inbox.entry(p).or_insert(Msg::Value(BOT.to_vec()));
                    }
                }
                m.receive(round, inbox, k);
            }
        }
        history.push(honest.iter().map(|m| (m.id, m.value().to_vec())).collect::<BTreeMap<_, _>>());
    }

    let report = ConsensusReport {
        instance: instance.id,
        inputs: ps.iter().filter(|p| !faults.is_byzantine(**p)).map(|p| (*p, instance.inputs[p].clone())).collect(),
        decisions: honest.iter().map(|m| (m.id, m.value().to_vec())).collect(),
        decision_phase: decision_phase(&history),
        phases_run: t as u32 + 1,
        guarantees_void: 3 * byz_count >= n,
        transcript,
    };
    sim.record(Event::ConsensusDecided {
        instance: instance.id,
        decisions: report.decisions.iter().map(|(p, v)| (*p, (!v.is_empty()).then(|| hex::encode(v)))).collect(),
        guarantees_void: report.guarantees_void,
    });
    Ok(report)
}
