//! Phase-king agreement for `n > 3t`, three rounds per phase.
//!
//! Round 1: everyone broadcasts its value. A value seen at least `n - t`
//! times becomes the proposal, otherwise the proposal is empty.
//! Round 2: everyone broadcasts its proposal. A value proposed at least
//! `t + 1` times is adopted; `n - t` times makes the holder *strong*.
//! Round 3: the phase king broadcasts its value and every non-strong miner
//! adopts it.
//!
//! With `t + 1` phases at least one king is honest, which forces agreement;
//! once all honest miners agree they stay agreed. This module is the pure
//! state machine; the networked driver lives in the parent module.

use std::collections::BTreeMap;

use crate::party::PartyId;

/// The reserved default value ⊥_D.
pub const BOT: &[u8] = &[];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Round {
    Value = 1,
    Propose = 2,
    King = 3,
}

impl Round {
    pub const ALL: [Round; 3] = [Round::Value, Round::Propose, Round::King];

    pub fn from_code(code: u8) -> Option<Self> {
        Round::ALL.into_iter().find(|r| *r as u8 == code)
    }
}

/// One round message body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Msg {
    Value(Vec<u8>),
    /// Round-2 "no proposal".
    NoProposal,
}

/// Largest number of faults tolerated by `n` miners.
pub fn tolerance(n: usize) -> usize {
    n.saturating_sub(1) / 3
}

/// Kings rotate through the participants in order.
pub fn king(participants: &[PartyId], phase: u32) -> PartyId {
    participants[phase as usize % participants.len()]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HonestMiner {
    pub id: PartyId,
    n: usize,
    t: usize,
    value: Vec<u8>,
    proposal: Option<Vec<u8>>,
    strong: bool,
}

impl HonestMiner {
    pub fn new(id: PartyId, n: usize, input: Vec<u8>) -> Self {
        Self { id, n, t: tolerance(n), value: input, proposal: None, strong: false }
    }

    pub fn value(&self) -> &[u8] {
        &self.value
    }

    /// What this miner sends in `round`; `None` when it stays quiet (round 3
    /// for non-kings).
    pub fn outgoing(&self, round: Round, is_king: bool) -> Option<Msg> {
        match round {
            Round::Value => Some(Msg::Value(self.value.clone())),
            Round::Propose => Some(self.proposal.clone().map_or(Msg::NoProposal, Msg::Value)),
            Round::King => is_king.then(|| Msg::Value(self.value.clone())),
        }
    }

    /// Consumes one message per participant. Missing or invalid messages
    /// must already be mapped to `Msg::Value(BOT)` by the caller. In round 3
    /// only the king's entry is read.
    pub fn receive(&mut self, round: Round, inbox: &BTreeMap<PartyId, Msg>, king: PartyId) {
        match round {
            Round::Value => {
                let counts = tally(inbox.values().filter_map(|m| match m {
                    Msg::Value(v) => Some(v),
                    Msg::NoProposal => None,
                }));
                self.proposal = counts.into_iter().find(|(_, c)| *c >= self.n - self.t).map(|(v, _)| v.clone());
            }
            Round::Propose => {
                let counts = tally(inbox.values().filter_map(|m| match m {
                    Msg::Value(v) => Some(v),
                    Msg::NoProposal => None,
                }));
                self.strong = false;
                // At most one value can reach t + 1 when n > 3t.
                if let Some((v, c)) = counts.into_iter().filter(|(_, c)| *c > self.t).max_by_key(|(_, c)| *c) {
                    self.value = v.clone();
                    self.strong = c >= self.n - self.t;
                }
            }
            Round::King => {
                if !self.strong {
                    self.value = match inbox.get(&king) {
                        Some(Msg::Value(v)) => v.clone(),
                        _ => BOT.to_vec(),
                    };
                }
            }
        }
    }
}

fn tally<'a>(values: impl Iterator<Item = &'a Vec<u8>>) -> BTreeMap<&'a Vec<u8>, usize> {
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
}

/// Outcome of a run of the pure core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureRun {
    pub decisions: BTreeMap<PartyId, Vec<u8>>,
    /// Honest values at the end of each phase.
    pub history: Vec<BTreeMap<PartyId, Vec<u8>>>,
}

impl PureRun {
    /// First phase (1-based) after which every honest value equals the final
    /// decision and stays there.
    pub fn decision_phase(&self) -> u32 {
        decision_phase(&self.history)
    }
}

/// Given honest values after each phase, the first phase (1-based) from which
/// they all equal the final value; `history.len() + 1` if they never agree.
pub fn decision_phase(history: &[BTreeMap<PartyId, Vec<u8>>]) -> u32 {
    let Some(last) = history.last().and_then(|s| s.values().next()) else {
        return 0;
    };
    let settled = history.iter().rev().take_while(|s| s.values().all(|v| v == last)).count();
    (history.len() - settled + 1) as u32
}

/// Runs the state machine without a network. `inputs[i] = None` marks
/// participant `i` as Byzantine; `adversary(phase, round, from, to)` supplies
/// every message a Byzantine sender delivers.
pub fn run_pure(
    participants: &[PartyId],
    inputs: &[Option<Vec<u8>>],
    adversary: &mut dyn FnMut(u32, Round, PartyId, PartyId) -> Msg,
) -> PureRun {
    let n = participants.len();
    let t = tolerance(n);
    let mut honest: Vec<HonestMiner> = participants
        .iter()
        .zip(inputs)
        .filter_map(|(&p, x)| x.as_ref().map(|x| HonestMiner::new(p, n, x.clone())))
        .collect();
    let mut history = Vec::new();
    for phase in 0..=t as u32 {
        let k = king(participants, phase);
        for round in Round::ALL {
            let mut inboxes: BTreeMap<PartyId, BTreeMap<PartyId, Msg>> = BTreeMap::new();
            for &from in participants {
                let sender = honest.iter().find(|m| m.id == from);
                for to in honest.iter().map(|m| m.id) {
                    let msg = match sender {
                        Some(m) => m.outgoing(round, from == k),
                        None if round == Round::King && from != k => None,
                        None => Some(adversary(phase, round, from, to)),
                    };
                    let msg = match (msg, round) {
                        (Some(m), _) => m,
                        (None, Round::King) => continue,
                        (None, _) => Msg::Value(BOT.to_vec()),
                    };
                    inboxes.entry(to).or_default().insert(from, msg);
                }
            }
            for m in &mut honest {
                m.receive(round, &inboxes[&m.id], k);
            }
        }
        history.push(honest.iter().map(|m| (m.id, m.value.clone())).collect());
    }
    PureRun { decisions: honest.iter().map(|m| (m.id, m.value.clone())).collect(), history }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn miners(n: u32) -> Vec<PartyId> {
        (0..n).map(PartyId::miner).collect()
    }

    #[test]
    fn tolerance_bound() {
        assert_eq!([1, 3, 4, 6, 7, 10].map(tolerance), [0, 0, 1, 1, 2, 3]);
    }

    #[test]
    fn unanimous_honest_decide_in_phase_one() {
        let ps = miners(4);
        let run = run_pure(&ps, &vec![Some(b"v".to_vec()); 4], &mut |_, _, _, _| unreachable!());
        assert!(run.decisions.values().all(|v| v == b"v"));
        assert_eq!(run.decision_phase(), 1);
    }

    #[test]
    fn honest_king_forces_agreement_on_split_inputs() {
        let ps = miners(4);
        let inputs = vec![Some(b"a".to_vec()), Some(b"b".to_vec()), Some(b"a".to_vec()), Some(b"b".to_vec())];
        let run = run_pure(&ps, &inputs, &mut |_, _, _, _| unreachable!());
        let first = run.decisions.values().next().unwrap();
        assert!(run.decisions.values().all(|v| v == first));
    }

    #[test]
    fn exhaustive_single_equivocator() {
        // Every honest input is v; the equivocator picks v or w for each
        // (phase, round, recipient), in every position of the king order.
        let ps = miners(4);
        let (v, w) = (b"v".to_vec(), b"w".to_vec());
        for byz in 0..4 {
            let inputs: Vec<_> = (0..4).map(|i| (i != byz).then(|| v.clone())).collect();
            let honest: Vec<PartyId> = ps.iter().copied().filter(|p| p.index != byz as u32).collect();
            for mask in 0u32..(1 << 18) {
                let mut adv = |phase: u32, round: Round, _from: PartyId, to: PartyId| {
                    let r = honest.iter().position(|p| *p == to).unwrap() as u32;
                    let bit = phase * 9 + (round as u32 - 1) * 3 + r;
                    Msg::Value(if mask >> bit & 1 == 1 { w.clone() } else { v.clone() })
                };
                let run = run_pure(&ps, &inputs, &mut adv);
                assert!(run.decisions.values().all(|d| *d == v), "byz {byz} mask {mask:#x}");
                assert!(run.decision_phase() <= 2);
            }
        }
    }

    #[test]
    fn exhaustive_equivocator_with_split_honest_inputs() {
        let ps = miners(4);
        let (v, w) = (b"v".to_vec(), b"w".to_vec());
        let inputs = vec![None, Some(v.clone()), Some(w.clone()), Some(v.clone())];
        for mask in 0u32..(1 << 18) {
            let mut adv = |phase: u32, round: Round, _from: PartyId, to: PartyId| {
                let bit = phase * 9 + (round as u32 - 1) * 3 + (to.index - 1);
                match (round, mask >> bit & 1) {
                    (Round::Propose, 0) => Msg::NoProposal,
                    (_, 0) => Msg::Value(v.clone()),
                    _ => Msg::Value(w.clone()),
                }
            };
            let run = run_pure(&ps, &inputs, &mut adv);
            let first = run.decisions.values().next().unwrap();
            assert!(run.decisions.values().all(|d| d == first), "mask {mask:#x}");
            assert!(run.decision_phase() <= 2);
        }
    }
}
