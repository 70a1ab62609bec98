//! Ticket purchasing, ticket agreement, and winner determination.
//!
//! Each player commits an m-bit ticket to every miner, then opens it to every
//! miner. The miners agree on the opened list, append it, and everyone
//! derives the winning ticket as the XOR of the included tickets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;
use crate::commitment::{CommitStatus, CommitmentId};
use crate::consensus::{run_consensus, ConsensusInstance, ConsensusReport, FaultModel, PredicateDomain, BOT};
use crate::events::Event;
use crate::ledger::{MinerLedger, RecordKind, TicketList};
use crate::party::PartyId;
use crate::scalar::ShareScalar;
use crate::scenario::{ProtocolConfig, ScenarioConfig};
use crate::seed;
use crate::sim::{notice, parse_notice, ProtocolError, Sim, Trace, NOTICE_COMMIT, NOTICE_OPEN};

/// Exact revenue share.
pub type Share = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LotteryError {
    #[error("ticket list is empty")]
    Empty,
    #[error("tickets have different lengths")]
    LengthMismatch,
    #[error("distance {d} exceeds ticket length {m}")]
    DistanceOutOfRange { d: u32, m: u32 },
    #[error("no ticket survived exclusion")]
    NoValidTickets,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlayerPolicy {
    /// Uniformly random ticket.
    Honest,
    Fixed {
        ticket: BitString,
    },
    /// Commits `first`, later tries to open as `second`.
    Equivocator {
        first: BitString,
        second: BitString,
    },
}

impl PlayerPolicy {
    pub fn tickets(&self) -> Vec<&BitString> {
        match self {
            PlayerPolicy::Honest => vec![],
            PlayerPolicy::Fixed { ticket } => vec![ticket],
            PlayerPolicy::Equivocator { first, second } => vec![first, second],
        }
    }
}

/// What happens to the run when a player is caught equivocating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheatPolicy {
    #[default]
    Exclude,
    Abort,
}

impl FromStr for CheatPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exclude" => Ok(CheatPolicy::Exclude),
            "abort" => Ok(CheatPolicy::Abort),
            _ => Err(format!("unknown policy {s:?}, expected exclude or abort")),
        }
    }
}

impl fmt::Display for CheatPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheatPolicy::Exclude => "exclude",
            CheatPolicy::Abort => "abort",
        })
    }
}

/// Bitwise XOR of all tickets.
pub fn winning_ticket(tickets: &[BitString]) -> Result<BitString, LotteryError> {
    let (first, rest) = tickets.split_first().ok_or(LotteryError::Empty)?;
    rest.iter().try_fold(first.clone(), |acc, t| acc.xor(t).map_err(|_| LotteryError::LengthMismatch))
}

pub fn hamming_distance(a: &BitString, b: &BitString) -> Result<u32, LotteryError> {
    a.hamming(b).map(|d| d as u32).map_err(|_| LotteryError::LengthMismatch)
}

/// `share_i = (m - d_i + 1) / Σ_j (m - d_j + 1)`.
pub fn revenue_shares<R: ShareScalar>(distances: &[u32], m: u32) -> Result<Vec<R>, LotteryError> {
    if let Some(&d) = distances.iter().find(|&&d| d > m) {
        return Err(LotteryError::DistanceOutOfRange { d, m });
    }
    let weights: Vec<u64> = distances.iter().map(|&d| (m - d) as u64 + 1).collect();
    let total = R::from_count(weights.iter().sum());
    Ok(weights.into_iter().map(|w| R::from_count(w) / total.clone()).collect())
}

fn ratio_pairs<S: Serializer>(v: &[(PartyId, Share)], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|(p, r)| (p, r.to_string())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LotteryOutcome {
    /// Every player, `None` when excluded.
    pub tickets: Vec<(PartyId, Option<BitString>)>,
    pub winning_ticket: BitString,
    /// Included players only.
    pub distances: Vec<(PartyId, u32)>,
    #[serde(serialize_with = "ratio_pairs")]
    pub revenues: Vec<(PartyId, Share)>,
}

/// Derives the outcome from an agreed ticket list alone.
pub fn outcome_from_record(list: &TicketList) -> Result<LotteryOutcome, LotteryError> {
    let included: Vec<(PartyId, BitString)> =
        list.included().map(|(i, t)| (PartyId::player(i as u32), t.clone())).collect();
    if included.is_empty() {
        return Err(LotteryError::NoValidTickets);
    }
    let tickets: Vec<BitString> = included.iter().map(|(_, t)| t.clone()).collect();
    let winning = winning_ticket(&tickets)?;
    let distances = included
        .iter()
        .map(|(p, t)| Ok((*p, hamming_distance(t, &winning)?)))
        .collect::<Result<Vec<_>, LotteryError>>()?;
    let ds: Vec<u32> = distances.iter().map(|(_, d)| *d).collect();
    let shares = revenue_shares::<Share>(&ds, list.ticket_bits)?;
    Ok(LotteryOutcome {
        tickets: list.entries.iter().enumerate().map(|(i, e)| (PartyId::player(i as u32), e.clone())).collect(),
        winning_ticket: winning,
        distances,
        revenues: included.iter().map(|(p, _)| *p).zip(shares).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LotteryStatus {
    Completed(LotteryOutcome),
    /// Cheat detected under the abort policy; nothing was appended.
    Aborted {
        excluded: Vec<PartyId>,
    },
    /// Honest miners disagree or decided ⊥_D.
    NoAgreement,
    NoValidTickets,
}

/// One miner's local conclusions before consensus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LotteryVerdict {
    pub miner: PartyId,
    /// Players this miner caught equivocating.
    pub detected: Vec<PartyId>,
    /// The ticket list it proposed, rendered.
    pub proposed: String,
}

#[derive(Debug, Clone)]
pub struct LotteryRun {
    pub status: LotteryStatus,
    pub verdicts: Vec<LotteryVerdict>,
    pub consensus: ConsensusReport,
    /// Honest miners' ledgers.
    pub ledgers: Vec<MinerLedger>,
    /// The committed tickets, for oracles. Not part of any party's view.
    pub committed: Vec<BitString>,
    pub cheaters: Vec<PartyId>,
    pub trace: Trace,
}

#[derive(Default)]
struct MinerState {
    commits: BTreeMap<u32, CommitmentId>,
    opened: BTreeMap<u32, BitString>,
    detected: BTreeSet<PartyId>,
}

/// Runs all three phases.
pub fn run_lottery(config: &ScenarioConfig) -> Result<LotteryRun, ProtocolError> {
    let ProtocolConfig::Lottery(lc) = &config.protocol else {
        return Err(ProtocolError::WrongProtocol("lottery"));
    };
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(ProtocolError::Invalid(errs));
    }
    let (n, m) = (lc.players, lc.ticket_bits);
    let players: Vec<PartyId> = (0..n).map(PartyId::player).collect();
    let miners = config.miner_ids();
    let faults = FaultModel { byzantine: config.byzantine.clone() };
    let mut sim = Sim::new(config.network(), &config.parties())?;
    for h in &config.hooks {
        sim.net.add_hook(h.clone());
    }

    let policy_of = |i: u32| lc.player_policies.get(&i).cloned().unwrap_or(PlayerPolicy::Honest);
    let committed: Vec<BitString> = (0..n)
        .map(|i| match policy_of(i) {
            PlayerPolicy::Honest => {
                BitString::random(&mut seed::rng(config.seed, "player-ticket", i as u64), m as usize).expect("m ≥ 1")
            }
            PlayerPolicy::Fixed { ticket } => ticket,
            PlayerPolicy::Equivocator { first, .. } => first,
        })
        .collect();

    let mut states: BTreeMap<PartyId, MinerState> = miners.iter().map(|&mj| (mj, MinerState::default())).collect();
    let mut sessions: BTreeMap<(u32, PartyId), CommitmentId> = BTreeMap::new();

    sim.phase("ticket_purchasing");
    for (i, &p) in players.iter().enumerate() {
        for &mj in &miners {
            let id = sim.commit(p, mj, committed[i].clone(), config.backend)?;
            sessions.insert((i as u32, mj), id);
            sim.send(p, mj, notice(NOTICE_COMMIT, id))?;
        }
    }
    for d in sim.drain() {
        let Ok(bytes) = d.result else { continue };
        let Some((NOTICE_COMMIT, id)) = parse_notice(&bytes) else {
            continue;
        };
        let view = sim.registry.receiver_view(d.receiver, id);
        if let (Some(v), Some(st)) = (view, states.get_mut(&d.receiver)) {
            if v.committer == d.sender && v.length == m as usize && v.status == CommitStatus::Committed {
                st.commits.entry(d.sender.index).or_insert(id);
            }
        }
    }

    sim.phase("ticket_agreement");
    for (i, &p) in players.iter().enumerate() {
        for &mj in &miners {
            let id = sessions[&(i as u32, mj)];
            match policy_of(i as u32) {
                PlayerPolicy::Equivocator { second, .. } => sim.equivocate(p, id, &second)?,
                _ => sim.open(p, id, &committed[i])?,
            };
            sim.send(p, mj, notice(NOTICE_OPEN, id))?;
        }
    }
    for d in sim.drain() {
        let Ok(bytes) = d.result else { continue };
        let Some((NOTICE_OPEN, id)) = parse_notice(&bytes) else {
            continue;
        };
        let Some(st) = states.get_mut(&d.receiver) else {
            continue;
        };
        if st.commits.get(&d.sender.index) != Some(&id) {
            continue;
        }
        match sim.registry.receiver_view(d.receiver, id) {
            Some(v) if v.status == CommitStatus::Opened => {
                if let Some(t) = v.opened {
                    st.opened.insert(d.sender.index, t);
                }
            }
            Some(v) if v.status == CommitStatus::CheatDetected => {
                st.detected.insert(d.sender);
            }
            _ => {}
        }
    }

    let lists: BTreeMap<PartyId, TicketList> = states
        .iter()
        .map(|(&mj, st)| {
            (mj, TicketList { ticket_bits: m, entries: (0..n).map(|i| st.opened.get(&i).cloned()).collect() })
        })
        .collect();
    let domain = PredicateDomain(|b: &[u8]| {
        TicketList::decode(b).is_ok_and(|t| t.entries.len() == n as usize && t.ticket_bits == m)
    });
    let mut instance = ConsensusInstance::new(0, miners.clone(), &domain)?;
    for (&mj, list) in &lists {
        instance.propose(mj, list.encode())?;
    }
    let report = run_consensus(&mut sim, &instance, &faults, config.seed)?;

    let honest: Vec<PartyId> = miners.iter().copied().filter(|mj| !faults.is_byzantine(*mj)).collect();
    let mut ledgers: Vec<MinerLedger> = honest.iter().map(|&mj| MinerLedger::new(mj)).collect();
    sim.phase("winner_determination");
    let status = match report.agreed() {
        None | Some(BOT) => {
            // Without agreement each miner still records what it decided.
            for l in &mut ledgers {
                let body = report.decision_of(l.owner).unwrap_or(BOT).to_vec();
                if !body.is_empty() {
                    l.append_finalized(RecordKind::TicketList, &body, &report)?;
                }
            }
            LotteryStatus::NoAgreement
        }
        Some(body) => {
            let list = TicketList::decode(body).expect("decided value lies in the domain");
            let excluded: Vec<PartyId> =
                list.entries.iter().enumerate().filter(|(_, e)| e.is_none()).map(|(i, _)| players[i]).collect();
            let caught: BTreeSet<PartyId> = sim.cheat_notices().iter().map(|c| c.committer).collect();
            for &p in &excluded {
                let reason = if caught.contains(&p) { "equivocation" } else { "no valid opening" };
                sim.record(Event::Excluded { party: p, reason: reason.to_string() });
            }
            if lc.policy == CheatPolicy::Abort && !excluded.is_empty() {
                LotteryStatus::Aborted { excluded }
            } else {
                for l in &mut ledgers {
                    l.append_finalized(RecordKind::TicketList, body, &report)?;
                }
                match outcome_from_record(&list) {
                    Ok(o) => LotteryStatus::Completed(o),
                    Err(_) => LotteryStatus::NoValidTickets,
                }
            }
        }
    };

    let verdicts = honest
        .iter()
        .map(|mj| LotteryVerdict {
            miner: *mj,
            detected: states[mj].detected.iter().copied().collect(),
            proposed: lists[mj].to_string(),
        })
        .collect();
    let cheaters: BTreeSet<PartyId> = sim.cheat_notices().iter().map(|c| c.committer).collect();
    Ok(LotteryRun {
        status,
        verdicts,
        consensus: report,
        ledgers,
        committed,
        cheaters: cheaters.into_iter().collect(),
        trace: sim.finish(),
    })
}
