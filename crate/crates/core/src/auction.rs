//! Sealed-bid auction: bidding, opening, decision, verification, publication.
//!
//! Membership during verification is checked against the multiset
//! `{b_w} ∪ losing`. Each buyer holds a slot: buyers sharing a value are
//! numbered 1..k by index, and a buyer's check passes only if the multiset
//! holds at least `slot` copies of its value. A complaint is upheld only if
//! the opened bid is genuinely short in the multiset; otherwise the buyer is
//! a false accuser.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::commitment::{CommitStatus, CommitmentId};
use crate::consensus::{run_consensus, ConsensusInstance, ConsensusReport, FaultModel, PredicateDomain, BOT};
use crate::events::Event;
use crate::ledger::{max_bid, MinerLedger, RecordKind, VerificationOutput};
use crate::party::{PartyId, Role};
use crate::scenario::{ProtocolConfig, ScenarioConfig};
use crate::seed;
use crate::sim::{notice, parse_notice, ProtocolError, Sim, Trace, NOTICE_COMMIT, NOTICE_OPEN};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SellerPolicy {
    #[default]
    Honest,
    /// Names the highest non-maximal bidder and hides the true maximum.
    WrongWinner,
    /// Overstates the winning bid.
    InflateBid,
    /// Replaces one losing bid with a different value.
    DropLoser,
}

impl SellerPolicy {
    pub const DEVIATIONS: [SellerPolicy; 3] =
        [SellerPolicy::WrongWinner, SellerPolicy::InflateBid, SellerPolicy::DropLoser];

    /// Whether the deviation can be expressed for these bids under `width`.
    pub fn is_applicable(self, bids: &[u64], width: u32) -> bool {
        let Some(&max) = bids.iter().max() else {
            return false;
        };
        match self {
            SellerPolicy::Honest => true,
            SellerPolicy::WrongWinner => bids.iter().any(|&b| b < max),
            SellerPolicy::InflateBid => max < max_bid(width),
            SellerPolicy::DropLoser => {
                bids.len() >= 2 && {
                    let losers = sorted_losers(bids);
                    drop_substitute(&losers, max).is_some()
                }
            }
        }
    }
}

impl FromStr for SellerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest" => Ok(SellerPolicy::Honest),
            "wrong-winner" => Ok(SellerPolicy::WrongWinner),
            "inflate" => Ok(SellerPolicy::InflateBid),
            "drop-loser" => Ok(SellerPolicy::DropLoser),
            _ => Err(format!("unknown seller policy {s:?}, expected honest, wrong-winner, inflate or drop-loser")),
        }
    }
}

impl fmt::Display for SellerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SellerPolicy::Honest => "honest",
            SellerPolicy::WrongWinner => "wrong-winner",
            SellerPolicy::InflateBid => "inflate",
            SellerPolicy::DropLoser => "drop-loser",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuyerPolicy {
    #[default]
    Honest,
    /// Opens `bid` to the seller instead of the committed value.
    ChangeBid { bid: u64 },
    /// Complains to every miner although its bid is present.
    FalseAccuse,
    /// Complains and opens `bid` to the miner instead of the committed value.
    ForgeComplaint { bid: u64 },
}

impl BuyerPolicy {
    pub fn alternate_bid(&self) -> Option<u64> {
        match *self {
            BuyerPolicy::ChangeBid { bid } | BuyerPolicy::ForgeComplaint { bid } => Some(bid),
            _ => None,
        }
    }
}

/// Highest bid; ties broken uniformly with `rng`.
pub fn decide_winner<R: Rng + ?Sized>(bids: &[(PartyId, u64)], rng: &mut R) -> Option<(PartyId, u64)> {
    let max = bids.iter().map(|(_, b)| *b).max()?;
    let top: Vec<&(PartyId, u64)> = bids.iter().filter(|(_, b)| *b == max).collect();
    Some(*top[rng.random_range(0..top.len())])
}

/// All bids except the winner's, uniformly shuffled.
pub fn permute_losing<R: Rng + ?Sized>(bids: &[u64], winner_index: usize, rng: &mut R) -> Vec<u64> {
    let mut losing: Vec<u64> = bids.iter().enumerate().filter(|(i, _)| *i != winner_index).map(|(_, b)| *b).collect();
    losing.shuffle(rng);
    losing
}

fn sorted_losers(bids: &[u64]) -> Vec<u64> {
    let mut v = bids.to_vec();
    v.sort_unstable();
    v.pop();
    v
}

/// Replacement for the smallest loser: another loser's value if one
/// differs, else one step up or down within `[1, cap]`.
fn drop_substitute(losers: &[u64], cap: u64) -> Option<(u64, u64)> {
    let dropped = *losers.iter().min()?;
    if let Some(&other) = losers.iter().find(|&&b| b != dropped) {
        return Some((dropped, other));
    }
    if dropped < cap {
        Some((dropped, dropped + 1))
    } else if dropped > 1 {
        Some((dropped, dropped - 1))
    } else {
        None
    }
}

/// What the seller tells each miner in step 4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SellerClaim {
    pub winner: PartyId,
    pub winning_bid: u64,
    pub losing: Vec<u64>,
}

impl SellerClaim {
    fn encode(&self) -> Vec<u8> {
        let mut out = self.winner.to_bytes().to_vec();
        out.extend(encode_list(self.winning_bid, &self.losing));
        out
    }

    fn decode(bytes: &[u8]) -> Option<Self> {
        let winner = PartyId::from_bytes(bytes.get(..5)?)?;
        let (winning_bid, losing) = decode_list(&bytes[5..])?;
        Some(Self { winner, winning_bid, losing })
    }

    /// Multiset `{b_w} ∪ losing` as value counts.
    fn multiset(&self) -> BTreeMap<u64, usize> {
        multiset(self.winning_bid, &self.losing)
    }
}

fn multiset(winning: u64, losing: &[u64]) -> BTreeMap<u64, usize> {
    let mut m = BTreeMap::new();
    for &b in std::iter::once(&winning).chain(losing) {
        *m.entry(b).or_insert(0) += 1;
    }
    m
}

/// `b_w | k: u32 | k × u64`: the list miners forward to buyers.
fn encode_list(winning: u64, losing: &[u64]) -> Vec<u8> {
    let mut out = winning.to_be_bytes().to_vec();
    out.extend_from_slice(&(losing.len() as u32).to_be_bytes());
    for b in losing {
        out.extend_from_slice(&b.to_be_bytes());
    }
    out
}

pub fn decode_list(bytes: &[u8]) -> Option<(u64, Vec<u64>)> {
    let winning = u64::from_be_bytes(bytes.get(..8)?.try_into().ok()?);
    let k = u32::from_be_bytes(bytes.get(8..12)?.try_into().ok()?) as usize;
    let rest = bytes.get(12..)?;
    if rest.len() != k.checked_mul(8)? {
        return None;
    }
    Some((winning, rest.chunks(8).map(|c| u64::from_be_bytes(c.try_into().expect("8 bytes"))).collect()))
}

/// Applies a seller deviation to the honest claim. `bids` are the active
/// buyers' accepted bids.
pub fn apply_seller_policy(
    policy: SellerPolicy,
    honest: &SellerClaim,
    bids: &[(PartyId, u64)],
    width: u32,
) -> SellerClaim {
    let values: Vec<u64> = bids.iter().map(|(_, b)| *b).collect();
    if !policy.is_applicable(&values, width) {
        return honest.clone();
    }
    let max = honest.winning_bid;
    match policy {
        SellerPolicy::Honest => honest.clone(),
        SellerPolicy::WrongWinner => {
            let (fake, fake_bid) = bids
                .iter()
                .filter(|(_, b)| *b < max)
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .copied()
                .expect("applicable");
            // Drop one copy of the fake winner's bid and cap everything above it.
            let mut losing = honest.losing.clone();
            let pos = losing.iter().position(|&b| b == fake_bid).expect("fake winner is a loser");
            losing[pos] = honest.winning_bid;
            for b in &mut losing {
                *b = (*b).min(fake_bid);
            }
            SellerClaim { winner: fake, winning_bid: fake_bid, losing }
        }
        SellerPolicy::InflateBid => SellerClaim { winning_bid: (max + 2).min(max_bid(width)), ..honest.clone() },
        SellerPolicy::DropLoser => {
            let (dropped, substitute) = drop_substitute(&honest.losing, max).expect("applicable");
            let mut losing = honest.losing.clone();
            let pos = losing.iter().position(|&b| b == dropped).expect("present");
            losing[pos] = substitute;
            SellerClaim { losing, ..honest.clone() }
        }
    }
}

/// Slot of each buyer among buyers with the same accepted bid, from 1.
pub fn slots(bids: &[(PartyId, u64)]) -> BTreeMap<PartyId, usize> {
    let mut seen: BTreeMap<u64, usize> = BTreeMap::new();
    let mut sorted = bids.to_vec();
    sorted.sort();
    sorted
        .into_iter()
        .map(|(p, b)| {
            let c = seen.entry(b).or_insert(0);
            *c += 1;
            (p, *c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplaintVerdict {
    /// The opened bid is short in the multiset; the seller cheated.
    Upheld,
    FalseAccuser,
    /// The buyer equivocated while opening; the complaint is void.
    Void,
}

impl fmt::Display for ComplaintVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplaintVerdict::Upheld => "upheld",
            ComplaintVerdict::FalseAccuser => "false_accuser",
            ComplaintVerdict::Void => "void",
        })
    }
}

/// Step 4(d) plus the final adjudication for one miner. `complaints` maps
/// each complaining buyer to (its slot, the bid its opening revealed, or
/// `None` if the opening was rejected).
pub fn miner_verify(
    claim: &SellerClaim,
    active: &BTreeSet<PartyId>,
    width: u32,
    complaints: &BTreeMap<PartyId, (usize, Option<u64>)>,
) -> (VerificationOutput, Vec<(PartyId, ComplaintVerdict)>) {
    let bot = VerificationOutput::Bot { cheater: PartyId::seller() };
    if !precheck(claim, active, width) {
        return (bot, Vec::new());
    }
    let counts = claim.multiset();
    let verdicts: Vec<(PartyId, ComplaintVerdict)> = complaints
        .iter()
        .map(|(&b, &(slot, opened))| {
            let v = match opened {
                None => ComplaintVerdict::Void,
                Some(v) if counts.get(&v).copied().unwrap_or(0) < slot => ComplaintVerdict::Upheld,
                Some(_) => ComplaintVerdict::FalseAccuser,
            };
            (b, v)
        })
        .collect();
    if verdicts.iter().any(|(_, v)| *v == ComplaintVerdict::Upheld) {
        return (bot, verdicts);
    }
    let out = VerificationOutput::Valid {
        bid_width: width as u8,
        winning_bid: claim.winning_bid,
        losing: claim.losing.clone(),
        winner: claim.winner,
    };
    (out, verdicts)
}

/// Step 4(d) and well-formedness: every losing bid at most `b_w`, one entry
/// per other active buyer, values in range, and the winner is active.
fn precheck(claim: &SellerClaim, active: &BTreeSet<PartyId>, width: u32) -> bool {
    let range = 1..=max_bid(width);
    claim.losing.len() + 1 == active.len()
        && active.contains(&claim.winner)
        && range.contains(&claim.winning_bid)
        && claim.losing.iter().all(|b| range.contains(b) && *b <= claim.winning_bid)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AuctionStatus {
    Decided {
        output: VerificationOutput,
    },
    NoAgreement,
    /// Every buyer was excluded before the decision phase.
    NoBids,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuctionVerdict {
    pub miner: PartyId,
    pub output: VerificationOutput,
    pub complaints: Vec<(PartyId, ComplaintVerdict)>,
}

#[derive(Debug, Clone)]
pub struct AuctionRun {
    pub status: AuctionStatus,
    pub verdicts: Vec<AuctionVerdict>,
    pub consensus: Option<ConsensusReport>,
    pub ledgers: Vec<MinerLedger>,
    /// Committed bids, for oracles. Not part of any party's view.
    pub bids: Vec<u64>,
    /// Buyers that passed the opening phase.
    pub active: Vec<PartyId>,
    pub claim: Option<SellerClaim>,
    /// The seller's claim differs from the honest one.
    pub deviated: bool,
    /// Every payload a buyer received, with the phase it arrived in.
    pub buyer_inbox: Vec<(PartyId, String, Vec<u8>)>,
    /// Miner-to-buyer list broadcasts.
    pub broadcasts: Vec<Vec<u8>>,
    pub cheaters: Vec<PartyId>,
    pub trace: Trace,
}

const REPLY_VALID: u8 = 1;
const REPLY_COMPLAINT: u8 = 2;

/// Bids used by a scenario: the listed ones or uniform draws.
pub fn scenario_bids(config: &ScenarioConfig) -> Option<Vec<u64>> {
    let ProtocolConfig::Auction(ac) = &config.protocol else {
        return None;
    };
    Some(ac.bids.clone().unwrap_or_else(|| {
        (0..ac.buyers)
            .map(|i| seed::rng(config.seed, "buyer-bid", i as u64).random_range(1..=max_bid(ac.bid_width)))
            .collect()
    }))
}

pub fn run_auction(config: &ScenarioConfig) -> Result<AuctionRun, ProtocolError> {
    let ProtocolConfig::Auction(ac) = &config.protocol else {
        return Err(ProtocolError::WrongProtocol("auction"));
    };
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(ProtocolError::Invalid(errs));
    }
    let w = ac.bid_width;
    let seller = PartyId::seller();
    let buyers: Vec<PartyId> = (0..ac.buyers).map(PartyId::buyer).collect();
    let miners = config.miner_ids();
    let faults = FaultModel { byzantine: config.byzantine.clone() };
    let honest_miners: Vec<PartyId> = miners.iter().copied().filter(|m| !faults.is_byzantine(*m)).collect();
    let bids = scenario_bids(config).expect("auction scenario");
    let policy_of = |b: PartyId| ac.buyer_policies.get(&b.index).copied().unwrap_or_default();
    let as_bits = |v: u64| BitString::from_u64(v, w).expect("bid fits its width");

    let mut sim = Sim::new(config.network(), &config.parties())?;
    for h in &config.hooks {
        sim.net.add_hook(h.clone());
    }
    let mut buyer_inbox = Vec::new();
    let mut sessions: BTreeMap<(PartyId, PartyId), CommitmentId> = BTreeMap::new();
    // (receiver, committer) -> session, as learned from notices
    let mut known: BTreeMap<(PartyId, PartyId), CommitmentId> = BTreeMap::new();

    sim.phase("bidding");
    for (i, &b) in buyers.iter().enumerate() {
        for &r in std::iter::once(&seller).chain(&miners) {
            let id = sim.commit(b, r, as_bits(bids[i]), config.backend)?;
            sessions.insert((b, r), id);
            sim.send(b, r, notice(NOTICE_COMMIT, id))?;
        }
    }
    for d in sim.drain() {
        if d.receiver.role == Role::Buyer {
            buyer_inbox.push((d.receiver, "bidding".to_string(), d.result.clone().unwrap_or_default()));
        }
        let Ok(bytes) = d.result else { continue };
        if let Some((NOTICE_COMMIT, id)) = parse_notice(&bytes) {
            let ok = sim
                .registry
                .receiver_view(d.receiver, id)
                .is_some_and(|v| v.committer == d.sender && v.length == w as usize);
            if ok {
                known.entry((d.receiver, d.sender)).or_insert(id);
            }
        }
    }

    sim.phase("opening");
    for &b in &buyers {
        let id = sessions[&(b, seller)];
        match policy_of(b) {
            BuyerPolicy::ChangeBid { bid } => sim.equivocate(b, id, &as_bits(bid))?,
            _ => sim.open(b, id, &as_bits(bids[b.index as usize]))?,
        };
        sim.send(b, seller, notice(NOTICE_OPEN, id))?;
    }
    let mut accepted: BTreeMap<PartyId, u64> = BTreeMap::new();
    for d in sim.drain() {
        if d.receiver.role == Role::Buyer {
            buyer_inbox.push((d.receiver, "opening".to_string(), d.result.clone().unwrap_or_default()));
        }
        let Ok(bytes) = d.result else { continue };
        let Some((NOTICE_OPEN, id)) = parse_notice(&bytes) else {
            continue;
        };
        if d.receiver != seller || known.get(&(seller, d.sender)) != Some(&id) {
            continue;
        }
        if let Some(v) = sim.registry.receiver_view(seller, id) {
            if let (CommitStatus::Opened, Some(bits)) = (v.status, v.opened) {
                accepted.insert(d.sender, bits.to_u64().expect("width ≤ 64"));
            }
        }
    }
    // Publicly logged cheats on seller sessions exclude the buyer for everyone.
    let public_cheats: BTreeSet<PartyId> =
        sim.cheat_notices().iter().filter(|c| c.receiver == seller).map(|c| c.committer).collect();
    for &b in &buyers {
        if !accepted.contains_key(&b) {
            let reason = if public_cheats.contains(&b) { "equivocation" } else { "no valid opening" };
            sim.record(Event::Excluded { party: b, reason: reason.to_string() });
        }
    }
    let active_bids: Vec<(PartyId, u64)> = accepted.iter().map(|(p, b)| (*p, *b)).collect();
    let active: BTreeSet<PartyId> = accepted.keys().copied().collect();
    // What miners consider active: everyone not on the public cheat log.
    let miner_active: BTreeSet<PartyId> = buyers.iter().copied().filter(|b| !public_cheats.contains(b)).collect();

    sim.phase("decision");
    let Some((winner, winning_bid)) = decide_winner(&active_bids, &mut seed::rng(config.seed, "seller-tiebreak", 0))
    else {
        let cheaters = public_cheats.into_iter().collect();
        return Ok(AuctionRun {
            status: AuctionStatus::NoBids,
            verdicts: Vec::new(),
            consensus: None,
            ledgers: honest_miners.iter().map(|&m| MinerLedger::new(m)).collect(),
            bids,
            active: Vec::new(),
            claim: None,
            deviated: false,
            buyer_inbox,
            broadcasts: Vec::new(),
            cheaters,
            trace: sim.finish(),
        });
    };
    let widx = active_bids.iter().position(|(p, _)| *p == winner).expect("winner is active");
    let values: Vec<u64> = active_bids.iter().map(|(_, b)| *b).collect();
    let losing = permute_losing(&values, widx, &mut seed::rng(config.seed, "seller-permute", 0));
    let honest_claim = SellerClaim { winner, winning_bid, losing };
    let claim = apply_seller_policy(ac.seller_policy, &honest_claim, &active_bids, w);
    let deviated = claim != honest_claim;
    let slot = slots(&active_bids);

    sim.phase("verification");
    for &m in &miners {
        sim.send(seller, m, claim.encode())?;
    }
    let mut received: BTreeMap<PartyId, SellerClaim> = BTreeMap::new();
    for d in sim.drain() {
        if let (true, Ok(bytes)) = (d.sender == seller, &d.result) {
            if let Some(c) = SellerClaim::decode(bytes) {
                received.insert(d.receiver, c);
            }
        }
    }
    let mut early: BTreeMap<PartyId, VerificationOutput> = BTreeMap::new();
    let mut broadcasts = Vec::new();
    for &m in &honest_miners {
        match received.get(&m) {
            Some(c) if precheck(c, &miner_active, w) => {
                let list = encode_list(c.winning_bid, &c.losing);
                broadcasts.push(list.clone());
                for &b in &miner_active {
                    sim.send(m, b, list.clone())?;
                }
            }
            _ => {
                early.insert(m, VerificationOutput::Bot { cheater: seller });
            }
        }
    }
    let mut replies: Vec<(PartyId, PartyId, Vec<u8>)> = Vec::new();
    for d in sim.drain() {
        if d.receiver.role == Role::Buyer {
            buyer_inbox.push((d.receiver, "verification".to_string(), d.result.clone().unwrap_or_default()));
        }
        let Ok(bytes) = d.result else { continue };
        let b = d.receiver;
        let Some((wb, losing)) = decode_list(&bytes) else {
            continue;
        };
        let policy = policy_of(b);
        let Some(&my_slot) = slot.get(&b) else {
            continue;
        };
        let present = multiset(wb, &losing).get(&accepted[&b]).copied().unwrap_or(0) >= my_slot;
        let complain = !present || matches!(policy, BuyerPolicy::FalseAccuse | BuyerPolicy::ForgeComplaint { .. });
        if !complain {
            replies.push((b, d.sender, vec![REPLY_VALID]));
            continue;
        }
        let id = sessions[&(b, d.sender)];
        let shown = match policy {
            BuyerPolicy::ForgeComplaint { bid } => bid,
            _ => accepted[&b],
        };
        if shown == bids[b.index as usize] {
            sim.open(b, id, &as_bits(shown))?;
        } else {
            sim.equivocate(b, id, &as_bits(shown))?;
        }
        let mut msg = vec![REPLY_COMPLAINT];
        msg.extend_from_slice(&(my_slot as u32).to_be_bytes());
        msg.extend_from_slice(&id.0.to_be_bytes());
        replies.push((b, d.sender, msg));
    }
    for (b, m, msg) in replies {
        sim.send(b, m, msg)?;
    }
    let mut complaints: BTreeMap<PartyId, BTreeMap<PartyId, (usize, Option<u64>)>> = BTreeMap::new();
    for d in sim.drain() {
        let Ok(bytes) = d.result else { continue };
        if bytes.len() != 13 || bytes[0] != REPLY_COMPLAINT {
            continue;
        }
        let s = u32::from_be_bytes(bytes[1..5].try_into().expect("4 bytes")) as usize;
        let id = CommitmentId(u64::from_be_bytes(bytes[5..13].try_into().expect("8 bytes")));
        if known.get(&(d.receiver, d.sender)) != Some(&id) {
            continue;
        }
        let opened = sim
            .registry
            .receiver_view(d.receiver, id)
            .filter(|v| v.status == CommitStatus::Opened)
            .and_then(|v| v.opened)
            .and_then(|bits| bits.to_u64());
        complaints.entry(d.receiver).or_default().insert(d.sender, (s, opened));
    }

    let mut verdicts = Vec::new();
    let mut false_accusers = BTreeSet::new();
    for &m in &honest_miners {
        let (output, cv) = match early.get(&m) {
            Some(o) => (o.clone(), Vec::new()),
            None => miner_verify(&received[&m], &miner_active, w, complaints.get(&m).unwrap_or(&BTreeMap::new())),
        };
        for (b, v) in &cv {
            sim.record(Event::Complaint { miner: m, buyer: *b, verdict: v.to_string() });
            if *v == ComplaintVerdict::FalseAccuser {
                false_accusers.insert(*b);
            }
        }
        let tag = if output.is_bot() { "bot" } else { "valid" };
        sim.record(Event::Verdict { miner: m, verdict: tag.to_string() });
        verdicts.push(AuctionVerdict { miner: m, output, complaints: cv });
    }

    sim.phase("publication");
    let domain = PredicateDomain(|b: &[u8]| VerificationOutput::decode(b).is_ok());
    let mut instance = ConsensusInstance::new(1, miners.clone(), &domain)?;
    for v in &verdicts {
        instance.propose(v.miner, v.output.encode())?;
    }
    let report = run_consensus(&mut sim, &instance, &faults, config.seed)?;
    let mut ledgers: Vec<MinerLedger> = honest_miners.iter().map(|&m| MinerLedger::new(m)).collect();
    for l in &mut ledgers {
        let body = report.decision_of(l.owner).unwrap_or(BOT).to_vec();
        if !body.is_empty() {
            l.append_finalized(RecordKind::AuctionOutcome, &body, &report)?;
        }
    }
    let status = match report.agreed() {
        Some(body) if !body.is_empty() => AuctionStatus::Decided {
            output: VerificationOutput::decode(body).expect("decided value lies in the domain"),
        },
        _ => AuctionStatus::NoAgreement,
    };

    let mut cheaters: BTreeSet<PartyId> = sim.cheat_notices().iter().map(|c| c.committer).collect();
    cheaters.extend(false_accusers);
    if let AuctionStatus::Decided { output: VerificationOutput::Bot { cheater } } = &status {
        cheaters.insert(*cheater);
    }
    Ok(AuctionRun {
        status,
        verdicts,
        consensus: Some(report),
        ledgers,
        bids,
        active: active.into_iter().collect(),
        claim: Some(claim),
        deviated,
        buyer_inbox,
        broadcasts,
        cheaters: cheaters.into_iter().collect(),
        trace: sim.finish(),
    })
}
