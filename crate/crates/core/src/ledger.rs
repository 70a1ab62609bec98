//! Per-miner append-only logs of consensus-finalized records.
//!
//! Record bodies use a canonical byte encoding: big-endian fixed-width
//! integers, entries in the order given, and no trailing bytes. Decoding
//! rejects anything [`encode`](TicketList::encode) would not produce.
//!
//! ```text
//! TicketList          0x01 | n: u32 | m: u32 | n × (0x00 | 0x01 packed m bits)
//! VerificationOutput  0x02 | 0x00 | cheater: party
//!                     0x02 | 0x01 | w: u8 | b_w: u64 | k: u32 | k × u64 | winner: party
//! party               role: u8 | index: u32
//! ```
//!
//! Snapshots are JSON: `{"format": "qbc-ledger/1", "owner": "M0", "records": [...]}`
//! with bodies in hex.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::consensus::ConsensusReport;
use crate::party::PartyId;

pub const SNAPSHOT_FORMAT: &str = "qbc-ledger/1";

const TAG_TICKETS: u8 = 0x01;
const TAG_VERIFICATION: u8 = 0x02;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("{miner} has no decision for consensus instance {instance}")]
    NoDecision { miner: PartyId, instance: u64 },
    #[error("record body differs from {miner}'s decision in instance {instance}")]
    DecisionMismatch { miner: PartyId, instance: u64 },
    #[error("record body is empty")]
    EmptyBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("non-canonical {what} encoding")]
pub struct DecodeError {
    pub what: &'static str,
}

fn bad(what: &'static str) -> DecodeError {
    DecodeError { what }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    TicketList,
    AuctionOutcome,
}

impl RecordKind {
    fn code(self) -> u8 {
        match self {
            RecordKind::TicketList => 1,
            RecordKind::AuctionOutcome => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub height: u64,
    pub kind: RecordKind,
    #[serde(with = "hex_bytes")]
    pub body: Vec<u8>,
    pub origin_consensus: u64,
}

impl LedgerRecord {
    /// `height | kind | origin | len: u32 | body`.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(21 + self.body.len());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.push(self.kind.code());
        out.extend_from_slice(&self.origin_consensus.to_be_bytes());
        out.extend_from_slice(&(self.body.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    pub fn render(&self) -> String {
        let body = match self.kind {
            RecordKind::TicketList => TicketList::decode(&self.body).map(|t| t.to_string()),
            RecordKind::AuctionOutcome => VerificationOutput::decode(&self.body).map(|v| v.to_string()),
        };
        let kind = match self.kind {
            RecordKind::TicketList => "tickets",
            RecordKind::AuctionOutcome => "auction",
        };
        match body {
            Ok(b) => format!("#{} {kind} (consensus {}): {b}", self.height, self.origin_consensus),
            Err(e) => format!("#{} {kind} (consensus {}): <{e}>", self.height, self.origin_consensus),
        }
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinerLedger {
    pub owner: PartyId,
    records: Vec<LedgerRecord>,
}

impl MinerLedger {
    pub fn new(owner: PartyId) -> Self {
        Self { owner, records: Vec::new() }
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends `body` at the next height. The owner must have decided exactly
    /// `body` in `decision`.
    pub fn append_finalized(
        &mut self,
        kind: RecordKind,
        body: &[u8],
        decision: &ConsensusReport,
    ) -> Result<&LedgerRecord, LedgerError> {
        let (miner, instance) = (self.owner, decision.instance);
        let decided = decision.decision_of(miner).ok_or(LedgerError::NoDecision { miner, instance })?;
        if decided != body {
            return Err(LedgerError::DecisionMismatch { miner, instance });
        }
        if body.is_empty() {
            return Err(LedgerError::EmptyBody);
        }
        self.records.push(LedgerRecord {
            height: self.records.len() as u64,
            kind,
            body: body.to_vec(),
            origin_consensus: instance,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.records.iter().flat_map(|r| r.canonical_bytes()).collect()
    }

    #[cfg(test)]
    pub(crate) fn records_mut(&mut self) -> &mut Vec<LedgerRecord> {
        &mut self.records
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub owner: PartyId,
    pub records: Vec<LedgerRecord>,
}

impl From<&MinerLedger> for Snapshot {
    fn from(l: &MinerLedger) -> Self {
        Self { format: SNAPSHOT_FORMAT.to_string(), owner: l.owner, records: l.records.clone() }
    }
}

/// Reloads an exported snapshot for comparison. Records are taken as given.
impl From<Snapshot> for MinerLedger {
    fn from(s: Snapshot) -> Self {
        Self { owner: s.owner, records: s.records }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consistency {
    pub consistent: bool,
    /// Lowest height at which two ledgers differ, including one ending early.
    pub divergence: Option<u64>,
}

/// Compares ledgers record by record in canonical encoding.
pub fn ledgers_consistent<'a>(ledgers: impl IntoIterator<Item = &'a MinerLedger>) -> Consistency {
    let ledgers: Vec<&MinerLedger> = ledgers.into_iter().collect();
    let longest = ledgers.iter().map(|l| l.len()).max().unwrap_or(0);
    for h in 0..longest {
        let first = ledgers[0].records.get(h).map(LedgerRecord::canonical_bytes);
        if ledgers[1..].iter().any(|l| l.records.get(h).map(LedgerRecord::canonical_bytes) != first) {
            return Consistency { consistent: false, divergence: Some(h as u64) };
        }
    }
    Consistency { consistent: true, divergence: None }
}

struct Reader<'a> {
    bytes: &'a [u8],
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.bytes.len() < n {
            return Err(bad(self.what));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn party(&mut self) -> Result<PartyId, DecodeError> {
        PartyId::from_bytes(self.take(5)?).ok_or(bad(self.what))
    }

    fn finish(self) -> Result<(), DecodeError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(bad(self.what))
        }
    }
}

/// The agreed ticket list: entry `i` belongs to player `i`, `None` when the
/// player was excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TicketList {
    pub ticket_bits: u32,
    pub entries: Vec<Option<BitString>>,
}

impl TicketList {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![TAG_TICKETS];
        out.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.ticket_bits.to_be_bytes());
        for e in &self.entries {
            match e {
                None => out.push(0),
                Some(t) => {
                    out.push(1);
                    out.extend_from_slice(&t.to_packed());
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { bytes, what: "ticket list" };
        if r.u8()? != TAG_TICKETS {
            return Err(bad(r.what));
        }
        let n = r.u32()?;
        let m = r.u32()?;
        if n == 0 || m == 0 {
            return Err(bad(r.what));
        }
        let packed = (m as usize).div_ceil(8);
        let mut entries = Vec::new();
        for _ in 0..n {
            match r.u8()? {
                0 => entries.push(None),
                1 => entries.push(Some(BitString::from_packed(r.take(packed)?, m as usize).ok_or(bad(r.what))?)),
                _ => return Err(bad(r.what)),
            }
        }
        r.finish()?;
        Ok(Self { ticket_bits: m, entries })
    }

    pub fn included(&self) -> impl Iterator<Item = (usize, &BitString)> {
        self.entries.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|t| (i, t)))
    }
}

impl std::fmt::Display for TicketList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            match e {
                Some(t) => write!(s, "P{i}={t}")?,
                None => write!(s, "P{i}=excluded")?,
            }
        }
        f.write_str(&s)
    }
}

/// A miner's verdict on the seller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum VerificationOutput {
    Bot { cheater: PartyId },
    Valid { bid_width: u8, winning_bid: u64, losing: Vec<u64>, winner: PartyId },
}

/// Largest bid expressible in `width` bits.
pub fn max_bid(width: u32) -> u64 {
    u64::MAX >> (64 - width)
}

impl VerificationOutput {
    pub fn is_bot(&self) -> bool {
        matches!(self, VerificationOutput::Bot { .. })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![TAG_VERIFICATION];
        match self {
            VerificationOutput::Bot { cheater } => {
                out.push(0);
                out.extend_from_slice(&cheater.to_bytes());
            }
            VerificationOutput::Valid { bid_width, winning_bid, losing, winner } => {
                out.push(1);
                out.push(*bid_width);
                out.extend_from_slice(&winning_bid.to_be_bytes());
                out.extend_from_slice(&(losing.len() as u32).to_be_bytes());
                for b in losing {
                    out.extend_from_slice(&b.to_be_bytes());
                }
                out.extend_from_slice(&winner.to_bytes());
            }
        }
        out
    }

    /// Also rejects a `Valid` whose bids fall outside `[1, 2^w - 1]` or
    /// whose winning bid is below a losing one.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader { bytes, what: "verification output" };
        if r.u8()? != TAG_VERIFICATION {
            return Err(bad(r.what));
        }
        let out = match r.u8()? {
            0 => VerificationOutput::Bot { cheater: r.party()? },
            1 => {
                let bid_width = r.u8()?;
                if !(1..=64).contains(&bid_width) {
                    return Err(bad(r.what));
                }
                let max = max_bid(bid_width as u32);
                let winning_bid = r.u64()?;
                let k = r.u32()? as usize;
                if r.bytes.len() < k.saturating_mul(8) {
                    return Err(bad(r.what));
                }
                let losing = (0..k).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
                let winner = r.party()?;
                let in_range = |b: u64| (1..=max).contains(&b);
                if !in_range(winning_bid) || !losing.iter().all(|&b| in_range(b) && b <= winning_bid) {
                    return Err(bad(r.what));
                }
                VerificationOutput::Valid { bid_width, winning_bid, losing, winner }
            }
            _ => return Err(bad(r.what)),
        };
        r.finish()?;
        Ok(out)
    }

    /// Every party named in the output.
    pub fn named_parties(&self) -> Vec<PartyId> {
        match self {
            VerificationOutput::Bot { cheater } => vec![*cheater],
            VerificationOutput::Valid { winner, .. } => vec![*winner],
        }
    }
}

impl std::fmt::Display for VerificationOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerificationOutput::Bot { cheater } => write!(f, "bot, {cheater} cheated"),
            VerificationOutput::Valid { winning_bid, losing, winner, .. } => {
                write!(f, "winner {winner} with {winning_bid}, losing bids {losing:?}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;

    use super::*;

    fn decided(miners: &[PartyId], instance: u64, body: &[u8]) -> ConsensusReport {
        ConsensusReport {
            instance,
            inputs: BTreeMap::new(),
            decisions: miners.iter().map(|m| (*m, body.to_vec())).collect::<BTreeMap<_, _>>(),
            decision_phase: 1,
            phases_run: 1,
            guarantees_void: false,
            transcript: vec![],
        }
    }

    fn sample_tickets() -> TicketList {
        TicketList { ticket_bits: 4, entries: vec![Some("0101".parse().unwrap()), None, Some("0011".parse().unwrap())] }
    }

    #[test]
    fn sequential_appends_get_contiguous_heights() {
        let m = PartyId::miner(0);
        let mut l = MinerLedger::new(m);
        let b0 = sample_tickets().encode();
        assert_eq!(l.append_finalized(RecordKind::TicketList, &b0, &decided(&[m], 0, &b0)).unwrap().height, 0);
        let b1 = VerificationOutput::Bot { cheater: PartyId::seller() }.encode();
        assert_eq!(l.append_finalized(RecordKind::AuctionOutcome, &b1, &decided(&[m], 1, &b1)).unwrap().height, 1);
    }

    #[test]
    fn append_requires_matching_decision() {
        let m = PartyId::miner(0);
        let mut l = MinerLedger::new(m);
        let b = sample_tickets().encode();
        let other = decided(&[m], 4, b"other");
        assert_eq!(
            l.append_finalized(RecordKind::TicketList, &b, &other),
            Err(LedgerError::DecisionMismatch { miner: m, instance: 4 })
        );
        let stranger = decided(&[PartyId::miner(1)], 4, &b);
        assert_eq!(
            l.append_finalized(RecordKind::TicketList, &b, &stranger),
            Err(LedgerError::NoDecision { miner: m, instance: 4 })
        );
        assert_eq!(
            l.append_finalized(RecordKind::TicketList, b"", &decided(&[m], 4, b"")),
            Err(LedgerError::EmptyBody)
        );
        assert!(l.is_empty());
    }

    #[test]
    fn corrupted_copy_is_reported_at_its_height() {
        let ms = [PartyId::miner(0), PartyId::miner(1), PartyId::miner(2)];
        let mut ledgers: Vec<MinerLedger> = ms.iter().map(|m| MinerLedger::new(*m)).collect();
        for i in 0..3u64 {
            let b = VerificationOutput::Valid {
                bid_width: 8,
                winning_bid: 10 + i,
                losing: vec![1, 2],
                winner: PartyId::buyer(0),
            }
            .encode();
            let d = decided(&ms, i, &b);
            for l in &mut ledgers {
                l.append_finalized(RecordKind::AuctionOutcome, &b, &d).unwrap();
            }
        }
        assert_eq!(ledgers_consistent(&ledgers), Consistency { consistent: true, divergence: None });
        ledgers[1].records_mut()[1].body[3] ^= 1;
        assert_eq!(ledgers_consistent(&ledgers), Consistency { consistent: false, divergence: Some(1) });
        ledgers[2].records_mut().pop();
        ledgers[1].records_mut()[1].body[3] ^= 1;
        assert_eq!(ledgers_consistent(&ledgers).divergence, Some(2));
    }

    #[test]
    fn decode_rejects_non_canonical_input() {
        let mut b = sample_tickets().encode();
        b.push(0);
        assert!(TicketList::decode(&b).is_err());
        let mut b = sample_tickets().encode();
        b[9] = 2;
        assert!(TicketList::decode(&b).is_err());
        // padding bits of the packed ticket must be zero
        let mut b = sample_tickets().encode();
        b[10] |= 1;
        assert!(TicketList::decode(&b).is_err());
        let below =
            VerificationOutput::Valid { bid_width: 4, winning_bid: 3, losing: vec![5], winner: PartyId::buyer(1) };
        assert!(VerificationOutput::decode(&below.encode()).is_err());
        let wide =
            VerificationOutput::Valid { bid_width: 4, winning_bid: 16, losing: vec![], winner: PartyId::buyer(1) };
        assert!(VerificationOutput::decode(&wide.encode()).is_err());
        assert!(VerificationOutput::decode(&[2, 0, 9, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn render_is_readable() {
        let m = PartyId::miner(0);
        let mut l = MinerLedger::new(m);
        let b = sample_tickets().encode();
        l.append_finalized(RecordKind::TicketList, &b, &decided(&[m], 7, &b)).unwrap();
        assert_eq!(l.records()[0].render(), "#0 tickets (consensus 7): P0=0101 P1=excluded P2=0011");
    }

    #[test]
    fn snapshot_json_round_trip() {
        let m = PartyId::miner(2);
        let mut l = MinerLedger::new(m);
        let b = sample_tickets().encode();
        l.append_finalized(RecordKind::TicketList, &b, &decided(&[m], 0, &b)).unwrap();
        let snap = Snapshot::from(&l);
        let text = serde_json::to_string(&snap).unwrap();
        assert!(text.contains("\"format\":\"qbc-ledger/1\""));
        assert_eq!(serde_json::from_str::<Snapshot>(&text).unwrap(), snap);
    }

    fn ticket_list() -> impl Strategy<Value = TicketList> {
        (1u32..20, 1usize..6).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::option::of(proptest::collection::vec(any::<bool>(), m as usize)), n)
                .prop_map(move |es| TicketList {
                    ticket_bits: m,
                    entries: es.into_iter().map(|e| e.map(|b| BitString::new(b).unwrap())).collect(),
                })
        })
    }

    fn verification() -> impl Strategy<Value = VerificationOutput> {
        let valid = (1u8..=64, any::<u64>(), proptest::collection::vec(any::<u64>(), 0..6), 0u32..10).prop_map(
            |(w, b, ls, i)| {
                let max = max_bid(w as u32);
                let winning = b % max + 1;
                let losing = ls.into_iter().map(|l| l % winning + 1).collect();
                VerificationOutput::Valid { bid_width: w, winning_bid: winning, losing, winner: PartyId::buyer(i) }
            },
        );
        prop_oneof![Just(VerificationOutput::Bot { cheater: PartyId::seller() }), valid]
    }

    proptest! {
        #[test]
        fn ticket_list_round_trip(t in ticket_list()) {
            prop_assert_eq!(TicketList::decode(&t.encode()).unwrap(), t);
        }

        #[test]
        fn verification_round_trip(v in verification()) {
            prop_assert_eq!(VerificationOutput::decode(&v.encode()).unwrap(), v);
        }
    }
}
