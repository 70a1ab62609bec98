use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::auction::{BuyerPolicy, SellerPolicy};
use crate::commitment::Backend;
use crate::consensus::ByzantineBehavior;
use crate::ledger::max_bid;
use crate::lottery::{CheatPolicy, PlayerPolicy};
use crate::party::{PartyId, Role};
use crate::qbc::SchemeFile;
use crate::transport::mac::{DEFAULT_TAG_BITS, MAX_TAG_BITS};
use crate::transport::{AdversaryHook, NetworkConfig, DEFAULT_KEY_BUDGET};

pub const SCHEMA_VERSION: u32 = 1;

fn default_miners() -> u32 {
    4
}

fn default_key_budget() -> u64 {
    DEFAULT_KEY_BUDGET
}

fn default_tag_bits() -> u32 {
    DEFAULT_TAG_BITS
}

fn default_bid_width() -> u32 {
    32
}

/// Full description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "default_miners")]
    pub miners: u32,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_key_budget")]
    pub key_budget: u64,
    #[serde(default = "default_tag_bits")]
    pub tag_bits: u32,
    #[serde(default)]
    pub byzantine: BTreeMap<PartyId, ByzantineBehavior>,
    #[serde(default)]
    pub hooks: Vec<AdversaryHook>,
    pub protocol: ProtocolConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolConfig {
    Lottery(LotteryConfig),
    Auction(AuctionConfig),
    QbcAnalyze(QbcConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LotteryConfig {
    pub players: u32,
    pub ticket_bits: u32,
    #[serde(default)]
    pub policy: CheatPolicy,
    /// Players not listed are honest.
    #[serde(default)]
    pub player_policies: BTreeMap<u32, PlayerPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuctionConfig {
    pub buyers: u32,
    #[serde(default = "default_bid_width")]
    pub bid_width: u32,
    /// Drawn uniformly from `[1, 2^w - 1]` when absent.
    #[serde(default)]
    pub bids: Option<Vec<u64>>,
    #[serde(default)]
    pub seller_policy: SellerPolicy,
    #[serde(default)]
    pub buyer_policies: BTreeMap<u32, BuyerPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QbcConfig {
    pub scheme: SchemeFile,
}

impl ScenarioConfig {
    pub fn lottery(seed: u64, players: u32, ticket_bits: u32, miners: u32) -> Self {
        Self::with_protocol(
            seed,
            miners,
            ProtocolConfig::Lottery(LotteryConfig {
                players,
                ticket_bits,
                policy: CheatPolicy::default(),
                player_policies: BTreeMap::new(),
            }),
        )
    }

    pub fn auction(seed: u64, buyers: u32, bid_width: u32, miners: u32) -> Self {
        Self::with_protocol(
            seed,
            miners,
            ProtocolConfig::Auction(AuctionConfig {
                buyers,
                bid_width,
                bids: None,
                seller_policy: SellerPolicy::default(),
                buyer_policies: BTreeMap::new(),
            }),
        )
    }

    fn with_protocol(seed: u64, miners: u32, protocol: ProtocolConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            miners,
            backend: Backend::Ideal,
            key_budget: DEFAULT_KEY_BUDGET,
            tag_bits: DEFAULT_TAG_BITS,
            byzantine: BTreeMap::new(),
            hooks: Vec::new(),
            protocol,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn network(&self) -> NetworkConfig {
        NetworkConfig { seed: self.seed, key_budget: self.key_budget, tag_bits: self.tag_bits }
    }

    pub fn miner_ids(&self) -> Vec<PartyId> {
        (0..self.miners).map(PartyId::miner).collect()
    }

    /// Everyone taking part, in canonical order.
    pub fn parties(&self) -> Vec<PartyId> {
        let mut out = match &self.protocol {
            ProtocolConfig::Lottery(l) => (0..l.players).map(PartyId::player).collect(),
            ProtocolConfig::Auction(a) => {
                let mut v: Vec<PartyId> = (0..a.buyers).map(PartyId::buyer).collect();
                v.push(PartyId::seller());
                v
            }
            ProtocolConfig::QbcAnalyze(_) => return Vec::new(),
        };
        out.extend(self.miner_ids());
        out
    }

    /// Every violated constraint; empty when the config is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(format!("schema_version must be {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        if let ProtocolConfig::QbcAnalyze(q) = &self.protocol {
            if let Err(e) = q.scheme.to_scheme::<f64>() {
                errs.push(format!("scheme: {e}"));
            }
            return errs;
        }
        if self.miners == 0 {
            errs.push("miners must be at least 1".into());
        }
        if !(1..=MAX_TAG_BITS).contains(&self.tag_bits) {
            errs.push(format!("tag_bits must be in 1..={MAX_TAG_BITS}, got {}", self.tag_bits));
        }
        if self.key_budget == 0 {
            errs.push("key_budget must be at least 1".into());
        }
        if let Err(e) = self.backend.validate() {
            errs.push(format!("backend: {e}"));
        }
        for m in self.byzantine.keys() {
            if m.role != Role::Miner || m.index >= self.miners {
                errs.push(format!("byzantine entry {m} is not a miner of this scenario"));
            }
        }
        if self.miners > 0 && self.byzantine.len() >= self.miners as usize {
            errs.push("at least one miner must be honest".into());
        }
        let parties = self.parties();
        for (i, h) in self.hooks.iter().enumerate() {
            for p in [h.from, h.to] {
                if !parties.contains(&p) {
                    errs.push(format!("hook {i} references unknown party {p}"));
                }
            }
        }
        match &self.protocol {
            ProtocolConfig::Lottery(l) => {
                if l.players < 2 {
                    errs.push(format!("players must be at least 2, got {}", l.players));
                }
                if l.ticket_bits == 0 {
                    errs.push("ticket_bits must be at least 1".into());
                }
                for (&i, p) in &l.player_policies {
                    if i >= l.players {
                        errs.push(format!("player policy for P{i} but only {} players", l.players));
                    }
                    for t in p.tickets() {
                        if t.len() != l.ticket_bits as usize {
                            errs.push(format!("P{i} ticket {t} does not have {} bits", l.ticket_bits));
                        }
                    }
                }
            }
            ProtocolConfig::Auction(a) => {
                if a.buyers < 2 {
                    errs.push(format!("buyers must be at least 2, got {}", a.buyers));
                }
                let width_ok = (1..=64).contains(&a.bid_width);
                if !width_ok {
                    errs.push(format!("bid_width must be in 1..=64, got {}", a.bid_width));
                }
                let in_range = |b: u64| width_ok && (1..=max_bid(a.bid_width)).contains(&b);
                if let Some(bids) = &a.bids {
                    if bids.len() != a.buyers as usize {
                        errs.push(format!("{} bids listed for {} buyers", bids.len(), a.buyers));
                    }
                    for (i, &b) in bids.iter().enumerate() {
                        if !in_range(b) {
                            errs.push(format!("bid of B{i} ({b}) outside 1..=2^{}-1", a.bid_width));
                        }
                    }
                }
                for (&i, p) in &a.buyer_policies {
                    if i >= a.buyers {
                        errs.push(format!("buyer policy for B{i} but only {} buyers", a.buyers));
                    }
                    if let Some(v) = p.alternate_bid() {
                        if !in_range(v) {
                            errs.push(format!("B{i} policy bid {v} outside the bid range"));
                        }
                    }
                }
            }
            ProtocolConfig::QbcAnalyze(_) => unreachable!("handled above"),
        }
        errs
    }
}
