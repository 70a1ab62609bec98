use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::config::{ProtocolConfig, ScenarioConfig, SCHEMA_VERSION};
use crate::auction::{decode_list, run_auction, AuctionRun, AuctionStatus, BuyerPolicy, SellerPolicy};
use crate::consensus::{ConsensusReport, ConsensusSummary};
use crate::events::EventLog;
use crate::ledger::{ledgers_consistent, RecordKind, Snapshot, TicketList, VerificationOutput};
use crate::lottery::{outcome_from_record, run_lottery, LotteryRun, LotteryStatus};
use crate::party::{PartyId, Role};
use crate::qbc::{analyze, SchemeAnalysis};
use crate::sim::{ProtocolError, Trace};

pub const RUN_REPORT_SCHEMA: &str = include_str!("../../schemas/run_report.schema.json");
pub const SCENARIO_CONFIG_SCHEMA: &str = include_str!("../../schemas/scenario_config.schema.json");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("report violates its schema: {}", .0.join("; "))]
    Schema(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyStatus {
    Pass,
    Fail,
    /// The property's premise does not hold in this run.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub status: PropertyStatus,
    pub detail: String,
}

impl PropertyCheck {
    fn new(name: &str, status: PropertyStatus, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), status, detail: detail.into() }
    }

    fn check(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if ok { PropertyStatus::Pass } else { PropertyStatus::Fail }, detail)
    }

    fn skipped(name: &str, why: &str) -> Self {
        Self::new(name, PropertyStatus::Skipped, why)
    }
}

/// Simulated effort, not wall clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub steps: u64,
    pub messages: u64,
    pub phases: u32,
}

impl From<&Trace> for Timing {
    fn from(t: &Trace) -> Self {
        Self { steps: t.steps, messages: t.messages, phases: t.phases }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Clean,
    CheaterDetected,
    InternalError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::CheaterDetected => 2,
            ExitStatus::InternalError => 1,
        }
    }

    /// A failed property outranks a detected cheater.
    pub fn from_run(properties: &[PropertyCheck], cheaters: &[PartyId]) -> Self {
        if properties.iter().any(|p| p.status == PropertyStatus::Fail) {
            ExitStatus::InternalError
        } else if !cheaters.is_empty() {
            ExitStatus::CheaterDetected
        } else {
            ExitStatus::Clean
        }
    }
}

/// Everything a run leaves behind. The event log is an omniscient audit
/// trail and includes opened values; the public record is `ledgers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub protocol: String,
    pub config: ScenarioConfig,
    pub events: EventLog,
    pub ledgers: Vec<Snapshot>,
    pub consensus: Option<ConsensusSummary>,
    pub outcome: Value,
    pub verdicts: Value,
    pub detected_cheaters: Vec<PartyId>,
    pub properties: Vec<PropertyCheck>,
    pub timing: Timing,
    pub exit_status: ExitStatus,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyCheck> {
        self.properties.iter().find(|p| p.name == name)
    }
}

fn compiled(cell: &'static OnceLock<jsonschema::Validator>, text: &str) -> &'static jsonschema::Validator {
    cell.get_or_init(|| {
        let schema: Value = serde_json::from_str(text).expect("bundled schema is JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

fn schema_errors(validator: &jsonschema::Validator, value: &Value) -> Vec<String> {
    validator.iter_errors(value).map(|e| format!("{}: {e}", e.instance_path)).collect()
}

/// Errors of `value` against the run report schema.
pub fn check_report_schema(value: &Value) -> Vec<String> {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    schema_errors(compiled(&V, RUN_REPORT_SCHEMA), value)
}

/// Errors of `value` against the scenario config schema.
pub fn check_config_schema(value: &Value) -> Vec<String> {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    schema_errors(compiled(&V, SCENARIO_CONFIG_SCHEMA), value)
}

fn consensus_checks(report: &ConsensusReport, byzantine: usize) -> Vec<PropertyCheck> {
    let names = ["consensus_agreement", "consensus_validity", "consensus_round_bound"];
    if report.guarantees_void {
        return names.iter().map(|n| PropertyCheck::skipped(n, "byzantine miners reach n/3")).collect();
    }
    let agreed = report.agreed();
    let validity = match report.unanimous_input() {
        Some(v) => PropertyCheck::check(names[1], agreed == Some(v), "unanimous honest input decided"),
        None => PropertyCheck::skipped(names[1], "honest inputs differ"),
    };
    let bound = byzantine as u32 + 1;
    vec![
        PropertyCheck::check(names[0], agreed.is_some(), "honest miners decide the same value"),
        validity,
        PropertyCheck::check(
            names[2],
            report.decision_phase <= bound,
            format!("decided in phase {} of at most {bound}", report.decision_phase),
        ),
    ]
}

fn common_checks(
    consensus: Option<&ConsensusReport>,
    ledgers: &[crate::ledger::MinerLedger],
    trace: &Trace,
    byzantine: usize,
) -> Vec<PropertyCheck> {
    let mut out = consensus.map(|c| consensus_checks(c, byzantine)).unwrap_or_default();
    let void = consensus.is_some_and(|c| c.guarantees_void);
    let c = ledgers_consistent(ledgers);
    out.push(if void && !c.consistent {
        PropertyCheck::skipped("ledger_consistency", "byzantine miners reach n/3")
    } else {
        let detail = match c.divergence {
            Some(h) => format!("ledgers diverge at height {h}"),
            None => "honest ledgers byte-identical".to_string(),
        };
        PropertyCheck::check("ledger_consistency", c.consistent, detail)
    });
    out.push(PropertyCheck::check(
        "key_one_time_use",
        trace.key_reuse == 0,
        format!("{} key reuse attempts", trace.key_reuse),
    ));
    out
}

/// Recomputes the outcome from each honest ledger's last ticket list.
pub fn ledger_recomputation_matches(run: &LotteryRun) -> bool {
    let LotteryStatus::Completed(outcome) = &run.status else {
        return false;
    };
    !run.ledgers.is_empty()
        && run.ledgers.iter().all(|l| {
            l.records()
                .iter()
                .rev()
                .find(|r| r.kind == RecordKind::TicketList)
                .and_then(|r| TicketList::decode(&r.body).ok())
                .and_then(|t| outcome_from_record(&t).ok())
                .is_some_and(|o| &o == outcome)
        })
}

pub fn lottery_properties(run: &LotteryRun, config: &ScenarioConfig) -> Vec<PropertyCheck> {
    let mut out = common_checks(Some(&run.consensus), &run.ledgers, &run.trace, config.byzantine.len());
    out.push(match run.status {
        LotteryStatus::Completed(_) => PropertyCheck::check(
            "verifiability",
            ledger_recomputation_matches(run),
            "outcome recomputed from every ledger",
        ),
        _ => PropertyCheck::skipped("verifiability", "no outcome recorded"),
    });
    out
}

/// Number of (losing buyer, bid) pairs exposed by ledgers and miner
/// broadcasts. Records may name only the winner or the seller; broadcasts
/// must be bare value lists.
pub fn losing_associations(run: &AuctionRun) -> usize {
    let mut count = 0;
    for l in &run.ledgers {
        for r in l.records().iter().filter(|r| r.kind == RecordKind::AuctionOutcome) {
            let Ok(output) = VerificationOutput::decode(&r.body) else {
                count += 1;
                continue;
            };
            let allowed = match &output {
                VerificationOutput::Valid { winner, .. } => *winner,
                VerificationOutput::Bot { .. } => PartyId::seller(),
            };
            count += output.named_parties().iter().filter(|p| **p != allowed && p.role == Role::Buyer).count();
        }
    }
    count + run.broadcasts.iter().filter(|b| decode_list(b).is_none()).count()
}

/// Brute-force argmax over the committed bids of active buyers.
pub fn argmax_oracle(run: &AuctionRun) -> Option<(u64, BTreeSet<PartyId>)> {
    let best = run.active.iter().map(|b| run.bids[b.index as usize]).max()?;
    let winners = run.active.iter().copied().filter(|b| run.bids[b.index as usize] == best).collect();
    Some((best, winners))
}

pub fn auction_properties(run: &AuctionRun, config: &ScenarioConfig) -> Vec<PropertyCheck> {
    let ProtocolConfig::Auction(ac) = &config.protocol else {
        return Vec::new();
    };
    let mut out = common_checks(run.consensus.as_ref(), &run.ledgers, &run.trace, config.byzantine.len());
    let void = run.consensus.as_ref().is_some_and(|c| c.guarantees_void);
    let changed = ac.buyer_policies.values().any(|p| matches!(p, BuyerPolicy::ChangeBid { .. }));

    out.push(if ac.seller_policy != SellerPolicy::Honest || changed || void {
        PropertyCheck::skipped("winner_correctness", "seller or buyers deviate")
    } else {
        match (&run.status, argmax_oracle(run)) {
            (
                AuctionStatus::Decided { output: VerificationOutput::Valid { winner, winning_bid, .. } },
                Some((best, set)),
            ) => PropertyCheck::check(
                "winner_correctness",
                *winning_bid == best && set.contains(winner),
                format!("{winner} with {winning_bid}, oracle maximum {best}"),
            ),
            (AuctionStatus::NoBids, None) => PropertyCheck::skipped("winner_correctness", "no active buyers"),
            (s, _) => PropertyCheck::check("winner_correctness", false, format!("honest seller but status {s:?}")),
        }
    });

    let exposed = losing_associations(run);
    out.push(PropertyCheck::check("posterior_privacy", exposed == 0, format!("{exposed} losing-buyer associations")));

    out.push(if run.deviated && !void {
        let bot = matches!(run.status, AuctionStatus::Decided { output: VerificationOutput::Bot { cheater } } if cheater == PartyId::seller());
        PropertyCheck::check("cheating_seller_detected", bot, "deviating seller recorded as Bot(S)")
    } else {
        PropertyCheck::skipped("cheating_seller_detected", "seller claim is honest")
    });
    out
}

fn qbc_properties(a: &SchemeAnalysis) -> Vec<PropertyCheck> {
    vec![
        PropertyCheck::check("no_go_consistent", a.no_go_consistent, "not both concealing and binding"),
        PropertyCheck::check(
            "fidelity_identity",
            (a.marginal_fidelity - (1.0 - a.binding_strength)).abs() <= 1e-6,
            format!("F = {:.9}, 1 - strength = {:.9}", a.marginal_fidelity, 1.0 - a.binding_strength),
        ),
    ]
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn build(config: &ScenarioConfig) -> Result<RunReport, ScenarioError> {
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(ScenarioError::Invalid(errs));
    }
    let base = |protocol: &str| RunReport {
        schema_version: SCHEMA_VERSION,
        protocol: protocol.to_string(),
        config: config.clone(),
        events: Vec::new(),
        ledgers: Vec::new(),
        consensus: None,
        outcome: Value::Null,
        verdicts: Value::Array(Vec::new()),
        detected_cheaters: Vec::new(),
        properties: Vec::new(),
        timing: Timing { steps: 0, messages: 0, phases: 0 },
        exit_status: ExitStatus::Clean,
    };
    let mut report = match &config.protocol {
        ProtocolConfig::Lottery(_) => {
            let run = run_lottery(config)?;
            RunReport {
                properties: lottery_properties(&run, config),
                ledgers: run.ledgers.iter().map(Snapshot::from).collect(),
                consensus: Some(run.consensus.summary()),
                outcome: to_value(&run.status),
                verdicts: to_value(&run.verdicts),
                detected_cheaters: run.cheaters.clone(),
                timing: Timing::from(&run.trace),
                events: run.trace.events,
                ..base("lottery")
            }
        }
        ProtocolConfig::Auction(_) => {
            let run = run_auction(config)?;
            RunReport {
                properties: auction_properties(&run, config),
                ledgers: run.ledgers.iter().map(Snapshot::from).collect(),
                consensus: run.consensus.as_ref().map(ConsensusReport::summary),
                outcome: to_value(&run.status),
                verdicts: to_value(&run.verdicts),
                detected_cheaters: run.cheaters.clone(),
                timing: Timing::from(&run.trace),
                events: run.trace.events,
                ..base("auction")
            }
        }
        ProtocolConfig::QbcAnalyze(q) => {
            let scheme = q.scheme.to_scheme::<f64>().map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
            let a = analyze(&scheme);
            RunReport { properties: qbc_properties(&a), outcome: to_value(&a), ..base("qbc_analyze") }
        }
    };
    report.exit_status = ExitStatus::from_run(&report.properties, &report.detected_cheaters);
    Ok(report)
}

/// Runs the configured protocol and checks the report against its schema.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport, ScenarioError> {
    let report = build(config)?;
    let errs = check_report_schema(&to_value(&report));
    if !errs.is_empty() {
        return Err(ScenarioError::Schema(errs));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_lottery_reports_one_bit_ticket() {
        let c = ScenarioConfig::lottery(5, 2, 1, 1);
        let r = run_scenario(&c).unwrap();
        assert_eq!(r.outcome["status"], "completed");
        assert_eq!(r.outcome["winning_ticket"].as_str().unwrap().len(), 1);
        assert_eq!(r.exit_status, ExitStatus::Clean);
        assert!(r.properties.iter().all(|p| p.status != PropertyStatus::Fail), "{:?}", r.properties);
    }

    #[test]
    fn reports_are_byte_identical_per_seed() {
        let c = ScenarioConfig::auction(77, 4, 8, 4);
        assert_eq!(run_scenario(&c).unwrap().to_json(), run_scenario(&c).unwrap().to_json());
        let back = RunReport::from_json(&run_scenario(&c).unwrap().to_json()).unwrap();
        assert_eq!(back.to_json(), run_scenario(&c).unwrap().to_json());
    }

    #[test]
    fn zero_buyers_rejected() {
        let c = ScenarioConfig::auction(1, 0, 8, 4);
        assert!(matches!(run_scenario(&c), Err(ScenarioError::Invalid(e)) if e.len() == 1));
    }

    #[test]
    fn cheating_seller_exits_with_two() {
        let mut c = ScenarioConfig::auction(3, 3, 8, 4);
        if let ProtocolConfig::Auction(a) = &mut c.protocol {
            a.bids = Some(vec![3, 7, 5]);
            a.seller_policy = SellerPolicy::InflateBid;
        }
        let r = run_scenario(&c).unwrap();
        assert_eq!(r.exit_status.code(), 2);
        assert_eq!(r.property("cheating_seller_detected").unwrap().status, PropertyStatus::Pass);
        assert_eq!(r.detected_cheaters, vec![PartyId::seller()]);
    }

    #[test]
    fn configs_validate_against_schema() {
        let c = ScenarioConfig::lottery(1, 3, 8, 4);
        assert!(check_config_schema(&to_value(&c)).is_empty());
        let mut bad = to_value(&c);
        bad["tag_bits"] = Value::from(99);
        bad["extra"] = Value::from(1);
        assert_eq!(check_config_schema(&bad).len(), 2);
    }

    #[test]
    fn schema_rejects_tampered_report() {
        let r = run_scenario(&ScenarioConfig::lottery(2, 2, 4, 1)).unwrap();
        let mut v = to_value(&r);
        assert!(check_report_schema(&v).is_empty());
        v["exit_status"] = Value::from("fine");
        assert!(!check_report_schema(&v).is_empty());
    }
}
