use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::config::{ProtocolConfig, ScenarioConfig, SCHEMA_VERSION};
use super::report::{auction_properties, lottery_properties, PropertyCheck, PropertyStatus, ScenarioError};
use crate::auction::{run_auction, AuctionStatus};
use crate::ledger::VerificationOutput;
use crate::lottery::{run_lottery, LotteryStatus};
use crate::party::PartyId;
use crate::seed;

/// Winning-ticket bit statistics over completed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotteryAggregate {
    pub completed: u64,
    pub ones: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// One degree of freedom per bit, against a fair coin.
    pub chi_square: Vec<f64>,
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionAggregate {
    pub valid: u64,
    pub bot: u64,
    pub winner_counts: BTreeMap<PartyId, u64>,
    /// Relative to `valid`.
    pub winner_frequencies: BTreeMap<PartyId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub protocol: String,
    pub master_seed: u64,
    pub runs: u64,
    pub status_counts: BTreeMap<String, u64>,
    /// Runs in which at least one cheater was detected.
    pub cheater_runs: u64,
    pub detection_rate: f64,
    pub property_failures: BTreeMap<String, u64>,
    pub lottery: Option<LotteryAggregate>,
    pub auction: Option<AuctionAggregate>,
}

impl BatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("batch report serializes")
    }
}

enum Observation {
    Ticket(Option<Vec<bool>>),
    Auction(Option<VerificationOutput>),
}

struct Summary {
    status: String,
    cheater: bool,
    failures: Vec<String>,
    observation: Observation,
}

fn status_name<T: Serialize>(status: &T) -> String {
    serde_json::to_value(status).ok().and_then(|v| v["status"].as_str().map(str::to_string)).unwrap_or_default()
}

fn failures(props: &[PropertyCheck]) -> Vec<String> {
    props.iter().filter(|p| p.status == PropertyStatus::Fail).map(|p| p.name.clone()).collect()
}

fn summarize(config: &ScenarioConfig) -> Result<Summary, ScenarioError> {
    match &config.protocol {
        ProtocolConfig::Lottery(_) => {
            let run = run_lottery(config)?;
            let bits = match &run.status {
                LotteryStatus::Completed(o) => Some(o.winning_ticket.bits().to_vec()),
                _ => None,
            };
            Ok(Summary {
                status: status_name(&run.status),
                cheater: !run.cheaters.is_empty(),
                failures: failures(&lottery_properties(&run, config)),
                observation: Observation::Ticket(bits),
            })
        }
        ProtocolConfig::Auction(_) => {
            let run = run_auction(config)?;
            let output = match &run.status {
                AuctionStatus::Decided { output } => Some(output.clone()),
                _ => None,
            };
            Ok(Summary {
                status: status_name(&run.status),
                cheater: !run.cheaters.is_empty(),
                failures: failures(&auction_properties(&run, config)),
                observation: Observation::Auction(output),
            })
        }
        ProtocolConfig::QbcAnalyze(_) => Err(ScenarioError::Invalid(vec!["batches need a lottery or auction".into()])),
    }
}

fn lottery_aggregate(tickets: &[Vec<bool>], width: usize) -> LotteryAggregate {
    let n = tickets.len() as u64;
    let ones: Vec<u64> = (0..width).map(|i| tickets.iter().filter(|t| t[i]).count() as u64).collect();
    let half = n as f64 / 2.0;
    let chi = ChiSquared::new(1.0).expect("one degree of freedom");
    let chi_square: Vec<f64> = ones
        .iter()
        .map(|&k| {
            if n == 0 {
                return 0.0;
            }
            let (a, b) = (k as f64 - half, (n - k) as f64 - half);
            (a * a + b * b) / half
        })
        .collect();
    LotteryAggregate {
        completed: n,
        frequencies: ones.iter().map(|&k| if n == 0 { 0.0 } else { k as f64 / n as f64 }).collect(),
        p_values: chi_square.iter().map(|&x| chi.sf(x)).collect(),
        chi_square,
        ones,
    }
}

fn auction_aggregate(outputs: &[VerificationOutput]) -> AuctionAggregate {
    let mut winner_counts = BTreeMap::new();
    let mut bot = 0;
    for o in outputs {
        match o {
            VerificationOutput::Valid { winner, .. } => *winner_counts.entry(*winner).or_insert(0) += 1,
            VerificationOutput::Bot { .. } => bot += 1,
        }
    }
    let valid = outputs.len() as u64 - bot;
    let winner_frequencies = winner_counts.iter().map(|(p, &c)| (*p, c as f64 / valid as f64)).collect();
    AuctionAggregate { valid, bot, winner_counts, winner_frequencies }
}

/// Runs `runs` copies of `config` on `workers` threads. Run `i` uses the seed
/// derived from the master seed and `i`, so the result ignores `workers`.
pub fn run_batch(config: &ScenarioConfig, runs: u64, workers: usize) -> Result<BatchReport, ScenarioError> {
    let mut errs = config.validate();
    if runs == 0 {
        errs.push("runs must be at least 1".into());
    }
    if matches!(config.protocol, ProtocolConfig::QbcAnalyze(_)) {
        errs.push("batches need a lottery or auction".into());
    }
    if !errs.is_empty() {
        return Err(ScenarioError::Invalid(errs));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ScenarioError::Invalid(vec![format!("thread pool: {e}")]))?;
    let summaries: Vec<Summary> = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let mut c = config.clone();
                c.seed = seed::derive(config.seed, "batch-run", i);
                summarize(&c)
            })
            .collect::<Result<_, _>>()
    })?;

    let mut status_counts = BTreeMap::new();
    let mut property_failures = BTreeMap::new();
    let mut tickets = Vec::new();
    let mut outputs = Vec::new();
    let mut cheater_runs = 0;
    for s in summaries {
        *status_counts.entry(s.status).or_insert(0) += 1;
        for f in s.failures {
            *property_failures.entry(f).or_insert(0) += 1;
        }
        cheater_runs += u64::from(s.cheater);
        match s.observation {
            Observation::Ticket(Some(t)) => tickets.push(t),
            Observation::Auction(Some(o)) => outputs.push(o),
            _ => {}
        }
    }
    let (protocol, lottery, auction) = match &config.protocol {
        ProtocolConfig::Lottery(l) => ("lottery", Some(lottery_aggregate(&tickets, l.ticket_bits as usize)), None),
        _ => ("auction", None, Some(auction_aggregate(&outputs))),
    };
    Ok(BatchReport {
        schema_version: SCHEMA_VERSION,
        protocol: protocol.to_string(),
        master_seed: config.seed,
        runs,
        status_counts,
        cheater_runs,
        detection_rate: cheater_runs as f64 / runs as f64,
        property_failures,
        lottery,
        auction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::run_scenario;

    #[test]
    fn worker_count_does_not_matter() {
        let c = ScenarioConfig::lottery(9, 3, 8, 4);
        let a = run_batch(&c, 40, 1).unwrap();
        let b = run_batch(&c, 40, 8).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = ScenarioConfig::auction(9, 3, 4, 4);
        assert_eq!(run_batch(&c, 30, 1).unwrap(), run_batch(&c, 30, 3).unwrap());
    }

    #[test]
    fn single_run_batch_matches_the_run() {
        let c = ScenarioConfig::lottery(4, 3, 6, 4);
        let agg = run_batch(&c, 1, 2).unwrap();
        let mut single = c.clone();
        single.seed = seed::derive(4, "batch-run", 0);
        let r = run_scenario(&single).unwrap();
        let ticket = r.outcome["winning_ticket"].as_str().unwrap();
        let ones: Vec<u64> = ticket.chars().map(|ch| u64::from(ch == '1')).collect();
        assert_eq!(agg.lottery.unwrap().ones, ones);
    }

    #[test]
    fn chi_square_of_a_fair_split_is_zero() {
        let t = vec![vec![true, true], vec![false, true]];
        let a = lottery_aggregate(&t, 2);
        assert_eq!(a.chi_square[0], 0.0);
        assert!((a.p_values[0] - 1.0).abs() < 1e-12);
        // two ones out of two: (1^2 + 1^2) / 1
        assert_eq!(a.chi_square[1], 2.0);
    }
}
