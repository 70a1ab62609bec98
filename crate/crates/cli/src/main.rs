//! `qbchain` command line: scenario runs, batch statistics, scheme analysis
//! and ledger dumps.
//!
//! Exit codes: 0 clean, 2 cheater detected, 1 property violation or error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qbchain::auction::SellerPolicy;
use qbchain::commitment::Backend;
use qbchain::ledger::Snapshot;
use qbchain::lottery::CheatPolicy;
use qbchain::party::PartyId;
use qbchain::qbc::SchemeFile;
use qbchain::scenario::{
    check_config_schema, run_batch, run_scenario, BatchReport, ExitStatus, ProtocolConfig, QbcConfig, RunReport,
    ScenarioConfig, ScenarioError,
};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "qbchain", version, about = "Commitment-based lottery and auction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ticket lottery among players, agreed on by the miners
    #[command(subcommand)]
    Lottery(LotteryCmd),
    /// Sealed-bid auction verified by the miners
    #[command(subcommand)]
    Auction(AuctionCmd),
    /// Concealing and binding analysis of a commitment scheme
    #[command(subcommand)]
    Qbc(QbcCmd),
    /// Inspect exported ledgers
    #[command(subcommand)]
    Ledger(LedgerCmd),
}

#[derive(Subcommand)]
enum LotteryCmd {
    /// One lottery, full report on stdout.
    Run(LotteryArgs),
    /// Many lotteries with derived seeds, aggregate statistics on stdout.
    Stats {
        #[command(flatten)]
        args: LotteryArgs,
        #[command(flatten)]
        batch: BatchArgs,
    },
}

#[derive(Subcommand)]
enum AuctionCmd {
    Run(AuctionArgs),
    Stats {
        #[command(flatten)]
        args: AuctionArgs,
        #[command(flatten)]
        batch: BatchArgs,
    },
}

#[derive(Subcommand)]
enum QbcCmd {
    /// Concealing defect, binding strength and cheating witness of a scheme file.
    Analyze {
        scheme: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LedgerCmd {
    /// Print the records of a run report's ledgers or of a snapshot file.
    Dump {
        file: PathBuf,
        /// Only this miner's ledger, e.g. `M2`.
        #[arg(long)]
        miner: Option<PartyId>,
        /// Emit snapshots as JSON instead of rendered lines.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario config file; flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    miners: Option<u32>,
    /// `ideal` or `cheat:p` with per-bit detection probability `p`.
    #[arg(long)]
    backend: Option<Backend>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LotteryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    players: Option<u32>,
    #[arg(long)]
    ticket_bits: Option<u32>,
    /// `exclude` or `abort`.
    #[arg(long)]
    policy: Option<CheatPolicy>,
}

#[derive(Args)]
struct AuctionArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    buyers: Option<u32>,
    #[arg(long)]
    bid_width: Option<u32>,
    /// `honest`, `wrong-winner`, `inflate` or `drop-loser`.
    #[arg(long)]
    seller_policy: Option<SellerPolicy>,
    /// Fixed bids, comma separated, instead of random ones.
    #[arg(long, value_delimiter = ',')]
    bids: Option<Vec<u64>>,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let errs = check_config_schema(&value);
    if !errs.is_empty() {
        bail!("{} violates the config schema:\n  {}", path.display(), errs.join("\n  "));
    }
    Ok(serde_json::from_value(value)?)
}

impl Common {
    fn base(&self, fallback: ScenarioConfig) -> Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(p) => load_config(p)?,
            None => fallback,
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(m) = self.miners {
            c.miners = m;
        }
        if let Some(b) = self.backend {
            c.backend = b;
        }
        Ok(c)
    }
}

impl LotteryArgs {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut c = self.common.base(ScenarioConfig::lottery(0, 3, 8, 4))?;
        let ProtocolConfig::Lottery(l) = &mut c.protocol else { bail!("config is not a lottery scenario") };
        if let Some(n) = self.players {
            l.players = n;
        }
        if let Some(m) = self.ticket_bits {
            l.ticket_bits = m;
        }
        if let Some(p) = self.policy {
            l.policy = p;
        }
        Ok(c)
    }
}

impl AuctionArgs {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut c = self.common.base(ScenarioConfig::auction(0, 3, 32, 4))?;
        let ProtocolConfig::Auction(a) = &mut c.protocol else { bail!("config is not an auction scenario") };
        if let Some(m) = self.buyers {
            a.buyers = m;
        }
        if let Some(w) = self.bid_width {
            a.bid_width = w;
        }
        if let Some(p) = self.seller_policy {
            a.seller_policy = p;
        }
        if let Some(b) = &self.bids {
            a.bids = Some(b.clone());
            if self.buyers.is_none() {
                a.buyers = b.len() as u32;
            }
        }
        Ok(c)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn scenario_failure(e: ScenarioError) -> anyhow::Error {
    match e {
        ScenarioError::Invalid(errs) => anyhow!("invalid scenario:\n  {}", errs.join("\n  ")),
        e => anyhow!(e),
    }
}

fn run_one(config: &ScenarioConfig, out: Option<&Path>) -> Result<ExitStatus> {
    let report = run_scenario(config).map_err(scenario_failure)?;
    emit(&report.to_json(), out)?;
    summarize(&report);
    Ok(report.exit_status)
}

fn summarize(report: &RunReport) {
    let status = report.outcome.get("status").and_then(Value::as_str).unwrap_or("analyzed");
    let cheaters: Vec<String> = report.detected_cheaters.iter().map(ToString::to_string).collect();
    eprintln!("{}: {status}; cheaters [{}]", report.protocol, cheaters.join(", "));
    for p in &report.properties {
        eprintln!("  {:<26} {:?}  {}", p.name, p.status, p.detail);
    }
}

fn run_stats(config: &ScenarioConfig, batch: &BatchArgs, out: Option<&Path>) -> Result<ExitStatus> {
    let report: BatchReport = run_batch(config, batch.runs, batch.workers).map_err(scenario_failure)?;
    emit(&report.to_json(), out)?;
    let failed: u64 = report.property_failures.values().sum();
    eprintln!("{} runs; cheater runs {}; property failures {failed}", report.runs, report.cheater_runs);
    Ok(if failed > 0 {
        ExitStatus::InternalError
    } else if report.cheater_runs > 0 {
        ExitStatus::CheaterDetected
    } else {
        ExitStatus::Clean
    })
}

fn analyze(path: &Path, out: Option<&Path>) -> Result<ExitStatus> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scheme = SchemeFile::from_json(&text)?;
    let mut config = ScenarioConfig::lottery(0, 2, 1, 1);
    config.protocol = ProtocolConfig::QbcAnalyze(QbcConfig { scheme });
    run_one(&config, out)
}

fn dump(path: &Path, miner: Option<PartyId>, json: bool) -> Result<ExitStatus> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let snapshots: Vec<Snapshot> = if value.get("ledgers").is_some() {
        RunReport::from_json(&text).context("not a run report")?.ledgers
    } else {
        vec![serde_json::from_value(value).context("neither a run report nor a ledger snapshot")?]
    };
    let chosen: Vec<&Snapshot> = snapshots.iter().filter(|s| miner.is_none_or(|m| s.owner == m)).collect();
    if let (Some(m), true) = (miner, chosen.is_empty()) {
        bail!("no ledger owned by {m}");
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&chosen)?);
        return Ok(ExitStatus::Clean);
    }
    for s in chosen {
        println!("{} ({} records)", s.owner, s.records.len());
        for r in &s.records {
            println!("  {}", r.render());
        }
    }
    Ok(ExitStatus::Clean)
}

fn dispatch(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::Lottery(LotteryCmd::Run(a)) => run_one(&a.config()?, a.common.out.as_deref()),
        Command::Lottery(LotteryCmd::Stats { args, batch }) => {
            run_stats(&args.config()?, &batch, args.common.out.as_deref())
        }
        Command::Auction(AuctionCmd::Run(a)) => run_one(&a.config()?, a.common.out.as_deref()),
        Command::Auction(AuctionCmd::Stats { args, batch }) => {
            run_stats(&args.config()?, &batch, args.common.out.as_deref())
        }
        Command::Qbc(QbcCmd::Analyze { scheme, out }) => analyze(&scheme, out.as_deref()),
        Command::Ledger(LedgerCmd::Dump { file, miner, json }) => dump(&file, miner, json),
    }
}

fn main() -> ExitCode {
    // clap reports usage errors with status 2, which is reserved here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
