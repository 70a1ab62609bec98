use std::fs;
use std::path::PathBuf;

use qbchain::ledger::{ledgers_consistent, MinerLedger, Snapshot};
use qbchain::qbc::SchemeFile;
use qbchain::scenario::{
    check_config_schema, check_report_schema, run_batch, run_scenario, ExitStatus, PropertyStatus, ProtocolConfig,
    QbcConfig, RunReport, ScenarioConfig,
};
use serde_json::Value;

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario_configs() -> Vec<(String, ScenarioConfig)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".scheme.json") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        assert!(check_config_schema(&value).is_empty(), "{name}: {:?}", check_config_schema(&value));
        out.push((name, ScenarioConfig::from_json(&text).unwrap()));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    assert!(out.len() >= 4);
    out
}

#[test]
fn shipped_scenarios_validate_and_run() {
    for (name, config) in scenario_configs() {
        let report = run_scenario(&config).unwrap();
        let json: Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(check_report_schema(&json).is_empty(), "{name}");
        assert!(report.properties.iter().all(|p| p.status != PropertyStatus::Fail), "{name}: {:?}", report.properties);
        assert_ne!(report.exit_status, ExitStatus::InternalError);
        assert_eq!(RunReport::from_json(&report.to_json()).unwrap().to_json(), report.to_json());
    }
}

#[test]
fn reports_are_byte_identical_across_repeats() {
    for (name, config) in scenario_configs() {
        let a = run_scenario(&config).unwrap().to_json();
        let b = run_scenario(&config).unwrap().to_json();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn drop_loser_scenario_flags_the_seller() {
    let text = fs::read_to_string(scenarios_dir().join("auction_drop_loser.json")).unwrap();
    let report = run_scenario(&ScenarioConfig::from_json(&text).unwrap()).unwrap();
    assert_eq!(report.exit_status, ExitStatus::CheaterDetected);
    assert_eq!(report.property("cheating_seller_detected").unwrap().status, PropertyStatus::Pass);
}

#[test]
fn scheme_files_analyze() {
    for (file, defect, strength) in [("bell.scheme.json", 0.0, 0.0), ("product.scheme.json", 1.0, 1.0)] {
        let text = fs::read_to_string(scenarios_dir().join(file)).unwrap();
        let scheme: SchemeFile = serde_json::from_str(&text).unwrap();
        let mut config = ScenarioConfig::lottery(0, 2, 1, 4);
        config.protocol = ProtocolConfig::QbcAnalyze(QbcConfig { scheme });
        let report = run_scenario(&config).unwrap();
        assert!((report.outcome["concealing_defect"].as_f64().unwrap() - defect).abs() < 1e-9, "{file}");
        assert!((report.outcome["binding_strength"].as_f64().unwrap() - strength).abs() < 1e-9, "{file}");
        assert_eq!(report.property("no_go_consistent").unwrap().status, PropertyStatus::Pass);
    }
}

#[test]
fn invalid_configs_are_rejected_by_the_schema() {
    let good = serde_json::to_value(ScenarioConfig::lottery(1, 3, 8, 4)).unwrap();
    assert!(check_config_schema(&good).is_empty());
    let mut extra = good.clone();
    extra["surprise"] = Value::Bool(true);
    assert!(!check_config_schema(&extra).is_empty());
    let mut wide = good.clone();
    wide["tag_bits"] = Value::from(64);
    assert!(!check_config_schema(&wide).is_empty());
    let mut lonely = good;
    lonely["protocol"]["lottery"]["players"] = Value::from(1);
    assert!(!check_config_schema(&lonely).is_empty());
}

#[test]
fn snapshots_round_trip_and_corruption_is_located() {
    let report = run_scenario(&ScenarioConfig::lottery(5, 4, 8, 4)).unwrap();
    for s in &report.ledgers {
        let text = serde_json::to_string(s).unwrap();
        assert_eq!(&serde_json::from_str::<Snapshot>(&text).unwrap(), s);
    }
    // alter the last hex digit of one record body in a copy of the snapshot
    let mut v = serde_json::to_value(&report.ledgers[1]).unwrap();
    let body = v["records"][0]["body"].as_str().unwrap().to_string();
    let flipped = if body.ends_with('0') { "1" } else { "0" };
    v["records"][0]["body"] = Value::from(format!("{}{flipped}", &body[..body.len() - 1]));
    let bad: Snapshot = serde_json::from_value(v).unwrap();
    let ledgers: Vec<MinerLedger> =
        [&report.ledgers[0], &bad].into_iter().map(|s| MinerLedger::from(s.clone())).collect();
    assert_eq!(ledgers_consistent(&ledgers).divergence, Some(0));
}

#[test]
fn batches_do_not_depend_on_worker_count() {
    let (_, config) = scenario_configs().into_iter().find(|(n, _)| n.starts_with("lottery_fixed")).unwrap();
    let one = run_batch(&config, 200, 1).unwrap().to_json();
    let four = run_batch(&config, 200, 4).unwrap().to_json();
    assert_eq!(one, four);
}
