//! Whole runs: config in, schema-checked report out, plus batch statistics.

mod batch;
mod config;
mod report;

pub use batch::{run_batch, AuctionAggregate, BatchReport, LotteryAggregate};
pub use config::{AuctionConfig, LotteryConfig, ProtocolConfig, QbcConfig, ScenarioConfig, SCHEMA_VERSION};
pub use report::{
    argmax_oracle, auction_properties, check_config_schema, check_report_schema, ledger_recomputation_matches,
    losing_associations, lottery_properties, run_scenario, ExitStatus, PropertyCheck, PropertyStatus, RunReport,
    ScenarioError, Timing, RUN_REPORT_SCHEMA, SCENARIO_CONFIG_SCHEMA,
};
