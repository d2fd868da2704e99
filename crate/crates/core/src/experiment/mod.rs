//! Campaigns, the moment parity study and campaign reports, driven by JSON
//! experiment files.

pub mod campaign;
pub mod config;
pub mod parity;
pub mod report;

pub use campaign::{
    campaign_starts, run_campaign, CampaignIndex, CampaignOutcome, CellRecord, CellStatus, RunManifest,
    CAMPAIGN_SCHEMA, MANIFEST_SCHEMA,
};
pub use config::{
    load_experiment, locate_key, prepare, BoSettings, Experiment, ExperimentConfig, Overrides,
    ParitySettings, EXPERIMENT_SCHEMA,
};
pub use parity::{
    parity_csv, relative_discrepancy, run_parity, Discrepancy, McCell, ParityReport, ParityRow,
    ParitySummary, LOCAL_LINEARITY_RATIO, PARITY_SCHEMA,
};
pub use report::{
    aggregate, aggregate_csv, compare, run_report, AggregateRow, Comparison, FinalSummary, ReportOutcome,
    ReportSummary, ReviewCheck,
};
