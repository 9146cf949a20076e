//! Experiment driver: SAC-based tuning runs, a random-search baseline at
//! the same evaluation budget, variant ablations and metric files.

mod config;
mod metrics;
mod run;

pub use config::{RunConfig, Variant};
pub use metrics::{emit_ablation, emit_metrics, jsonl_name, write_jsonl, write_summary, EARLY_EPISODES, SUMMARY_HEADER};
pub use run::{
    effective_agent_config, run_ablation, run_random_search, run_sac_hpo, AblationReport, MetricsRecord, RunReport,
    Warnings, RANDOM_SEARCH,
};
