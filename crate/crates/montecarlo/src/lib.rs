//! Monte Carlo designs and replication engine for comparing robust variance
//! estimators: a sparse-dummy design with many controls and two one-way
//! panel designs with heteroskedastic errors.
//!
//! Each replication owns an RNG stream keyed by `(seed, replication)`, and
//! summaries are accumulated in replication order, so a report is identical
//! regardless of how many threads ran it.

pub mod dgp;
pub mod report;
pub mod rng;
pub mod study;

pub use dgp::{gen_cjn, gen_sw, PanelVariant, LAMBDA_A, LAMBDA_B};
pub use report::format_table;
pub use rng::{replication_rng, GENERATOR};
pub use study::{
    run_replication, run_study, summarize, table_preset, Design, MethodSummary, Outcome,
    ReplicationRecord, SimConfig, SimulationReport,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}
