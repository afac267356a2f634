//! Scenarios, experiment orchestration, statistics and export.

mod behavior;
mod experiment;
mod export;
mod scenario;
mod stats;

pub use behavior::{behavioral_stats, perturbation_probe, trace_policy, BehaviorReport, PeriodRecord, ProbeReport};
pub use experiment::{
    run_experiment, run_replication, summarize, worker_count, ExperimentResult, ExperimentSpec, LearningPoint,
    MetricsRow, Replication, RunSummary,
};
pub use export::{
    config_hash, content_hash, from_csv, load_agents, round12, save_agents, sig12, to_csv, write_experiment,
    FileEntry, Manifest,
};
pub use scenario::{departmental_reward, inventory_cost, marketing_revenue, Scenario};
pub use stats::{aggregate_ci, correlation_matrix, cross_block, pearson, Correlation, CorrelationMatrix, Interval};
