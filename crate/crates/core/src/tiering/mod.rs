//! Promotion planning, experiment orchestration and result comparison.

mod calibration;
mod compare;
mod experiment;
mod plan;

pub use calibration::{calibrate_pebs_period, expected_distinct, expected_pebs_coverage};
pub use compare::{compare, CompareEntry, Comparison, ComparisonRow};
pub use experiment::{
    run_experiment, Experiment, ExperimentConfig, ExperimentResult, HmuParams, TelemetryConfig, TierConfig, TrackerKind,
};
pub use plan::{plan_top_k, PromotionPlan};
