//! Config-driven experiment harness: declarative recipes over the dataset
//! operations, hyperparameter sweeps over the three recommenders,
//! best-of-sweep summary tables, activity-histogram data, and paired
//! significance comparisons between runs. Everything is deterministic per
//! spec seed, down to the serialized report bytes.

mod compare;
mod presets;
mod recipe;
mod report;
mod run;
mod spec;

pub use compare::{compare, ComparisonReport, ComparisonRow};
pub use presets::{preset, preset_names, preset_text};
pub use recipe::{data_dir_from_env, materialize};
pub use report::{histogram_output, render_comparison, report_table, ReportFormat};
pub use run::{
    run, run_with_data_dir, BestPoint, ExperimentResult, ProtocolInfo, SubsampleInfo, SweepPoint,
};
pub use spec::{
    Evaluation, ExperimentSpec, HistogramSection, MfParams, Protocol, Step, Sweeps, DATA_DIR_ENV,
    DEFAULT_FOLDS, DEFAULT_LATENT_FACTORS, DEFAULT_NEIGHBORHOOD_SIZES, DEFAULT_TRAIN_FRACTION,
};
