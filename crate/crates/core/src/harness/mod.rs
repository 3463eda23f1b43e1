//! Experiment configuration, metrics, sweeps and result files.

mod config;
mod metrics;
mod output;
mod sweep;

pub use config::{
    Angle, Axis, AxisValue, ChannelConfig, ExperimentConfig, ImpairmentConfig, OneOrMany, SeConfig, SweepAxis,
    SystemConfig, TrainingConfig,
};
pub use metrics::{nmse, spectral_efficiency, to_db, SpectralEfficiency};
pub use output::{rank_distribution, read_csv, se_column, summarize, write_csv, GroupSummary, Histogram, RankDistribution};
pub use sweep::{
    build_estimators, per_column_count, prepare_trial, run_sweep, run_sweep_with, run_trial, sweep_points,
    trial_seed, PointSetup, ResultRecord, SweepPoint, TrialInputs, SUBSPACE_ENERGY,
};
