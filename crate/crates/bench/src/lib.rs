//! Experiment harness for the `mcopt-core` optimizers: 2-D trajectories,
//! path-quality metrics, MLP training with a two-phase learning rate, and
//! repeated-seed summaries, all logged as CSV.

pub mod csvio;
pub mod error;
pub mod metrics;
pub mod quality;
pub mod stats;
pub mod training;
pub mod trajectory;

pub use error::{HarnessError, Result};
pub use metrics::{path_metrics, PathMetrics};
pub use quality::{trajectory_quality_report, QualityReport};
pub use stats::{repeat_experiment, Summary};
pub use training::{lr_for_epoch, run_training, EpochRecord, TrainReport, TrainSettings};
pub use trajectory::{
    run_trajectory, Layout, Problem, Trajectory, TrajectoryRecord, TrajectoryRun,
    TrajectorySettings,
};
