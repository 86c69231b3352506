//! Paired trajectory comparison: the same optimizer with and without moment
//! centralization, from a batch of random starts.

use std::io::Write;

use mcopt_core::{Centralization, OptimizerConfig, ToyPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::metrics::{path_metrics, PathMetrics};
use crate::trajectory::{run_trajectory, TrajectoryRun, TrajectorySettings};

pub const QUALITY_HEADER: [&str; 13] = [
    "start",
    "start_x",
    "start_y",
    "base_path_length",
    "mc_path_length",
    "base_turning_sum",
    "mc_turning_sum",
    "base_converged",
    "mc_converged",
    "base_iterations",
    "mc_iterations",
    "base_final_f",
    "mc_final_f",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub path_length: f64,
    pub turning_sum: f64,
    pub converged: bool,
    /// Steps taken (to convergence, or the full budget).
    pub iterations: usize,
    pub final_f: f64,
}

impl RunSummary {
    fn from_run(run: &TrajectoryRun) -> Self {
        let last = run
            .trajectory
            .last()
            .expect("trajectory has at least the start point");
        // a run that starts converged has no path to measure
        let metrics = path_metrics(run).unwrap_or(PathMetrics {
            path_length: 0.0,
            turning_sum: 0.0,
            iterations_to_converge: run.iterations_to_converge(),
            final_f: last.f,
            displacement: 0.0,
        });
        Self {
            path_length: metrics.path_length,
            turning_sum: metrics.turning_sum,
            converged: run.converged,
            iterations: last.iteration,
            final_f: last.f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityRow {
    pub start: ToyPoint,
    pub baseline: RunSummary,
    pub centralized: RunSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub rows: Vec<QualityRow>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

impl QualityReport {
    pub fn median_path_length(&self) -> (f64, f64) {
        (
            median(self.rows.iter().map(|r| r.baseline.path_length).collect()),
            median(
                self.rows
                    .iter()
                    .map(|r| r.centralized.path_length)
                    .collect(),
            ),
        )
    }

    pub fn median_turning_sum(&self) -> (f64, f64) {
        (
            median(self.rows.iter().map(|r| r.baseline.turning_sum).collect()),
            median(
                self.rows
                    .iter()
                    .map(|r| r.centralized.turning_sum)
                    .collect(),
            ),
        )
    }

    /// Whether the centralized runs have a median path no longer than the baseline.
    pub fn centralized_shorter(&self) -> bool {
        let (base, mc) = self.median_path_length();
        mc <= base
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(QUALITY_HEADER)?;
        for (i, r) in self.rows.iter().enumerate() {
            let (b, m) = (&r.baseline, &r.centralized);
            w.write_record([
                i.to_string(),
                format!("{:?}", r.start.x),
                format!("{:?}", r.start.y),
                format!("{:?}", b.path_length),
                format!("{:?}", m.path_length),
                format!("{:?}", b.turning_sum),
                format!("{:?}", m.turning_sum),
                u8::from(b.converged).to_string(),
                u8::from(m.converged).to_string(),
                b.iterations.to_string(),
                m.iterations.to_string(),
                format!("{:?}", b.final_f),
                format!("{:?}", m.final_f),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws `n_starts` points uniformly from `[-3, 3]^2` with `seed`.
pub fn random_starts(n_starts: usize, seed: u64) -> Vec<ToyPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_starts)
        .map(|_| ToyPoint::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
        .collect()
}

/// Runs `base` with centralization off and with moment centralization on
/// from each random start.
pub fn trajectory_quality_report(
    base: &OptimizerConfig,
    n_starts: usize,
    seed: u64,
    settings: &TrajectorySettings,
) -> Result<QualityReport> {
    let plain = base.clone().with_centralization(Centralization::None);
    let mc = base.clone().with_centralization(Centralization::Moment);
    let rows = random_starts(n_starts, seed)
        .into_iter()
        .map(|start| {
            Ok(QualityRow {
                start,
                baseline: RunSummary::from_run(&run_trajectory(&plain, start, settings)?),
                centralized: RunSummary::from_run(&run_trajectory(&mc, start, settings)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QualityReport { rows })
}
