//! Path-quality measures for 2-D trajectories.

use crate::error::{HarnessError, Result};
use crate::trajectory::TrajectoryRun;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMetrics {
    /// Sum of Euclidean distances between consecutive iterates.
    pub path_length: f64,
    /// Sum of absolute heading changes between consecutive non-zero
    /// displacements, in radians.
    pub turning_sum: f64,
    pub iterations_to_converge: Option<usize>,
    pub final_f: f64,
    /// Distance from the first to the last iterate.
    pub displacement: f64,
}

/// Computes path metrics over a list of points.
///
/// Zero-length displacements are skipped when measuring turning angles. A
/// path with fewer than two points, or with no movement at all, is an error.
pub fn path_metrics_of(
    points: &[(f64, f64)],
    final_f: f64,
    converged_at: Option<usize>,
) -> Result<PathMetrics> {
    if points.len() < 2 {
        return Err(HarnessError::Config(
            "path metrics need at least two iterates".into(),
        ));
    }
    let steps: Vec<(f64, f64)> = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1))
        .collect();
    let path_length: f64 = steps.iter().map(|(dx, dy)| dx.hypot(*dy)).sum();
    if path_length == 0.0 {
        return Err(HarnessError::Config(
            "trajectory has no displacement".into(),
        ));
    }

    let moving: Vec<(f64, f64)> = steps
        .into_iter()
        .filter(|&(dx, dy)| dx != 0.0 || dy != 0.0)
        .collect();
    let turning_sum = moving
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let cos = (a.0 * b.0 + a.1 * b.1) / (a.0.hypot(a.1) * b.0.hypot(b.1));
            cos.clamp(-1.0, 1.0).acos()
        })
        .sum();

    let (first, last) = (points[0], points[points.len() - 1]);
    Ok(PathMetrics {
        path_length,
        turning_sum,
        iterations_to_converge: converged_at,
        final_f,
        displacement: (last.0 - first.0).hypot(last.1 - first.1),
    })
}

pub fn path_metrics(run: &TrajectoryRun) -> Result<PathMetrics> {
    let points: Vec<(f64, f64)> = run.trajectory.records.iter().map(|r| (r.x, r.y)).collect();
    let final_f = run.trajectory.last().map_or(f64::NAN, |r| r.f);
    path_metrics_of(&points, final_f, run.iterations_to_converge())
}
