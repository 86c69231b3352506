//! Optimizer trajectories on two-dimensional landscapes.

use std::fmt;
use std::str::FromStr;

use mcopt_core::{
    toy_gradient, toy_objective, Optimizer, OptimizerConfig, ParameterTensor, ToyPoint,
};

use crate::error::{HarnessError, Result};

/// Available 2-D objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Problem {
    /// Quadratic bowl with Gaussian wells near `(1, 0)` and `(-1, 0)`.
    #[default]
    TwoWells,
}

impl Problem {
    pub fn objective(self, p: ToyPoint) -> f64 {
        match self {
            Problem::TwoWells => toy_objective(p),
        }
    }

    pub fn gradient(self, p: ToyPoint) -> (f64, f64) {
        match self {
            Problem::TwoWells => toy_gradient(p),
        }
    }
}

impl FromStr for Problem {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-wells" | "toy" => Ok(Problem::TwoWells),
            other => Err(HarnessError::Config(format!("unknown problem `{other}`"))),
        }
    }
}

/// How the point `(x, y)` is handed to the optimizer.
///
/// With `Joint` both coordinates form one tensor of shape `[2]`, so moment
/// centralization couples them. With `Split` each coordinate is its own
/// one-element tensor and the centralization transforms skip them under the
/// default thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    Joint,
    #[default]
    Split,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Joint => "joint",
            Layout::Split => "split",
        })
    }
}

impl FromStr for Layout {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Layout::Joint),
            "split" => Ok(Layout::Split),
            other => Err(HarnessError::Config(format!("unknown layout `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub x: f64,
    pub y: f64,
    pub f: f64,
    pub grad_norm: f64,
}

impl TrajectoryRecord {
    pub fn point(&self) -> ToyPoint {
        ToyPoint::new(self.x, self.y)
    }
}

/// Iterates in order, starting with the initial point at iteration 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }

    /// Checks that iterations increase strictly from 0 and every value is finite.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if i == 0 && r.iteration != 0 {
                return Err(HarnessError::Config(
                    "trajectory must start at iteration 0".into(),
                ));
            }
            if i > 0 && r.iteration <= self.records[i - 1].iteration {
                return Err(HarnessError::Config(format!(
                    "iteration {} does not follow {}",
                    r.iteration,
                    self.records[i - 1].iteration
                )));
            }
            if ![r.x, r.y, r.f, r.grad_norm].iter().all(|v| v.is_finite()) {
                return Err(HarnessError::Divergence {
                    stage: "iteration",
                    index: r.iteration,
                    reason: "non-finite record".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySettings {
    pub problem: Problem,
    pub layout: Layout,
    pub max_iters: usize,
    pub converge_tol: f64,
}

impl Default for TrajectorySettings {
    fn default() -> Self {
        Self {
            problem: Problem::TwoWells,
            layout: Layout::Split,
            max_iters: 2000,
            converge_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRun {
    pub trajectory: Trajectory,
    /// True when the run stopped on the gradient-norm criterion.
    pub converged: bool,
}

impl TrajectoryRun {
    /// Number of optimizer steps taken to converge, if it did.
    pub fn iterations_to_converge(&self) -> Option<usize> {
        self.converged
            .then(|| self.trajectory.last().map_or(0, |r| r.iteration))
    }
}

fn make_params(layout: Layout, p: ToyPoint) -> Result<Vec<ParameterTensor>> {
    Ok(match layout {
        Layout::Joint => vec![ParameterTensor::new("xy", &[2], vec![p.x, p.y])?],
        Layout::Split => vec![
            ParameterTensor::scalar("x", p.x)?,
            ParameterTensor::scalar("y", p.y)?,
        ],
    })
}

fn read_point(layout: Layout, params: &[ParameterTensor]) -> ToyPoint {
    match layout {
        Layout::Joint => ToyPoint::new(params[0].values[0], params[0].values[1]),
        Layout::Split => ToyPoint::new(params[0].values[0], params[1].values[0]),
    }
}

fn write_grad(layout: Layout, params: &mut [ParameterTensor], (dx, dy): (f64, f64)) {
    match layout {
        Layout::Joint => params[0].grad.copy_from_slice(&[dx, dy]),
        Layout::Split => {
            params[0].grad[0] = dx;
            params[1].grad[0] = dy;
        }
    }
}

/// Runs `config` from `start` until the gradient norm falls below the
/// tolerance or `max_iters` steps have been taken.
pub fn run_trajectory(
    config: &OptimizerConfig,
    start: ToyPoint,
    settings: &TrajectorySettings,
) -> Result<TrajectoryRun> {
    if settings.max_iters == 0 {
        return Err(HarnessError::Config("max_iters must be at least 1".into()));
    }
    if settings.converge_tol.is_nan() || settings.converge_tol <= 0.0 {
        return Err(HarnessError::Config(
            "convergence tolerance must be positive".into(),
        ));
    }
    if !start.is_finite() {
        return Err(HarnessError::Config("start point must be finite".into()));
    }
    let mut params = make_params(settings.layout, start)?;
    let mut opt = Optimizer::new(config.clone(), &params)?;
    let mut records = Vec::new();
    let mut converged = false;
    for iteration in 0..=settings.max_iters {
        let p = read_point(settings.layout, &params);
        let grad = settings.problem.gradient(p);
        let record = TrajectoryRecord {
            iteration,
            x: p.x,
            y: p.y,
            f: settings.problem.objective(p),
            grad_norm: grad.0.hypot(grad.1),
        };
        if ![record.f, record.grad_norm].iter().all(|v| v.is_finite()) {
            return Err(HarnessError::Divergence {
                stage: "iteration",
                index: iteration,
                reason: format!("objective or gradient non-finite at ({}, {})", p.x, p.y),
            });
        }
        records.push(record);
        if record.grad_norm < settings.converge_tol {
            converged = true;
            break;
        }
        if iteration == settings.max_iters {
            break;
        }
        write_grad(settings.layout, &mut params, grad);
        opt.step(&mut params)
            .map_err(|e| HarnessError::Divergence {
                stage: "iteration",
                index: iteration + 1,
                reason: e.to_string(),
            })?;
    }
    Ok(TrajectoryRun {
        trajectory: Trajectory { records },
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mcopt_core::{Centralization, Variant};

    #[test]
    fn zero_lr_sgd_stays_put() {
        let cfg = OptimizerConfig::new(Variant::Sgd).with_lr(0.0);
        let settings = TrajectorySettings {
            max_iters: 50,
            ..Default::default()
        };
        let run = run_trajectory(&cfg, ToyPoint::new(0.0, 0.0), &settings).unwrap();
        assert!(!run.converged);
        assert_eq!(run.trajectory.len(), 51);
        assert!(run
            .trajectory
            .records
            .iter()
            .all(|r| r.x == 0.0 && r.y == 0.0));
        run.trajectory.validate().unwrap();
    }

    #[test]
    fn deterministic() {
        let cfg = OptimizerConfig::new(Variant::Adam)
            .with_lr(0.01)
            .with_centralization(Centralization::Moment);
        let s = TrajectorySettings::default();
        let a = run_trajectory(&cfg, ToyPoint::new(2.0, 2.0), &s).unwrap();
        let b = run_trajectory(&cfg, ToyPoint::new(2.0, 2.0), &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diverging_sgd_reports_iteration() {
        let cfg = OptimizerConfig::new(Variant::Sgd).with_lr(1e200);
        let err = run_trajectory(
            &cfg,
            ToyPoint::new(2.0, 2.0),
            &TrajectorySettings::default(),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(matches!(err, HarnessError::Divergence { .. }));
    }

    #[test]
    fn rejects_bad_settings() {
        let cfg = OptimizerConfig::default();
        let mut s = TrajectorySettings {
            max_iters: 0,
            ..Default::default()
        };
        assert!(run_trajectory(&cfg, ToyPoint::new(0.0, 0.0), &s).is_err());
        s.max_iters = 10;
        s.converge_tol = 0.0;
        assert!(run_trajectory(&cfg, ToyPoint::new(0.0, 0.0), &s).is_err());
    }
}
