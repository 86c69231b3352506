//! Reference implementations used to cross-check `mcopt-core`.
//!
//! Nothing here depends on the optimized code: the optimizer steps are
//! written as plain per-element loops with their own enums and powers, and
//! the gradient checks only need a closure that evaluates an objective.

// the reference steps are deliberately written as indexed scalar loops
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("objective is not finite at coordinate {coord} (offset {offset:+e})")]
    NonFinite { coord: usize, offset: f64 },
    #[error("invalid oracle input: {0}")]
    Input(String),
    #[error("newton refinement did not converge after {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, OracleError>;

// ---------------------------------------------------------------------------
// Finite differences

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffScheme {
    #[default]
    Central,
}

/// Step configuration. The actual step at coordinate `i` is
/// `h * max(1, |x_i|)` when `relative` is set, `h` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    pub h: f64,
    pub relative: bool,
    pub scheme: DiffScheme,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            h: 1e-6,
            relative: true,
            scheme: DiffScheme::Central,
        }
    }
}

impl DiffConfig {
    pub fn with_h(h: f64) -> Self {
        Self {
            h,
            ..Self::default()
        }
    }

    /// Fixed absolute step, no scaling by `|x_i|`.
    pub fn absolute(h: f64) -> Self {
        Self {
            h,
            relative: false,
            scheme: DiffScheme::Central,
        }
    }

    fn step_at(&self, x: f64) -> f64 {
        if self.relative {
            self.h * x.abs().max(1.0)
        } else {
            self.h
        }
    }
}

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff<F>(objective: F, point: &[f64], config: DiffConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(config.h > 0.0 && config.h.is_finite()) {
        return Err(OracleError::Input(format!(
            "step must be positive, got {}",
            config.h
        )));
    }
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let h = config.step_at(point[i]);
        x[i] = point[i] + h;
        let up = objective(&x);
        if !up.is_finite() {
            return Err(OracleError::NonFinite {
                coord: i,
                offset: h,
            });
        }
        x[i] = point[i] - h;
        let down = objective(&x);
        if !down.is_finite() {
            return Err(OracleError::NonFinite {
                coord: i,
                offset: -h,
            });
        }
        x[i] = point[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Central-difference Jacobian of a vector function; row `r` holds the
/// derivatives of output `r`.
pub fn finite_diff_jacobian<F>(func: F, point: &[f64], config: DiffConfig) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = point.len();
    let outputs = func(point).len();
    let mut jac = vec![vec![0.0; n]; outputs];
    let mut x = point.to_vec();
    for j in 0..n {
        let h = config.step_at(point[j]);
        x[j] = point[j] + h;
        let up = func(&x);
        x[j] = point[j] - h;
        let down = func(&x);
        x[j] = point[j];
        for r in 0..outputs {
            let d = (up[r] - down[r]) / (2.0 * h);
            if !d.is_finite() {
                return Err(OracleError::NonFinite {
                    coord: j,
                    offset: h,
                });
            }
            jac[r][j] = d;
        }
    }
    Ok(jac)
}

/// Newton iteration on `grad(x) = 0` for a two-dimensional problem, with the
/// Hessian taken by central differences of `grad`. Returns the refined point
/// once the gradient norm drops to `tol`.
pub fn newton_stationary<G>(grad: G, start: [f64; 2], tol: f64, max_iter: usize) -> Result<[f64; 2]>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = start;
    for _ in 0..max_iter {
        let g = grad(&x);
        if g.len() != 2 {
            return Err(OracleError::Input(
                "gradient must have two components".into(),
            ));
        }
        if g[0].hypot(g[1]) <= tol {
            return Ok(x);
        }
        let h = finite_diff_jacobian(&grad, &x, DiffConfig::absolute(1e-5))?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-300 {
            return Err(OracleError::Input("singular Hessian".into()));
        }
        let dx = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let dy = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
        x = [x[0] - dx, x[1] - dy];
    }
    let g = grad(&x);
    if g[0].hypot(g[1]) <= tol {
        Ok(x)
    } else {
        Err(OracleError::NoConvergence(max_iter))
    }
}

// ---------------------------------------------------------------------------
// Scalar-loop optimizer steps

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefVariant {
    Sgd,
    Sgdm,
    Adam,
    RAdam,
    AdaBelief,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefCentralization {
    None,
    Gradient,
    Moment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefHyper {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub momentum: f64,
    pub mc_min_elements: usize,
    pub gc_min_rank: usize,
    /// RAdam: use `1 - beta2` instead of `1 - beta2^t` in the rectifier.
    pub constant_rectifier: bool,
}

/// One tensor's worth of state for the reference step.
#[derive(Debug, Clone, PartialEq)]
pub struct RefTensor {
    pub theta: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub rank: usize,
}

fn mean_of(xs: &[f64]) -> f64 {
    let mut total = 0.0;
    for x in xs {
        total += *x;
    }
    total / xs.len() as f64
}

/// Applies one step of the chosen rule to every tensor, element by element.
/// `t` is the step number after incrementing (1 on the first call).
pub fn reference_step(
    variant: RefVariant,
    centralization: RefCentralization,
    tensors: &mut [RefTensor],
    grads: &[Vec<f64>],
    hyper: &RefHyper,
    t: u64,
) -> Result<()> {
    if t == 0 {
        return Err(OracleError::Input("t must be at least 1".into()));
    }
    if tensors.len() != grads.len() {
        return Err(OracleError::Input(
            "one gradient per tensor required".into(),
        ));
    }
    let ti = t as i32;
    let b1t = hyper.beta1.powi(ti).max(1e-300);
    let b2t = hyper.beta2.powi(ti).max(1e-300);

    for (tensor, raw) in tensors.iter_mut().zip(grads) {
        let n = tensor.theta.len();
        if raw.len() != n || tensor.m.len() != n || tensor.v.len() != n {
            return Err(OracleError::Input("length mismatch".into()));
        }
        let mut g = raw.clone();
        if centralization == RefCentralization::Gradient && tensor.rank >= hyper.gc_min_rank {
            let mu = mean_of(&g);
            for i in 0..n {
                g[i] -= mu;
            }
        }
        let apply_mc = centralization == RefCentralization::Moment && n >= hyper.mc_min_elements;

        match variant {
            RefVariant::Sgd => {
                for i in 0..n {
                    tensor.theta[i] -= hyper.alpha * g[i];
                }
            }
            RefVariant::Sgdm => {
                for i in 0..n {
                    tensor.m[i] = hyper.momentum * tensor.m[i] + g[i];
                }
                if apply_mc {
                    let mu = mean_of(&tensor.m);
                    for i in 0..n {
                        tensor.m[i] -= mu;
                    }
                }
                for i in 0..n {
                    tensor.theta[i] -= hyper.alpha * tensor.m[i];
                }
            }
            RefVariant::Adam | RefVariant::RAdam | RefVariant::AdaBelief => {
                for i in 0..n {
                    tensor.m[i] = hyper.beta1 * tensor.m[i] + (1.0 - hyper.beta1) * g[i];
                }
                if apply_mc {
                    let mu = mean_of(&tensor.m);
                    for i in 0..n {
                        tensor.m[i] -= mu;
                    }
                }
                for i in 0..n {
                    let s = if variant == RefVariant::AdaBelief {
                        (g[i] - tensor.m[i]) * (g[i] - tensor.m[i])
                    } else {
                        g[i] * g[i]
                    };
                    tensor.v[i] = hyper.beta2 * tensor.v[i] + (1.0 - hyper.beta2) * s;
                }
                if variant == RefVariant::RAdam {
                    let rho_inf = 2.0 / (1.0 - hyper.beta2) - 1.0;
                    let rho_t = rho_inf - 2.0 * (t as f64) * b2t / (1.0 - b2t);
                    if rho_t >= 5.0 {
                        let rho_u = (rho_t - 4.0) * (rho_t - 2.0) * rho_inf;
                        let rho_d = (rho_inf - 4.0) * (rho_inf - 2.0) * rho_t;
                        let var = if hyper.constant_rectifier {
                            1.0 - hyper.beta2
                        } else {
                            1.0 - b2t
                        };
                        let rho = (var * rho_u / rho_d).sqrt();
                        let alpha1 = rho * hyper.alpha / (1.0 - b1t);
                        for i in 0..n {
                            tensor.theta[i] -=
                                alpha1 * tensor.m[i] / (tensor.v[i].sqrt() + hyper.eps);
                        }
                    } else {
                        let alpha2 = hyper.alpha / (1.0 - b1t);
                        for i in 0..n {
                            tensor.theta[i] -= alpha2 * tensor.m[i];
                        }
                    }
                } else {
                    for i in 0..n {
                        let m_hat = tensor.m[i] / (1.0 - b1t);
                        let v_hat = tensor.v[i] / (1.0 - b2t);
                        tensor.theta[i] -= hyper.alpha * m_hat / (v_hat.sqrt() + hyper.eps);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Largest absolute elementwise difference between two equal-length buffers.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "buffers differ in length");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `|a - b| / max(|a|, |b|, floor)`, maximised over elements.
pub fn max_rel_diff(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "buffers differ in length");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
