//! Update rules for SGD, SGD with momentum, Adam, RAdam and AdaBelief.
//!
//! Every rule runs the same per-tensor pipeline:
//!
//! 1. optional gradient centralization of `g`,
//! 2. first-moment EMA `m <- beta1 m + (1 - beta1) g`,
//! 3. optional moment centralization of `m`,
//! 4. second-moment EMA (of `g^2`, or of `(g - m)^2` for AdaBelief),
//! 5. bias correction and the parameter update.
//!
//! The step counter is shared by all tensors and advanced once per call. A
//! step is all-or-nothing: new values are staged for every tensor and only
//! written back when all of them are finite.

use crate::centralize::{centralize_gradient_in_place, centralize_moment_in_place};
use crate::config::{Centralization, OptimizerConfig, Variant};
use crate::error::{ensure_finite, OptimError, Result};
use crate::rectify::RectificationInfo;
use crate::state::{MomentState, TensorMoments};
use crate::tensor::ParameterTensor;

/// Summary of a completed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Step counter after the update (1 for the first step).
    pub t: u64,
    /// Present for RAdam steps only.
    pub rectification: Option<RectificationInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SecondMoment {
    Squared,
    Residual,
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Sgd,
    Sgdm,
    Adaptive {
        second: SecondMoment,
        rect: Option<RectificationInfo>,
    },
}

struct Staged {
    values: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Adam (or AdamMC / AdamGC, depending on `config.centralization`).
pub fn adam_step(
    params: &mut [ParameterTensor],
    state: &mut MomentState,
    config: &OptimizerConfig,
) -> Result<StepInfo> {
    run_step(params, state, config, |_, _| Rule::Adaptive {
        second: SecondMoment::Squared,
        rect: None,
    })
}

/// RAdam with the variance-tractability switch.
///
/// The rectified branch divides the bias-corrected first moment by the raw
/// second moment: `theta -= rho * alpha / (1 - beta1^t) * m / (sqrt(v) + eps)`,
/// with `rho` as selected by `config.rectifier_scale`. Un-rectified steps
/// ignore `v` entirely.
pub fn radam_step(
    params: &mut [ParameterTensor],
    state: &mut MomentState,
    config: &OptimizerConfig,
) -> Result<StepInfo> {
    if config.beta2 <= 2.0 / 3.0 {
        return Err(OptimError::Config(format!(
            "RAdam requires beta2 > 2/3, got {}",
            config.beta2
        )));
    }
    run_step(params, state, config, |t, beta2_pow| Rule::Adaptive {
        second: SecondMoment::Squared,
        rect: Some(RectificationInfo::compute(
            config.beta2,
            t,
            beta2_pow,
            config.rectifier_scale,
        )),
    })
}

/// AdaBelief: the second moment tracks `(g - m)^2`, using the centralized `m`
/// when moment centralization is on.
pub fn adabelief_step(
    params: &mut [ParameterTensor],
    state: &mut MomentState,
    config: &OptimizerConfig,
) -> Result<StepInfo> {
    run_step(params, state, config, |_, _| Rule::Adaptive {
        second: SecondMoment::Residual,
        rect: None,
    })
}

/// Plain SGD, or SGD with momentum when `config.variant` is [`Variant::Sgdm`].
///
/// The momentum buffer lives in the state's `m` slot. Moment centralization
/// acts on that buffer; for plain SGD there is no moment and it does nothing.
pub fn sgd_step(
    params: &mut [ParameterTensor],
    state: &mut MomentState,
    config: &OptimizerConfig,
) -> Result<StepInfo> {
    let rule = if config.variant == Variant::Sgdm {
        Rule::Sgdm
    } else {
        Rule::Sgd
    };
    run_step(params, state, config, |_, _| rule)
}

fn run_step(
    params: &mut [ParameterTensor],
    state: &mut MomentState,
    config: &OptimizerConfig,
    rule_for: impl Fn(u64, f64) -> Rule,
) -> Result<StepInfo> {
    config.validate()?;
    state.check_matches(params)?;
    for p in params.iter() {
        p.validate()?;
    }

    // Work on a copy of the counter so a failed step leaves `state` untouched.
    let mut next = state.clone();
    let t = next.advance(config.beta1, config.beta2);
    let (beta1_pow, beta2_pow) = next.beta_powers();
    let rule = rule_for(t, beta2_pow);

    let staged = params
        .iter()
        .zip(next.slots())
        .map(|(p, slot)| update_tensor(rule, p, slot, config, beta1_pow, beta2_pow))
        .collect::<Result<Vec<_>>>()?;

    for ((p, slot), s) in params.iter_mut().zip(next.slots_mut()).zip(staged) {
        p.values = s.values;
        slot.m = s.m;
        slot.v = s.v;
    }
    *state = next;

    Ok(StepInfo {
        t,
        rectification: match rule {
            Rule::Adaptive { rect, .. } => rect,
            _ => None,
        },
    })
}

fn update_tensor(
    rule: Rule,
    p: &ParameterTensor,
    slot: &TensorMoments,
    config: &OptimizerConfig,
    beta1_pow: f64,
    beta2_pow: f64,
) -> Result<Staged> {
    let mut g = p.grad.clone();
    if config.centralization == Centralization::Gradient {
        centralize_gradient_in_place(&mut g, p.shape(), config)?;
    }

    let mut m = slot.m.clone();
    let mut v = slot.v.clone();
    let mut values = p.values.clone();

    match rule {
        Rule::Sgd => {
            for (theta, gi) in values.iter_mut().zip(&g) {
                *theta -= config.alpha * gi;
            }
        }
        Rule::Sgdm => {
            for (mi, gi) in m.iter_mut().zip(&g) {
                *mi = config.momentum * *mi + gi;
            }
            if config.centralization == Centralization::Moment {
                centralize_moment_in_place(&mut m, p.shape(), config)?;
            }
            for (theta, mi) in values.iter_mut().zip(&m) {
                *theta -= config.alpha * mi;
            }
        }
        Rule::Adaptive { second, rect } => {
            let (beta1, beta2) = (config.beta1, config.beta2);
            for (mi, gi) in m.iter_mut().zip(&g) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
            }
            if config.centralization == Centralization::Moment {
                centralize_moment_in_place(&mut m, p.shape(), config)?;
            }
            for ((vi, gi), mi) in v.iter_mut().zip(&g).zip(&m) {
                let r = match second {
                    SecondMoment::Squared => *gi,
                    SecondMoment::Residual => gi - mi,
                };
                *vi = beta2 * *vi + (1.0 - beta2) * r * r;
            }

            let bias1 = 1.0 - beta1_pow;
            let bias2 = 1.0 - beta2_pow;
            if bias1 <= 0.0 || bias2 <= 0.0 {
                return Err(OptimError::Internal(format!(
                    "bias correction undefined (1 - beta1^t = {bias1}, 1 - beta2^t = {bias2})"
                )));
            }

            match rect {
                None => {
                    for ((theta, mi), vi) in values.iter_mut().zip(&m).zip(&v) {
                        let m_hat = mi / bias1;
                        let v_hat = vi / bias2;
                        *theta -= config.alpha * m_hat / (v_hat.sqrt() + config.epsilon);
                    }
                }
                Some(RectificationInfo { rho: Some(rho), .. }) => {
                    let step = rho * config.alpha / bias1;
                    for ((theta, mi), vi) in values.iter_mut().zip(&m).zip(&v) {
                        *theta -= step * mi / (vi.sqrt() + config.epsilon);
                    }
                }
                Some(RectificationInfo { rho: None, .. }) => {
                    let step = config.alpha / bias1;
                    for (theta, mi) in values.iter_mut().zip(&m) {
                        *theta -= step * mi;
                    }
                }
            }
        }
    }

    ensure_finite(&m, p.id(), "first moment")?;
    ensure_finite(&v, p.id(), "second moment")?;
    ensure_finite(&values, p.id(), "updated values")?;
    Ok(Staged { values, m, v })
}

/// A configured optimizer owning its moment state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    config: OptimizerConfig,
    state: MomentState,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, params: &[ParameterTensor]) -> Result<Self> {
        config.validate()?;
        let state = MomentState::new(params)?;
        Ok(Self { config, state })
    }

    /// Resumes from a previously saved state.
    pub fn with_state(config: OptimizerConfig, state: MomentState) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn state(&self) -> &MomentState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut MomentState {
        &mut self.state
    }

    pub fn learning_rate(&self) -> f64 {
        self.config.alpha
    }

    pub fn set_learning_rate(&mut self, alpha: f64) {
        self.config.alpha = alpha;
    }

    pub fn step(&mut self, params: &mut [ParameterTensor]) -> Result<StepInfo> {
        match self.config.variant {
            Variant::Sgd | Variant::Sgdm => sgd_step(params, &mut self.state, &self.config),
            Variant::Adam => adam_step(params, &mut self.state, &self.config),
            Variant::RAdam => radam_step(params, &mut self.state, &self.config),
            Variant::AdaBelief => adabelief_step(params, &mut self.state, &self.config),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(theta: f64, g: f64) -> Vec<ParameterTensor> {
        let mut p = ParameterTensor::scalar("theta", theta).unwrap();
        p.grad[0] = g;
        vec![p]
    }

    fn one_step(config: OptimizerConfig, params: &mut [ParameterTensor]) -> MomentState {
        let mut opt = Optimizer::new(config, params).unwrap();
        opt.step(params).unwrap();
        opt.state().clone()
    }

    #[test]
    fn adam_first_step_scalar() {
        let mut p = scalar(0.0, 1.0);
        let cfg = OptimizerConfig::new(Variant::Adam).with_centralization(Centralization::Moment);
        one_step(cfg, &mut p);
        // -alpha * g / (|g| + eps), MC inert on a single element
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p[0].values[0] - expected).abs() < 1e-18);
        assert!((p[0].values[0] + 0.000999999990).abs() < 1e-14);
    }

    #[test]
    fn mc_matches_plain_adam_on_zero_mean_gradient() {
        let make = || {
            let mut p = ParameterTensor::new("w", &[2], vec![0.3, -0.7]).unwrap();
            p.grad = vec![0.25, -0.25];
            vec![p]
        };
        let mut plain = make();
        let mut mc = make();
        one_step(OptimizerConfig::new(Variant::Adam), &mut plain);
        one_step(
            OptimizerConfig::new(Variant::Adam).with_centralization(Centralization::Moment),
            &mut mc,
        );
        assert_eq!(plain, mc);
    }

    #[test]
    fn mc_removes_uniform_moment() {
        let mut p = vec![ParameterTensor::zeros("w", &[2]).unwrap()];
        p[0].grad = vec![1.0, 1.0];
        let state = one_step(
            OptimizerConfig::new(Variant::Adam).with_centralization(Centralization::Moment),
            &mut p,
        );
        assert_eq!(p[0].values, vec![0.0, 0.0]);
        let slot = state.slot("w").unwrap();
        assert_eq!(slot.m, vec![0.0, 0.0]);
        let expected_v = 1.0 - 0.999;
        assert_eq!(slot.v, vec![expected_v, expected_v]);
    }

    #[test]
    fn adabelief_first_step_second_moment() {
        let k = 3.0;
        let mut p = scalar(0.0, k);
        let state = one_step(OptimizerConfig::new(Variant::AdaBelief), &mut p);
        let v1 = state.slot("theta").unwrap().v[0];
        let expected = (1.0 - 0.999) * 0.9f64.powi(2) * k * k;
        assert!((v1 - expected).abs() < 1e-15);
    }

    #[test]
    fn adabelief_zero_beta1_divides_by_eps() {
        let cfg = OptimizerConfig::new(Variant::AdaBelief)
            .with_betas(0.0, 0.999)
            .with_lr(1e-3);
        let mut p = scalar(0.5, 2e-6);
        one_step(cfg, &mut p);
        // m = g, v = 0, so the step is alpha * g / eps
        let expected = 0.5 - 1e-3 * 2e-6 / 1e-8;
        assert!((p[0].values[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        for variant in Variant::ALL {
            for c in Centralization::ALL {
                let mut p =
                    vec![ParameterTensor::new("w", &[2, 2], vec![1.0, -2.0, 3.0, 0.5]).unwrap()];
                let before = p.clone();
                let mut opt =
                    Optimizer::new(OptimizerConfig::new(variant).with_centralization(c), &p)
                        .unwrap();
                for _ in 0..10 {
                    opt.step(&mut p).unwrap();
                }
                assert_eq!(p, before, "{variant}/{c}");
            }
        }
    }

    #[test]
    fn sgd_examples() {
        let mut p = scalar(1.0, 0.5);
        one_step(OptimizerConfig::new(Variant::Sgd).with_lr(0.1), &mut p);
        assert!((p[0].values[0] - 0.95).abs() < 1e-15);

        let cfg = OptimizerConfig::new(Variant::Sgdm)
            .with_lr(0.1)
            .with_momentum(0.9);
        let mut p = scalar(0.0, 1.0);
        let mut opt = Optimizer::new(cfg, &p).unwrap();
        opt.step(&mut p).unwrap();
        opt.step(&mut p).unwrap();
        assert!((opt.state().slot("theta").unwrap().m[0] - 1.9).abs() < 1e-15);
        assert!((p[0].values[0] + 0.29).abs() < 1e-15);
    }

    #[test]
    fn sgdm_without_momentum_is_sgd() {
        let grads = [0.3, -1.2, 4.0, 0.01];
        let mut a = vec![ParameterTensor::new("w", &[4], vec![1.0, 2.0, 3.0, 4.0]).unwrap()];
        let mut b = a.clone();
        let mut sgd = Optimizer::new(OptimizerConfig::new(Variant::Sgd).with_lr(0.05), &a).unwrap();
        let mut sgdm = Optimizer::new(
            OptimizerConfig::new(Variant::Sgdm)
                .with_lr(0.05)
                .with_momentum(0.0),
            &b,
        )
        .unwrap();
        for _ in 0..5 {
            a[0].set_grad(&grads).unwrap();
            b[0].set_grad(&grads).unwrap();
            sgd.step(&mut a).unwrap();
            sgdm.step(&mut b).unwrap();
        }
        assert_eq!(a[0].values, b[0].values);
    }

    #[test]
    fn radam_unrectified_start_ignores_v() {
        let cfg = OptimizerConfig::new(Variant::RAdam);
        let mut a = scalar(0.0, 2.0);
        let mut b = a.clone();
        let mut oa = Optimizer::new(cfg.clone(), &a).unwrap();
        let mut ob = Optimizer::new(cfg, &b).unwrap();
        ob.state_mut().slot_mut("theta").unwrap().v[0] = 123.0;
        let info = oa.step(&mut a).unwrap();
        ob.step(&mut b).unwrap();
        assert!(!info.rectification.unwrap().rectified);
        assert_eq!(a[0].values, b[0].values);
        // pure bias-corrected momentum: alpha * m_hat = alpha * g
        assert!((a[0].values[0] + 2e-3).abs() < 1e-15);
    }

    #[test]
    fn radam_switches_at_step_six() {
        let mut p = scalar(0.0, 1.0);
        let mut opt = Optimizer::new(OptimizerConfig::new(Variant::RAdam), &p).unwrap();
        let flags: Vec<bool> = (0..8)
            .map(|_| opt.step(&mut p).unwrap().rectification.unwrap().rectified)
            .collect();
        assert_eq!(flags, [false, false, false, false, false, true, true, true]);
    }

    #[test]
    fn failed_step_leaves_everything_untouched() {
        let mut p = vec![
            ParameterTensor::zeros("a", &[2]).unwrap(),
            ParameterTensor::zeros("b", &[2]).unwrap(),
        ];
        p[0].grad = vec![1.0, 2.0];
        p[1].grad = vec![1e300, 0.0];
        let cfg = OptimizerConfig::new(Variant::Sgd).with_lr(1e10);
        let mut opt = Optimizer::new(cfg, &p).unwrap();
        let before = (p.clone(), opt.state().clone());
        assert!(matches!(
            opt.step(&mut p),
            Err(OptimError::NonFinite { .. })
        ));
        assert_eq!((p, opt.state().clone()), before);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = scalar(0.0, f64::NAN);
        let mut opt = Optimizer::new(OptimizerConfig::default(), &p).unwrap();
        assert!(opt.step(&mut p).is_err());
        assert_eq!(opt.state().step_count(), 0);
    }

    #[test]
    fn radam_rejects_small_beta2_even_without_validation_path() {
        let mut p = scalar(0.0, 1.0);
        let mut state = MomentState::new(&p).unwrap();
        let cfg = OptimizerConfig::new(Variant::Adam).with_betas(0.9, 0.5);
        assert!(radam_step(&mut p, &mut state, &cfg).is_err());
    }

    #[test]
    fn counter_advances_once_per_step() {
        let mut p = vec![
            ParameterTensor::zeros("a", &[3]).unwrap(),
            ParameterTensor::zeros("b", &[1]).unwrap(),
        ];
        let mut opt = Optimizer::new(OptimizerConfig::default(), &p).unwrap();
        for k in 1..=4 {
            assert_eq!(opt.step(&mut p).unwrap().t, k);
        }
        assert_eq!(opt.state().step_count(), 4);
    }

    #[test]
    fn optimizer_is_send() {
        fn assert_send<T: Send + Sync>() {}
        assert_send::<Optimizer>();
    }
}
