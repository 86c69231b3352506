use crate::config::RectifierScale;

/// Variance-rectification quantities for one RAdam step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectificationInfo {
    /// Maximum length of the approximated simple moving average.
    pub rho_inf: f64,
    pub rho_t: f64,
    /// True when `rho_t >= 5`, i.e. the adaptive learning rate has tractable variance.
    pub rectified: bool,
    /// Rectification multiplier; `None` on un-rectified steps.
    pub rho: Option<f64>,
}

/// Threshold on `rho_t` above which the adaptive step is used.
pub const RECTIFY_THRESHOLD: f64 = 5.0;

impl RectificationInfo {
    /// Computes the rectification terms at step `t >= 1`, given
    /// `beta2_pow = beta2^t`.
    pub fn compute(beta2: f64, t: u64, beta2_pow: f64, scale: RectifierScale) -> Self {
        let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
        let rho_t = rho_inf - 2.0 * t as f64 * beta2_pow / (1.0 - beta2_pow);
        let rectified = rho_t >= RECTIFY_THRESHOLD;
        let rho = rectified.then(|| {
            let upper = (rho_t - 4.0) * (rho_t - 2.0) * rho_inf;
            let lower = (rho_inf - 4.0) * (rho_inf - 2.0) * rho_t;
            let variance = match scale {
                RectifierScale::StepPower => 1.0 - beta2_pow,
                RectifierScale::Constant => 1.0 - beta2,
            };
            (variance * upper / lower).sqrt()
        });
        Self {
            rho_inf,
            rho_t,
            rectified,
            rho,
        }
    }

    /// Same as [`compute`](Self::compute) with `beta2^t` evaluated directly.
    pub fn at_step(beta2: f64, t: u64, scale: RectifierScale) -> Self {
        Self::compute(beta2, t, beta2.powf(t as f64), scale)
    }
}
