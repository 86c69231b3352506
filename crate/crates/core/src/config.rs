use std::fmt;
use std::str::FromStr;

use crate::error::{OptimError, Result};

/// Which update rule an optimizer applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Sgd,
    Sgdm,
    Adam,
    RAdam,
    AdaBelief,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Sgd,
        Variant::Sgdm,
        Variant::Adam,
        Variant::RAdam,
        Variant::AdaBelief,
    ];

    pub const ADAPTIVE: [Variant; 3] = [Variant::Adam, Variant::RAdam, Variant::AdaBelief];

    pub fn is_adaptive(self) -> bool {
        matches!(self, Variant::Adam | Variant::RAdam | Variant::AdaBelief)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sgd => "sgd",
            Variant::Sgdm => "sgdm",
            Variant::Adam => "adam",
            Variant::RAdam => "radam",
            Variant::AdaBelief => "adabelief",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| OptimError::Config(format!("unknown optimizer `{s}`")))
    }
}

/// Pre-update transform applied to each tensor.
///
/// `Gradient` centralizes the raw gradient before the moments are updated;
/// `Moment` centralizes the first moment right after its update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Centralization {
    #[default]
    None,
    Gradient,
    Moment,
}

impl Centralization {
    pub const ALL: [Centralization; 3] = [
        Centralization::None,
        Centralization::Gradient,
        Centralization::Moment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Centralization::None => "none",
            Centralization::Gradient => "gc",
            Centralization::Moment => "mc",
        }
    }
}

impl fmt::Display for Centralization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Centralization {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self> {
        Centralization::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| OptimError::Config(format!("unknown centralization `{s}`")))
    }
}

/// Variance factor inside the RAdam rectification multiplier.
///
/// `StepPower` uses `1 - beta2^t`, which pairs with the raw (not bias
/// corrected) second moment in the rectified update. `Constant` uses
/// `1 - beta2`; with the raw second moment it shrinks every rectified step
/// by roughly `sqrt((1 - beta2) / (1 - beta2^t))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RectifierScale {
    #[default]
    StepPower,
    Constant,
}

/// Hyperparameters and variant selection for an [`Optimizer`](crate::Optimizer).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub centralization: Centralization,
    /// Learning rate.
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Momentum coefficient, used by SGDM only.
    pub momentum: f64,
    /// Tensors with fewer elements are left alone by moment centralization.
    pub mc_min_elements: usize,
    /// Tensors of lower rank are left alone by gradient centralization.
    pub gc_min_rank: usize,
    /// RAdam only.
    pub rectifier_scale: RectifierScale,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Adam,
            centralization: Centralization::None,
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum: 0.9,
            mc_min_elements: 2,
            gc_min_rank: 2,
            rectifier_scale: RectifierScale::StepPower,
        }
    }
}

impl OptimizerConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn with_centralization(mut self, centralization: Centralization) -> Self {
        self.centralization = centralization;
        self
    }

    pub fn with_lr(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_momentum(mut self, momentum: f64) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn with_mc_min_elements(mut self, n: usize) -> Self {
        self.mc_min_elements = n;
        self
    }

    pub fn with_rectifier_scale(mut self, scale: RectifierScale) -> Self {
        self.rectifier_scale = scale;
        self
    }

    /// Short label such as `adam`, `radam+mc` or `adabelief+gc`.
    pub fn label(&self) -> String {
        match self.centralization {
            Centralization::None => self.variant.to_string(),
            c => format!("{}+{}", self.variant, c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| (0.0..1.0).contains(&x);
        // SGD with a zero learning rate is a legitimate "frozen" run
        if !(self.alpha.is_finite() && self.alpha >= 0.0)
            || (self.alpha == 0.0 && self.variant.is_adaptive())
        {
            return Err(OptimError::Config(format!(
                "learning rate must be positive, got {}",
                self.alpha
            )));
        }
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(OptimError::Config(format!(
                "betas must lie in [0, 1), got ({}, {})",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(OptimError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !in_unit(self.momentum) {
            return Err(OptimError::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.mc_min_elements == 0 || self.gc_min_rank == 0 {
            return Err(OptimError::Config(
                "mc_min_elements and gc_min_rank must be positive".into(),
            ));
        }
        // rho_inf must exceed 4 so the rectification denominator never vanishes
        if self.variant == Variant::RAdam && self.beta2 <= 2.0 / 3.0 {
            return Err(OptimError::Config(format!(
                "RAdam requires beta2 > 2/3, got {}",
                self.beta2
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = OptimizerConfig::default();
        assert_eq!((c.beta1, c.beta2), (0.9, 0.999));
        assert_eq!(c.alpha, 1e-3);
        assert_eq!(c.epsilon, 1e-8);
        assert_eq!(c.mc_min_elements, 2);
        assert_eq!(c.gc_min_rank, 2);
        c.validate().unwrap();
    }

    #[test]
    fn parse_names() {
        assert_eq!("RAdam".parse::<Variant>().unwrap(), Variant::RAdam);
        assert_eq!(
            "mc".parse::<Centralization>().unwrap(),
            Centralization::Moment
        );
        assert!("adamw".parse::<Variant>().is_err());
        assert_eq!(
            OptimizerConfig::new(Variant::AdaBelief)
                .with_centralization(Centralization::Gradient)
                .label(),
            "adabelief+gc"
        );
    }

    #[test]
    fn rejects_out_of_range() {
        let base = OptimizerConfig::default();
        assert!(base.clone().with_betas(1.0, 0.999).validate().is_err());
        assert!(base.clone().with_betas(0.9, -0.1).validate().is_err());
        assert!(base.clone().with_epsilon(0.0).validate().is_err());
        assert!(base.clone().with_lr(0.0).validate().is_err());
        assert!(base.clone().with_lr(f64::NAN).validate().is_err());
        assert!(base.clone().with_mc_min_elements(0).validate().is_err());
        assert!(OptimizerConfig::new(Variant::Sgd)
            .with_lr(0.0)
            .validate()
            .is_ok());
    }

    #[test]
    fn radam_requires_large_beta2() {
        let c = OptimizerConfig::new(Variant::RAdam).with_betas(0.9, 2.0 / 3.0);
        assert!(c.validate().is_err());
        assert!(c.with_betas(0.9, 0.7).validate().is_ok());
        // other variants accept it
        assert!(OptimizerConfig::new(Variant::Adam)
            .with_betas(0.9, 0.5)
            .validate()
            .is_ok());
    }
}
