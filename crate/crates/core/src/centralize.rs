//! Mean-subtraction transforms applied per tensor.
//!
//! Both transforms reduce over every element of a single tensor. Moment
//! centralization acts on the first moment after its EMA update; gradient
//! centralization acts on the raw gradient before any moment is touched.

use crate::config::OptimizerConfig;
use crate::error::{first_non_finite, OptimError, Result};

fn check_input(buf: &[f64], what: &'static str) -> Result<()> {
    if buf.is_empty() {
        return Err(OptimError::Internal(format!(
            "cannot centralize an empty {what}"
        )));
    }
    if let Some(index) = first_non_finite(buf) {
        return Err(OptimError::NonFinite {
            id: "<centralize>".into(),
            what,
            index,
        });
    }
    Ok(())
}

pub(crate) fn subtract_mean(buf: &mut [f64]) {
    let mean = buf.iter().sum::<f64>() / buf.len() as f64;
    buf.iter_mut().for_each(|x| *x -= mean);
}

/// Subtracts the tensor-wide mean from a first moment buffer in place.
///
/// Buffers shorter than `config.mc_min_elements` are left unchanged. Returns
/// whether the transform was applied.
pub fn centralize_moment_in_place(
    m: &mut [f64],
    _shape: &[usize],
    config: &OptimizerConfig,
) -> Result<bool> {
    check_input(m, "moment")?;
    if m.len() < config.mc_min_elements {
        return Ok(false);
    }
    subtract_mean(m);
    Ok(true)
}

/// Subtracts the tensor-wide mean from a gradient buffer in place when the
/// tensor rank is at least `config.gc_min_rank`.
pub fn centralize_gradient_in_place(
    g: &mut [f64],
    shape: &[usize],
    config: &OptimizerConfig,
) -> Result<bool> {
    check_input(g, "gradient")?;
    if shape.len() < config.gc_min_rank {
        return Ok(false);
    }
    subtract_mean(g);
    Ok(true)
}

pub fn centralize_moment(m: &[f64], shape: &[usize], config: &OptimizerConfig) -> Result<Vec<f64>> {
    let mut out = m.to_vec();
    centralize_moment_in_place(&mut out, shape, config)?;
    Ok(out)
}

pub fn centralize_gradient(
    g: &[f64],
    shape: &[usize],
    config: &OptimizerConfig,
) -> Result<Vec<f64>> {
    let mut out = g.to_vec();
    centralize_gradient_in_place(&mut out, shape, config)?;
    Ok(out)
}
