use crate::error::{ensure_finite, OptimError, Result};

/// A named, shaped parameter buffer with its paired gradient.
///
/// Values and gradients are stored flat in row-major order. The id is used as
/// a key in state snapshots, so it may not be empty or contain whitespace or `=`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTensor {
    id: String,
    shape: Vec<usize>,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParameterTensor {
    pub fn new(id: impl Into<String>, shape: &[usize], values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        validate_id(&id)?;
        if shape.is_empty() || shape.contains(&0) {
            return Err(OptimError::Tensor {
                id,
                reason: format!("shape {shape:?} must have positive extents"),
            });
        }
        let numel: usize = shape.iter().product();
        if values.len() != numel {
            return Err(OptimError::Tensor {
                id,
                reason: format!("{} values for shape {shape:?}", values.len()),
            });
        }
        ensure_finite(&values, &id, "values")?;
        Ok(Self {
            id,
            shape: shape.to_vec(),
            grad: vec![0.0; numel],
            values,
        })
    }

    pub fn zeros(id: impl Into<String>, shape: &[usize]) -> Result<Self> {
        let numel = shape.iter().product();
        Self::new(id, shape, vec![0.0; numel])
    }

    /// A one-element tensor of shape `[1]`.
    pub fn scalar(id: impl Into<String>, value: f64) -> Result<Self> {
        Self::new(id, &[1], vec![value])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn set_grad(&mut self, grad: &[f64]) -> Result<()> {
        if grad.len() != self.grad.len() {
            return Err(OptimError::Tensor {
                id: self.id.clone(),
                reason: format!(
                    "gradient of length {} for {} values",
                    grad.len(),
                    self.len()
                ),
            });
        }
        self.grad.copy_from_slice(grad);
        Ok(())
    }

    /// Checks the length and finiteness invariants. Public fields can be
    /// mutated freely, so the step operations call this on entry.
    pub fn validate(&self) -> Result<()> {
        let numel: usize = self.shape.iter().product();
        if self.values.len() != numel || self.grad.len() != numel {
            return Err(OptimError::Tensor {
                id: self.id.clone(),
                reason: format!(
                    "buffer lengths {}/{} do not match shape {:?}",
                    self.values.len(),
                    self.grad.len(),
                    self.shape
                ),
            });
        }
        ensure_finite(&self.values, &self.id, "values")?;
        ensure_finite(&self.grad, &self.id, "grad")
    }
}

pub(crate) fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == '=') {
        return Err(OptimError::Tensor {
            id: id.to_string(),
            reason: "id must be non-empty and free of whitespace and '='".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(ParameterTensor::new("w", &[2, 0], vec![]).is_err());
        assert!(ParameterTensor::new("w", &[], vec![]).is_err());
        assert!(ParameterTensor::new("w", &[2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn rejects_bad_ids() {
        assert!(ParameterTensor::scalar("", 0.0).is_err());
        assert!(ParameterTensor::scalar("a b", 0.0).is_err());
        assert!(ParameterTensor::scalar("a=b", 0.0).is_err());
        assert!(ParameterTensor::scalar("layer0.w", 0.0).is_ok());
    }

    #[test]
    fn rejects_non_finite() {
        let err = ParameterTensor::new("w", &[2], vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, OptimError::NonFinite { index: 1, .. }));

        let mut t = ParameterTensor::zeros("w", &[2]).unwrap();
        t.grad[0] = f64::INFINITY;
        assert!(t.validate().is_err());
    }

    #[test]
    fn grad_starts_zeroed() {
        let t = ParameterTensor::new("w", &[2, 3], vec![1.0; 6]).unwrap();
        assert_eq!(t.grad, vec![0.0; 6]);
        assert_eq!(t.rank(), 2);
    }
}
