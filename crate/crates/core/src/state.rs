//! Per-tensor moment buffers and the shared step counter.
//!
//! The snapshot text format is line oriented:
//!
//! ```text
//! # mcopt moment state
//! t = 3
//! m.layer0.w = 0.1 -0.25 0.003
//! v.layer0.w = 0.01 0.0625 9e-6
//! ```
//!
//! Every tensor contributes one `m.<id>` and one `v.<id>` line with its
//! values separated by single spaces. Numbers are written in Rust's shortest
//! round-trip notation, so a restored state is bit-identical. Blank lines and
//! lines starting with `#` are ignored. The cached powers `beta^t` are not
//! stored; they are rebuilt from `t` on restore.

use std::fmt::Write as _;

use crate::config::OptimizerConfig;
use crate::error::{OptimError, Result};
use crate::tensor::{validate_id, ParameterTensor};

/// Smallest value a cached `beta^t` may decay to.
pub const BETA_POW_FLOOR: f64 = 1e-300;

/// Moment buffers for one tensor. For SGDM `m` holds the momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorMoments {
    pub id: String,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    slots: Vec<TensorMoments>,
    t: u64,
    beta1_pow: f64,
    beta2_pow: f64,
}

impl MomentState {
    /// Zeroed moments for each parameter tensor, `t = 0`.
    pub fn new(params: &[ParameterTensor]) -> Result<Self> {
        let mut slots: Vec<TensorMoments> = Vec::with_capacity(params.len());
        for p in params {
            if slots.iter().any(|s| s.id == p.id()) {
                return Err(OptimError::StateMismatch(format!(
                    "duplicate tensor id `{}`",
                    p.id()
                )));
            }
            slots.push(TensorMoments {
                id: p.id().to_string(),
                m: vec![0.0; p.len()],
                v: vec![0.0; p.len()],
            });
        }
        Ok(Self {
            slots,
            t: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Cached `(beta1^t, beta2^t)` for the current step count.
    pub fn beta_powers(&self) -> (f64, f64) {
        (self.beta1_pow, self.beta2_pow)
    }

    pub fn slots(&self) -> &[TensorMoments] {
        &self.slots
    }

    pub fn slot(&self, id: &str) -> Option<&TensorMoments> {
        self.slots.iter().find(|s| s.id == id)
    }

    pub fn slot_mut(&mut self, id: &str) -> Option<&mut TensorMoments> {
        self.slots.iter_mut().find(|s| s.id == id)
    }

    pub(crate) fn slots_mut(&mut self) -> &mut [TensorMoments] {
        &mut self.slots
    }

    /// Verifies that the state lines up one-to-one with `params`.
    pub fn check_matches(&self, params: &[ParameterTensor]) -> Result<()> {
        if params.len() != self.slots.len() {
            return Err(OptimError::StateMismatch(format!(
                "{} tensors but {} state slots",
                params.len(),
                self.slots.len()
            )));
        }
        for (p, s) in params.iter().zip(&self.slots) {
            if p.id() != s.id || p.len() != s.m.len() || p.len() != s.v.len() {
                return Err(OptimError::StateMismatch(format!(
                    "tensor `{}` ({} elements) does not match slot `{}` ({} elements)",
                    p.id(),
                    p.len(),
                    s.id,
                    s.m.len()
                )));
            }
        }
        Ok(())
    }

    /// Increments `t` and advances the cached beta powers.
    pub(crate) fn advance(&mut self, beta1: f64, beta2: f64) -> u64 {
        self.t += 1;
        self.beta1_pow = (self.beta1_pow * beta1).max(BETA_POW_FLOOR);
        self.beta2_pow = (self.beta2_pow * beta2).max(BETA_POW_FLOOR);
        self.t
    }

    pub fn to_snapshot(&self) -> String {
        let mut out = String::from("# mcopt moment state\n");
        let _ = writeln!(out, "t = {}", self.t);
        for s in &self.slots {
            write_row(&mut out, "m", &s.id, &s.m);
            write_row(&mut out, "v", &s.id, &s.v);
        }
        out
    }

    /// Restores a state written by [`to_snapshot`](Self::to_snapshot).
    ///
    /// The betas are needed to rebuild the cached powers; they are replayed
    /// by repeated multiplication exactly as the live optimizer does.
    pub fn from_snapshot(text: &str, config: &OptimizerConfig) -> Result<Self> {
        let mut t: Option<u64> = None;
        let mut slots: Vec<TensorMoments> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| OptimError::Snapshot {
                line: line_no,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            let value = value.trim();
            if key == "t" {
                t = Some(
                    value
                        .parse()
                        .map_err(|e| err(format!("bad step count: {e}")))?,
                );
                continue;
            }
            let (kind, id) = key
                .split_once('.')
                .ok_or_else(|| err(format!("unknown key `{key}`")))?;
            validate_id(id).map_err(|e| err(e.to_string()))?;
            let values = value
                .split_whitespace()
                .map(|tok| tok.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(format!("bad number: {e}")))?;
            if values.iter().any(|x| !x.is_finite()) {
                return Err(err("non-finite value".into()));
            }
            let pos = match slots.iter().position(|s| s.id == id) {
                Some(p) => p,
                None => {
                    slots.push(TensorMoments {
                        id: id.to_string(),
                        m: Vec::new(),
                        v: Vec::new(),
                    });
                    slots.len() - 1
                }
            };
            let slot = &mut slots[pos];
            let target = match kind {
                "m" => &mut slot.m,
                "v" => &mut slot.v,
                other => return Err(err(format!("unknown buffer kind `{other}`"))),
            };
            if !target.is_empty() {
                return Err(err(format!("duplicate `{key}`")));
            }
            *target = values;
        }
        let t = t.ok_or(OptimError::Snapshot {
            line: 0,
            reason: "missing `t`".into(),
        })?;
        for s in &slots {
            if s.m.is_empty() || s.m.len() != s.v.len() {
                return Err(OptimError::Snapshot {
                    line: 0,
                    reason: format!("tensor `{}` needs m and v of equal nonzero length", s.id),
                });
            }
        }
        let mut state = Self {
            slots,
            t: 0,
            beta1_pow: 1.0,
            beta2_pow: 1.0,
        };
        for _ in 0..t {
            state.advance(config.beta1, config.beta2);
        }
        Ok(state)
    }
}

fn write_row(out: &mut String, kind: &str, id: &str, values: &[f64]) {
    let _ = write!(out, "{kind}.{id} =");
    for x in values {
        let _ = write!(out, " {x:?}");
    }
    out.push('\n');
}
