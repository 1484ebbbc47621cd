//! Regular-step gradient descent with step relaxation.
//!
//! Each iteration moves `λ_k` along the unit negative gradient. `λ` is
//! multiplied by the relaxation factor whenever two consecutive gradients
//! point into opposite half-spaces. The loop stops on a small gradient, a
//! small step, or the iteration cap.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::norm;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Initial step length `λ0`, in parameter units.
    pub step_length: f64,
    pub relaxation: f64,
    pub max_iterations: usize,
    /// Gradient magnitude threshold.
    pub gradient_tolerance: f64,
    /// Minimum step length.
    pub min_step_length: f64,
    /// Optional per-iteration base step lengths replacing `λ0`; the last
    /// entry repeats. Relaxation still applies on top.
    pub schedule: Option<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_length: 0.5,
            relaxation: 0.99,
            max_iterations: 3000,
            gradient_tolerance: 1e-4,
            min_step_length: 1e-4,
            schedule: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.step_length > 0.0) {
            return bad("step length must be positive");
        }
        if !(self.relaxation > 0.0 && self.relaxation < 1.0) {
            return bad("relaxation must lie in (0, 1)");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.gradient_tolerance > 0.0) || !(self.min_step_length > 0.0) {
            return bad("termination thresholds must be positive");
        }
        if let Some(s) = &self.schedule {
            if s.is_empty() || s.iter().any(|v| !(*v > 0.0)) {
                return bad("step schedule needs positive entries");
            }
            if s.windows(2).any(|w| w[1] > w[0]) {
                return bad("step schedule must be non-increasing");
            }
        }
        Ok(())
    }

    fn base_step(&self, k: usize) -> f64 {
        match &self.schedule {
            Some(s) => s[k.min(s.len() - 1)],
            None => self.step_length,
        }
    }
}

/// One cost evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct CostValue {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Set when no sample point overlapped the other image.
    pub non_overlap: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    GradientMagnitude,
    MinStepLength,
    NonOverlap,
    NonFinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub distance: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub reason: StopReason,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeResult {
    /// Parameters after the last accepted step.
    pub params: Vec<f64>,
    /// Cost at `params`, if it was evaluated successfully.
    pub value: Option<f64>,
    /// Recorded iterate with the lowest cost.
    pub best_params: Vec<f64>,
    pub best_value: Option<f64>,
    pub trace: IterationTrace,
}

fn finite(c: &CostValue) -> bool {
    c.value.is_finite() && c.grad.iter().all(|g| g.is_finite())
}

/// Minimises `cost` from `x0`.
///
/// Aborts (without error) on non-overlap or non-finite values, returning the
/// last parameters whose evaluation succeeded.
pub fn minimize<F>(mut cost: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<CostValue>,
{
    cfg.validate()?;
    let mut x = x0.to_vec();
    let mut relax = 1.0;
    let mut prev: Option<Vec<f64>> = None;
    let mut records = Vec::new();
    let mut last_valid: Option<(Vec<f64>, f64)> = None;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut reason = StopReason::MaxIterations;

    for k in 0..cfg.max_iterations {
        let c = cost(&x)?;
        if c.non_overlap {
            reason = StopReason::NonOverlap;
            break;
        }
        if !finite(&c) {
            reason = StopReason::NonFinite;
            break;
        }
        if c.grad.len() != x.len() {
            return Err(Error::DimensionMismatch(format!(
                "cost returned {} gradient components for {} parameters",
                c.grad.len(),
                x.len()
            )));
        }
        last_valid = Some((x.clone(), c.value));
        if best.as_ref().is_none_or(|(_, v)| c.value < *v) {
            best = Some((x.clone(), c.value));
        }
        let gnorm = norm(&c.grad);
        if let Some(p) = &prev {
            let dot: f64 = p.iter().zip(&c.grad).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                relax *= cfg.relaxation;
            }
        }
        let step = cfg.base_step(k) * relax;
        records.push(IterationRecord {
            iteration: k,
            distance: c.value,
            grad_norm: gnorm,
            step,
            params: x.clone(),
        });
        if gnorm < cfg.gradient_tolerance {
            reason = StopReason::GradientMagnitude;
            break;
        }
        if step < cfg.min_step_length {
            reason = StopReason::MinStepLength;
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&c.grad) {
            *xi -= step * gi / gnorm;
        }
        prev = Some(c.grad);
    }

    let (params, value) = match reason {
        StopReason::MaxIterations => {
            let c = cost(&x)?;
            if !c.non_overlap && finite(&c) {
                if best.as_ref().is_none_or(|(_, v)| c.value < *v) {
                    best = Some((x.clone(), c.value));
                }
                (x, Some(c.value))
            } else {
                let (p, v) = last_valid.clone().expect("at least one valid iteration");
                (p, Some(v))
            }
        }
        StopReason::GradientMagnitude | StopReason::MinStepLength => (x, last_valid.as_ref().map(|l| l.1)),
        StopReason::NonOverlap | StopReason::NonFinite => match &last_valid {
            Some((p, v)) => (p.clone(), Some(*v)),
            None => (x0.to_vec(), None),
        },
    };
    let (best_params, best_value) = match best {
        Some((p, v)) => (p, Some(v)),
        None => (params.clone(), None),
    };
    Ok(OptimizeResult {
        params,
        value,
        best_params,
        best_value,
        trace: IterationTrace { records, reason },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(target: Vec<f64>) -> impl FnMut(&[f64]) -> Result<CostValue> {
        move |x: &[f64]| {
            let d: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
            Ok(CostValue {
                value: d.iter().map(|v| v * v).sum(),
                grad: d.iter().map(|v| 2.0 * v).collect(),
                non_overlap: false,
            })
        }
    }

    #[test]
    fn zero_gradient_stops_immediately() {
        let r = minimize(bowl(vec![1.0, 2.0]), &[1.0, 2.0], &OptimizerConfig::default()).unwrap();
        assert_eq!(r.trace.reason, StopReason::GradientMagnitude);
        assert_eq!(r.trace.records.len(), 1);
    }

    #[test]
    fn relaxes_on_overshoot_in_1d() {
        let cfg = OptimizerConfig {
            step_length: 0.3,
            max_iterations: 20,
            ..Default::default()
        };
        let r = minimize(bowl(vec![0.0]), &[1.0], &cfg).unwrap();
        let recs = &r.trace.records;
        for w in recs.windows(2) {
            let flipped = w[0].params[0].signum() != w[1].params[0].signum();
            assert_eq!(w[1].step < w[0].step, flipped);
        }
    }

    #[test]
    fn non_overlap_keeps_last_valid_params() {
        let mut calls = 0;
        let cost = |x: &[f64]| {
            calls += 1;
            Ok(CostValue {
                value: x[0],
                grad: vec![1.0],
                non_overlap: calls > 3,
            })
        };
        let cfg = OptimizerConfig {
            step_length: 1.0,
            ..Default::default()
        };
        let r = minimize(cost, &[0.0], &cfg).unwrap();
        assert_eq!(r.trace.reason, StopReason::NonOverlap);
        assert_eq!(r.params, vec![-2.0]);
        assert_eq!(r.trace.records.len(), 3);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = OptimizerConfig {
            relaxation: 1.0,
            ..Default::default()
        };
        assert!(minimize(bowl(vec![0.0]), &[0.0], &cfg).is_err());
    }
}
