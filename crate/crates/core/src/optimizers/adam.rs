//! Bias-corrected Adam on the Euclidean coordinate gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DualStructure;
use crate::objectives::Objective;

use super::{evaluate, is_domain_error, OptimizerTrace, Status, StopRule, TraceBuilder, MAX_DOMAIN_HALVINGS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            config,
        })
    }

    /// Advances the moment estimates and returns the parameter increment.
    pub fn step(&mut self, grad: &[f64]) -> Vec<f64> {
        let c = self.config;
        self.t += 1;
        let b1t = 1.0 - c.beta1.powi(self.t as i32);
        let b2t = 1.0 - c.beta2.powi(self.t as i32);
        self.m
            .iter_mut()
            .zip(self.v.iter_mut())
            .zip(grad)
            .map(|((m, v), g)| {
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let m_hat = *m / b1t;
                let v_hat = *v / b2t;
                -c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon)
            })
            .collect()
    }
}

/// Adam iterations stopped on the same `‖G⁻¹∇f‖₂` as the geometric methods.
pub fn adam_run(
    ds: &dyn DualStructure,
    obj: &dyn Objective,
    xi0: &[f64],
    stop: &StopRule,
    config: &AdamConfig,
) -> Result<OptimizerTrace> {
    let mut state = AdamState::new(obj.dim(), *config)?;
    let mut cur = evaluate(ds, obj, xi0, false)?;
    let mut trace = TraceBuilder::start("adam", &cur);
    if cur.grad_l2() < stop.grad_tol {
        return Ok(trace.finish(Status::Converged, None));
    }
    for _ in 0..stop.max_iters {
        let delta = state.step(&cur.grad);
        let mut scale = 1.0;
        let mut next = None;
        let mut last_err = None;
        for _ in 0..=MAX_DOMAIN_HALVINGS {
            let trial: Vec<f64> = cur.xi.iter().zip(&delta).map(|(x, d)| x + scale * d).collect();
            match evaluate(ds, obj, &trial, false) {
                Ok(p) => {
                    next = Some(p);
                    break;
                }
                Err(e) if is_domain_error(&e) => {
                    last_err = Some(e);
                    scale *= 0.5;
                }
                Err(e) => return Ok(trace.finish(Status::DomainFailure, Some(e.to_string()))),
            }
        }
        let Some(next) = next else {
            return Ok(trace.finish(Status::DomainFailure, last_err.map(|e| e.to_string())));
        };
        trace.push(&cur.xi, &next, None);
        cur = next;
        if cur.grad_l2() < stop.grad_tol {
            return Ok(trace.finish(Status::Converged, None));
        }
    }
    Ok(trace.finish(Status::MaxIters, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FlatEuclidean;
    use crate::linalg::DenseMatrix;
    use crate::objectives::Quadratic;

    #[test]
    fn first_step_is_signed_learning_rate() {
        let mut s = AdamState::new(3, AdamConfig::default()).unwrap();
        let d = s.step(&[4.0, -0.02, 1e3]);
        for (x, sign) in d.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - sign * 0.01).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn zero_gradient_leaves_state() {
        let mut s = AdamState::new(2, AdamConfig::default()).unwrap();
        let d = s.step(&[0.0, 0.0]);
        assert_eq!(d, vec![0.0, 0.0]);
        assert_eq!(s.m, vec![0.0, 0.0]);
        assert_eq!(s.v, vec![0.0, 0.0]);
    }

    #[test]
    fn converges_on_quadratic() {
        let obj = Quadratic::new(DenseMatrix::from_diag(&[1.0, 4.0]), vec![-1.0, 2.0]).unwrap();
        let ds = FlatEuclidean { dim: 2 };
        let cfg = AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        };
        let t = adam_run(&ds, &obj, &[0.0, 0.0], &StopRule::new(1e-6, 20_000).unwrap(), &cfg).unwrap();
        assert!(t.converged());
        assert!((t.final_point()[0] - 1.0).abs() < 1e-5);
    }

    proptest::proptest! {
        #[test]
        fn second_moment_stays_nonnegative(grads in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let mut s = AdamState::new(1, AdamConfig::default()).unwrap();
            for g in grads {
                let d = s.step(&[g]);
                proptest::prop_assert!(s.v[0] >= 0.0);
                proptest::prop_assert!(d[0].is_finite());
            }
        }
    }
}
