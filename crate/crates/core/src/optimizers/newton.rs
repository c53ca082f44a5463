//! The dual Riemannian Newton iteration.

use crate::error::{Error, Result};
use crate::geometry::{
    assemble_dual_hessian, newton_direction_with_metric, retract_with, DualStructure, GradientField, JacobianMode,
};
use crate::linalg;
use crate::objectives::Objective;

use super::line_search::{wolfe_line_search, WolfeParams};
use super::{evaluate, is_domain_error, OptimizerTrace, Status, StopRule, TraceBuilder, MAX_DOMAIN_HALVINGS};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NewtonOptions {
    pub jacobian: JacobianMode,
    /// Strong Wolfe search along the retraction curve whenever the step is a
    /// certified descent direction. Off by default: pure unit steps.
    pub damped: bool,
}

/// Iterates `H*ᵀβ = -a`, `ξ ← R_ξ(β)` until `‖a‖₂ < grad_tol`.
///
/// Returns `Err` only when the starting point itself cannot be evaluated;
/// later breakdowns end the trace with a failure status.
pub fn dual_newton_run(
    ds: &dyn DualStructure,
    obj: &dyn Objective,
    xi0: &[f64],
    stop: &StopRule,
    options: &NewtonOptions,
) -> Result<OptimizerTrace> {
    if obj.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: obj.dim(),
        });
    }
    let mut cur = evaluate(ds, obj, xi0, true)?;
    let mut trace = TraceBuilder::start("dual_newton", &cur);
    if cur.grad_l2() < stop.grad_tol {
        return Ok(trace.finish(Status::Converged, None));
    }
    let field = GradientField::new(ds, obj);

    for _ in 0..stop.max_iters {
        let geo = cur.geometry.take().expect("connection requested");
        let direction = field
            .jacobian(&cur.xi, options.jacobian)
            .and_then(|jac| assemble_dual_hessian(&jac, &cur.a, &geo.gamma_dual))
            .and_then(|h| newton_direction_with_metric(&geo.metric, &h, &cur.grad));
        let direction = match direction {
            Ok(d) => d,
            Err(e) => {
                let status = if is_domain_error(&e) {
                    Status::DomainFailure
                } else {
                    Status::SingularHessian
                };
                return Ok(trace.finish(status, Some(e.to_string())));
            }
        };

        let mut t = 1.0;
        if options.damped && direction.spd {
            let beta = &direction.beta;
            let curve = geo.gamma.quadratic_form(beta);
            let phi = |s: f64| -> Result<(f64, f64)> {
                let x = retract_with(&geo.gamma, &cur.xi, &scaled(beta, s));
                super::check_domain(ds, obj, &x)?;
                let (f, g) = obj.value_and_gradient(&x)?;
                let velocity: Vec<f64> = beta.iter().zip(&curve).map(|(b, c)| b - s * c).collect();
                Ok((f, linalg::dot(&g, &velocity)))
            };
            let slope = linalg::dot(&cur.grad, beta);
            if let Ok(step) = wolfe_line_search(phi, cur.f, slope, &WolfeParams::default()) {
                t = step.step;
            }
        }

        let mut next = None;
        let mut last_err = None;
        for _ in 0..=MAX_DOMAIN_HALVINGS {
            let trial = retract_with(&geo.gamma, &cur.xi, &scaled(&direction.beta, t));
            match evaluate(ds, obj, &trial, true) {
                Ok(p) => {
                    next = Some(p);
                    break;
                }
                Err(e) if is_domain_error(&e) => {
                    last_err = Some(e);
                    t *= 0.5;
                }
                Err(e) => return Ok(trace.finish(Status::DomainFailure, Some(e.to_string()))),
            }
        }
        let Some(next) = next else {
            let msg = last_err.map(|e| e.to_string());
            return Ok(trace.finish(Status::DomainFailure, msg));
        };
        trace.push(&cur.xi, &next, Some(direction.spd));
        cur = next;
        if cur.grad_l2() < stop.grad_tol {
            return Ok(trace.finish(Status::Converged, None));
        }
    }
    Ok(trace.finish(Status::MaxIters, None))
}

pub(crate) fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| s * x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AlphaConnection, FlatEuclidean};
    use crate::linalg::DenseMatrix;
    use crate::models::gaussian::GaussianIsoManifold;
    use crate::models::loglinear::LogLinearManifold;
    use crate::objectives::{AlphaDivergence, KlProjection, Quadratic};

    #[test]
    fn stationary_start_takes_no_steps() {
        let obj = Quadratic::new(DenseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
        let ds = FlatEuclidean { dim: 2 };
        let t = dual_newton_run(&ds, &obj, &[0.0, 0.0], &StopRule::default(), &NewtonOptions::default()).unwrap();
        assert_eq!(t.iterations(), 0);
        assert!(t.converged());
    }

    #[test]
    fn scalar_boltzmann_first_iterate() {
        let kl = KlProjection::from_moments(1, vec![0.5], 0.5, 0.5).unwrap();
        let model = LogLinearManifold::boltzmann(1).unwrap();
        let ds = AlphaConnection::new(&model, 1.0);
        let t = dual_newton_run(&ds, &kl, &[1.0], &StopRule::default(), &NewtonOptions::default()).unwrap();
        // θ₁ = 1 - f'(1)/f''(1) with f' = σ(θ) - ½ + θ and f'' = σ(1-σ) + 1.
        let s = 1.0 / (1.0 + (-1.0f64).exp());
        let expected = 1.0 - (s - 0.5 + 1.0) / (s * (1.0 - s) + 1.0);
        assert!((expected + 0.028_786_814).abs() < 1e-9);
        assert!((t.iterates[1][0] - expected).abs() < 1e-12, "{}", t.iterates[1][0]);
        assert!(t.converged());
        assert!(t.final_point()[0].abs() < 1e-9);
    }

    #[test]
    fn quadratic_converges_in_one_step() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let obj = Quadratic::new(a, vec![1.0, -2.0]).unwrap();
        let ds = FlatEuclidean { dim: 2 };
        let t = dual_newton_run(&ds, &obj, &[5.0, 5.0], &StopRule::default(), &NewtonOptions::default()).unwrap();
        assert_eq!(t.iterations(), 1);
        assert_eq!(t.records[0].spd, Some(true));
    }

    #[test]
    fn alpha_divergence_converges_and_fd_mode_agrees() {
        let obj = AlphaDivergence::reference();
        let model = GaussianIsoManifold;
        let ds = AlphaConnection::new(&model, 0.2);
        let stop = StopRule::default();
        let exact = dual_newton_run(&ds, &obj, &[0.5, 2.0], &stop, &NewtonOptions::default()).unwrap();
        assert!(exact.converged(), "{:?}", exact.status);
        let fd = NewtonOptions {
            jacobian: JacobianMode::FiniteDifference(linalg::FdScheme::cbrt_eps()),
            damped: false,
        };
        let approx = dual_newton_run(&ds, &obj, &[0.5, 2.0], &stop, &fd).unwrap();
        assert!(approx.converged());
        for (x, y) in exact.final_point().iter().zip(approx.final_point()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn damped_mode_converges() {
        let obj = AlphaDivergence::reference();
        let model = GaussianIsoManifold;
        let ds = AlphaConnection::new(&model, 0.0);
        let opts = NewtonOptions {
            damped: true,
            ..NewtonOptions::default()
        };
        let t = dual_newton_run(&ds, &obj, &[0.5, 2.0], &StopRule::default(), &opts).unwrap();
        assert!(t.converged());
    }
}
