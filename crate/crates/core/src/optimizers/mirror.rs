//! Mirror descent on a log-linear model: gradient steps taken in the
//! expectation coordinates `η` and mapped back through the Legendre inverse.

use crate::error::{Error, Result};
use crate::geometry::AlphaConnection;
use crate::linalg::{self, DenseMatrix};
use crate::models::loglinear::LogLinearManifold;
use crate::objectives::Objective;

use super::line_search::{wolfe_line_search, WolfeParams};
use super::{finish_eval, OptimizerTrace, PointEval, Status, StopRule, TraceBuilder};

/// One step `θ' = θ(η(θ) - s∇_θf)` with a fixed step size.
pub fn mirror_step(manifold: &LogLinearManifold, obj: &dyn Objective, theta: &[f64], s: f64) -> Result<Vec<f64>> {
    let eta = manifold.eta(theta)?;
    let grad = obj.gradient(theta)?;
    let target: Vec<f64> = eta.iter().zip(&grad).map(|(e, g)| e - s * g).collect();
    manifold.theta_from_eta(&target, Some(theta))
}

struct Pulled {
    theta: Vec<f64>,
    f: f64,
    grad: Vec<f64>,
    fisher: DenseMatrix,
}

/// Mirror descent with a strong Wolfe step on `s ↦ f(θ(η - s∇f))`.
///
/// The stopping norm is `‖G⁻¹∇_θf‖₂`, shared with the other methods.
pub fn mirror_descent_run(
    manifold: &LogLinearManifold,
    obj: &dyn Objective,
    theta0: &[f64],
    stop: &StopRule,
) -> Result<OptimizerTrace> {
    use crate::geometry::StatisticalModel;
    if obj.dim() != manifold.dim() {
        return Err(Error::DimensionMismatch {
            expected: manifold.dim(),
            got: obj.dim(),
        });
    }
    // The metric is all the shared bookkeeping needs.
    let ds = AlphaConnection::new(manifold, 1.0);
    let (f0, g0) = obj.value_and_gradient(theta0)?;
    let mut cur = finish_eval(&ds, theta0, f0, g0, false)?;
    let mut eta = manifold.eta(theta0)?;
    let mut trace = TraceBuilder::start("mirror_descent", &cur);
    if cur.grad_l2() < stop.grad_tol {
        return Ok(trace.finish(Status::Converged, None));
    }
    let params = WolfeParams::default();
    for _ in 0..stop.max_iters {
        let mut last: Option<Pulled> = None;
        let mut warm = cur.xi.clone();
        let phi = |s: f64| -> Result<(f64, f64)> {
            let target: Vec<f64> = eta.iter().zip(&cur.grad).map(|(e, g)| e - s * g).collect();
            let theta = manifold.theta_from_eta(&target, Some(&warm))?;
            let (f, grad) = obj.value_and_gradient(&theta)?;
            let fisher = manifold.cumulants(&theta, false)?.fisher;
            // dθ/ds = -G(θ)⁻¹∇f(θ₀)
            let velocity = linalg::solve_spd(&fisher, &cur.grad)?;
            let slope = -linalg::dot(&grad, &velocity);
            warm.clone_from(&theta);
            last = Some(Pulled { theta, f, grad, fisher });
            Ok((f, slope))
        };
        let slope0 = -linalg::dot(&cur.grad, &cur.a);
        if let Err(e) = wolfe_line_search(phi, cur.f, slope0, &params) {
            return Ok(trace.finish(Status::DomainFailure, Some(e.to_string())));
        }
        let p = last.expect("accepted step was evaluated last");
        let a = match linalg::solve_spd(&p.fisher, &p.grad) {
            Ok(a) => a,
            Err(e) => return Ok(trace.finish(Status::DomainFailure, Some(e.to_string()))),
        };
        let next = PointEval {
            xi: p.theta,
            f: p.f,
            grad: p.grad,
            a,
            geometry: None,
        };
        eta = manifold.eta(&next.xi)?;
        trace.push(&cur.xi, &next, None);
        cur = next;
        if cur.grad_l2() < stop.grad_tol {
            return Ok(trace.finish(Status::Converged, None));
        }
    }
    Ok(trace.finish(Status::MaxIters, None))
}
