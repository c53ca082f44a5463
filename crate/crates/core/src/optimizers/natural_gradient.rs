//! Natural gradient descent with a strong Wolfe step.

use crate::error::{Error, Result};
use crate::geometry::DualStructure;
use crate::linalg;
use crate::objectives::Objective;

use super::line_search::{wolfe_line_search, WolfeParams};
use super::{check_domain, evaluate, finish_eval, OptimizerTrace, Status, StopRule, TraceBuilder};

/// `ξ ← ξ - s·a(ξ)` with `s` from a strong Wolfe search.
pub fn natural_gradient_run(
    ds: &dyn DualStructure,
    obj: &dyn Objective,
    xi0: &[f64],
    stop: &StopRule,
) -> Result<OptimizerTrace> {
    if obj.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: obj.dim(),
        });
    }
    let mut cur = evaluate(ds, obj, xi0, false)?;
    let mut trace = TraceBuilder::start("natural_gradient", &cur);
    if cur.grad_l2() < stop.grad_tol {
        return Ok(trace.finish(Status::Converged, None));
    }
    let params = WolfeParams::default();
    for _ in 0..stop.max_iters {
        let d: Vec<f64> = cur.a.iter().map(|x| -x).collect();
        let slope = linalg::dot(&cur.grad, &d);
        let mut last: Option<(Vec<f64>, f64, Vec<f64>)> = None;
        let phi = |s: f64| -> Result<(f64, f64)> {
            let x: Vec<f64> = cur.xi.iter().zip(&d).map(|(x, d)| x + s * d).collect();
            check_domain(ds, obj, &x)?;
            let (f, g) = obj.value_and_gradient(&x)?;
            let slope = linalg::dot(&g, &d);
            last = Some((x, f, g));
            Ok((f, slope))
        };
        if let Err(e) = wolfe_line_search(phi, cur.f, slope, &params) {
            return Ok(trace.finish(Status::DomainFailure, Some(e.to_string())));
        }
        let (x, f, g) = last.expect("accepted step was evaluated last");
        let next = match finish_eval(ds, &x, f, g, false) {
            Ok(p) => p,
            Err(e) => return Ok(trace.finish(Status::DomainFailure, Some(e.to_string()))),
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
    fn identity_quadratic_one_exact_step() {
        let obj = Quadratic::new(DenseMatrix::identity(3), vec![0.0; 3]).unwrap();
        let ds = FlatEuclidean { dim: 3 };
        let t = natural_gradient_run(&ds, &obj, &[1.0, -2.0, 0.5], &StopRule::default()).unwrap();
        assert_eq!(t.iterations(), 1);
        assert_eq!(t.final_point(), &[0.0, 0.0, 0.0]);
        assert_eq!(t.records[0].spd, None);
    }

    #[test]
    fn ill_conditioned_quadratic_converges_linearly() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 10.0]]).unwrap();
        let obj = Quadratic::new(a, vec![0.0; 2]).unwrap();
        let ds = FlatEuclidean { dim: 2 };
        let t = natural_gradient_run(&ds, &obj, &[1.0, 0.7], &StopRule::default()).unwrap();
        assert!(t.converged());
        assert!(t.iterations() > 3);
        for w in t.records.windows(2) {
            assert!(w[1].f <= w[0].f);
        }
    }
}
