//! Iterative methods sharing one trace format and one stopping rule: the
//! Euclidean norm of `a = G⁻¹∇f`.

mod adam;
mod line_search;
mod mirror;
mod natural_gradient;
mod newton;
mod order;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DualStructure, PointGeometry};
use crate::linalg;
use crate::objectives::Objective;

pub use adam::{adam_run, AdamConfig, AdamState};
pub use line_search::{wolfe_line_search, WolfeParams, WolfeStep};
pub use mirror::{mirror_descent_run, mirror_step};
pub use natural_gradient::natural_gradient_run;
pub use newton::{dual_newton_run, NewtonOptions};
pub use order::{convergence_order, convergence_order_above, convergence_order_from_errors};

/// Halvings allowed when a step leaves the domain.
pub const MAX_DOMAIN_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 10_000,
        }
    }
}

impl StopRule {
    pub fn new(grad_tol: f64, max_iters: usize) -> Result<Self> {
        if !(grad_tol > 0.0) || !grad_tol.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grad_tol must be positive, got {grad_tol}"
            )));
        }
        Ok(Self { grad_tol, max_iters })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    SingularHessian,
    DomainFailure,
}

impl Status {
    pub fn is_failure(self) -> bool {
        matches!(self, Status::SingularHessian | Status::DomainFailure)
    }
}

/// One completed iteration, describing the point it arrived at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub f: f64,
    pub grad_l2: f64,
    /// `√(aᵀ G a)`.
    pub grad_gnorm: f64,
    /// Euclidean norm of the coordinate displacement.
    pub step_norm: f64,
    /// Positive definiteness of `G·H*ᵀ` at the point the step was taken
    /// from; `None` for methods without a Hessian.
    pub spd: Option<bool>,
    pub time_s: f64,
}

/// Objective and gradient norms at the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub f: f64,
    pub grad_l2: f64,
    pub grad_gnorm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub method: String,
    pub records: Vec<IterationRecord>,
    /// `ξ₀, ξ₁, …`; one more entry than `records`.
    pub iterates: Vec<Vec<f64>>,
    pub initial: InitialState,
    pub status: Status,
    pub message: Option<String>,
}

pub const CSV_HEADER: &str = "iter,f,grad_l2,grad_gnorm,step_norm,spd,time_s";

impl OptimizerTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_point(&self) -> &[f64] {
        self.iterates.last().expect("trace holds the initial point")
    }

    pub fn final_grad_l2(&self) -> f64 {
        self.records.last().map_or(self.initial.grad_l2, |r| r.grad_l2)
    }

    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(self.initial.f, |r| r.f)
    }

    pub fn total_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.time_s)
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    /// All steps were certified descent directions.
    pub fn all_spd(&self) -> bool {
        self.records.iter().all(|r| r.spd != Some(false))
    }

    pub fn any_non_spd(&self) -> bool {
        self.records.iter().any(|r| r.spd == Some(false))
    }

    /// CSV rows; with `with_time = false` the timing column is left empty so
    /// reruns compare byte for byte.
    pub fn to_csv(&self, with_time: bool) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let spd = match r.spd {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            let _ = write!(
                out,
                "{},{:e},{:e},{:e},{:e},{}",
                r.iter, r.f, r.grad_l2, r.grad_gnorm, r.step_norm, spd
            );
            if with_time {
                let _ = write!(out, ",{:.9}", r.time_s);
            } else {
                out.push(',');
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv(true))
    }

    /// Terminal status sidecar.
    pub fn status_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "status": self.status,
            "iterations": self.iterations(),
            "message": self.message,
            "final_point": self.final_point(),
            "final_grad_l2": self.final_grad_l2(),
        })
    }

    pub fn save_status(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.status_json()).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }
}

/// Objective, gradient and metric at one point.
#[derive(Debug, Clone)]
pub(crate) struct PointEval {
    pub xi: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub a: Vec<f64>,
    /// Connection symbols when the caller asked for them.
    pub geometry: Option<PointGeometry>,
}

impl PointEval {
    pub fn grad_l2(&self) -> f64 {
        linalg::norm2(&self.a)
    }

    pub fn grad_gnorm(&self) -> f64 {
        linalg::dot(&self.a, &self.grad).max(0.0).sqrt()
    }

    pub fn initial_state(&self) -> InitialState {
        InitialState {
            f: self.f,
            grad_l2: self.grad_l2(),
            grad_gnorm: self.grad_gnorm(),
        }
    }
}

pub(crate) fn check_domain(ds: &dyn DualStructure, obj: &dyn Objective, xi: &[f64]) -> Result<()> {
    ds.check_domain(xi)?;
    obj.check_domain(xi)
}

pub(crate) fn evaluate(
    ds: &dyn DualStructure,
    obj: &dyn Objective,
    xi: &[f64],
    with_connection: bool,
) -> Result<PointEval> {
    check_domain(ds, obj, xi)?;
    let (f, grad) = obj.value_and_gradient(xi)?;
    finish_eval(ds, xi, f, grad, with_connection)
}

pub(crate) fn finish_eval(
    ds: &dyn DualStructure,
    xi: &[f64],
    f: f64,
    grad: Vec<f64>,
    with_connection: bool,
) -> Result<PointEval> {
    if !f.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteValue("objective"));
    }
    let (a, geometry) = if with_connection {
        let geo = ds.geometry(xi)?;
        (linalg::solve_spd(&geo.metric, &grad)?, Some(geo))
    } else {
        (linalg::solve_spd(&ds.metric(xi)?, &grad)?, None)
    };
    Ok(PointEval {
        xi: xi.to_vec(),
        f,
        grad,
        a,
        geometry,
    })
}

/// Errors that mean "this trial point is unusable" rather than a bug.
pub(crate) fn is_domain_error(e: &Error) -> bool {
    matches!(
        e,
        Error::DomainViolation(_)
            | Error::DivergenceUndefined { .. }
            | Error::QuadratureUnderflow
            | Error::NonFiniteValue(_)
            | Error::NotPositiveDefinite { .. }
            | Error::MomentInfeasible { .. }
    )
}

/// Incrementally built trace.
pub(crate) struct TraceBuilder {
    trace: OptimizerTrace,
    clock: std::time::Instant,
}

impl TraceBuilder {
    pub fn start(method: impl Into<String>, start: &PointEval) -> Self {
        Self {
            trace: OptimizerTrace {
                method: method.into(),
                records: Vec::new(),
                iterates: vec![start.xi.clone()],
                initial: start.initial_state(),
                status: Status::MaxIters,
                message: None,
            },
            clock: std::time::Instant::now(),
        }
    }

    pub fn push(&mut self, prev: &[f64], next: &PointEval, spd: Option<bool>) {
        let step: Vec<f64> = next.xi.iter().zip(prev).map(|(a, b)| a - b).collect();
        self.trace.records.push(IterationRecord {
            iter: self.trace.records.len() + 1,
            f: next.f,
            grad_l2: next.grad_l2(),
            grad_gnorm: next.grad_gnorm(),
            step_norm: linalg::norm2(&step),
            spd,
            time_s: self.clock.elapsed().as_secs_f64(),
        });
        self.trace.iterates.push(next.xi.clone());
    }

    pub fn finish(mut self, status: Status, message: Option<String>) -> OptimizerTrace {
        self.trace.status = status;
        self.trace.message = message;
        self.trace
    }
}
