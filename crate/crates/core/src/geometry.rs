//! Chart-level dual geometry: Riemannian gradient, dual Hessian, Newton
//! direction and the quadratic retraction.
//!
//! Points are plain coordinate slices `&[f64]` in a fixed chart. A
//! [`DualStructure`] supplies the metric `G(ξ)` and the Christoffel symbols
//! of the primal connection `∇` (used by the retraction) and of its dual `∇*`
//! (used by the Hessian).

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, DenseMatrix, FdScheme, KahanSum};
use crate::objectives::Objective;

/// Christoffel symbols of the second kind, `get(i, j, k) = Γ^k_{ij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTensor {
    dim: usize,
    data: Vec<f64>,
}

impl ChristoffelTensor {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    /// Builds from a closure `(i, j, k) -> Γ^k_{ij}`.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.data[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Raises the last index of first-kind symbols `Γ_{ij,k}` with the metric.
    ///
    /// Goes through a Cholesky solve per `(i, j)` pair; the inverse metric
    /// is never formed.
    pub fn from_first_kind(first: &FirstKindSymbols, metric: &DenseMatrix) -> Result<Self> {
        let n = first.dim;
        if metric.rows() != n || !metric.is_square() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: metric.rows(),
            });
        }
        let chol = Cholesky::factor(metric)?;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let start = (i * n + j) * n;
                let raised = chol.solve(&first.data[start..start + n])?;
                t.data[start..start + n].copy_from_slice(&raised);
            }
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = value;
    }

    /// Lowers the upper index: `Γ_{ij,k} = Σ_s Γ^s_{ij} g_{sk}`.
    pub fn lower(&self, metric: &DenseMatrix) -> FirstKindSymbols {
        let n = self.dim;
        FirstKindSymbols::from_fn(n, |i, j, k| {
            linalg::sum((0..n).map(|s| self.get(i, j, s) * metric[(s, k)]))
        })
    }

    /// Largest `|Γ^k_{ij} - Γ^k_{ji}|`.
    pub fn lower_index_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) - self.get(j, i, k)).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        linalg::norm_inf(&self.data)
    }

    pub fn max_abs_diff(&self, other: &ChristoffelTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `Σ_{j,k} Γ^i_{jk} v_j v_k` for each `i`.
    pub fn quadratic_form(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut acc = KahanSum::new();
                for j in 0..n {
                    for k in 0..n {
                        acc.add(self.get(j, k, i) * v[j] * v[k]);
                    }
                }
                acc.value()
            })
            .collect()
    }
}

/// Christoffel symbols of the first kind, `get(i, j, k) = Γ_{ij,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstKindSymbols {
    dim: usize,
    data: Vec<f64>,
}

impl FirstKindSymbols {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.data[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = value;
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &FirstKindSymbols) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + factor * b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &FirstKindSymbols) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Metric and both connections evaluated at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub metric: DenseMatrix,
    /// Symbols of `∇`, used by the retraction.
    pub gamma: ChristoffelTensor,
    /// Symbols of `∇*`, used by the dual Hessian.
    pub gamma_dual: ChristoffelTensor,
}

/// A metric together with a pair of dual torsion-free connections on one chart.
pub trait DualStructure {
    fn dim(&self) -> usize;

    /// Fails with `DomainViolation` outside the chart domain.
    fn check_domain(&self, xi: &[f64]) -> Result<()>;

    fn metric(&self, xi: &[f64]) -> Result<DenseMatrix>;

    /// Christoffel symbols of `∇`.
    fn gamma(&self, xi: &[f64]) -> Result<ChristoffelTensor>;

    /// Christoffel symbols of `∇*`.
    fn gamma_dual(&self, xi: &[f64]) -> Result<ChristoffelTensor>;

    /// All three quantities at once; implementors that share work between
    /// them override this.
    fn geometry(&self, xi: &[f64]) -> Result<PointGeometry> {
        Ok(PointGeometry {
            metric: self.metric(xi)?,
            gamma: self.gamma(xi)?,
            gamma_dual: self.gamma_dual(xi)?,
        })
    }
}

/// A parametric family of distributions with Fisher metric and
/// α-connections in a fixed chart.
pub trait StatisticalModel {
    fn dim(&self) -> usize;

    fn check_domain(&self, xi: &[f64]) -> Result<()>;

    fn fisher(&self, xi: &[f64]) -> Result<DenseMatrix>;

    /// Second-kind symbols of `∇^(α)`.
    fn alpha_christoffel(&self, xi: &[f64], alpha: f64) -> Result<ChristoffelTensor>;

    /// Metric with `∇^(α)` and `∇^(-α)` at one point.
    fn alpha_pair(&self, xi: &[f64], alpha: f64) -> Result<PointGeometry> {
        Ok(PointGeometry {
            metric: self.fisher(xi)?,
            gamma: self.alpha_christoffel(xi, alpha)?,
            gamma_dual: self.alpha_christoffel(xi, -alpha)?,
        })
    }
}

/// The dual pair `(∇^(α), ∇^(-α))` of a statistical model.
#[derive(Clone, Copy)]
pub struct AlphaConnection<'a> {
    model: &'a dyn StatisticalModel,
    alpha: f64,
}

impl<'a> AlphaConnection<'a> {
    pub fn new(model: &'a dyn StatisticalModel, alpha: f64) -> Self {
        Self { model, alpha }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn model(&self) -> &'a dyn StatisticalModel {
        self.model
    }
}

impl DualStructure for AlphaConnection<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        self.model.check_domain(xi)
    }

    fn metric(&self, xi: &[f64]) -> Result<DenseMatrix> {
        self.model.fisher(xi)
    }

    fn gamma(&self, xi: &[f64]) -> Result<ChristoffelTensor> {
        self.model.alpha_christoffel(xi, self.alpha)
    }

    fn gamma_dual(&self, xi: &[f64]) -> Result<ChristoffelTensor> {
        self.model.alpha_christoffel(xi, -self.alpha)
    }

    fn geometry(&self, xi: &[f64]) -> Result<PointGeometry> {
        self.model.alpha_pair(xi, self.alpha)
    }
}

/// Euclidean space: identity metric, both connections flat.
#[derive(Debug, Clone, Copy)]
pub struct FlatEuclidean {
    pub dim: usize,
}

impl DualStructure for FlatEuclidean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        check_finite(xi)
    }

    fn metric(&self, _xi: &[f64]) -> Result<DenseMatrix> {
        Ok(DenseMatrix::identity(self.dim))
    }

    fn gamma(&self, _xi: &[f64]) -> Result<ChristoffelTensor> {
        Ok(ChristoffelTensor::zeros(self.dim))
    }

    fn gamma_dual(&self, _xi: &[f64]) -> Result<ChristoffelTensor> {
        Ok(ChristoffelTensor::zeros(self.dim))
    }
}

pub(crate) fn check_finite(xi: &[f64]) -> Result<()> {
    if xi.is_empty() {
        return Err(Error::InvalidInput("empty coordinate vector".into()));
    }
    if xi.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::DomainViolation("non-finite coordinate".into()))
    }
}

/// `a = G(ξ)⁻¹ ∇f(ξ)`.
pub fn riemannian_gradient(ds: &dyn DualStructure, eucl_grad: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    if eucl_grad.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: eucl_grad.len(),
        });
    }
    linalg::solve_spd(&ds.metric(xi)?, eucl_grad)
}

/// How the Jacobian of the gradient field is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum JacobianMode {
    /// Use the objective's analytic callback; falls back to finite
    /// differences when the objective has none.
    #[default]
    Analytic,
    FiniteDifference(FdScheme),
}

/// The vector field `a(ξ) = G(ξ)⁻¹ ∇f(ξ)` of coordinate components of
/// `grad f`.
#[derive(Clone, Copy)]
pub struct GradientField<'a> {
    pub ds: &'a dyn DualStructure,
    pub objective: &'a dyn Objective,
}

impl<'a> GradientField<'a> {
    pub fn new(ds: &'a dyn DualStructure, objective: &'a dyn Objective) -> Self {
        Self { ds, objective }
    }

    pub fn eval(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let g = self.objective.gradient(xi)?;
        riemannian_gradient(self.ds, &g, xi)
    }

    /// Entry `(i, j) = ∂a_j/∂ξ_i`.
    pub fn jacobian(&self, xi: &[f64], mode: JacobianMode) -> Result<DenseMatrix> {
        match mode {
            JacobianMode::Analytic => match self.objective.grad_field_jacobian(xi) {
                Some(jac) => jac,
                None => linalg::fd_jacobian(|x| self.eval(x), xi, FdScheme::default()),
            },
            JacobianMode::FiniteDifference(scheme) => linalg::fd_jacobian(|x| self.eval(x), xi, scheme),
        }
    }
}

/// Assembles `H*_{ij} = ∂a_j/∂ξ_i + Σ_k a_k Γ*^j_{ik}` from its parts.
pub fn assemble_dual_hessian(jacobian: &DenseMatrix, a: &[f64], gamma_dual: &ChristoffelTensor) -> Result<DenseMatrix> {
    let n = a.len();
    if jacobian.rows() != n || jacobian.cols() != n || gamma_dual.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: jacobian.rows(),
        });
    }
    let mut h = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = KahanSum::new();
            acc.add(jacobian[(i, j)]);
            for k in 0..n {
                acc.add(a[k] * gamma_dual.get(i, k, j));
            }
            h[(i, j)] = acc.value();
        }
    }
    if !h.is_finite() {
        return Err(Error::NonFiniteValue("dual Hessian"));
    }
    Ok(h)
}

/// The dual Hessian matrix `H*(ξ)`.
pub fn dual_hessian_matrix(
    ds: &dyn DualStructure,
    field: &GradientField<'_>,
    xi: &[f64],
    mode: JacobianMode,
) -> Result<DenseMatrix> {
    let a = field.eval(xi)?;
    let jac = field.jacobian(xi, mode)?;
    assemble_dual_hessian(&jac, &a, &ds.gamma_dual(xi)?)
}

/// Result of one Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonDirection {
    pub beta: Vec<f64>,
    /// Whether `G·H*ᵀ` is positive definite, certifying descent.
    pub spd: bool,
}

/// Solves `H*ᵀ β = -G⁻¹ ∇f`.
pub fn newton_direction(
    ds: &dyn DualStructure,
    h_star: &DenseMatrix,
    eucl_grad: &[f64],
    xi: &[f64],
) -> Result<NewtonDirection> {
    let metric = ds.metric(xi)?;
    newton_direction_with_metric(&metric, h_star, eucl_grad)
}

/// [`newton_direction`] with a metric that has already been evaluated.
pub fn newton_direction_with_metric(
    metric: &DenseMatrix,
    h_star: &DenseMatrix,
    eucl_grad: &[f64],
) -> Result<NewtonDirection> {
    let n = eucl_grad.len();
    if h_star.rows() != n || h_star.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h_star.rows(),
        });
    }
    let h_t = h_star.transpose();
    let spd = linalg::is_spd(&metric.matmul(&h_t)?, 0.0);
    if eucl_grad.iter().all(|g| *g == 0.0) {
        return Ok(NewtonDirection {
            beta: vec![0.0; n],
            spd,
        });
    }
    let a = linalg::solve_spd(metric, eucl_grad)?;
    let rhs: Vec<f64> = a.iter().map(|x| -x).collect();
    let beta = linalg::solve_general(&h_t, &rhs)?;
    Ok(NewtonDirection { beta, spd })
}

/// `ξ_i + β_i - ½ Σ_{jk} Γ^i_{jk} β_j β_k` with `Γ` of `∇`, without a
/// domain check.
pub fn retract_with(gamma: &ChristoffelTensor, xi: &[f64], beta: &[f64]) -> Vec<f64> {
    let correction = gamma.quadratic_form(beta);
    xi.iter()
        .zip(beta)
        .zip(&correction)
        .map(|((x, b), c)| x + b - 0.5 * c)
        .collect()
}

/// The quadratic second-order retraction along `∇`.
pub fn second_order_retract(ds: &dyn DualStructure, xi: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != xi.len() || xi.len() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: beta.len(),
        });
    }
    let next = retract_with(&ds.gamma(xi)?, xi, beta);
    ds.check_domain(&next)?;
    Ok(next)
}

/// Central difference of the metric, `out[k] = ∂_k G`.
fn metric_derivatives(
    metric: &dyn Fn(&[f64]) -> Result<DenseMatrix>,
    xi: &[f64],
    scheme: FdScheme,
) -> Result<Vec<DenseMatrix>> {
    let mut probe = xi.to_vec();
    let mut out = Vec::with_capacity(xi.len());
    for k in 0..xi.len() {
        let h = scheme.step_at(xi[k]);
        probe[k] = xi[k] + h;
        let plus = metric(&probe)?;
        probe[k] = xi[k] - h;
        let minus = metric(&probe)?;
        probe[k] = xi[k];
        let d = plus.sub(&minus)?.scaled(1.0 / (2.0 * h));
        if !d.is_finite() {
            return Err(Error::NonFiniteValue("metric derivative"));
        }
        out.push(d);
    }
    Ok(out)
}

/// Levi-Civita symbols of a metric, by finite differences of `G`.
pub fn levi_civita_from_metric(
    metric: &dyn Fn(&[f64]) -> Result<DenseMatrix>,
    xi: &[f64],
) -> Result<ChristoffelTensor> {
    let n = xi.len();
    let dg = metric_derivatives(metric, xi, FdScheme::default())?;
    let first = FirstKindSymbols::from_fn(n, |i, j, k| 0.5 * (dg[i][(j, k)] + dg[j][(i, k)] - dg[k][(i, j)]));
    ChristoffelTensor::from_first_kind(&first, &metric(xi)?)
}

/// `max |∂_k g_ij - Γ_{ki,j} - Γ*_{kj,i}|` over all index triples.
pub fn duality_residual(ds: &dyn DualStructure, xi: &[f64]) -> Result<f64> {
    let n = ds.dim();
    let metric = |x: &[f64]| ds.metric(x);
    let dg = metric_derivatives(&metric, xi, FdScheme::default())?;
    let geo = ds.geometry(xi)?;
    let lower = geo.gamma.lower(&geo.metric);
    let lower_dual = geo.gamma_dual.lower(&geo.metric);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let r = dg[k][(i, j)] - lower.get(k, i, j) - lower_dual.get(k, j, i);
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}
