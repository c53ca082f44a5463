//! Objective functions with values and Euclidean coordinate gradients.

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, KahanSum};
use crate::models::beta_mixture::{log_mixture, BetaMixtureManifold};
use crate::models::loglinear::{LogLinearManifold, LogLinearModel, SubsetIndex};

/// A smooth function on a coordinate chart.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Objective-specific domain restrictions beyond the model's own.
    fn check_domain(&self, _xi: &[f64]) -> Result<()> {
        Ok(())
    }

    fn value(&self, xi: &[f64]) -> Result<f64>;

    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>>;

    fn value_and_gradient(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(xi)?, self.gradient(xi)?))
    }

    /// Closed-form Jacobian `(i, j) = ∂a_j/∂ξ_i` of `a = G⁻¹∇f`, where `G` is
    /// the Fisher metric of the model the objective is posed on.
    fn grad_field_jacobian(&self, _xi: &[f64]) -> Option<Result<DenseMatrix>> {
        None
    }
}

fn check_len(xi: &[f64], n: usize) -> Result<()> {
    if xi.len() == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: n,
            got: xi.len(),
        })
    }
}

/// `½ ξᵀAξ + bᵀξ`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DenseMatrix,
    b: Vec<f64>,
}

impl Quadratic {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if !a.is_square() || a.rows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        Ok(Self { a: a.symmetrized(), b })
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, xi: &[f64]) -> Result<f64> {
        check_len(xi, self.dim())?;
        let ax = self.a.matvec(xi)?;
        Ok(0.5 * linalg::dot(xi, &ax) + linalg::dot(&self.b, xi))
    }

    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_len(xi, self.dim())?;
        let ax = self.a.matvec(xi)?;
        Ok(ax.iter().zip(&self.b).map(|(x, y)| x + y).collect())
    }
}

/// Regularized KL projection onto a Boltzmann machine in θ-coordinates:
/// `ψ(θ) + φ(η̂) - θ·η̂ + λ₁Σ(θ^i)² + λ₂Σ(θ^{ij})²`.
#[derive(Debug, Clone)]
pub struct KlProjection {
    manifold: LogLinearManifold,
    target_eta: Vec<f64>,
    target_negentropy: f64,
    lambda: Vec<f64>,
}

impl KlProjection {
    /// From target moments over the Boltzmann index and the target's
    /// negative entropy.
    pub fn new(
        n_vars: usize,
        target_eta: Vec<f64>,
        target_negentropy: f64,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        if !(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "regularization weights must be nonnegative, got ({lambda1}, {lambda2})"
            )));
        }
        let manifold = LogLinearManifold::boltzmann(n_vars)?;
        check_len(&target_eta, manifold.index.len())?;
        if !target_negentropy.is_finite() {
            return Err(Error::NonFiniteValue("target negative entropy"));
        }
        let lambda = (0..manifold.index.len())
            .map(|i| if manifold.index.order(i) == 1 { lambda1 } else { lambda2 })
            .collect();
        Ok(Self {
            manifold,
            target_eta,
            target_negentropy,
            lambda,
        })
    }

    /// From a target distribution on `n_vars` variables (any index); its
    /// moments are read off over the Boltzmann index.
    pub fn from_target(target: &LogLinearModel, lambda1: f64, lambda2: f64) -> Result<Self> {
        let n = target.index.n_vars();
        let dist = target.distribution()?;
        let eta = dist.moments(&SubsetIndex::boltzmann(n)?)?;
        Self::new(n, eta, dist.negative_entropy(), lambda1, lambda2)
    }

    /// From moments alone. The constant `φ(η̂)` is then the negative entropy
    /// of the maximum-entropy Boltzmann machine with these moments.
    pub fn from_moments(n_vars: usize, target_eta: Vec<f64>, lambda1: f64, lambda2: f64) -> Result<Self> {
        let manifold = LogLinearManifold::boltzmann(n_vars)?;
        let theta = manifold.theta_from_eta(&target_eta, None)?;
        let phi = linalg::dot(&theta, &target_eta) - manifold.log_partition(&theta)?;
        Self::new(n_vars, target_eta, phi, lambda1, lambda2)
    }

    pub fn manifold(&self) -> &LogLinearManifold {
        &self.manifold
    }

    pub fn target_eta(&self) -> &[f64] {
        &self.target_eta
    }

    pub fn target_negentropy(&self) -> f64 {
        self.target_negentropy
    }

    /// `λ_A` per coordinate.
    pub fn regularizer_diag(&self) -> &[f64] {
        &self.lambda
    }

    /// `G(θ) + 2 diag(λ)`.
    pub fn euclidean_hessian(&self, theta: &[f64]) -> Result<DenseMatrix> {
        check_len(theta, self.dim())?;
        let g = self.manifold.cumulants(theta, false)?.fisher;
        let reg: Vec<f64> = self.lambda.iter().map(|l| 2.0 * l).collect();
        g.add(&DenseMatrix::from_diag(&reg))
    }

    fn gradient_from_eta(&self, theta: &[f64], eta: &[f64]) -> Vec<f64> {
        eta.iter()
            .zip(&self.target_eta)
            .zip(theta.iter().zip(&self.lambda))
            .map(|((e, t), (th, l))| e - t + 2.0 * l * th)
            .collect()
    }

    fn value_from_psi(&self, theta: &[f64], psi: f64) -> f64 {
        let mut acc = KahanSum::new();
        acc.add(psi);
        acc.add(self.target_negentropy);
        for ((th, e), l) in theta.iter().zip(&self.target_eta).zip(&self.lambda) {
            acc.add(-th * e);
            acc.add(l * th * th);
        }
        acc.value()
    }
}

impl Objective for KlProjection {
    fn dim(&self) -> usize {
        self.manifold.index.len()
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        check_len(xi, self.dim())?;
        crate::geometry::check_finite(xi)
    }

    fn value(&self, xi: &[f64]) -> Result<f64> {
        check_len(xi, self.dim())?;
        Ok(self.value_from_psi(xi, self.manifold.log_partition(xi)?))
    }

    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        check_len(xi, self.dim())?;
        Ok(self.gradient_from_eta(xi, &self.manifold.eta(xi)?))
    }

    fn value_and_gradient(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_len(xi, self.dim())?;
        let dist = crate::models::loglinear::Distribution::new(&self.manifold.index, xi)?;
        let eta = dist.moments(&self.manifold.index)?;
        Ok((
            self.value_from_psi(xi, dist.log_partition()),
            self.gradient_from_eta(xi, &eta),
        ))
    }

    /// `∂_i a = G⁻¹(∂_i∇f - (∂_i G) a)` with `∂_i G_{jk} = T_{ijk}`.
    fn grad_field_jacobian(&self, xi: &[f64]) -> Option<Result<DenseMatrix>> {
        let run = || -> Result<DenseMatrix> {
            check_len(xi, self.dim())?;
            let c = self.manifold.cumulants(xi, true)?;
            let t = c.third.as_ref().expect("requested");
            let grad = self.gradient_from_eta(xi, &c.eta);
            let chol = linalg::Cholesky::factor(&c.fisher)?;
            let a = chol.solve(&grad)?;
            let m = self.dim();
            let mut jac = DenseMatrix::zeros(m, m);
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                for (j, r) in rhs.iter_mut().enumerate() {
                    let mut acc = KahanSum::new();
                    acc.add(c.fisher[(j, i)]);
                    if i == j {
                        acc.add(2.0 * self.lambda[i]);
                    }
                    for (k, ak) in a.iter().enumerate() {
                        acc.add(-t.get(i, j, k) * ak);
                    }
                    *r = acc.value();
                }
                let row = chol.solve(&rhs)?;
                for (j, v) in row.into_iter().enumerate() {
                    jac[(i, j)] = v;
                }
            }
            Ok(jac)
        };
        Some(run())
    }
}

/// α-divergence `D_ᾱ(p‖q)` from a diagonal Gaussian `p` to the isotropic
/// `q = N((μ, μ), σ²I₂)`, as a function of `(μ, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaDivergence {
    pub alpha_bar: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// `log K` and its first two derivatives in `(μ, σ)`.
struct LogKernel {
    value: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

impl AlphaDivergence {
    pub fn new(alpha_bar: f64, mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) || !(mu1.is_finite() && mu2.is_finite()) {
            return Err(Error::InvalidInput(
                "target needs finite means and positive scales".into(),
            ));
        }
        if !alpha_bar.is_finite() || (alpha_bar.abs() - 1.0).abs() < f64::EPSILON {
            return Err(Error::InvalidInput(format!(
                "closed form needs ᾱ ≠ ±1, got {alpha_bar}"
            )));
        }
        Ok(Self {
            alpha_bar,
            mu1,
            mu2,
            sigma1,
            sigma2,
        })
    }

    /// ᾱ = 3 and `p = N((2, 1.5), diag(1.3², 0.7²))`.
    pub fn reference() -> Self {
        Self::new(3.0, 2.0, 1.5, 1.3, 0.7).expect("valid constants")
    }

    fn scale(&self) -> f64 {
        4.0 / (1.0 - self.alpha_bar * self.alpha_bar)
    }

    /// `((1+ᾱ)/2)σ² + ((1-ᾱ)/2)σ_i²` for both axes.
    fn factors(&self, sigma: f64) -> Result<[f64; 2]> {
        let p = 0.5 * (1.0 + self.alpha_bar);
        let q = 0.5 * (1.0 - self.alpha_bar);
        let d = [
            p * sigma * sigma + q * self.sigma1 * self.sigma1,
            p * sigma * sigma + q * self.sigma2 * self.sigma2,
        ];
        for &factor in &d {
            if !(factor > 0.0) {
                return Err(Error::DivergenceUndefined { factor });
            }
        }
        Ok(d)
    }

    fn log_kernel(&self, xi: &[f64]) -> Result<LogKernel> {
        check_len(xi, 2)?;
        let (mu, sigma) = (xi[0], xi[1]);
        if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::DomainViolation(format!("need σ > 0, got ({mu}, {sigma})")));
        }
        let ab = self.alpha_bar;
        let d = self.factors(sigma)?;
        let m = [self.mu1 - mu, self.mu2 - mu];
        let k2 = (1.0 - ab * ab) / 8.0;
        let d1 = (1.0 + ab) * sigma;
        let d2 = 1.0 + ab;

        let mut value =
            0.25 * (1.0 - ab) * (self.sigma1 * self.sigma1 * self.sigma2 * self.sigma2).ln() + (1.0 + ab) * sigma.ln();
        let mut g = [0.0, (1.0 + ab) / sigma];
        let mut h = [[0.0; 2], [0.0, -(1.0 + ab) / (sigma * sigma)]];
        for i in 0..2 {
            let (di, mi) = (d[i], m[i]);
            let di2 = di * di;
            value -= 0.5 * di.ln() + k2 * mi * mi / di;
            g[0] += 2.0 * k2 * mi / di;
            g[1] += -0.5 * d1 / di + k2 * mi * mi * d1 / di2;
            h[0][0] -= 2.0 * k2 / di;
            h[0][1] -= 2.0 * k2 * mi * d1 / di2;
            h[1][1] += -0.5 * (d2 * di - d1 * d1) / di2 + k2 * mi * mi * (d2 / di2 - 2.0 * d1 * d1 / (di2 * di));
        }
        h[1][0] = h[0][1];
        Ok(LogKernel {
            value,
            grad: g,
            hess: h,
        })
    }

    /// Euclidean Hessian in `(μ, σ)`.
    pub fn hessian(&self, xi: &[f64]) -> Result<[[f64; 2]; 2]> {
        let lk = self.log_kernel(xi)?;
        let ck = -self.scale() * lk.value.exp();
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = ck * (lk.grad[i] * lk.grad[j] + lk.hess[i][j]);
            }
        }
        Ok(out)
    }
}

impl Objective for AlphaDivergence {
    fn dim(&self) -> usize {
        2
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        self.log_kernel(xi).map(|_| ())
    }

    fn value(&self, xi: &[f64]) -> Result<f64> {
        let lk = self.log_kernel(xi)?;
        Ok(-self.scale() * lk.value.exp_m1())
    }

    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let lk = self.log_kernel(xi)?;
        let ck = -self.scale() * lk.value.exp();
        Ok(lk.grad.iter().map(|g| ck * g).collect())
    }

    /// With `G = diag(2/σ², 4/σ²)`: `a = (σ²f_μ/2, σ²f_σ/4)`.
    fn grad_field_jacobian(&self, xi: &[f64]) -> Option<Result<DenseMatrix>> {
        let run = || -> Result<DenseMatrix> {
            let g = self.gradient(xi)?;
            let h = self.hessian(xi)?;
            let s = xi[1];
            let s2 = s * s;
            DenseMatrix::from_rows(&[
                vec![0.5 * s2 * h[0][0], 0.25 * s2 * h[1][0]],
                vec![s * g[0] + 0.5 * s2 * h[0][1], 0.5 * s * g[1] + 0.25 * s2 * h[1][1]],
            ])
        };
        Some(run())
    }
}

/// Negative log-likelihood of a fixed-weight Beta-product mixture.
#[derive(Debug, Clone)]
pub struct BetaMixtureNll {
    mixture: BetaMixtureManifold,
    /// `(ln x₁ + ln x₂, ln(1-x₁) + ln(1-x₂))` per point.
    log_stats: Vec<[f64; 2]>,
}

impl BetaMixtureNll {
    pub fn new(mixture: BetaMixtureManifold, data: &[[f64; 2]]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        if let Some(p) = data.iter().find(|p| p.iter().any(|x| !(*x > 0.0 && *x < 1.0))) {
            return Err(Error::InvalidInput(format!(
                "data must lie strictly inside the unit square, got {p:?}"
            )));
        }
        let log_stats = data
            .iter()
            .map(|p| [p[0].ln() + p[1].ln(), (-p[0]).ln_1p() + (-p[1]).ln_1p()])
            .collect();
        Ok(Self { mixture, log_stats })
    }

    pub fn mixture(&self) -> &BetaMixtureManifold {
        &self.mixture
    }

    pub fn len(&self) -> usize {
        self.log_stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_stats.is_empty()
    }

    fn evaluate(&self, xi: &[f64], with_grad: bool) -> Result<(f64, Vec<f64>)> {
        self.mixture.check(xi)?;
        let comps = self.mixture.component_constants(xi);
        let n = xi.len();
        let mut terms = vec![0.0; comps.len()];
        let mut value = KahanSum::new();
        let mut grad = vec![KahanSum::new(); if with_grad { n } else { 0 }];
        for logs in &self.log_stats {
            let lp = log_mixture(&comps, *logs, &mut terms);
            if !lp.is_finite() {
                return Err(Error::NonFiniteValue("mixture log-density"));
            }
            value.add(-lp);
            if with_grad {
                for (k, c) in comps.iter().enumerate() {
                    let r = (terms[k] - lp).exp();
                    grad[2 * k].add(-r * (logs[0] - 2.0 * c.dig_a));
                    grad[2 * k + 1].add(-r * (logs[1] - 2.0 * c.dig_b));
                }
            }
        }
        let grad: Vec<f64> = grad.iter().map(KahanSum::value).collect();
        if !value.value().is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteValue("Beta-mixture likelihood"));
        }
        Ok((value.value(), grad))
    }
}

impl Objective for BetaMixtureNll {
    fn dim(&self) -> usize {
        2 * self.mixture.components()
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        self.mixture.check(xi)
    }

    fn value(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.evaluate(xi, false)?.0)
    }

    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(xi, true)?.1)
    }

    fn value_and_gradient(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(xi, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AlphaConnection, GradientField, JacobianMode};
    use crate::linalg::{fd_gradient, fd_jacobian, FdScheme};
    use crate::models::beta_mixture::BetaMixtureParams;
    use crate::models::gaussian::GaussianIsoManifold;
    use crate::models::quadrature::QuadratureRule;

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = linalg::norm_inf(b).max(1e-12);
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn quadratic_gradient() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let q = Quadratic::new(a, vec![1.0, -1.0]).unwrap();
        assert_eq!(q.value(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(q.gradient(&[1.0, 1.0]).unwrap(), vec![4.0, 3.0]);
        assert!(q.grad_field_jacobian(&[0.0, 0.0]).is_none());
    }

    #[test]
    fn kl_scalar_examples() {
        let kl = KlProjection::from_moments(1, vec![0.5], 0.0, 0.0).unwrap();
        assert!(kl.value(&[0.0]).unwrap().abs() < 1e-15);
        let g = kl.gradient(&[1.0]).unwrap();
        assert!((g[0] - 0.231_058_6).abs() < 1e-7);
        let reg = KlProjection::from_moments(2, vec![0.6, 0.3, 0.2], 0.5, 0.5).unwrap();
        let g0 = reg.gradient(&[0.0; 3]).unwrap();
        let eta0 = reg.manifold().eta(&[0.0; 3]).unwrap();
        for i in 0..3 {
            assert_eq!(g0[i], eta0[i] - reg.target_eta()[i]);
        }
    }

    #[test]
    fn kl_value_is_nonnegative_and_zero_at_target() {
        let idx = SubsetIndex::full(3).unwrap();
        let theta: Vec<f64> = (0..idx.len()).map(|i| 0.3 * ((i as f64) * 1.3).sin()).collect();
        let target = LogLinearModel::new(idx, theta).unwrap();
        let kl = KlProjection::from_target(&target, 0.0, 0.0).unwrap();
        for th in [[0.0; 6], [0.4, -0.2, 0.1, 0.3, -0.5, 0.2]] {
            assert!(kl.value(&th).unwrap() > 0.0);
        }
        // A target inside the Boltzmann family is attained exactly.
        let inner = KlProjection::from_moments(3, kl.target_eta().to_vec(), 0.0, 0.0).unwrap();
        let star = inner.manifold().theta_from_eta(inner.target_eta(), None).unwrap();
        assert!(inner.value(&star).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kl_gradient_and_jacobian_match_fd() {
        let kl = KlProjection::from_moments(3, vec![0.6, 0.45, 0.3, 0.3, 0.2, 0.15], 0.3, 0.8).unwrap();
        let theta = [0.2, -0.4, 0.1, 0.5, -0.3, 0.25];
        let g = kl.gradient(&theta).unwrap();
        let fd = fd_gradient(|x| kl.value(x), &theta, FdScheme::cbrt_eps()).unwrap();
        assert!(rel_close(&g, &fd, 1e-6));
        let model = kl.manifold().clone();
        let ds = AlphaConnection::new(&model, 1.0);
        let field = GradientField::new(&ds, &kl);
        let analytic = field.jacobian(&theta, JacobianMode::Analytic).unwrap();
        let numeric = fd_jacobian(|x| field.eval(x), &theta, FdScheme::cbrt_eps()).unwrap();
        assert!(analytic.sub(&numeric).unwrap().max_abs() < 1e-6 * numeric.max_abs());
    }

    #[test]
    fn alpha_divergence_matches_quadrature_oracle() {
        let d = AlphaDivergence::reference();
        // Independent adaptive quadrature of the defining integral.
        let oracle = 0.523_986_963_881_675_4;
        let v = d.value(&[1.75, 1.0]).unwrap();
        assert!(((v - oracle) / oracle).abs() < 1e-6, "{v}");
        let v = d.value(&[0.5, 2.0]).unwrap();
        assert!(((v - 1.584_021_216_261_559_7) / v).abs() < 1e-6);
    }

    #[test]
    fn alpha_divergence_vanishes_at_self() {
        let d = AlphaDivergence::new(3.0, 0.7, 0.7, 1.2, 1.2).unwrap();
        assert!(d.value(&[0.7, 1.2]).unwrap().abs() < 1e-15);
        assert!(linalg::norm_inf(&d.gradient(&[0.7, 1.2]).unwrap()) < 1e-14);
    }

    #[test]
    fn alpha_divergence_domain() {
        let d = AlphaDivergence::reference();
        // 2σ² - 1.69 ≤ 0
        assert!(matches!(d.value(&[1.0, 0.9]), Err(Error::DivergenceUndefined { .. })));
        assert!(matches!(d.value(&[1.0, -1.0]), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn alpha_divergence_derivatives_match_fd() {
        let d = AlphaDivergence::reference();
        let ds_model = GaussianIsoManifold;
        let ds = AlphaConnection::new(&ds_model, 0.2);
        for xi in [[1.75, 1.0], [0.5, 2.0], [2.5, 1.4]] {
            let g = d.gradient(&xi).unwrap();
            let fd = fd_gradient(|x| d.value(x), &xi, FdScheme::cbrt_eps()).unwrap();
            assert!(rel_close(&g, &fd, 1e-6), "{xi:?}");
            let h = d.hessian(&xi).unwrap();
            let fdh = fd_jacobian(|x| d.gradient(x), &xi, FdScheme::cbrt_eps()).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((h[i][j] - fdh[(i, j)]).abs() < 1e-6 * fdh.max_abs());
                }
            }
            let field = GradientField::new(&ds, &d);
            let analytic = field.jacobian(&xi, JacobianMode::Analytic).unwrap();
            let numeric = fd_jacobian(|x| field.eval(x), &xi, FdScheme::cbrt_eps()).unwrap();
            assert!(analytic.sub(&numeric).unwrap().max_abs() < 1e-6 * numeric.max_abs());
        }
    }

    #[test]
    fn beta_nll_uniform_is_zero() {
        let mix = BetaMixtureManifold::new(vec![1.0], QuadratureRule::beta_default(8).unwrap()).unwrap();
        let data = [[0.1, 0.9], [0.5, 0.5], [0.3, 0.77]];
        let nll = BetaMixtureNll::new(mix, &data).unwrap();
        assert!(nll.value(&[1.0, 1.0]).unwrap().abs() < 1e-14);
        assert!(BetaMixtureNll::new(nll.mixture().clone(), &[[0.0, 0.5]]).is_err());
    }

    #[test]
    fn beta_nll_gradient_matches_fd() {
        let p = BetaMixtureParams::reference();
        let mix = BetaMixtureManifold::with_nodes(p.weights.clone(), 8).unwrap();
        let data = mix.sample(&p.to_xi(), 300, 5).unwrap();
        let nll = BetaMixtureNll::new(mix, &data).unwrap();
        let xi = p.to_xi();
        let g = nll.gradient(&xi).unwrap();
        let fd = fd_gradient(|x| nll.value(x), &xi, FdScheme::cbrt_eps()).unwrap();
        assert!(rel_close(&g, &fd, 1e-6), "{g:?} vs {fd:?}");
    }
}
