//! Executable property suites with measured residuals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{
    dual_hessian_matrix, duality_residual, levi_civita_from_metric, newton_direction, AlphaConnection, DualStructure,
    GradientField, JacobianMode, StatisticalModel,
};
use crate::linalg::{self, fd_gradient, fd_jacobian, DenseMatrix, FdScheme};
use crate::models::beta_mixture::{BetaMixtureManifold, BetaMixtureParams, DEFAULT_QUAD_NODES};
use crate::models::gaussian::GaussianIsoManifold;
use crate::models::loglinear::LogLinearManifold;
use crate::models::quadrature::QuadratureRule;
use crate::objectives::{AlphaDivergence, BetaMixtureNll, KlProjection, Objective, Quadratic};
use crate::special::trigamma;

use super::data::{gen_dataset, gen_target};

pub const ALPHA_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const SUITE_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    /// `residual < tolerance`
    #[serde(rename = "<")]
    Below,
    /// `residual <= tolerance`
    #[serde(rename = "<=")]
    AtMost,
    /// `residual >= tolerance`
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst value over all sampled points.
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, residual: f64, comparison: Comparison, tolerance: f64, detail: String) -> Self {
        let passed = match comparison {
            Comparison::Below => residual < tolerance,
            Comparison::AtMost => residual <= tolerance,
            Comparison::AtLeast => residual >= tolerance,
        };
        Self {
            name: name.into(),
            passed,
            residual,
            tolerance,
            comparison,
            detail,
        }
    }

    /// A check that could not be evaluated.
    fn errored(name: impl Into<String>, err: &crate::error::Error) -> Self {
        Self {
            name: name.into(),
            passed: false,
            residual: f64::NAN,
            tolerance: f64::NAN,
            comparison: Comparison::Below,
            detail: format!("error: {err}"),
        }
    }

    fn from_result(name: &str, r: Result<(f64, String)>, comparison: Comparison, tolerance: f64) -> Self {
        match r {
            Ok((residual, detail)) => Self::new(name, residual, comparison, tolerance, detail),
            Err(e) => Self::errored(name, &e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn new(checks: Vec<CheckResult>) -> Self {
        Self {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// All suites.
pub fn run_validation() -> ValidationReport {
    let mut checks = duality_suite();
    checks.extend(affine_hessian_suite());
    checks.extend(projection_equivalence_suite());
    checks.extend(regularizer_suite());
    checks.extend(oracle_suite());
    ValidationReport::new(checks)
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SUITE_SEED)
}

fn gaussian_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.random_range(-2.0..2.0), rng.random_range(0.5..2.5)]
}

fn theta_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn beta_point(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..2 * k).map(|_| rng.random_range(1.5..6.0)).collect()
}

fn worst_over<F>(points: &[Vec<f64>], mut f: F) -> Result<(f64, String)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut worst = 0.0f64;
    let mut at = String::new();
    for p in points {
        let r = f(p)?;
        if !(r <= worst) {
            worst = r;
            at = format!("{p:.4?}");
        }
    }
    Ok((worst, format!("{} points, worst at {at}", points.len())))
}

fn best_over<F>(points: &[Vec<f64>], mut f: F) -> Result<(f64, String)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut best = f64::INFINITY;
    for p in points {
        best = best.min(f(p)?);
    }
    Ok((best, format!("{} points, smallest value reported", points.len())))
}

/// Name, model, sample points and tolerance.
type ModelCase<'a> = (&'a str, &'a dyn StatisticalModel, &'a [Vec<f64>], f64);

/// Metric compatibility `∂_k g_ij = Γ_{ki,j} + Γ*_{kj,i}` on all three models.
pub fn duality_suite() -> Vec<CheckResult> {
    let mut rng = rng();
    let mut out = Vec::new();
    let gauss_pts: Vec<Vec<f64>> = (0..20).map(|_| gaussian_point(&mut rng)).collect();
    let ll = LogLinearManifold::boltzmann(3).expect("n = 3 is valid");
    let ll_pts: Vec<Vec<f64>> = (0..20).map(|_| theta_point(&mut rng, 6)).collect();
    let beta = BetaMixtureManifold::with_nodes(BetaMixtureParams::reference().weights, DEFAULT_QUAD_NODES)
        .expect("reference weights are valid");
    let beta_pts: Vec<Vec<f64>> = (0..5).map(|_| beta_point(&mut rng, 3)).collect();

    let models: [ModelCase; 3] = [
        ("gaussian", &GaussianIsoManifold, &gauss_pts, 1e-5),
        ("loglinear", &ll, &ll_pts, 1e-5),
        ("beta_mixture", &beta, &beta_pts, 1e-3),
    ];
    for (name, model, pts, tol) in models {
        for alpha in ALPHA_GRID {
            let ds = AlphaConnection::new(model, alpha);
            let r = worst_over(pts, |x| duality_residual(&ds, x));
            out.push(CheckResult::from_result(
                &format!("duality/{name}/alpha={alpha}"),
                r,
                Comparison::Below,
                tol,
            ));
        }
    }
    out
}

/// KL projection problems on the three-variable Boltzmann machine.
fn kl_problems(lambda1: f64, lambda2: f64) -> Result<KlProjection> {
    let target = gen_target(3, 1.0, SUITE_SEED)?;
    KlProjection::from_target(&target.model()?, lambda1, lambda2)
}

/// `G·H*ᵀ` built from the α = 1 connection pair.
fn metric_times_dual_hessian(kl: &KlProjection, theta: &[f64]) -> Result<DenseMatrix> {
    let ds = AlphaConnection::new(kl.manifold(), 1.0);
    let field = GradientField::new(&ds, kl);
    let h = dual_hessian_matrix(&ds, &field, theta, JacobianMode::Analytic)?;
    ds.metric(theta)?.matmul(&h.transpose())
}

/// In the affine θ chart `G·H*ᵀ` is the coordinate Hessian of `f`.
pub fn affine_hessian_suite() -> Vec<CheckResult> {
    let mut rng = rng();
    let pts: Vec<Vec<f64>> = (0..10).map(|_| theta_point(&mut rng, 6)).collect();
    let mut out = Vec::new();
    for (name, l1, l2) in [("pure", 0.0, 0.0), ("regularized", 0.5, 0.5)] {
        let r = kl_problems(l1, l2).and_then(|kl| {
            worst_over(&pts, |x| {
                let gh = metric_times_dual_hessian(&kl, x)?;
                let fd = fd_jacobian(|y| kl.gradient(y), x, FdScheme::cbrt_eps())?;
                Ok(gh.sub(&fd)?.norm_inf() / fd.norm_inf())
            })
        });
        out.push(CheckResult::from_result(
            &format!("affine_hessian/{name}"),
            r,
            Comparison::Below,
            1e-5,
        ));
    }
    out
}

/// Relative gap between the Newton direction and `-G⁻¹∇f`.
fn newton_vs_natural(kl: &KlProjection, theta: &[f64]) -> Result<f64> {
    let ds = AlphaConnection::new(kl.manifold(), 1.0);
    let field = GradientField::new(&ds, kl);
    let h = dual_hessian_matrix(&ds, &field, theta, JacobianMode::Analytic)?;
    let grad = kl.gradient(theta)?;
    let beta = newton_direction(&ds, &h, &grad, theta)?.beta;
    let a = field.eval(theta)?;
    let diff: Vec<f64> = beta.iter().zip(&a).map(|(b, a)| b + a).collect();
    Ok(linalg::norm_inf(&diff) / linalg::norm_inf(&a))
}

/// Pure projection: Newton coincides with the unit natural-gradient step;
/// regularization separates them.
pub fn projection_equivalence_suite() -> Vec<CheckResult> {
    let mut rng = rng();
    let pts: Vec<Vec<f64>> = (0..10).map(|_| theta_point(&mut rng, 6)).collect();
    let pure = kl_problems(0.0, 0.0).and_then(|kl| worst_over(&pts, |x| newton_vs_natural(&kl, x)));
    let reg = kl_problems(0.5, 0.5).and_then(|kl| best_over(&pts, |x| newton_vs_natural(&kl, x)));
    vec![
        CheckResult::from_result("projection_equivalence/pure", pure, Comparison::Below, 1e-8),
        CheckResult::from_result(
            "projection_equivalence/regularized_differs",
            reg,
            Comparison::AtLeast,
            1e-3,
        ),
    ]
}

/// `G·H*ᵀ - G = 2·diag(λ_A)`.
pub fn regularizer_suite() -> Vec<CheckResult> {
    let mut rng = rng();
    let pts: Vec<Vec<f64>> = (0..10).map(|_| theta_point(&mut rng, 6)).collect();
    let mut out = Vec::new();
    for (name, l1, l2) in [
        ("lambda=(0.5,0.5)", 0.5, 0.5),
        ("lambda=1", 1.0, 1.0),
        ("lambda=(0.3,0.8)", 0.3, 0.8),
    ] {
        let r = kl_problems(l1, l2).and_then(|kl| {
            let two_lambda: Vec<f64> = kl.regularizer_diag().iter().map(|l| 2.0 * l).collect();
            let expected = DenseMatrix::from_diag(&two_lambda);
            worst_over(&pts, |x| {
                let gh = metric_times_dual_hessian(&kl, x)?;
                let g = kl.manifold().fisher(x)?;
                Ok(gh.sub(&g)?.sub(&expected)?.max_abs())
            })
        });
        out.push(CheckResult::from_result(
            &format!("regularizer_identity/{name}"),
            r,
            Comparison::Below,
            1e-6,
        ));
    }
    out
}

fn gradient_gap(obj: &dyn Objective, x: &[f64]) -> Result<f64> {
    let g = obj.gradient(x)?;
    let fd = fd_gradient(|y| obj.value(y), x, FdScheme::cbrt_eps())?;
    let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
    Ok(linalg::norm_inf(&diff) / linalg::norm_inf(&fd).max(f64::MIN_POSITIVE))
}

/// One axis of the α-divergence integral, `∫ p^((1+ᾱ)/2) q^((1-ᾱ)/2) dx`,
/// by composite Gauss-Legendre over ±30 standard deviations.
fn axis_integral(alpha_bar: f64, mu_p: f64, s_p: f64, mu_q: f64, s_q: f64) -> Result<f64> {
    let rule = QuadratureRule::gauss_legendre(16)?;
    let log_normal =
        |x: f64, m: f64, s: f64| -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let (wp, wq) = (0.5 * (1.0 + alpha_bar), 0.5 * (1.0 - alpha_bar));
    let half = 30.0 * s_p.max(s_q);
    let (lo, hi) = (mu_p.min(mu_q) - half, mu_p.max(mu_q) + half);
    let panels = 120;
    let width = (hi - lo) / panels as f64;
    let mut sum = linalg::KahanSum::new();
    for p in 0..panels {
        let a = lo + p as f64 * width;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + t * width;
            sum.add(w * width * (wp * log_normal(x, mu_p, s_p) + wq * log_normal(x, mu_q, s_q)).exp());
        }
    }
    Ok(sum.value())
}

/// The α-divergence by direct quadrature of its defining integral.
pub fn alpha_divergence_by_quadrature(d: &AlphaDivergence, mu: f64, sigma: f64) -> Result<f64> {
    let i1 = axis_integral(d.alpha_bar, d.mu1, d.sigma1, mu, sigma)?;
    let i2 = axis_integral(d.alpha_bar, d.mu2, d.sigma2, mu, sigma)?;
    Ok(4.0 / (1.0 - d.alpha_bar * d.alpha_bar) * (1.0 - i1 * i2))
}

/// Gradients, closed forms and connection symbols against independent
/// oracles.
pub fn oracle_suite() -> Vec<CheckResult> {
    let mut rng = rng();
    let mut out = Vec::new();

    let theta_pts: Vec<Vec<f64>> = (0..5).map(|_| theta_point(&mut rng, 6)).collect();
    for (name, l1, l2) in [("kl_pure", 0.0, 0.0), ("kl_regularized", 0.5, 0.5)] {
        let r = kl_problems(l1, l2).and_then(|kl| worst_over(&theta_pts, |x| gradient_gap(&kl, x)));
        out.push(CheckResult::from_result(
            &format!("gradient_fd/{name}"),
            r,
            Comparison::Below,
            1e-6,
        ));
    }
    let div = AlphaDivergence::reference();
    let div_pts = vec![vec![1.75, 1.0], vec![0.5, 2.0], vec![2.5, 1.4], vec![-1.0, 3.0]];
    out.push(CheckResult::from_result(
        "gradient_fd/alpha_divergence",
        worst_over(&div_pts, |x| gradient_gap(&div, x)),
        Comparison::Below,
        1e-6,
    ));
    let nll = gen_dataset(&BetaMixtureParams::reference(), 200, SUITE_SEED).and_then(|d| {
        let mixture = BetaMixtureManifold::with_nodes(d.params.weights.clone(), 16)?;
        BetaMixtureNll::new(mixture, &d.points)
    });
    let beta_pts: Vec<Vec<f64>> = (0..3).map(|_| beta_point(&mut rng, 3)).collect();
    out.push(CheckResult::from_result(
        "gradient_fd/beta_mixture_nll",
        nll.and_then(|nll| worst_over(&beta_pts, |x| gradient_gap(&nll, x))),
        Comparison::Below,
        1e-6,
    ));
    let quad =
        DenseMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).and_then(|a| Quadratic::new(a, vec![1.0, -3.0]));
    out.push(CheckResult::from_result(
        "gradient_fd/quadratic",
        quad.and_then(|q| worst_over(&div_pts, |x| gradient_gap(&q, x))),
        Comparison::Below,
        1e-6,
    ));

    out.push(CheckResult::from_result(
        "closed_form/alpha_divergence_vs_quadrature",
        worst_over(&div_pts, |x| {
            let closed = div.value(x)?;
            let quad = alpha_divergence_by_quadrature(&div, x[0], x[1])?;
            Ok(((closed - quad) / quad).abs())
        }),
        Comparison::Below,
        1e-6,
    ));

    let single = BetaMixtureManifold::with_nodes(vec![1.0], DEFAULT_QUAD_NODES);
    let shape_pts = vec![vec![2.0, 5.0], vec![3.0, 2.0], vec![5.0, 3.5], vec![1.2, 1.7]];
    out.push(CheckResult::from_result(
        "closed_form/beta_fisher_vs_trigamma",
        single.and_then(|m| {
            worst_over(&shape_pts, |x| {
                let (a, b) = (x[0], x[1]);
                let t = trigamma(a + b);
                let closed = DenseMatrix::from_rows(&[
                    vec![2.0 * (trigamma(a) - t), -2.0 * t],
                    vec![-2.0 * t, 2.0 * (trigamma(b) - t)],
                ])?;
                Ok(m.fisher(x)?.sub(&closed)?.max_abs())
            })
        }),
        Comparison::Below,
        1e-4,
    ));

    let ll = LogLinearManifold::boltzmann(3).expect("n = 3 is valid");
    let ll_pts: Vec<Vec<f64>> = (0..5).map(|_| theta_point(&mut rng, 6)).collect();
    out.push(CheckResult::from_result(
        "christoffel/loglinear_alpha=1_is_zero",
        worst_over(&ll_pts, |x| Ok(ll.alpha_christoffel(x, 1.0)?.max_abs())),
        Comparison::AtMost,
        0.0,
    ));

    let beta = BetaMixtureManifold::with_nodes(BetaMixtureParams::reference().weights, DEFAULT_QUAD_NODES)
        .expect("reference weights are valid");
    let gauss_pts: Vec<Vec<f64>> = (0..5).map(|_| gaussian_point(&mut rng)).collect();
    let beta_pts: Vec<Vec<f64>> = (0..3).map(|_| beta_point(&mut rng, 3)).collect();
    let models: [ModelCase; 3] = [
        ("gaussian", &GaussianIsoManifold, &gauss_pts, 1e-5),
        ("loglinear", &ll, &ll_pts, 1e-5),
        ("beta_mixture", &beta, &beta_pts, 1e-3),
    ];
    for (name, model, pts, tol) in models {
        let r = worst_over(pts, |x| {
            let lc = levi_civita_from_metric(&|y: &[f64]| model.fisher(y), x)?;
            Ok(model.alpha_christoffel(x, 0.0)?.max_abs_diff(&lc))
        });
        out.push(CheckResult::from_result(
            &format!("christoffel/{name}_alpha=0_is_levi_civita"),
            r,
            Comparison::Below,
            tol,
        ));
    }
    out
}
