//! Fixed-weight mixtures of bivariate Beta products on (0, 1)².
//!
//! Component `k` has density `Beta(x₁|a_k, b_k)·Beta(x₂|a_k, b_k)`; the
//! chart is `ξ = (a₁, b₁, …, a_K, b_K)`. Fisher metric and α-connection
//! symbols are expectations under the mixture, computed on a tensor-product
//! quadrature grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChristoffelTensor, FirstKindSymbols, PointGeometry, StatisticalModel};
use crate::linalg::{DenseMatrix, KahanSum};
use crate::models::quadrature::QuadratureRule;
use crate::special::{digamma, ln_beta, trigamma};

/// Default nodes per axis.
pub const DEFAULT_QUAD_NODES: usize = 64;

/// Mixture parameters in natural units, as stored in dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaMixtureParams {
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BetaMixtureParams {
    /// The configuration used for the mixture-estimation study.
    pub fn reference() -> Self {
        Self {
            weights: vec![0.35, 0.4, 0.25],
            alpha: vec![2.0, 3.0, 5.0],
            beta: vec![5.0, 2.0, 3.5],
        }
    }

    /// `(a₁, b₁, …, a_K, b_K)`.
    pub fn to_xi(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.beta).flat_map(|(a, b)| [*a, *b]).collect()
    }
}

/// Per-component constants that depend only on the shapes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Component {
    pub log_weight: f64,
    pub a: f64,
    pub b: f64,
    pub log_norm: f64,
    /// ψ(a) - ψ(a+b)
    pub dig_a: f64,
    /// ψ(b) - ψ(a+b)
    pub dig_b: f64,
    /// Derivatives of the per-component scores: (aa, ab, bb).
    pub dscore: [f64; 3],
}

/// The `ξ` chart of a fixed-weight Beta-product mixture.
#[derive(Debug, Clone)]
pub struct BetaMixtureManifold {
    weights: Vec<f64>,
    quadrature: QuadratureRule,
}

impl BetaMixtureManifold {
    pub fn new(weights: Vec<f64>, quadrature: QuadratureRule) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one component".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("mixture weights sum to {total}, not 1")));
        }
        if quadrature.is_empty() {
            return Err(Error::InvalidInput("empty quadrature rule".into()));
        }
        Ok(Self { weights, quadrature })
    }

    /// Uses the default graded Gauss–Legendre rule with `nodes` per axis.
    pub fn with_nodes(weights: Vec<f64>, nodes: usize) -> Result<Self> {
        Self::new(weights, QuadratureRule::beta_default(nodes)?)
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub(crate) fn check(&self, xi: &[f64]) -> Result<()> {
        let n = 2 * self.components();
        if xi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: xi.len(),
            });
        }
        if let Some(bad) = xi.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::DomainViolation(format!(
                "Beta shapes must be positive and finite, got {bad}"
            )));
        }
        Ok(())
    }

    pub(crate) fn component_constants(&self, xi: &[f64]) -> Vec<Component> {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let (a, b) = (xi[2 * k], xi[2 * k + 1]);
                let dig_ab = digamma(a + b);
                let tri_ab = trigamma(a + b);
                Component {
                    log_weight: w.ln(),
                    a,
                    b,
                    log_norm: -2.0 * ln_beta(a, b),
                    dig_a: digamma(a) - dig_ab,
                    dig_b: digamma(b) - dig_ab,
                    dscore: [
                        -2.0 * (trigamma(a) - tri_ab),
                        2.0 * tri_ab,
                        -2.0 * (trigamma(b) - tri_ab),
                    ],
                }
            })
            .collect()
    }

    /// Log-density of the mixture at one point.
    pub fn log_density(&self, xi: &[f64], x: [f64; 2]) -> Result<f64> {
        self.check(xi)?;
        let comps = self.component_constants(xi);
        let logs = [x[0].ln() + x[1].ln(), (-x[0]).ln_1p() + (-x[1]).ln_1p()];
        let mut terms = vec![0.0; comps.len()];
        Ok(log_mixture(&comps, logs, &mut terms))
    }

    /// One pass over the quadrature grid. Returns the metric and, when
    /// asked, the first-kind tensors `E[(∂_i∂_j p / p) ∂_k ℓ]` and
    /// `E[∂_i ℓ ∂_j ℓ ∂_k ℓ]`.
    fn expectations(
        &self,
        xi: &[f64],
        with_connection: bool,
    ) -> Result<(DenseMatrix, Option<(FirstKindSymbols, FirstKindSymbols)>)> {
        self.check(xi)?;
        let comps = self.component_constants(xi);
        let kc = comps.len();
        let n = 2 * kc;
        let q = &self.quadrature;
        let logs_x: Vec<f64> = q.nodes.iter().map(|x| x.ln()).collect();
        let logs_1mx: Vec<f64> = q.complements.iter().map(|x| x.ln()).collect();

        let mut g_acc = vec![KahanSum::new(); n * n];
        let mut a_acc = if with_connection {
            vec![KahanSum::new(); n * n * n]
        } else {
            Vec::new()
        };
        let mut b_acc = if with_connection {
            vec![KahanSum::new(); n * n * n]
        } else {
            Vec::new()
        };
        let mut mass = KahanSum::new();
        let mut terms = vec![0.0; kc];
        let mut resp = vec![0.0; kc];
        let mut score = vec![0.0; n];
        let mut d = vec![0.0; n];

        for u in 0..q.len() {
            for v in 0..q.len() {
                let wq = q.weights[u] * q.weights[v];
                let logs = [logs_x[u] + logs_x[v], logs_1mx[u] + logs_1mx[v]];
                let log_p = log_mixture(&comps, logs, &mut terms);
                let omega = wq * log_p.exp();
                if omega == 0.0 {
                    continue;
                }
                mass.add(omega);
                for (k, c) in comps.iter().enumerate() {
                    resp[k] = (terms[k] - log_p).exp();
                    score[2 * k] = logs[0] - 2.0 * c.dig_a;
                    score[2 * k + 1] = logs[1] - 2.0 * c.dig_b;
                    d[2 * k] = resp[k] * score[2 * k];
                    d[2 * k + 1] = resp[k] * score[2 * k + 1];
                }
                for i in 0..n {
                    let wi = omega * d[i];
                    for j in i..n {
                        g_acc[i * n + j].add(wi * d[j]);
                        if with_connection {
                            let wij = wi * d[j];
                            for l in j..n {
                                b_acc[(i * n + j) * n + l].add(wij * d[l]);
                            }
                        }
                    }
                }
                if with_connection {
                    for (k, c) in comps.iter().enumerate() {
                        let (ia, ib) = (2 * k, 2 * k + 1);
                        let r = resp[k];
                        let blocks = [
                            (ia, ia, r * (score[ia] * score[ia] + c.dscore[0])),
                            (ia, ib, r * (score[ia] * score[ib] + c.dscore[1])),
                            (ib, ib, r * (score[ib] * score[ib] + c.dscore[2])),
                        ];
                        for (i, j, qij) in blocks {
                            let wq = omega * qij;
                            for l in 0..n {
                                a_acc[(i * n + j) * n + l].add(wq * d[l]);
                            }
                        }
                    }
                }
            }
        }
        if mass.value() == 0.0 {
            return Err(Error::QuadratureUnderflow);
        }

        let mut metric = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let value = g_acc[i * n + j].value();
                metric[(i, j)] = value;
                metric[(j, i)] = value;
            }
        }
        if !metric.is_finite() {
            return Err(Error::NonFiniteValue("Beta-mixture Fisher metric"));
        }
        if !with_connection {
            return Ok((metric, None));
        }

        let mut second = FirstKindSymbols::zeros(n);
        for k in 0..kc {
            let (ia, ib) = (2 * k, 2 * k + 1);
            for (i, j) in [(ia, ia), (ia, ib), (ib, ib)] {
                for l in 0..n {
                    let value = a_acc[(i * n + j) * n + l].value();
                    second.set(i, j, l, value);
                    second.set(j, i, l, value);
                }
            }
        }
        let mut triple = FirstKindSymbols::zeros(n);
        for i in 0..n {
            for j in i..n {
                for l in j..n {
                    let value = b_acc[(i * n + j) * n + l].value();
                    for (x, y, z) in [(i, j, l), (i, l, j), (j, i, l), (j, l, i), (l, i, j), (l, j, i)] {
                        triple.set(x, y, z, value);
                    }
                }
            }
        }
        Ok((metric, Some((second, triple))))
    }

    /// Metric and `∇^(α)` symbols at `ξ`.
    pub fn geometry(&self, xi: &[f64], alpha: f64) -> Result<(DenseMatrix, ChristoffelTensor)> {
        let (metric, tensors) = self.expectations(xi, true)?;
        let (second, triple) = tensors.expect("requested");
        let gamma = ChristoffelTensor::from_first_kind(&first_kind(&second, &triple, alpha), &metric)?;
        Ok((metric, gamma))
    }

    /// Draws `n` points: a component by weight, then two independent Beta
    /// variates by the gamma-ratio method.
    pub fn sample(&self, xi: &[f64], n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
        self.check(xi)?;
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = self.component_constants(xi);
        let gammas: Vec<(Gamma<f64>, Gamma<f64>)> = comps
            .iter()
            .map(|c| {
                Ok((
                    Gamma::new(c.a, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?,
                    Gamma::new(c.b, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?,
                ))
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = self.weights.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    k = i;
                    break;
                }
            }
            let (ga, gb) = &gammas[k];
            let mut draw = || loop {
                let x = ga.sample(&mut rng);
                let y = gb.sample(&mut rng);
                let z = x / (x + y);
                if z > 0.0 && z < 1.0 {
                    break z;
                }
            };
            let x1 = draw();
            let x2 = draw();
            out.push([x1, x2]);
        }
        Ok(out)
    }
}

fn first_kind(second: &FirstKindSymbols, triple: &FirstKindSymbols, alpha: f64) -> FirstKindSymbols {
    // E[∂i∂jℓ ∂kℓ] = E[(∂i∂j p/p) ∂kℓ] - E[∂iℓ∂jℓ∂kℓ]
    second.axpy(-0.5 * (1.0 + alpha), triple)
}

/// Log mixture density; `terms[k]` receives the per-component log terms.
pub(crate) fn log_mixture(comps: &[Component], logs: [f64; 2], terms: &mut [f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (t, c) in terms.iter_mut().zip(comps) {
        *t = c.log_weight + (c.a - 1.0) * logs[0] + (c.b - 1.0) * logs[1] + c.log_norm;
        max = max.max(*t);
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

impl StatisticalModel for BetaMixtureManifold {
    fn dim(&self) -> usize {
        2 * self.components()
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        self.check(xi)
    }

    fn fisher(&self, xi: &[f64]) -> Result<DenseMatrix> {
        Ok(self.expectations(xi, false)?.0)
    }

    fn alpha_christoffel(&self, xi: &[f64], alpha: f64) -> Result<ChristoffelTensor> {
        Ok(self.geometry(xi, alpha)?.1)
    }

    fn alpha_pair(&self, xi: &[f64], alpha: f64) -> Result<PointGeometry> {
        let (metric, tensors) = self.expectations(xi, true)?;
        let (second, triple) = tensors.expect("requested");
        let chol_input = |a: f64| ChristoffelTensor::from_first_kind(&first_kind(&second, &triple, a), &metric);
        Ok(PointGeometry {
            gamma: chol_input(alpha)?,
            gamma_dual: chol_input(-alpha)?,
            metric,
        })
    }
}
