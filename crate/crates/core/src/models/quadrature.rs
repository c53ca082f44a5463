//! Gauss–Legendre rules on the unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Nodes in (0, 1) with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `1 - nodes[i]`, computed without cancellation.
    pub complements: Vec<f64>,
}

/// Grading exponent of the endpoint-clustering substitution.
pub const DEFAULT_GRADING: u32 = 3;

impl QuadratureRule {
    /// Plain `n`-point Gauss–Legendre mapped to (0, 1).
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("quadrature needs at least one node".into()));
        }
        let (x, w) = legendre_nodes(n);
        Ok(Self {
            nodes: x.iter().map(|t| 0.5 * (1.0 + t)).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
            complements: x.iter().map(|t| 0.5 * (1.0 - t)).collect(),
        })
    }

    /// Gauss–Legendre in `u` under `x = u^q / (u^q + (1-u)^q)`.
    ///
    /// The substitution flattens `log x` and `x^(a-1)` endpoint behaviour,
    /// which plain Gauss–Legendre resolves only algebraically.
    pub fn graded_gauss_legendre(n: usize, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("grading exponent must be >= 1".into()));
        }
        let base = Self::gauss_legendre(n)?;
        let qf = q as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut complements = Vec::with_capacity(n);
        for ((&u, &v), &w) in base.nodes.iter().zip(&base.complements).zip(&base.weights) {
            let a = u.powi(q as i32);
            let b = v.powi(q as i32);
            let d = a + b;
            nodes.push(a / d);
            complements.push(b / d);
            weights.push(w * qf * (u * v).powi(q as i32 - 1) / (d * d));
        }
        // The substituted rule integrates constants only approximately;
        // rescale so it is exact for them.
        let total = linalg::sum(weights.iter().copied());
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            nodes,
            weights,
            complements,
        })
    }

    /// The rule used for Beta-mixture expectations.
    pub fn beta_default(n: usize) -> Result<Self> {
        Self::graded_gauss_legendre(n, DEFAULT_GRADING)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        linalg::sum(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        linalg::sum(self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)))
    }
}

/// Nodes and weights on [-1, 1], ascending.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = QuadratureRule::gauss_legendre(8).unwrap();
        for k in 0..16 {
            let exact = 1.0 / (k as f64 + 1.0);
            let got = rule.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "degree {k}: {got}");
        }
    }

    #[test]
    fn weights_sum_to_one_and_nodes_are_interior() {
        for n in [1, 2, 7, 64, 128] {
            for rule in [
                QuadratureRule::gauss_legendre(n).unwrap(),
                QuadratureRule::beta_default(n).unwrap(),
            ] {
                assert!((rule.weight_sum() - 1.0).abs() < 1e-12);
                assert!(rule.nodes.iter().all(|x| *x > 0.0 && *x < 1.0));
                assert!(rule.weights.iter().all(|w| *w > 0.0));
            }
        }
    }

    #[test]
    fn graded_rule_handles_log_singularity() {
        let rule = QuadratureRule::beta_default(64).unwrap();
        let got = rule.integrate(|x| x.ln().powi(2));
        assert!((got - 2.0).abs() < 1e-8, "{got}");
    }
}
