//! The isotropic bivariate Gaussian `N((μ, μ), σ² I₂)` in `(μ, σ)`
//! coordinates.

use crate::error::{Error, Result};
use crate::geometry::{ChristoffelTensor, StatisticalModel};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianIsoModel {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianIsoModel {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let model = Self { mu, sigma };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        if !self.mu.is_finite() || !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::DomainViolation(format!(
                "Gaussian needs finite μ and σ > 0, got ({}, {})",
                self.mu, self.sigma
            )));
        }
        Ok(())
    }

    /// `diag(2/σ², 4/σ²)`.
    pub fn fisher(&self) -> Result<DenseMatrix> {
        self.check()?;
        let s2 = self.sigma * self.sigma;
        Ok(DenseMatrix::from_diag(&[2.0 / s2, 4.0 / s2]))
    }

    /// Second-kind symbols of `∇^(α)`, index 0 = μ, 1 = σ.
    pub fn christoffel(&self, alpha: f64) -> Result<ChristoffelTensor> {
        self.check()?;
        let s = self.sigma;
        let mut t = ChristoffelTensor::zeros(2);
        let mixed = -(1.0 + alpha) / s;
        t.set(0, 1, 0, mixed);
        t.set(1, 0, 0, mixed);
        t.set(0, 0, 1, (1.0 - alpha) / (2.0 * s));
        t.set(1, 1, 1, -(1.0 + 2.0 * alpha) / s);
        Ok(t)
    }
}

/// The `(μ, σ)` chart as a statistical manifold.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianIsoManifold;

impl GaussianIsoManifold {
    fn at(xi: &[f64]) -> Result<GaussianIsoModel> {
        if xi.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: xi.len(),
            });
        }
        GaussianIsoModel::new(xi[0], xi[1])
    }
}

impl StatisticalModel for GaussianIsoManifold {
    fn dim(&self) -> usize {
        2
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        Self::at(xi).map(|_| ())
    }

    fn fisher(&self, xi: &[f64]) -> Result<DenseMatrix> {
        Self::at(xi)?.fisher()
    }

    fn alpha_christoffel(&self, xi: &[f64], alpha: f64) -> Result<ChristoffelTensor> {
        Self::at(xi)?.christoffel(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fisher_closed_form() {
        let g = GaussianIsoModel::new(0.0, 1.0).unwrap().fisher().unwrap();
        assert_eq!(g, DenseMatrix::from_diag(&[2.0, 4.0]));
        let g = GaussianIsoModel::new(3.0, 2.0).unwrap().fisher().unwrap();
        assert_eq!(g, DenseMatrix::from_diag(&[0.5, 1.0]));
        assert!(GaussianIsoModel::new(0.0, 0.0).is_err());
        assert!(GaussianIsoModel::new(0.0, -1.0).is_err());
    }

    #[test]
    fn christoffel_closed_form() {
        let m = GaussianIsoModel::new(0.0, 1.0).unwrap();
        let lc = m.christoffel(0.0).unwrap();
        assert_eq!(
            [lc.get(0, 0, 0), lc.get(0, 1, 0), lc.get(1, 0, 0), lc.get(1, 1, 0)],
            [0.0, -1.0, -1.0, 0.0]
        );
        assert_eq!(
            [lc.get(0, 0, 1), lc.get(0, 1, 1), lc.get(1, 0, 1), lc.get(1, 1, 1)],
            [0.5, 0.0, 0.0, -1.0]
        );
        let m1 = m.christoffel(-1.0).unwrap();
        assert_eq!(
            [m1.get(0, 0, 0), m1.get(0, 1, 0), m1.get(1, 0, 0), m1.get(1, 1, 0)],
            [0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            [m1.get(0, 0, 1), m1.get(0, 1, 1), m1.get(1, 0, 1), m1.get(1, 1, 1)],
            [1.0, 0.0, 0.0, 1.0]
        );
        for alpha in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(m.christoffel(alpha).unwrap().lower_index_asymmetry(), 0.0);
        }
    }
}
