//! Log-linear models on binary vectors, by exact enumeration of all `2^n`
//! states.
//!
//! A [`SubsetIndex`] lists the interaction subsets `A` carrying a natural
//! parameter `θ^A`; the sufficient statistic for `A` is `Π_{i∈A} x_i`.
//! States are enumerated lexicographically over `(x_1, …, x_n)` and every
//! reduction runs in that order with compensated summation.

use crate::error::{Error, Result};
use crate::geometry::{ChristoffelTensor, FirstKindSymbols, PointGeometry, StatisticalModel};
use crate::linalg::{self, Cholesky, DenseMatrix, KahanSum};

/// Largest number of binary variables handled by enumeration.
pub const MAX_VARS: usize = 20;

/// Ordered list of distinct nonempty variable subsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetIndex {
    n_vars: usize,
    /// Bit `i` set iff variable `i + 1` is in the subset.
    masks: Vec<u32>,
}

impl SubsetIndex {
    /// Builds an index from 1-based variable lists.
    pub fn new(n_vars: usize, subsets: &[Vec<usize>]) -> Result<Self> {
        check_vars(n_vars)?;
        let mut masks = Vec::with_capacity(subsets.len());
        for subset in subsets {
            let mut mask = 0u32;
            for &v in subset {
                if v == 0 || v > n_vars {
                    return Err(Error::InvalidInput(format!("variable {v} outside 1..={n_vars}")));
                }
                mask |= 1 << (v - 1);
            }
            masks.push(mask);
        }
        Self::from_masks(n_vars, masks)
    }

    pub fn from_masks(n_vars: usize, masks: Vec<u32>) -> Result<Self> {
        check_vars(n_vars)?;
        let limit = if n_vars == 32 { u32::MAX } else { (1u32 << n_vars) - 1 };
        for (i, &m) in masks.iter().enumerate() {
            if m == 0 {
                return Err(Error::InvalidInput("empty subset in index".into()));
            }
            if m & !limit != 0 {
                return Err(Error::InvalidInput(format!("subset {m:#b} exceeds {n_vars} variables")));
            }
            if masks[..i].contains(&m) {
                return Err(Error::InvalidInput(format!("duplicate subset {}", mask_label(m))));
            }
        }
        Ok(Self { n_vars, masks })
    }

    /// Singletons then pairs, lexicographic: the fully connected Boltzmann
    /// machine.
    pub fn boltzmann(n_vars: usize) -> Result<Self> {
        check_vars(n_vars)?;
        let mut masks: Vec<u32> = (0..n_vars).map(|i| 1 << i).collect();
        for i in 0..n_vars {
            for j in i + 1..n_vars {
                masks.push((1 << i) | (1 << j));
            }
        }
        Ok(Self { n_vars, masks })
    }

    /// Every nonempty subset, by order `|A|` and then lexicographically.
    pub fn full(n_vars: usize) -> Result<Self> {
        check_vars(n_vars)?;
        let mut masks: Vec<u32> = (1..(1u32 << n_vars)).collect();
        masks.sort_by_key(|&m| (m.count_ones(), lex_key(m, n_vars)));
        Ok(Self { n_vars, masks })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    pub fn order(&self, i: usize) -> usize {
        self.masks[i].count_ones() as usize
    }

    pub fn position(&self, mask: u32) -> Option<usize> {
        self.masks.iter().position(|&m| m == mask)
    }

    /// `"1,3,4"`-style label of entry `i` (1-based variables).
    pub fn label(&self, i: usize) -> String {
        mask_label(self.masks[i])
    }

    pub fn parse_label(label: &str) -> Result<u32> {
        let mut mask = 0u32;
        for part in label.split(',') {
            let v: usize = part
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad subset label {label:?}")))?;
            if v == 0 || v > 32 {
                return Err(Error::InvalidInput(format!("bad variable {v} in {label:?}")));
            }
            mask |= 1 << (v - 1);
        }
        Ok(mask)
    }
}

fn check_vars(n_vars: usize) -> Result<()> {
    if n_vars == 0 || n_vars > MAX_VARS {
        return Err(Error::InvalidInput(format!(
            "log-linear models need 1..={MAX_VARS} variables, got {n_vars}"
        )));
    }
    Ok(())
}

fn lex_key(mask: u32, n_vars: usize) -> Vec<usize> {
    (0..n_vars).filter(|i| mask & (1 << i) != 0).collect()
}

fn mask_label(mask: u32) -> String {
    (0..32)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// State masks in lexicographic order of `(x_1, …, x_n)`.
fn states(n_vars: usize) -> impl Iterator<Item = u32> {
    (0u32..(1u32 << n_vars)).map(move |s| {
        let mut mask = 0u32;
        for i in 0..n_vars {
            if (s >> (n_vars - 1 - i)) & 1 == 1 {
                mask |= 1 << i;
            }
        }
        mask
    })
}

#[inline]
fn feature(state: u32, subset: u32) -> f64 {
    if state & subset == subset {
        1.0
    } else {
        0.0
    }
}

/// The normalized distribution of a log-linear model.
#[derive(Debug, Clone)]
pub struct Distribution {
    n_vars: usize,
    states: Vec<u32>,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    log_partition: f64,
}

impl Distribution {
    pub fn new(index: &SubsetIndex, theta: &[f64]) -> Result<Self> {
        if theta.len() != index.len() {
            return Err(Error::DimensionMismatch {
                expected: index.len(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteValue("natural parameters"));
        }
        let states: Vec<u32> = states(index.n_vars).collect();
        let scores: Vec<f64> = states
            .iter()
            .map(|&s| {
                linalg::sum(
                    index
                        .masks
                        .iter()
                        .zip(theta)
                        .filter(|(m, _)| s & **m == **m)
                        .map(|(_, t)| *t),
                )
            })
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_partition = max + linalg::sum(scores.iter().map(|s| (s - max).exp())).ln();
        if !log_partition.is_finite() {
            return Err(Error::NonFiniteValue("log-partition function"));
        }
        let log_probs: Vec<f64> = scores.iter().map(|s| s - log_partition).collect();
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        Ok(Self {
            n_vars: index.n_vars,
            states,
            probs,
            log_probs,
            log_partition,
        })
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `Σ_x p(x) log p(x)`.
    pub fn negative_entropy(&self) -> f64 {
        linalg::sum(self.probs.iter().zip(&self.log_probs).map(|(p, l)| p * l))
    }

    /// `E[Π_{i∈A} x_i]` for each queried subset.
    pub fn moments(&self, query: &SubsetIndex) -> Result<Vec<f64>> {
        if query.n_vars != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: query.n_vars,
            });
        }
        Ok(query
            .masks
            .iter()
            .map(|&m| linalg::sum(self.states.iter().zip(&self.probs).map(|(&s, p)| p * feature(s, m))))
            .collect())
    }

    /// Moments, covariance and (optionally) third central moments of the
    /// sufficient statistics of `index`.
    pub fn cumulants(&self, index: &SubsetIndex, third: bool) -> Result<Cumulants> {
        let eta = self.moments(index)?;
        let m = index.len();
        let mut cov = vec![KahanSum::new(); m * m];
        let mut cub = if third {
            vec![KahanSum::new(); m * m * m]
        } else {
            Vec::new()
        };
        let mut centered = vec![0.0; m];
        for (&s, &p) in self.states.iter().zip(&self.probs) {
            for (c, (&mask, e)) in centered.iter_mut().zip(index.masks.iter().zip(&eta)) {
                *c = feature(s, mask) - e;
            }
            for i in 0..m {
                let pi = p * centered[i];
                for j in i..m {
                    let pij = pi * centered[j];
                    cov[i * m + j].add(pij);
                    if third {
                        for k in j..m {
                            cub[(i * m + j) * m + k].add(pij * centered[k]);
                        }
                    }
                }
            }
        }
        let mut fisher = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = cov[i * m + j].value();
                fisher[(i, j)] = v;
                fisher[(j, i)] = v;
            }
        }
        let third_moment = third.then(|| {
            let mut t = FirstKindSymbols::zeros(m);
            for i in 0..m {
                for j in i..m {
                    for k in j..m {
                        let v = cub[(i * m + j) * m + k].value();
                        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                            t.set(a, b, c, v);
                        }
                    }
                }
            }
            t
        });
        Ok(Cumulants {
            eta,
            fisher,
            third: third_moment,
        })
    }
}

/// First three cumulants of the sufficient statistics.
#[derive(Debug, Clone)]
pub struct Cumulants {
    pub eta: Vec<f64>,
    pub fisher: DenseMatrix,
    /// `T_{ABC} = E[(F_A - η_A)(F_B - η_B)(F_C - η_C)]`.
    pub third: Option<FirstKindSymbols>,
}

/// A log-linear model at a specific natural parameter.
#[derive(Debug, Clone)]
pub struct LogLinearModel {
    pub index: SubsetIndex,
    pub theta: Vec<f64>,
}

impl LogLinearModel {
    pub fn new(index: SubsetIndex, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != index.len() {
            return Err(Error::DimensionMismatch {
                expected: index.len(),
                got: theta.len(),
            });
        }
        Ok(Self { index, theta })
    }

    pub fn distribution(&self) -> Result<Distribution> {
        Distribution::new(&self.index, &self.theta)
    }

    pub fn moments(&self, query: &SubsetIndex) -> Result<Vec<f64>> {
        self.distribution()?.moments(query)
    }

    /// Expectation coordinates over the model's own index.
    pub fn eta(&self) -> Result<Vec<f64>> {
        self.moments(&self.index)
    }

    pub fn fisher(&self) -> Result<DenseMatrix> {
        Ok(self.distribution()?.cumulants(&self.index, false)?.fisher)
    }

    pub fn third_central_moment(&self) -> Result<FirstKindSymbols> {
        Ok(self
            .distribution()?
            .cumulants(&self.index, true)?
            .third
            .expect("requested"))
    }

    /// `∇^(α)` symbols in θ-coordinates: first kind `(1-α)/2 · T`.
    pub fn christoffel(&self, alpha: f64) -> Result<ChristoffelTensor> {
        let c = self.distribution()?.cumulants(&self.index, true)?;
        raise_scaled_third(&c, alpha)
    }
}

fn raise_scaled_third(c: &Cumulants, alpha: f64) -> Result<ChristoffelTensor> {
    let factor = 0.5 * (1.0 - alpha);
    let m = c.fisher.rows();
    if factor == 0.0 {
        return Ok(ChristoffelTensor::zeros(m));
    }
    let t = c.third.as_ref().expect("third cumulant computed");
    ChristoffelTensor::from_first_kind(&t.scaled(factor), &c.fisher)
}

/// The θ-chart of a log-linear family, as a statistical manifold.
#[derive(Debug, Clone)]
pub struct LogLinearManifold {
    pub index: SubsetIndex,
}

impl LogLinearManifold {
    pub fn new(index: SubsetIndex) -> Self {
        Self { index }
    }

    pub fn boltzmann(n_vars: usize) -> Result<Self> {
        Ok(Self::new(SubsetIndex::boltzmann(n_vars)?))
    }

    pub fn cumulants(&self, theta: &[f64], third: bool) -> Result<Cumulants> {
        Distribution::new(&self.index, theta)?.cumulants(&self.index, third)
    }

    pub fn eta(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Distribution::new(&self.index, theta)?.moments(&self.index)
    }

    pub fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        Ok(Distribution::new(&self.index, theta)?.log_partition())
    }

    /// Inverts `η = ∇ψ(θ)` by damped Newton on `ψ(θ) - θ·η`.
    pub fn theta_from_eta(&self, eta: &[f64], warm_start: Option<&[f64]>) -> Result<Vec<f64>> {
        theta_from_moments(&self.index, eta, warm_start)
    }
}

impl StatisticalModel for LogLinearManifold {
    fn dim(&self) -> usize {
        self.index.len()
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.index.len() {
            return Err(Error::DimensionMismatch {
                expected: self.index.len(),
                got: xi.len(),
            });
        }
        crate::geometry::check_finite(xi)
    }

    fn fisher(&self, xi: &[f64]) -> Result<DenseMatrix> {
        Ok(self.cumulants(xi, false)?.fisher)
    }

    fn alpha_christoffel(&self, xi: &[f64], alpha: f64) -> Result<ChristoffelTensor> {
        let c = self.cumulants(xi, alpha != 1.0)?;
        raise_scaled_third(&c, alpha)
    }

    fn alpha_pair(&self, xi: &[f64], alpha: f64) -> Result<PointGeometry> {
        let c = self.cumulants(xi, true)?;
        Ok(PointGeometry {
            gamma: raise_scaled_third(&c, alpha)?,
            gamma_dual: raise_scaled_third(&c, -alpha)?,
            metric: c.fisher,
        })
    }
}

/// Inner Newton iteration limit for the Legendre inverse.
pub const LEGENDRE_MAX_ITERS: usize = 200;
/// Target `‖∇ψ(θ) - η‖_∞`.
pub const LEGENDRE_TOL: f64 = 1e-12;

/// Solves `∇ψ(θ) = η` for `θ`.
pub fn theta_from_moments(index: &SubsetIndex, eta: &[f64], warm_start: Option<&[f64]>) -> Result<Vec<f64>> {
    let m = index.len();
    if eta.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: eta.len(),
        });
    }
    if let Some(bad) = quick_infeasibility(index, eta) {
        return Err(Error::MomentInfeasible { residual: bad });
    }
    let mut theta = warm_start.map_or_else(|| vec![0.0; m], <[f64]>::to_vec);
    if theta.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: theta.len(),
        });
    }
    let merit = |d: &Distribution, th: &[f64]| d.log_partition() - linalg::dot(th, eta);
    let mut dist = Distribution::new(index, &theta)?;
    let mut residual_norm = f64::INFINITY;
    for _ in 0..LEGENDRE_MAX_ITERS {
        let c = dist.cumulants(index, false)?;
        let residual: Vec<f64> = c.eta.iter().zip(eta).map(|(a, b)| a - b).collect();
        residual_norm = linalg::norm_inf(&residual);
        if residual_norm < LEGENDRE_TOL {
            return Ok(theta);
        }
        let step = match Cholesky::factor(&c.fisher) {
            Ok(chol) => chol.solve(&residual)?,
            Err(_) => break,
        };
        let slope = -linalg::dot(&residual, &step);
        let base = merit(&dist, &theta);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(x, d)| x - t * d).collect();
            if let Ok(trial_dist) = Distribution::new(index, &trial) {
                let trial_res = linalg::norm_inf(
                    &trial_dist
                        .moments(index)?
                        .iter()
                        .zip(eta)
                        .map(|(a, b)| a - b)
                        .collect::<Vec<_>>(),
                );
                let armijo = merit(&trial_dist, &trial) <= base + 1e-4 * t * slope;
                if armijo || trial_res < residual_norm {
                    theta = trial;
                    dist = trial_dist;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::MomentInfeasible {
        residual: residual_norm,
    })
}

/// Cheap necessary conditions on a moment vector; returns the violation.
fn quick_infeasibility(index: &SubsetIndex, eta: &[f64]) -> Option<f64> {
    for (i, &e) in eta.iter().enumerate() {
        if !(e > 0.0 && e < 1.0) {
            return Some(if e.is_finite() { e } else { f64::INFINITY });
        }
        let mi = index.masks[i];
        for (j, &f) in eta.iter().enumerate() {
            let mj = index.masks[j];
            // η is monotone under inclusion of subsets.
            if mi != mj && mi & mj == mj && e > f {
                return Some(e - f);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn boltzmann_index_layout() {
        let idx = SubsetIndex::boltzmann(4).unwrap();
        assert_eq!(idx.len(), 4 + 6);
        let labels: Vec<String> = (0..idx.len()).map(|i| idx.label(i)).collect();
        assert_eq!(labels, ["1", "2", "3", "4", "1,2", "1,3", "1,4", "2,3", "2,4", "3,4"]);
        let full = SubsetIndex::full(3).unwrap();
        let labels: Vec<String> = (0..full.len()).map(|i| full.label(i)).collect();
        assert_eq!(labels, ["1", "2", "3", "1,2", "1,3", "2,3", "1,2,3"]);
        assert_eq!(SubsetIndex::parse_label("1,3,4").unwrap(), 0b1101);
    }

    #[test]
    fn index_rejects_duplicates_and_empty() {
        assert!(SubsetIndex::new(3, &[vec![1, 2], vec![2, 1]]).is_err());
        assert!(SubsetIndex::new(3, &[vec![]]).is_err());
        assert!(SubsetIndex::new(3, &[vec![4]]).is_err());
        assert!(SubsetIndex::boltzmann(0).is_err());
    }

    #[test]
    fn uniform_moments() {
        let model = LogLinearModel::new(SubsetIndex::boltzmann(2).unwrap(), vec![0.0; 3]).unwrap();
        let eta = model.eta().unwrap();
        assert_eq!(eta, vec![0.5, 0.5, 0.25]);
    }

    #[test]
    fn two_state_moment() {
        let model = LogLinearModel::new(SubsetIndex::boltzmann(1).unwrap(), vec![1.0]).unwrap();
        let eta = model.eta().unwrap();
        assert!((eta[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
    }

    #[test]
    fn uniform_fisher() {
        let model = LogLinearModel::new(SubsetIndex::boltzmann(2).unwrap(), vec![0.0; 3]).unwrap();
        let g = model.fisher().unwrap();
        let expected = DenseMatrix::from_rows(&[
            vec![0.25, 0.0, 0.125],
            vec![0.0, 0.25, 0.125],
            vec![0.125, 0.125, 0.1875],
        ])
        .unwrap();
        assert!(g.sub(&expected).unwrap().max_abs() < 1e-15);
        let one = LogLinearModel::new(SubsetIndex::boltzmann(1).unwrap(), vec![0.0]).unwrap();
        assert_eq!(one.fisher().unwrap()[(0, 0)], 0.25);
    }

    #[test]
    fn fisher_is_union_moment_covariance() {
        let idx = SubsetIndex::boltzmann(3).unwrap();
        let theta = [0.3, -0.7, 1.1, 0.4, -0.2, 0.9];
        let model = LogLinearModel::new(idx.clone(), theta.to_vec()).unwrap();
        let dist = model.distribution().unwrap();
        let g = model.fisher().unwrap();
        let eta = dist.moments(&idx).unwrap();
        for i in 0..idx.len() {
            for j in 0..idx.len() {
                let union = SubsetIndex::from_masks(3, vec![idx.masks()[i] | idx.masks()[j]]).unwrap();
                let e_union = dist.moments(&union).unwrap()[0];
                assert!((g[(i, j)] - (e_union - eta[i] * eta[j])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn christoffel_examples() {
        let idx = SubsetIndex::boltzmann(3).unwrap();
        let model = LogLinearModel::new(idx, vec![0.2, -0.4, 0.6, 1.0, -0.3, 0.5]).unwrap();
        assert_eq!(model.christoffel(1.0).unwrap().max_abs(), 0.0);

        let sym = LogLinearModel::new(SubsetIndex::boltzmann(1).unwrap(), vec![0.0]).unwrap();
        assert!(sym.christoffel(-1.0).unwrap().max_abs() < 1e-16);

        let one = LogLinearModel::new(SubsetIndex::boltzmann(1).unwrap(), vec![1.0]).unwrap();
        let t = one.third_central_moment().unwrap().get(0, 0, 0);
        let eta = sigmoid(1.0);
        assert!((t - eta * (1.0 - eta) * (1.0 - 2.0 * eta)).abs() < 1e-15);
        assert!((t + 0.090_857_7).abs() < 1e-7);
    }

    #[test]
    fn legendre_inverse_examples() {
        let idx = SubsetIndex::boltzmann(1).unwrap();
        let theta = theta_from_moments(&idx, &[0.5], None).unwrap();
        assert!(theta[0].abs() < 1e-14);
        let idx2 = SubsetIndex::boltzmann(2).unwrap();
        let theta = theta_from_moments(&idx2, &[0.5, 0.5, 0.25], Some(&[0.3, -0.1, 0.2])).unwrap();
        assert!(linalg::norm_inf(&theta) < 1e-10);
    }

    #[test]
    fn legendre_inverse_rejects_infeasible() {
        let idx = SubsetIndex::boltzmann(2).unwrap();
        for eta in [[0.5, 0.5, 0.6], [1.2, 0.5, 0.2], [0.5, 0.5, -0.1]] {
            assert!(matches!(
                theta_from_moments(&idx, &eta, None),
                Err(Error::MomentInfeasible { .. })
            ));
        }
        // passes the cheap checks but lies outside the correlation polytope
        let idx3 = SubsetIndex::boltzmann(3).unwrap();
        let eta = [0.5, 0.5, 0.5, 0.0001, 0.0001, 0.0001];
        assert!(matches!(
            theta_from_moments(&idx3, &eta, None),
            Err(Error::MomentInfeasible { .. })
        ));
    }

    #[test]
    fn negative_entropy_of_uniform() {
        let d = Distribution::new(&SubsetIndex::boltzmann(3).unwrap(), &[0.0; 6]).unwrap();
        assert!((d.negative_entropy() + 3.0 * std::f64::consts::LN_2).abs() < 1e-14);
    }
}
