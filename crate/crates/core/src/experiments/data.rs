//! Reproducible problem instances: log-linear targets and Beta-mixture
//! datasets, serialized as JSON.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::beta_mixture::{BetaMixtureManifold, BetaMixtureParams};
use crate::models::loglinear::{LogLinearModel, SubsetIndex};
use crate::models::quadrature::QuadratureRule;

/// Largest `n` for which the full interaction index is generated.
pub const MAX_TARGET_VARS: usize = 12;

/// A random log-linear target over all interactions and its moments over the
/// Boltzmann index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub n_vars: usize,
    pub base_scale: f64,
    pub seed: u64,
    /// `θ^A` keyed by `"1,3,4"`.
    pub theta: BTreeMap<String, f64>,
    /// `η̂_A` over singletons and pairs.
    pub eta: BTreeMap<String, f64>,
    pub negative_entropy: f64,
}

impl TargetSpec {
    /// `θ` in the full index order.
    pub fn model(&self) -> Result<LogLinearModel> {
        let index = SubsetIndex::full(self.n_vars)?;
        let theta = (0..index.len())
            .map(|i| {
                let key = index.label(i);
                self.theta
                    .get(&key)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("target lacks θ for {{{key}}}")))
            })
            .collect::<Result<Vec<_>>>()?;
        LogLinearModel::new(index, theta)
    }

    /// `η̂` in Boltzmann index order.
    pub fn boltzmann_eta(&self) -> Result<Vec<f64>> {
        let index = SubsetIndex::boltzmann(self.n_vars)?;
        (0..index.len())
            .map(|i| {
                let key = index.label(i);
                self.eta
                    .get(&key)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("target lacks η for {{{key}}}")))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("target: {e}")))
    }
}

/// Draws `θ^A ~ U[-b/|A|, b/|A|]` for every nonempty `A ⊆ {1..n}`.
pub fn gen_target(n_vars: usize, base_scale: f64, seed: u64) -> Result<TargetSpec> {
    if n_vars == 0 || n_vars > MAX_TARGET_VARS {
        return Err(Error::InvalidInput(format!(
            "target needs 1 <= n <= {MAX_TARGET_VARS}, got {n_vars}"
        )));
    }
    if !(base_scale >= 0.0) || !base_scale.is_finite() {
        return Err(Error::InvalidInput(format!(
            "base scale must be >= 0, got {base_scale}"
        )));
    }
    let index = SubsetIndex::full(n_vars)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..index.len())
        .map(|i| {
            let bound = base_scale / index.order(i) as f64;
            if bound == 0.0 {
                0.0
            } else {
                rng.random_range(-bound..=bound)
            }
        })
        .collect();
    let model = LogLinearModel::new(index.clone(), theta.clone())?;
    let dist = model.distribution()?;
    let boltzmann = SubsetIndex::boltzmann(n_vars)?;
    let eta = dist.moments(&boltzmann)?;
    Ok(TargetSpec {
        n_vars,
        base_scale,
        seed,
        theta: (0..index.len()).map(|i| (index.label(i), theta[i])).collect(),
        eta: (0..boltzmann.len()).map(|i| (boltzmann.label(i), eta[i])).collect(),
        negative_entropy: dist.negative_entropy(),
    })
}

/// i.i.d. uniform starting point.
pub fn uniform_init(dim: usize, range: (f64, f64), seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| {
            if range.0 == range.1 {
                range.0
            } else {
                rng.random_range(range.0..range.1)
            }
        })
        .collect()
}

/// Samples drawn from a Beta mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub params: BetaMixtureParams,
    pub seed: u64,
    pub points: Vec<[f64; 2]>,
}

impl DatasetSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("dataset: {e}")))?;
        if spec.points.iter().any(|p| p.iter().any(|x| !(*x > 0.0 && *x < 1.0))) {
            return Err(Error::InvalidInput("dataset points must lie in (0, 1)²".into()));
        }
        Ok(spec)
    }
}

pub fn gen_dataset(params: &BetaMixtureParams, n: usize, seed: u64) -> Result<DatasetSpec> {
    if params.alpha.len() != params.weights.len() || params.beta.len() != params.weights.len() {
        return Err(Error::InvalidInput("mixture parameter lengths differ".into()));
    }
    // Sampling needs no quadrature; a one-node rule keeps construction cheap.
    let mixture = BetaMixtureManifold::new(params.weights.clone(), QuadratureRule::gauss_legendre(1)?)?;
    Ok(DatasetSpec {
        params: params.clone(),
        seed,
        points: mixture.sample(&params.to_xi(), n, seed)?,
    })
}
