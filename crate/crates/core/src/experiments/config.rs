//! Run configuration: a JSON document with per-experiment defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::beta_mixture::{BetaMixtureParams, DEFAULT_QUAD_NODES};
use crate::optimizers::{AdamConfig, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    /// KL projection onto a Boltzmann machine.
    Exp1,
    /// α-divergence fit of an isotropic Gaussian.
    Exp2,
    /// Beta-mixture maximum likelihood.
    Exp3,
    Validate,
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(Self::Exp1),
            "exp2" => Ok(Self::Exp2),
            "exp3" => Ok(Self::Exp3),
            "validate" => Ok(Self::Validate),
            other => Err(Error::InvalidInput(format!("unknown experiment '{other}'"))),
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Exp1 => "exp1",
            Self::Exp2 => "exp2",
            Self::Exp3 => "exp3",
            Self::Validate => "validate",
        };
        f.write_str(s)
    }
}

/// Which optimizers to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DualNewton,
    NaturalGradient,
    MirrorDescent,
    Adam,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::DualNewton => "dual_newton",
            Self::NaturalGradient => "natural_gradient",
            Self::MirrorDescent => "mirror_descent",
            Self::Adam => "adam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub experiment: ExperimentId,
    /// Connection parameters for the Newton runs.
    pub alphas: Vec<f64>,
    pub methods: Vec<Method>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub n_vars: usize,
    /// Scale of the random log-linear target.
    pub base_scale: f64,
    /// Range of the i.i.d. uniform initial θ.
    pub init_range: (f64, f64),
    pub seed: u64,
    pub stop: StopRule,
    pub adam: AdamConfig,
    pub mu0: f64,
    pub sigma0: f64,
    /// Explicit starting point; overrides the experiment's default.
    pub init: Option<Vec<f64>>,
    pub quad_nodes: usize,
    pub n_samples: usize,
    pub mixture: BetaMixtureParams,
    /// Strong Wolfe damping for Newton steps.
    pub damped: bool,
    /// Do not treat optimizer breakdowns as errors.
    pub expect_failure: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::defaults_for(ExperimentId::Exp1)
    }
}

impl RunConfig {
    pub fn defaults_for(experiment: ExperimentId) -> Self {
        let base = Self {
            experiment,
            alphas: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            methods: vec![
                Method::DualNewton,
                Method::NaturalGradient,
                Method::MirrorDescent,
                Method::Adam,
            ],
            lambda1: 0.5,
            lambda2: 0.5,
            n_vars: 4,
            base_scale: 1.0,
            init_range: (-0.25, 0.2),
            seed: 0,
            stop: StopRule::default(),
            adam: AdamConfig::default(),
            mu0: 0.5,
            sigma0: 2.0,
            init: None,
            quad_nodes: DEFAULT_QUAD_NODES,
            n_samples: 5000,
            mixture: BetaMixtureParams::reference(),
            damped: false,
            expect_failure: false,
            out: None,
        };
        let geometric = vec![Method::DualNewton, Method::NaturalGradient, Method::Adam];
        match experiment {
            ExperimentId::Exp1 | ExperimentId::Validate => base,
            ExperimentId::Exp2 => Self {
                alphas: vec![-0.4, -0.2, 0.0, 0.2, 0.4],
                methods: geometric,
                ..base
            },
            ExperimentId::Exp3 => Self {
                alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
                methods: geometric,
                stop: StopRule {
                    grad_tol: 1e-8,
                    ..StopRule::default()
                },
                ..base
            },
        }
    }

    /// Parses a JSON document; missing fields take the defaults of the
    /// experiment it names.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        let id = match value.get("experiment") {
            Some(v) => {
                serde_json::from_value(v.clone()).map_err(|e| Error::InvalidInput(format!("config experiment: {e}")))?
            }
            None => ExperimentId::Exp1,
        };
        let mut merged = serde_json::to_value(Self::defaults_for(id)).expect("serializable");
        if let (Some(dst), Some(src)) = (merged.as_object_mut(), value.as_object()) {
            for (k, v) in src {
                dst.insert(k.clone(), v.clone());
            }
        }
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if let Some(a) = self.alphas.iter().find(|a| !(-1.0..=1.0).contains(*a)) {
            return bad(format!("alpha must lie in [-1, 1], got {a}"));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return bad("regularization weights must be nonnegative".into());
        }
        if self.n_vars == 0 || self.n_vars > 12 {
            return bad(format!("n must be in 1..=12, got {}", self.n_vars));
        }
        if !(self.init_range.0 <= self.init_range.1) {
            return bad("init_range must be ordered".into());
        }
        if !(self.base_scale >= 0.0) {
            return bad("base_scale must be nonnegative".into());
        }
        if !(self.stop.grad_tol > 0.0) {
            return bad("tolerance must be positive".into());
        }
        self.adam.validate()?;
        if !(self.sigma0 > 0.0) {
            return bad("sigma0 must be positive".into());
        }
        if self.quad_nodes == 0 || self.n_samples == 0 {
            return bad("quad_nodes and n_samples must be positive".into());
        }
        if self.methods.contains(&Method::MirrorDescent) && self.experiment != ExperimentId::Exp1 {
            return bad("mirror descent needs the log-linear experiment".into());
        }
        Ok(())
    }
}
