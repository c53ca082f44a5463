//! Runs one experiment end to end and writes its artifacts.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{AlphaConnection, StatisticalModel};
use crate::models::beta_mixture::BetaMixtureManifold;
use crate::models::gaussian::GaussianIsoManifold;
use crate::objectives::{AlphaDivergence, BetaMixtureNll, KlProjection, Objective};
use crate::optimizers::{
    adam_run, convergence_order_above, dual_newton_run, mirror_descent_run, natural_gradient_run, NewtonOptions,
    OptimizerTrace, StopRule,
};

use super::config::{ExperimentId, Method, RunConfig};
use super::data::{gen_dataset, gen_target, uniform_init, DatasetSpec, TargetSpec};

/// Default mixture-study start: every generating shape moved by 0.3.
pub const EXP3_DEFAULT_INIT: [f64; 6] = [2.3, 4.7, 3.3, 2.3, 5.3, 3.8];

/// Refining Newton steps applied to each final point.
const POLISH_STEPS: usize = 4;

/// Offset between the target seed and the initialization seed.
const INIT_SEED_OFFSET: u64 = 0x9e37_79b9;

pub const TIMING_CLOCK: &str = "std::time::Instant (monotonic)";
pub const TIMING_SCOPE: &str = "objective, gradient, metric, connection and line-search evaluations of every \
    iteration; excludes problem construction, data generation and file output";

enum Problem {
    LogLinear(KlProjection),
    Gaussian(AlphaDivergence, GaussianIsoManifold),
    Mixture(BetaMixtureNll),
}

impl Problem {
    fn objective(&self) -> &dyn Objective {
        match self {
            Problem::LogLinear(kl) => kl,
            Problem::Gaussian(d, _) => d,
            Problem::Mixture(nll) => nll,
        }
    }

    fn model(&self) -> &dyn StatisticalModel {
        match self {
            Problem::LogLinear(kl) => kl.manifold(),
            Problem::Gaussian(_, m) => m,
            Problem::Mixture(nll) => nll.mixture(),
        }
    }
}

/// One optimizer run.
#[derive(Debug, Clone)]
pub struct VariantOutcome {
    pub method: Method,
    /// Connection parameter; only Newton runs have one.
    pub alpha: Option<f64>,
    pub trace: OptimizerTrace,
    /// The trace's own limit refined by extra Newton steps; the reference
    /// for the order estimate. `None` for failed runs.
    pub limit: Option<Vec<f64>>,
    /// `None` when the trace is too short or failed.
    pub order: Option<f64>,
}

impl VariantOutcome {
    /// File stem, e.g. `dual_newton_a-0.50`.
    pub fn stem(&self) -> String {
        match self.alpha {
            Some(a) => format!("{}_a{:.2}", self.method.name(), a),
            None => self.method.name().to_string(),
        }
    }

    pub fn label(&self) -> String {
        match self.alpha {
            Some(a) => format!("{} (alpha={a})", self.method.name()),
            None => self.method.name().to_string(),
        }
    }

    pub fn summary_json(&self) -> Value {
        let iters = self.trace.iterations();
        let total = self.trace.total_time();
        json!({
            "method": self.method.name(),
            "alpha": self.alpha,
            "status": self.trace.status,
            "message": self.trace.message,
            "iterations": iters,
            "total_time_s": total,
            "mean_time_per_iter_s": if iters > 0 { total / iters as f64 } else { 0.0 },
            "initial_grad_l2": self.trace.initial.grad_l2,
            "final_grad_l2": self.trace.final_grad_l2(),
            "final_value": self.trace.final_value(),
            "final_point": self.trace.final_point(),
            "convergence_order": self.order,
            "reference_limit": self.limit,
            "all_spd": self.trace.records.iter().any(|r| r.spd.is_some()).then(|| self.trace.all_spd()),
            "timing": { "clock": TIMING_CLOCK, "includes": TIMING_SCOPE },
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub init: Vec<f64>,
    pub target: Option<TargetSpec>,
    pub dataset: Option<DatasetSpec>,
    pub variants: Vec<VariantOutcome>,
}

impl ExperimentReport {
    pub fn find(&self, method: Method, alpha: Option<f64>) -> Option<&VariantOutcome> {
        self.variants.iter().find(|v| v.method == method && v.alpha == alpha)
    }

    pub fn by_method(&self, method: Method) -> impl Iterator<Item = &VariantOutcome> {
        self.variants.iter().filter(move |v| v.method == method)
    }

    /// Fewest iterations among converged Newton runs.
    pub fn best_newton_iterations(&self) -> Option<usize> {
        self.by_method(Method::DualNewton)
            .filter(|v| v.trace.converged())
            .map(|v| v.trace.iterations())
            .min()
    }

    /// Any run that ended in a domain failure or a singular Hessian.
    pub fn has_failures(&self) -> bool {
        self.variants.iter().any(|v| v.trace.status.is_failure())
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "experiment": self.config.experiment,
            "seed": self.config.seed,
            "init": self.init,
            "timing": { "clock": TIMING_CLOCK, "includes": TIMING_SCOPE },
            "runs": self.variants.iter().map(|v| {
                let mut s = v.summary_json();
                s["csv"] = json!(format!("{}.csv", v.stem()));
                s
            }).collect::<Vec<_>>(),
        })
    }

    /// Writes per-run CSV, status and summary files, the problem instance,
    /// the effective config and a plot script into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut cfg = self.config.clone();
        cfg.init = Some(self.init.clone());
        std::fs::write(dir.join("config.json"), cfg.to_json())?;
        if let Some(t) = &self.target {
            std::fs::write(dir.join("target.json"), t.to_json())?;
        }
        if let Some(d) = &self.dataset {
            std::fs::write(dir.join("dataset.json"), d.to_json())?;
        }
        for v in &self.variants {
            let stem = v.stem();
            v.trace.save_csv(&dir.join(format!("{stem}.csv")))?;
            v.trace.save_status(&dir.join(format!("{stem}.status.json")))?;
            write_json(&dir.join(format!("{stem}.summary.json")), &v.summary_json())?;
        }
        write_json(&dir.join("summary.json"), &self.summary_json())?;
        std::fs::write(
            dir.join("plot_grad_norm.py"),
            plot_script(&self.variants, self.config.experiment),
        )
    }
}

fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    std::fs::write(path, text)
}

/// Problem, starting point and the generated instance behind it.
type Built = (Problem, Vec<f64>, Option<TargetSpec>, Option<DatasetSpec>);

fn build_problem(cfg: &RunConfig) -> Result<Built> {
    match cfg.experiment {
        ExperimentId::Exp1 => {
            let target = gen_target(cfg.n_vars, cfg.base_scale, cfg.seed)?;
            let kl = KlProjection::from_target(&target.model()?, cfg.lambda1, cfg.lambda2)?;
            let init = match &cfg.init {
                Some(x) => x.clone(),
                None => uniform_init(kl.dim(), cfg.init_range, cfg.seed.wrapping_add(INIT_SEED_OFFSET)),
            };
            Ok((Problem::LogLinear(kl), init, Some(target), None))
        }
        ExperimentId::Exp2 => {
            let init = cfg.init.clone().unwrap_or_else(|| vec![cfg.mu0, cfg.sigma0]);
            Ok((
                Problem::Gaussian(AlphaDivergence::reference(), GaussianIsoManifold),
                init,
                None,
                None,
            ))
        }
        ExperimentId::Exp3 => {
            let data = gen_dataset(&cfg.mixture, cfg.n_samples, cfg.seed)?;
            let mixture = BetaMixtureManifold::with_nodes(cfg.mixture.weights.clone(), cfg.quad_nodes)?;
            let nll = BetaMixtureNll::new(mixture, &data.points)?;
            let init = match &cfg.init {
                Some(x) => x.clone(),
                None if cfg.mixture.weights.len() == 3 => EXP3_DEFAULT_INIT.to_vec(),
                None => cfg.mixture.to_xi().iter().map(|x| x + 0.5).collect(),
            };
            Ok((Problem::Mixture(nll), init, None, Some(data)))
        }
        ExperimentId::Validate => Err(Error::InvalidInput(
            "the validation suite is run by run_validation".into(),
        )),
    }
}

/// Runs every configured method (and every α for Newton) from one shared
/// starting point.
///
/// Breakdowns are recorded in the traces; `Err` means the problem could not
/// be built or the starting point is infeasible.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (problem, init, target, dataset) = build_problem(cfg)?;
    let obj = problem.objective();
    if init.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: init.len(),
        });
    }
    let model = problem.model();
    let metric_only = AlphaConnection::new(model, 0.0);
    let newton = NewtonOptions {
        damped: cfg.damped,
        ..NewtonOptions::default()
    };

    let mut variants = Vec::new();
    for &method in &cfg.methods {
        let alphas: Vec<Option<f64>> = if method == Method::DualNewton {
            cfg.alphas.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for alpha in alphas {
            let trace = match (method, &problem) {
                (Method::DualNewton, _) => {
                    let ds = AlphaConnection::new(model, alpha.expect("Newton runs carry α"));
                    dual_newton_run(&ds, obj, &init, &cfg.stop, &newton)?
                }
                (Method::NaturalGradient, _) => natural_gradient_run(&metric_only, obj, &init, &cfg.stop)?,
                (Method::MirrorDescent, Problem::LogLinear(kl)) => {
                    mirror_descent_run(kl.manifold(), obj, &init, &cfg.stop)?
                }
                (Method::MirrorDescent, _) => {
                    return Err(Error::InvalidInput(
                        "mirror descent needs the log-linear experiment".into(),
                    ))
                }
                (Method::Adam, _) => adam_run(&metric_only, obj, &init, &cfg.stop, &cfg.adam)?,
            };
            let limit = (!trace.status.is_failure()).then(|| polish(model, obj, &trace));
            let order = limit
                .as_ref()
                .and_then(|l| convergence_order_above(&trace, &l.point, 10.0 * l.resolution).ok());
            variants.push(VariantOutcome {
                method,
                alpha,
                trace,
                limit: limit.map(|l| l.point),
                order,
            });
        }
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        init,
        target,
        dataset,
        variants,
    })
}

struct Limit {
    point: Vec<f64>,
    /// Size of the last refining correction.
    resolution: f64,
}

/// Newton steps from the trace's final point until the correction stalls at
/// rounding level.
fn polish(model: &dyn StatisticalModel, obj: &dyn Objective, trace: &OptimizerTrace) -> Limit {
    let last = trace.final_point();
    let stop = StopRule {
        grad_tol: f64::MIN_POSITIVE,
        max_iters: POLISH_STEPS,
    };
    let ds = AlphaConnection::new(model, 1.0);
    match dual_newton_run(&ds, obj, last, &stop, &NewtonOptions::default()) {
        Ok(t) if t.iterations() > 0 && !t.status.is_failure() => {
            // The best refined point; the next correction from it measures
            // how well it is resolved.
            let best = (0..t.iterations())
                .min_by(|&i, &j| t.records[i].grad_l2.total_cmp(&t.records[j].grad_l2))
                .expect("nonempty");
            if t.records[best].grad_l2 <= trace.final_grad_l2() {
                let next = t.records.get(best + 1).unwrap_or(&t.records[best]);
                Limit {
                    point: t.iterates[best + 1].clone(),
                    resolution: next.step_norm,
                }
            } else {
                Limit {
                    point: last.to_vec(),
                    resolution: t.records[0].step_norm,
                }
            }
        }
        _ => Limit {
            point: last.to_vec(),
            resolution: 0.0,
        },
    }
}

/// A matplotlib script that draws gradient norm against iteration from the
/// CSVs sitting next to it.
pub fn plot_script(variants: &[VariantOutcome], experiment: ExperimentId) -> String {
    let mut runs = String::new();
    for v in variants {
        let _ = writeln!(runs, "    ({:?}, {:?}),", format!("{}.csv", v.stem()), v.label());
    }
    format!(
        r#"#!/usr/bin/env python3
"""Gradient norm against iteration for {experiment}; reads only the CSVs in this directory."""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
RUNS = [
{runs}]


def load(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [int(r["iter"]) for r in rows], [float(r["grad_l2"]) for r in rows]


def main():
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, label in RUNS:
        iters, grad = load(name)
        if iters:
            ax.semilogy(iters, grad, marker=".", label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("gradient norm (l2 of G^-1 grad f)")
    ax.set_title("{experiment}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, "grad_norm.png"), dpi=150)


if __name__ == "__main__":
    main()
"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_are_distinct_per_alpha() {
        let mut cfg = RunConfig::defaults_for(ExperimentId::Exp2);
        cfg.methods = vec![Method::DualNewton];
        cfg.alphas = vec![-0.2, 0.2];
        let r = run_experiment(&cfg).unwrap();
        let stems: Vec<String> = r.variants.iter().map(VariantOutcome::stem).collect();
        assert_eq!(stems, ["dual_newton_a-0.20", "dual_newton_a0.20"]);
    }

    #[test]
    fn validate_is_not_an_experiment() {
        let cfg = RunConfig::defaults_for(ExperimentId::Validate);
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn init_dimension_is_checked() {
        let mut cfg = RunConfig::defaults_for(ExperimentId::Exp2);
        cfg.init = Some(vec![0.5]);
        assert!(matches!(run_experiment(&cfg), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn plot_script_names_every_csv() {
        let mut cfg = RunConfig::defaults_for(ExperimentId::Exp1);
        cfg.n_vars = 3;
        cfg.alphas = vec![1.0];
        let r = run_experiment(&cfg).unwrap();
        let script = plot_script(&r.variants, ExperimentId::Exp1);
        for v in &r.variants {
            assert!(script.contains(&format!("\"{}.csv\"", v.stem())));
        }
    }
}
