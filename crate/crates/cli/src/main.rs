//! Command-line front end for the experiment runners.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dual_newton::experiments::{
    gen_dataset, gen_target, run_experiment, run_validation, ExperimentId, ExperimentReport, RunConfig,
    ValidationReport,
};
use dual_newton::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_OPTIMIZER: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "dual-newton", version, about = "Dual Riemannian Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its CSVs, summaries and plot script.
    Run(Box<RunArgs>),
    /// Run the property suites and report residuals.
    Validate {
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a random log-linear target and its exact moments.
    GenTarget {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        base_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a dataset from the reference Beta mixture.
    GenData {
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// exp1, exp2, exp3 or validate.
    #[arg(long)]
    experiment: Option<ExperimentId>,
    /// Connection parameter for Newton runs; repeatable.
    #[arg(long = "alpha", allow_negative_numbers = true)]
    alphas: Vec<f64>,
    /// Penalty on singleton parameters.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Penalty on pairwise parameters.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Number of binary variables.
    #[arg(long)]
    n: Option<usize>,
    /// Seed for the target, dataset and start.
    #[arg(long)]
    seed: Option<u64>,
    /// Stop when the l2 norm of G⁻¹∇f drops below this.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Start of the Gaussian study.
    #[arg(long, allow_negative_numbers = true)]
    mu0: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    adam_lr: Option<f64>,
    /// Quadrature nodes per axis for the Beta mixture.
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// Initial θ range for the log-linear study, as `LOW,HIGH`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    init_range: Option<(f64, f64)>,
    /// Strong Wolfe damping of the Newton step.
    #[arg(long)]
    damped: bool,
    /// Directory for CSVs, summaries and the plot script.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report breakdowns without failing.
    #[arg(long)]
    expect_failure: bool,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LOW,HIGH")?;
    let lo = lo.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = hi.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::defaults_for(self.experiment.unwrap_or(ExperimentId::Exp1)),
        };
        if let Some(id) = self.experiment {
            if id != cfg.experiment {
                let defaults = RunConfig::defaults_for(id);
                cfg.experiment = id;
                cfg.alphas = defaults.alphas;
                cfg.methods = defaults.methods;
                cfg.stop = defaults.stop;
            }
        }
        if !self.alphas.is_empty() {
            cfg.alphas.clone_from(&self.alphas);
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set! {
            lambda1 => cfg.lambda1,
            lambda2 => cfg.lambda2,
            n => cfg.n_vars,
            seed => cfg.seed,
            tol => cfg.stop.grad_tol,
            max_iters => cfg.stop.max_iters,
            mu0 => cfg.mu0,
            sigma0 => cfg.sigma0,
            adam_lr => cfg.adam.learning_rate,
            quad_nodes => cfg.quad_nodes,
            init_range => cfg.init_range,
        }
        cfg.damped |= self.damped;
        cfg.expect_failure |= self.expect_failure;
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn print_report(report: &ExperimentReport) {
    println!(
        "{} seed={} init={:.4?}",
        report.config.experiment, report.config.seed, report.init
    );
    println!(
        "{:<26} {:>16} {:>7} {:>12} {:>10} {:>7}",
        "run", "status", "iters", "grad_l2", "time_s", "order"
    );
    for v in &report.variants {
        let order = v.order.map_or_else(|| "-".to_string(), |o| format!("{o:.2}"));
        println!(
            "{:<26} {:>16} {:>7} {:>12.3e} {:>10.4} {:>7}",
            v.stem(),
            format!("{:?}", v.trace.status),
            v.trace.iterations(),
            v.trace.final_grad_l2(),
            v.trace.total_time(),
            order
        );
    }
}

fn print_validation(report: &ValidationReport) {
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:<52} residual={:.3e} tol={:e}",
            c.name, c.residual, c.tolerance
        );
    }
}

fn validate(out: Option<&Path>) -> ExitCode {
    let report = run_validation();
    print_validation(&report);
    if let Some(path) = out {
        if let Err(e) = write_or_print(Some(path), &report.to_json()) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn run(args: &RunArgs) -> ExitCode {
    let cfg = match args.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cfg.experiment == ExperimentId::Validate {
        return validate(cfg.out.as_deref().map(|d| d.join("validation.json")).as_deref());
    }
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        // Breakdowns live in the traces; these mean the problem or its start
        // is unusable.
        Err(
            e @ (Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::DomainViolation(_)
            | Error::DivergenceUndefined { .. }),
        ) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_OPTIMIZER);
        }
    };
    print_report(&report);
    if let Some(dir) = &cfg.out {
        if let Err(e) = report.write_artifacts(dir) {
            eprintln!("error: writing {}: {e}", dir.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    if report.has_failures() && !cfg.expect_failure {
        eprintln!("error: at least one run ended in a breakdown (rerun with --expect-failure to accept)");
        return ExitCode::from(EXIT_OPTIMIZER);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let generated = match cli.command {
        Command::Run(args) => return run(&args),
        Command::Validate { out } => return validate(out.as_deref()),
        Command::GenTarget {
            n,
            base_scale,
            seed,
            out,
        } => gen_target(n, base_scale, seed).map(|t| (t.to_json(), out)),
        Command::GenData { n, seed, out } => {
            let params = dual_newton::models::BetaMixtureParams::reference();
            gen_dataset(&params, n, seed).map(|d| (d.to_json(), out))
        }
    };
    match generated {
        Ok((text, out)) => match write_or_print(out.as_deref(), &text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
