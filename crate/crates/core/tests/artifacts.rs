//! Properties of the files written by an experiment run.

use std::fs;
use std::path::Path;

use dual_newton::experiments::{run_experiment, ExperimentId, RunConfig};

fn small_exp1() -> RunConfig {
    let mut cfg = RunConfig::defaults_for(ExperimentId::Exp1);
    cfg.n_vars = 3;
    cfg.seed = 11;
    cfg
}

fn write_run(cfg: &RunConfig, dir: &Path) {
    run_experiment(cfg).unwrap().write_artifacts(dir).unwrap();
}

/// CSV text with the trailing `time_s` column removed.
fn without_time(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn csv_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn reruns_give_identical_csvs_apart_from_time() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small_exp1();
    write_run(&cfg, a.path());
    write_run(&cfg, b.path());
    let names = csv_names(a.path());
    assert_eq!(names, csv_names(b.path()));
    assert_eq!(names.len(), 5 + 3);
    for name in &names {
        let x = fs::read_to_string(a.path().join(name)).unwrap();
        let y = fs::read_to_string(b.path().join(name)).unwrap();
        assert!(x.starts_with("iter,f,grad_l2,grad_gnorm,step_norm,spd,time_s"));
        assert_eq!(without_time(&x), without_time(&y), "{name}");
    }
}

#[test]
fn summary_iterations_match_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::defaults_for(ExperimentId::Exp2);
    cfg.alphas = vec![-0.2, 0.2];
    write_run(&cfg, dir.path());
    for name in csv_names(dir.path()) {
        let stem = name.trim_end_matches(".csv");
        let rows = fs::read_to_string(dir.path().join(&name)).unwrap().lines().count() - 1;
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("{stem}.summary.json"))).unwrap())
                .unwrap();
        assert_eq!(summary["iterations"].as_u64(), Some(rows as u64), "{stem}");
        assert!(summary["total_time_s"].as_f64().unwrap() >= 0.0);
        assert!(summary["timing"]["clock"].is_string());
    }
}

#[test]
fn plot_script_reads_only_emitted_csvs() {
    let dir = tempfile::tempdir().unwrap();
    write_run(&small_exp1(), dir.path());
    let script = fs::read_to_string(dir.path().join("plot_grad_norm.py")).unwrap();
    let mut referenced: Vec<String> = script
        .split('"')
        .filter(|s| s.ends_with(".csv"))
        .map(str::to_string)
        .collect();
    referenced.sort();
    assert_eq!(referenced, csv_names(dir.path()));
    // Paths resolve against the script's own directory, nothing absolute.
    assert!(!script.contains(&*dir.path().to_string_lossy()));
    assert_eq!(script.matches("open(").count(), 1);
    for other in [".json", "http", "sys.argv"] {
        assert!(!script.contains(other), "{other}");
    }
}

#[test]
fn config_records_the_resolved_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_exp1();
    write_run(&cfg, dir.path());
    let saved = RunConfig::from_json(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    let init = saved.init.clone().expect("init recorded");
    assert_eq!(init.len(), 6);
    assert!(init.iter().all(|x| (-0.25..0.2).contains(x)));
    // Replaying the saved config reproduces the traces.
    let again = run_experiment(&saved).unwrap();
    let first = run_experiment(&cfg).unwrap();
    for (x, y) in first.variants.iter().zip(&again.variants) {
        assert_eq!(x.trace.iterates, y.trace.iterates, "{}", x.stem());
    }
}
