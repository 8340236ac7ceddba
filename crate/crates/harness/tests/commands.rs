use std::f64::consts::LN_2;
use std::path::Path;
use std::process::Command as Process;

use setmatch::bounds::rkhs_deviation_bound;
use setmatch_harness::commands::{bounds, generate, sweep, train, validate};
use setmatch_harness::config::{ModelChoice, RunConfig};
use setmatch_harness::formats::{dataset_to_string, load_dataset, parse_dataset, ModelFile};
use setmatch_harness::HarnessError;

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn small_validate_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default().resolved(Some(seed));
    cfg.validate.trials = 12;
    cfg.validate.m = 40;
    cfg.validate.mc_factor = 5;
    cfg.train.steps = 30;
    cfg
}

#[test]
fn config_round_trips_and_rejects_unknown_fields() {
    let mut cfg = RunConfig::default().resolved(Some(17));
    cfg.kernel.gamma = Some(0.123456789012345);
    cfg.validate.model = ModelChoice::Random;
    let text = serde_json::to_string(&cfg).unwrap();
    let back: RunConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);

    let empty: RunConfig = serde_json::from_str("{}").unwrap();
    assert_eq!(empty, RunConfig::default());
    assert!(serde_json::from_str::<RunConfig>(r#"{"data": {"m": 10, "beta": 1}}"#).is_err());

    let partial: RunConfig = serde_json::from_str(r#"{"data": {"m": 10}}"#).unwrap();
    assert_eq!(partial.data.m, 10);
    assert_eq!(partial.data.alpha, 0.5);
}

#[test]
fn config_validation() {
    let cfg = RunConfig::default();
    assert!(cfg.validate().is_ok());
    let mut bad = cfg.clone();
    bad.data.alpha = 1.2;
    assert!(bad.validate().is_err());
    let mut bad = cfg.clone();
    bad.sweep.alphas = vec![];
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.bounds.delta = 1.0;
    assert!(bad.validate().is_err());
}

#[test]
fn generate_is_deterministic_and_reports_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default().resolved(Some(5));
    let ra = generate::run(&cfg, a.path()).unwrap();
    generate::run(&cfg, b.path()).unwrap();
    for name in ["dataset.txt", "run.json"] {
        assert_eq!(
            read(&a.path().join(name)),
            read(&b.path().join(name)),
            "{name}"
        );
    }
    assert_eq!((ra.m_pos, ra.m_neg), (50, 50));
    let loaded = load_dataset(&ra.path).unwrap();
    assert_eq!(loaded.meta["m_pos"], 50);
    assert_eq!(loaded.meta["m_neg"], 50);
    assert_eq!(loaded.dataset.m_pos(), 50);

    let c = tempfile::tempdir().unwrap();
    generate::run(&RunConfig::default().resolved(Some(6)), c.path()).unwrap();
    assert_ne!(
        read(&a.path().join("dataset.txt")),
        read(&c.path().join("dataset.txt"))
    );
}

#[test]
fn dataset_text_round_trip_and_errors() {
    let cfg = RunConfig::default().resolved(Some(3));
    let s = generate::build_dataset(&cfg).unwrap();
    let meta = serde_json::json!({"note": "test"});
    let text = dataset_to_string(&s, &meta);
    let (back, meta_back) = parse_dataset(Path::new("mem"), &text).unwrap();
    assert_eq!(back, s);
    assert_eq!(meta_back, meta);

    let broken = text.replacen("pair +1", "pair -1", 1);
    match parse_dataset(Path::new("mem"), &broken) {
        Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let truncated: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
    assert!(parse_dataset(Path::new("mem"), &truncated).is_err());
    assert!(parse_dataset(Path::new("mem"), "not a dataset\n").is_err());
}

#[test]
fn train_command() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default().resolved(Some(0));
    let g = generate::run(&cfg, dir.path()).unwrap();

    cfg.train.steps = 0;
    let zero = train::run(&cfg, &g.path, &dir.path().join("zero")).unwrap();
    let trace = std::fs::read_to_string(dir.path().join("zero/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    assert!((zero.final_risk - LN_2).abs() < 1e-12);

    cfg.train.steps = 200;
    let out = dir.path().join("full");
    let full = train::run(&cfg, &g.path, &out).unwrap();
    assert!(full.final_risk < LN_2);
    assert!(full.final_norm <= cfg.train.r + 1e-9);
    for w in full.trace[..11].windows(2) {
        assert!(
            w[1].empirical_risk <= w[0].empirical_risk,
            "risk rose on the default dataset"
        );
    }
    assert!(full.trace.iter().all(|r| r.norm <= cfg.train.r + 1e-9));

    let model = ModelFile::load(&out.join("model.txt")).unwrap();
    let data = load_dataset(&g.path).unwrap();
    let f = model.bind(&data).unwrap();
    let direct = setmatch::learner::train(
        &data.dataset,
        &setmatch::kernels::PairKernel::new(full.kernel.kernel).unwrap(),
        &cfg.train_config(),
    )
    .unwrap()
    .0;
    assert_eq!(f.coefficients(), direct.coefficients());

    let other = tempfile::tempdir().unwrap();
    let g2 = generate::run(&RunConfig::default().resolved(Some(1)), other.path()).unwrap();
    match model.bind(&load_dataset(&g2.path).unwrap()) {
        Err(HarnessError::DatasetHashMismatch { .. }) => {}
        other => panic!("expected a hash mismatch, got {other:?}"),
    }
}

#[test]
fn bounds_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default().resolved(Some(2));
    let g = generate::run(&cfg, dir.path()).unwrap();
    train::run(&cfg, &g.path, dir.path()).unwrap();
    let b = bounds::run(&cfg, &dir.path().join("model.txt"), &g.path, dir.path()).unwrap();

    for report in [&b.margin.expected, &b.margin.empirical] {
        assert!((report.reassemble() - report.bound_value).abs() <= 1e-12);
    }
    assert!(b.margin.empirical.bound_value >= 0.0);
    assert!(b.margin.empirical.bound_value >= b.margin.expected.bound_value);
    let dev = &b.reports["remark2_deviation"];
    assert!(
        (dev["component.scale"] * dev["component.confidence"] - dev["bound_value"]).abs() <= 1e-12
    );
    let expect = rkhs_deviation_bound(100, 0.5, 0.05, 1.0, std::f64::consts::SQRT_2, 1.0)
        .unwrap()
        .bound_value;
    assert_eq!(dev["bound_value"], expect);
    assert_eq!(dev["input.kappa"], std::f64::consts::SQRT_2);

    let json: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("bounds.json"))).unwrap();
    assert_eq!(json["inputs"][0]["name"], "dataset.txt");
    assert_eq!(json["config"]["seed"], 2);
}

#[test]
fn sweep_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let r = sweep::run(&cfg, dir.path()).unwrap();
    assert_eq!(r.rows.len(), 20 * 19);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("m,alpha,bound"));
    assert_eq!(csv.lines().count(), 381);
    let grid: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("sweep_grid.json"))).unwrap();
    assert_eq!(grid["grid_source"], "default");
    assert_eq!(grid["m"].as_array().unwrap().len(), 20);
    assert_eq!(r.summary.first().unwrap().m, 10);
    assert_eq!(r.summary.last().unwrap().m, 10_000);
    for row in &r.summary {
        assert!((row.argmin_alpha - 0.5).abs() <= 0.05 + 1e-12);
    }
    for &alpha in &cfg.sweep.alphas {
        let slice: Vec<f64> = r
            .rows
            .iter()
            .filter(|x| x.alpha == alpha)
            .map(|x| x.bound)
            .collect();
        assert_eq!(slice.len(), 20);
        assert!(slice.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn validate_is_deterministic_across_thread_counts() {
    let cfg = small_validate_config(9);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = validate::run_validate(&cfg, a.path(), Some(1)).unwrap();
    validate::run_validate(&cfg, b.path(), Some(3)).unwrap();
    for name in ["validate_trials.csv", "validate_summary.json", "run.json"] {
        assert_eq!(
            read(&a.path().join(name)),
            read(&b.path().join(name)),
            "{name}"
        );
    }
    assert_eq!(ra.trials.len(), 12);
    for t in &ra.trials {
        assert_eq!(t.covered, t.gap <= t.epsilon);
        assert_eq!(t.covered_with_slack, t.gap <= t.epsilon + t.slack);
        assert!((t.slack - 3.0 * t.mc_std_error).abs() <= 1e-15);
    }
    assert!(ra.summary.coverage.passed);
}

#[test]
fn validate_epsilon_depends_on_ratio() {
    let mut cfg = small_validate_config(10);
    cfg.validate.trials = 3;
    cfg.validate.model = ModelChoice::Random;
    let dir = tempfile::tempdir().unwrap();
    let half = validate::run_validate(&cfg, dir.path(), None).unwrap();
    cfg.validate.alpha = 0.2;
    let skewed = validate::run_validate(&cfg, dir.path(), None).unwrap();
    assert!(half.trials[0].epsilon < skewed.trials[0].epsilon);
    assert!(half.summary.fixed_model_risk.is_some());
    // the random model is shared, so every trial sees the same expected risk
    assert!(half
        .trials
        .iter()
        .all(|t| t.mc_risk == half.trials[0].mc_risk));
}

#[test]
fn margin_validate_components() {
    let mut cfg = RunConfig::default().resolved(Some(11));
    cfg.margin_validate.trials = 8;
    cfg.margin_validate.m_pos = 20;
    cfg.margin_validate.m_neg = 20;
    cfg.margin_validate.n_sigma = 200;
    cfg.margin_validate.mc_factor = 5;
    cfg.train.steps = 30;
    let dir = tempfile::tempdir().unwrap();
    let r = validate::run_margin_validate(&cfg, dir.path(), None).unwrap();
    for t in &r.trials {
        assert!(
            (t.empirical_margin_risk + t.complexity + t.confidence_empirical - t.bound_empirical)
                .abs()
                <= 1e-12
        );
        if t.covered {
            assert!(t.bound_empirical >= t.gap);
        }
    }
    assert!(r.summary.coverage.passed);

    let low = validate::margin_trial_with_rho(&cfg, 0, 0.1).unwrap();
    let high = validate::margin_trial_with_rho(&cfg, 0, 10.0).unwrap();
    assert!(high.empirical_margin_risk > low.empirical_margin_risk);
    assert!(high.complexity < low.complexity);
    assert_eq!(low.mc_ranking_error, high.mc_ranking_error);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_setmatch");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(&cfg_path, r#"{"data": {"alpha": 1.2}}"#).unwrap();
    let out = Process::new(exe)
        .args(["generate", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("alpha"), "stderr: {stderr}");

    let ok = Process::new(exe)
        .args(["sweep", "--seed", "4", "--out"])
        .arg(dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(dir.path().join("sweep.csv").exists());

    let missing = Process::new(exe)
        .args(["train", "--dataset"])
        .arg(dir.path().join("nope.txt"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
