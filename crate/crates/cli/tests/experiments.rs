use infosel_cli::config::{ExperimentConfig, ExperimentId, SweepGrid};
use infosel_cli::experiment::run_experiment;
use infosel_cli::report::report_tables;
use infosel::selection::Criterion;

#[test]
fn spheres_report_has_pid_and_confusion() {
    let mut cfg = ExperimentConfig::new(ExperimentId::Spheres);
    cfg.n_runs = 2;
    cfg.n_samples = Some(300);
    let report = run_experiment(&cfg, Some(2)).unwrap();
    assert!(!report.partial);
    assert_eq!(report.criteria.len(), 2);
    assert_eq!(report.pid.len(), 3);
    for p in &report.pid {
        assert!(p.shd.mean >= -1e-6 && p.syn.mean >= -1e-6);
    }
    let names: Vec<String> = report_tables(&report).unwrap().into_iter().map(|t| t.name).collect();
    for t in ["runs", "confusion", "frequency", "thresholds", "selections", "pid"] {
        assert!(names.contains(&t.to_string()), "{t}");
    }
}

#[test]
fn statmodels_grid_has_one_row_per_point() {
    let mut cfg = ExperimentConfig::new(ExperimentId::Statmodels);
    cfg.n_runs = 2;
    cfg.n_samples = Some(200);
    cfg.sweep = SweepGrid { values: Some(vec![0.0, 0.5]), sigmas: Some(vec![0.1, 0.5]), ..Default::default() };
    let report = run_experiment(&cfg, None).unwrap();
    assert_eq!(report.sweep.len(), 2 * 2 * 2);
    let t = report_tables(&report).unwrap().into_iter().find(|t| t.name == "sweep").unwrap();
    assert_eq!(t.rows.len(), 8);
}

#[test]
fn gaussian_example_three_is_redundant() {
    let mut cfg = ExperimentConfig::new(ExperimentId::Gaussian(3));
    cfg.n_runs = 2;
    cfg.n_samples = Some(400);
    cfg.criteria = Some(vec![Criterion::Cmi]);
    let report = run_experiment(&cfg, None).unwrap();
    assert!((report.correlation.unwrap().mean - 1.0).abs() < 1e-9);
    for p in &report.pid {
        assert!(p.syn.mean < 1e-3 && p.unq_feature.mean < 1e-3);
    }
}

#[test]
fn aggregation_does_not_depend_on_thread_count() {
    let mut cfg = ExperimentConfig::new(ExperimentId::Toy);
    cfg.n_runs = 3;
    cfg.n_samples = Some(200);
    cfg.selection = Some(infosel::selection::SelectionConfig { n_perm: 39, ..Default::default() });
    let a = run_experiment(&cfg, Some(1)).unwrap();
    let b = run_experiment(&cfg, Some(3)).unwrap();
    assert_eq!(a, b);
}
