use giantflux::graph_oracle::simulate_dynamic_graph;
use giantflux::harness::{
    experiment_weights, run, walk_replicates, ExperimentConfig, ExperimentKind,
};
use giantflux::theory::{x_cov, SupercriticalCurves, DEFAULT_MARGIN};
use giantflux::walk::sample_clocks;
use giantflux::weights::{sample_weight_vector, SampleMode, WeightModel, WeightVector};

fn two_point() -> WeightModel {
    WeightModel::discrete(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap()
}

#[test]
fn single_vertex_is_trivial_on_both_sides() {
    let model = WeightModel::empirical(vec![1.7]).unwrap();
    let w = WeightVector::explicit(vec![1.7]).unwrap();
    for seed in 0..20 {
        let walk = sample_clocks(&w, seed).longest_excursion(2.0).unwrap();
        assert_eq!((walk.vertex_count, walk.total_volume), (1, 1.7));
        let graph = simulate_dynamic_graph(&w, seed, 10)
            .unwrap()
            .giant_path(&[0.5, 2.0])
            .unwrap();
        assert!(graph.iter().all(|s| s.count == 1 && s.volume == 1.7));
    }
    // lambda_crit = 1/1.7^2.
    let cfg = ExperimentConfig::new(
        ExperimentKind::OracleCompare,
        model,
        1,
        vec![1.0, 2.0],
        50,
        3,
    );
    let report = run(&cfg).unwrap();
    assert!(report.all_pass());
    assert!(report.records.iter().all(|r| r.empirical == r.target));
}

#[test]
fn constant_weights_give_equal_size_and_volume() {
    let w = WeightVector::explicit(vec![1.0; 60]).unwrap();
    for seed in 0..50 {
        let graph = simulate_dynamic_graph(&w, seed, 100)
            .unwrap()
            .giant_path(&[2.0])
            .unwrap();
        assert_eq!(graph[0].count as f64, graph[0].volume);
    }
    let model = WeightModel::constant(1.0).unwrap();
    let cfg = ExperimentConfig::new(ExperimentKind::Fclt, model, 60, vec![2.0], 50, 9);
    for p in walk_replicates(&cfg, 60, 0).unwrap() {
        assert_eq!(p.results[0].vertex_count as f64, p.results[0].total_volume);
        // Both centerings solve the same fixed point; they agree to rounding.
        assert!((p.fluc_l[0] - p.fluc_v[0]).abs() < 1e-10);
    }
}

#[test]
fn quantile_empirical_model_matches_its_source_targets() {
    let n = 1000;
    let source = two_point();
    let w = sample_weight_vector(&source, n, SampleMode::Quantile, 0).unwrap();
    let empirical = WeightModel::empirical(w.weights().to_vec()).unwrap();
    let grid = [1.5, 2.5];
    let a = run(&ExperimentConfig::new(
        ExperimentKind::Fclt,
        source,
        n,
        grid.to_vec(),
        20,
        4,
    ))
    .unwrap();
    let b = run(&ExperimentConfig::new(
        ExperimentKind::Fclt,
        empirical,
        n,
        grid.to_vec(),
        20,
        4,
    ))
    .unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.stat, y.stat);
        assert!(
            (x.target - y.target).abs() <= 1e-6,
            "{}: {} vs {}",
            x.stat,
            x.target,
            y.target
        );
    }
}

#[test]
fn fclt_targets_come_from_theory() {
    let model = two_point();
    let grid = vec![1.5, 2.5];
    let mut cfg = ExperimentConfig::new(
        ExperimentKind::Fclt,
        model.clone(),
        3000,
        grid.clone(),
        30,
        1,
    );
    cfg.cross_pairs = vec![(0, 1)];
    let report = run(&cfg).unwrap();
    let cov =
        x_cov(&SupercriticalCurves::tabulate(&model, &grid, DEFAULT_MARGIN).unwrap()).unwrap();
    for (i, &l) in grid.iter().enumerate() {
        assert_eq!(report.find(l, "var_L").unwrap().target, cov.var_l(i));
        assert_eq!(report.find(l, "var_V").unwrap().target, cov.var_v(i));
        assert_eq!(report.find(l, "cov_LV").unwrap().target, cov.cov_lv(i));
        assert_eq!(report.find(l, "mean_L").unwrap().target, 0.0);
    }
    assert_eq!(
        report.find(1.5, "cov_L[lambda2=2.5]").unwrap().target,
        cov.cov(0, 0, 1, 0)
    );
    assert_eq!(
        report.find(1.5, "cov_V[lambda2=2.5]").unwrap().target,
        cov.cov(0, 1, 1, 1)
    );
    for r in &report.records {
        let pass = (r.empirical - r.target).abs() <= cfg.tolerance * r.se;
        assert_eq!(r.pass, Some(pass), "{}", r.stat);
    }
}

#[test]
fn convergence_study_has_one_row_per_size_and_lambda() {
    let model = WeightModel::constant(1.0).unwrap();
    let mut cfg = ExperimentConfig::new(
        ExperimentKind::ConvergenceStudy,
        model,
        100,
        vec![1.5, 2.0],
        10,
        2,
    );
    cfg.n = vec![100, 400, 1600];
    let report = run(&cfg).unwrap();
    assert_eq!(report.records.len(), 6);
    assert!(report.records.iter().all(|r| r.pass.is_none()));
    assert!(report.all_pass());

    // Different sizes use disjoint seed streams.
    let a = walk_replicates(&cfg, 100, 1).unwrap();
    let b = walk_replicates(&cfg, 100, 2).unwrap();
    assert_ne!(a[0].results, b[0].results);
}

#[test]
fn endpoint_report_shape() {
    let model = WeightModel::constant(1.0).unwrap();
    let cfg = ExperimentConfig::new(
        ExperimentKind::EndpointCheck,
        model,
        5000,
        vec![2.0, 3.0],
        40,
        8,
    );
    let report = run(&cfg).unwrap();
    for l in [2.0, 3.0] {
        assert_eq!(
            report.find(l, "endpoint_containment").unwrap().empirical,
            1.0
        );
        assert!(report.find(l, "mean_left_endpoint").unwrap().pass.is_none());
        assert!(report.find(l, "p95_left_endpoint_below").is_some());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let model = two_point();
    let base = ExperimentConfig::new(ExperimentKind::Fclt, model.clone(), 100, vec![2.0], 10, 0);
    let mut c = base.clone();
    c.replicates = 1;
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.lambdas = vec![0.3];
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.cross_pairs = vec![(0, 4)];
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.kind = ExperimentKind::OracleCompare;
    c.n = vec![5000];
    assert!(run(&c).is_err());
    assert!(base.validate().is_ok());
}

#[test]
fn reports_are_deterministic_and_weights_are_shared() {
    let cfg = ExperimentConfig::new(
        ExperimentKind::OracleCompare,
        two_point(),
        40,
        vec![2.0, 3.0],
        100,
        77,
    );
    assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    let w = experiment_weights(&cfg.model, 40, SampleMode::Quantile, 0).unwrap();
    assert_eq!(w.weights().iter().filter(|&&x| x == 1.0).count(), 20);
}
