use ltvid::bench::*;
use ltvid::dynamics::ScenarioKind;
use ltvid::ident::Method;

fn small_config() -> BenchConfig {
    BenchConfig {
        scenarios: vec![ScenarioKind::Ltv, ScenarioKind::InstReconfig],
        ..BenchConfig::new(11)
    }
}

#[test]
fn table_one_has_a_row_per_scenario_and_method() {
    let cfg = small_config();
    let report = run_prediction_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2 * PREDICTION_METHODS.len());
    for kind in &cfg.scenarios {
        for m in PREDICTION_METHODS {
            let row = report.get(*kind, m).unwrap();
            assert!(row.error.is_none(), "{kind} {m}: {:?}", row.error);
            assert!(row.mean.is_finite() && row.std >= 0.0);
            assert_eq!(row.lambda.is_some(), m.is_regularized());
        }
    }
}

#[test]
fn ecdf_series_are_sorted_and_end_at_one() {
    let cfg = small_config();
    let out = run_suite(&cfg, Suite::Ecdf).unwrap();
    assert_eq!(out.ecdf.len(), 2);
    assert!(out.prediction.is_none() && out.tracking.is_none());
    for e in &out.ecdf {
        assert!(!e.series.is_empty());
        for (_, s) in &e.series {
            assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.fractions.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(*s.fractions.last().unwrap(), 1.0);
        }
    }
}

#[test]
fn sweep_variation_falls_with_lambda() {
    let cfg = small_config();
    let rows = lambda_sweep(&cfg, ScenarioKind::Ltv, &[1e-3, 1e-1, 10.0, 1e3]).unwrap();
    assert!(rows.iter().all(|r| r.error.is_none()));
    assert!(rows.windows(2).all(|w| w[1].variation <= w[0].variation));
    assert!(rows.windows(2).all(|w| w[1].fidelity >= w[0].fidelity * (1.0 - 1e-9)));
}

#[test]
fn tracking_uses_common_runs() {
    let cfg = BenchConfig {
        scenarios: vec![ScenarioKind::Ltv],
        ..BenchConfig::new(3)
    };
    let report = run_control_benchmark(&cfg).unwrap();
    assert_eq!(report.rows.len(), 3);
    for r in &report.rows {
        assert_eq!(r.runs, cfg.initial_conditions.len());
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert!(r.rmse > 0.0 && r.rmse < r.mean);
    }
}

#[test]
fn report_manifest_reproduces_the_run() {
    let cfg = small_config();
    let tmp = tempfile::tempdir().unwrap();
    let out = run_suite(&cfg, Suite::Prediction).unwrap();
    emit_report(&out, &cfg, Suite::Prediction, tmp.path()).unwrap();
    let manifest = BenchManifest::load(tmp.path().join("manifest.toml")).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.suite, Suite::Prediction);
    assert_eq!(manifest.files, vec!["table1.csv".to_string()]);
    let table = std::fs::read_to_string(tmp.path().join("table1.csv")).unwrap();
    assert!(table.starts_with("scenario,method,mean,std,lambda,trajectories,error\n"));
    assert!(table.contains(&format!("ltv,{},", Method::Cosmic)));
}

#[test]
fn suite_names() {
    for s in ["prediction", "control", "ecdf", "lambda", "all"] {
        assert_eq!(s.parse::<Suite>().unwrap().name(), s);
    }
    assert!("tables".parse::<Suite>().is_err());
}

#[test]
fn heavy_smoothing_tracks_like_the_time_invariant_controller() {
    let cfg = BenchConfig {
        scenarios: vec![ScenarioKind::Ltv],
        ..BenchConfig::new(5)
    };
    let ti = run_control_benchmark(&cfg)
        .unwrap()
        .get(ScenarioKind::Ltv, Controller::TimeInvariant)
        .unwrap()
        .rmse;
    let rows = lambda_sweep(&cfg, ScenarioKind::Ltv, &[1e6]).unwrap();
    let rel = (rows[0].tracking_rmse - ti).abs() / ti;
    assert!(rel <= 0.05, "{} vs {ti}", rows[0].tracking_rmse);
}
