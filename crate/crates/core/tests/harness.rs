//! Scenario runner, comparison, sweep and file output.

use std::fs;
use std::path::Path;

use stefan_core::harness::output::{DIAGNOSTICS_HEADER, EVENTS_HEADER, SERIES_HEADER};
use stefan_core::harness::{
    compare_scenarios, emit_outputs, render_table, run_scenario, sweep, ComparisonRow, ScenarioConfig, ScenarioKind,
};
use stefan_core::{Error, Execution};

fn short(kind: ScenarioKind, horizon: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default().with_kind(kind, Some(300.0), "short");
    cfg.scheme.horizon = horizon;
    cfg
}

#[test]
fn identical_configs_give_identical_runs() {
    let cfg = short(ScenarioKind::EventTriggered, 1500.0);
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.events, b.events);
    assert_eq!(a.summary, b.summary);
    let seq = stefan_core::harness::run_scenario_with(&cfg, Execution::Sequential).unwrap();
    assert_eq!(seq.rows, a.rows);
}

#[test]
fn outputs_are_byte_stable() {
    let cfg = short(ScenarioKind::EventTriggered, 600.0);
    let res = run_scenario(&cfg).unwrap();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let f1 = emit_outputs(&res, d1.path(), true).unwrap();
    let again = run_scenario(&cfg).unwrap();
    let f2 = emit_outputs(&again, d2.path(), true).unwrap();
    assert_eq!(f1.len(), 7);
    for (a, b) in f1.iter().zip(&f2) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn series_columns_follow_documented_order() {
    let res = run_scenario(&short(ScenarioKind::SampledData, 600.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&res, dir.path(), false).unwrap();
    assert_eq!(first_line(&dir.path().join("series.csv")), SERIES_HEADER.join(","));
    assert_eq!(first_line(&dir.path().join("diagnostics.csv")), DIAGNOSTICS_HEADER.join(","));
    assert_eq!(first_line(&dir.path().join("events.csv")), EVENTS_HEADER.join(","));
    let mut rdr = csv::Reader::from_path(dir.path().join("events.csv")).unwrap();
    let times: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(times, vec![0.0, 300.0, 600.0]);
    let mut rdr = csv::Reader::from_path(dir.path().join("series.csv")).unwrap();
    assert_eq!(rdr.records().count(), res.rows.len());
    assert!(!dir.path().join("plot.py").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["update_count"], 3);
}

#[test]
fn empty_result_writes_headers_only() {
    let mut res = run_scenario(&short(ScenarioKind::EventTriggered, 0.0)).unwrap();
    res.rows.clear();
    res.events.clear();
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&res, dir.path(), false).unwrap();
    for (name, header) in [
        ("series.csv", SERIES_HEADER.join(",")),
        ("diagnostics.csv", DIAGNOSTICS_HEADER.join(",")),
        ("events.csv", EVENTS_HEADER.join(",")),
    ] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text, format!("{header}\r\n"), "{name}");
    }
}

#[test]
fn unwritable_directory_reports_path() {
    let res = run_scenario(&short(ScenarioKind::EventTriggered, 0.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    match emit_outputs(&res, &blocker.join("sub"), false).unwrap_err() {
        Error::Io { path, .. } => assert!(path.starts_with(&blocker)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn config_file_round_trip() {
    let mut cfg = ScenarioConfig::default().with_kind(ScenarioKind::SampledData, Some(3000.0), "rt");
    cfg.controller.gain = 2.5e-4;
    cfg.initial.estimate = stefan_core::params::InitialProfile::Samples {
        values: vec![10.0, 5.0, 0.0],
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    let back = ScenarioConfig::load(&path).unwrap();
    assert_eq!(back, cfg);
    let missing = ScenarioConfig::load(&dir.path().join("nope.toml")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));
}

#[test]
fn strict_dt_guard_names_tau() {
    let mut cfg = short(ScenarioKind::EventTriggered, 10.0);
    cfg.scheme.dt_guard_ratio = 0.2;
    let err = run_scenario(&cfg).unwrap_err().to_string();
    assert!(err.contains("τ") && err.contains("0.131"), "{err}");
    // baselines are not guarded
    cfg.scenario.kind = ScenarioKind::Continuous;
    assert!(run_scenario(&cfg).is_ok());
}

#[test]
fn rejected_initial_data_unless_unsafe() {
    let mut cfg = short(ScenarioKind::EventTriggered, 50.0);
    cfg.controller.setpoint = 0.1 + 1e-3;
    assert!(matches!(run_scenario(&cfg).unwrap_err(), Error::Rejected(_)));
    cfg.scenario.allow_unsafe = true;
    assert!(run_scenario(&cfg).is_ok());
}

#[test]
fn run_level_spot_checks_hold() {
    let res = run_scenario(&short(ScenarioKind::EventTriggered, 4000.0)).unwrap();
    let c = &res.summary.checks;
    assert!(res.summary.completed);
    assert!(c.growth_ratio_max <= 1.0, "ḋ² bound ratio {}", c.growth_ratio_max);
    assert!(c.hold_bound_excess < 1e-4, "hold floor excess {}", c.hold_bound_excess);
    assert!(c.identity_max_rel <= 1e-10);
    assert_eq!(c.threshold_violations, 0);
    // one-step overshoot at crossings stays close to the threshold
    assert!(c.max_overshoot < 1.5, "{}", c.max_overshoot);
    assert!(res.events.iter().all(|e| e.q_j > 0.0));
    // rows and events line up with the summary
    assert_eq!(res.summary.update_count, res.events.len());
    assert_eq!(res.rows.last().unwrap().step, res.summary.steps);
}

#[test]
fn comparison_rejects_mismatched_initial_data() {
    let a = short(ScenarioKind::EventTriggered, 10.0);
    let mut b = a.with_kind(ScenarioKind::Continuous, None, "b");
    b.initial.s0 = 0.2;
    match compare_scenarios(&[a, b], Execution::Sequential).unwrap_err() {
        Error::Config { field, .. } => assert_eq!(field, "initial"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn comparison_table_has_one_row_per_scenario() {
    let base = short(ScenarioKind::EventTriggered, 1200.0);
    let configs = vec![
        base.with_kind(ScenarioKind::EventTriggered, None, "et"),
        base.with_kind(ScenarioKind::SampledData, Some(600.0), "sd"),
        base.with_kind(ScenarioKind::Continuous, None, "ct"),
    ];
    let results = compare_scenarios(&configs, Execution::default()).unwrap();
    let rows: Vec<_> = results.iter().map(ComparisonRow::from_result).collect();
    assert_eq!(rows[1].updates, 3);
    assert_eq!(rows[2].updates, 2401);
    assert!(rows[0].updates < rows[2].updates);
    let table = render_table(&rows);
    assert_eq!(table.lines().count(), 4);
    // determinism across execution modes
    let again = compare_scenarios(&configs, Execution::Sequential).unwrap();
    assert_eq!(again.iter().map(ComparisonRow::from_result).collect::<Vec<_>>(), rows);
}

#[test]
fn sweep_keeps_failures_in_their_slot() {
    let base = short(ScenarioKind::EventTriggered, 200.0);
    let out = sweep(&base, "controller.setpoint", &[2.0, 0.1], Execution::default()).unwrap();
    assert_eq!(out.len(), 2);
    assert!(out[0].1.is_ok());
    assert!(matches!(out[1].1, Err(Error::Rejected(_))));
    assert_eq!(out[1].0.scenario.name, "short-controller_setpoint-0.1");
    assert!(sweep(&base, "controller.missing", &[1.0], Execution::default()).is_err());
}
