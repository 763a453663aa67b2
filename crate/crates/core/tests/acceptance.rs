//! Acceptance gate: the full verification battery on the shipped benchmark,
//! one pass/fail line per criterion.
//!
//! Every tolerance is pinned inside the battery itself (see
//! `kfasym_core::verify`); this test only asserts the verdicts and keeps the
//! printed table readable under `--nocapture`.

use std::path::PathBuf;

use kfasym_core::scenario::Scenario;
use kfasym_core::verify::run_verify;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

#[test]
fn heat_bump_benchmark_passes_all_criteria() {
    let sc = Scenario::from_path(&scenario_path("heat_bump.json")).expect("benchmark parses");
    let out = std::env::temp_dir().join("kfasym-acceptance-heat-bump");
    let _ = std::fs::remove_dir_all(&out);
    let report = run_verify(&sc, Some(&out)).expect("battery runs");

    for c in &report.criteria {
        c.print_line();
    }
    println!(
        "schema validation: {}",
        if report.schema_ok { "PASS" } else { "FAIL" }
    );

    assert_eq!(report.criteria.len(), 11);
    for c in &report.criteria {
        assert!(c.pass, "criterion {} ({}) failed: {}", c.id, c.name, c.detail);
    }
    assert!(report.schema_ok, "emitted artifacts failed schema validation");
    assert!(report.all_pass);
    assert!(out.join("report.json").exists());
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn drift_benchmark_moving_shock_is_consistent() {
    let sc =
        Scenario::from_path(&scenario_path("heat_bump_drift.json")).expect("benchmark parses");
    let fwd = kfasym_core::pipeline::run_forward(&sc).expect("forward runs");
    let t_star = fwd.caustic.expect("caustic expected");
    assert!((t_star - 0.5).abs() <= 2e-3);

    // the symmetric bump translated by constant drift: shock speed equals the
    // drift coefficient, uniformly after birth
    let b = 0.25;
    for rec in &fwd.shock_records {
        if rec.t >= t_star + 0.05 {
            assert!(
                (rec.shock.speed - b).abs() <= 1e-6,
                "RH speed {} at t={}",
                rec.shock.speed,
                rec.t
            );
        }
    }
    // the translated picture puts the shock exactly at x_s = b·t
    let last = fwd.shock_records.last().unwrap();
    let expected = b * last.t;
    assert!(
        (last.shock.x - expected).abs() <= 1e-8,
        "shock at {} vs translated position {expected}",
        last.shock.x
    );
    // equal-area locator agrees with the min-branch switch on the final curve
    let snap = fwd.snapshots.last().unwrap();
    let x_ea = snap.equal_area.expect("three-valued region at t_final");
    assert_eq!(snap.value.shocks.len(), 1);
    assert!((x_ea - snap.value.shocks[0].x).abs() <= 1e-6);
}

#[test]
fn tampered_time_step_fails_the_order_criterion() {
    // negative control: a too-coarse dt trips the guarded integrator's
    // subdivision, flattening the measured convergence order
    let mut sc = Scenario::from_path(&scenario_path("heat_bump.json")).expect("benchmark parses");
    sc.run.dt = 0.05;
    sc.run.snapshot_times = vec![0.0, 1.0];
    let report = run_verify(&sc, None).expect("battery still runs");
    let c11 = report
        .criteria
        .iter()
        .find(|c| c.id == 11)
        .expect("order criterion present");
    assert!(
        !c11.pass,
        "order criterion unexpectedly passed with dt = 0.05: {}",
        c11.detail
    );
    let order = c11.measured["order"].as_f64().expect("measured order reported");
    assert!(order < 3.5, "measured order {order} should collapse");
    assert!(!report.all_pass);
}
