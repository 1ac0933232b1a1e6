mod common;

use common::Fixture;
use vfc_core::engine::{check_constraints, Constraint};
use vfc_core::policy::SlotPlan;
use vfc_core::types::Destination;
use vfc_core::{run, run_detailed, Policy, RunOptions, ScenarioConfig};

#[test]
fn zero_slots_give_empty_metrics() {
    let cfg = ScenarioConfig {
        horizon_slots: 0,
        ..ScenarioConfig::default()
    };
    for p in Policy::ALL {
        let m = run(&cfg, p).unwrap();
        assert_eq!(m.slots, 0);
        assert!(m.series.is_empty());
        assert_eq!(m.avg_delay_s, 0.0);
        assert_eq!(m.completion_ratio, 0.0);
        assert_eq!(m.throughput_bps, 0.0);
        assert_eq!(m.violations, 0);
    }
}

#[test]
fn all_local_single_tv_averages_local_delays() {
    let cfg = ScenarioConfig {
        n_tvs: 1,
        horizon_slots: 12,
        ..ScenarioConfig::default()
    };
    let sc = vfc_core::scenario::generate_scenario(&cfg).unwrap();
    let f = sc.tvs[0].f_hz;
    let want = sc.tasks.iter().map(|s| s[0].cycles / f).sum::<f64>() / 12.0;
    let m = run(&cfg, Policy::Alo).unwrap();
    assert!((m.avg_delay_s - want).abs() <= 1e-12 * want);
    // one TV is always perfectly fair with itself
    assert_eq!(m.jain_fairness, 1.0);
}

#[test]
fn jcratoa_default_run_is_clean() {
    let out = run_detailed(
        &ScenarioConfig::default(),
        Policy::Jcratoa,
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(out.violations().count(), 0);
    assert_eq!(out.metrics.blocking_pairs, 0);
    assert_eq!(out.slots.len(), 40);
}

#[test]
fn metrics_are_reproducible() {
    let cfg = ScenarioConfig {
        rng_seed: 11,
        ..ScenarioConfig::default()
    };
    for p in Policy::ALL {
        let a = serde_json::to_string(&run(&cfg, p).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&cfg, p).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn metric_ranges_hold() {
    for p in Policy::ALL {
        let m = run(&ScenarioConfig::default(), p).unwrap();
        assert!((0.0..=1.0).contains(&m.completion_ratio));
        assert!(m.jain_fairness >= 1.0 / 20.0 - 1e-12 && m.jain_fairness <= 1.0 + 1e-12);
        for s in &m.series {
            assert!((0.0..=1.0).contains(&s.completion_ratio));
        }
    }
}

#[test]
fn shared_fv_serves_tasks_one_after_another() {
    let fx = Fixture::new(ScenarioConfig::default(), &[1000.0, 1010.0], &[1005.0]);
    let ctx = fx.ctx(0);
    let f = 2e9;
    let plan = SlotPlan {
        destinations: vec![Destination::Fv(0); 2],
        alloc_hz: vec![f, f],
        ..SlotPlan::default()
    };
    let out = check_constraints(&ctx, &plan);
    let alone: Vec<f64> = (0..2).map(|n| ctx.fv_delay_s(n, 0, f).unwrap()).collect();
    let compute: Vec<f64> = ctx.tvs.iter().map(|t| t.task.cycles / f).collect();
    let upload: Vec<f64> = (0..2).map(|n| alone[n] - compute[n]).collect();
    let (first, second) = if upload[0] <= upload[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    assert!((out.tvs[first].delay_s - alone[first]).abs() <= 1e-12);
    let want = alone[first].max(upload[second]) + compute[second];
    assert!((out.tvs[second].delay_s - want).abs() <= 1e-12 * want);
    assert!(out
        .violations
        .iter()
        .any(|v| v.constraint == Constraint::FvCapacity));
    assert!(out.tvs.iter().all(|t| !t.success));
}

#[test]
fn overbooked_rsu_fails_its_tasks() {
    let fx = Fixture::new(ScenarioConfig::default(), &[500.0, 510.0], &[]);
    let ctx = fx.ctx(0);
    let f = fx.cfg.compute.rsu_hz;
    let plan = SlotPlan {
        destinations: vec![Destination::Rsu(0); 2],
        alloc_hz: vec![f, f],
        ..SlotPlan::default()
    };
    let out = check_constraints(&ctx, &plan);
    assert!(out
        .violations
        .iter()
        .any(|v| v.constraint == Constraint::RsuCapacity));
    assert!(out.tvs.iter().all(|t| !t.success));
}

#[test]
fn bad_destination_is_a_one_hot_violation() {
    let fx = Fixture::new(ScenarioConfig::default(), &[500.0], &[]);
    let ctx = fx.ctx(0);
    let plan = SlotPlan {
        destinations: vec![Destination::Fv(3)],
        alloc_hz: vec![1e9],
        ..SlotPlan::default()
    };
    let out = check_constraints(&ctx, &plan);
    assert_eq!(out.violations[0].constraint, Constraint::OneHot);
    assert_eq!(out.tvs[0].destination, Destination::Local);
    assert!(!out.tvs[0].success);
}

#[test]
fn empty_slot_is_clean() {
    let fx = Fixture::new(ScenarioConfig::default(), &[], &[]);
    let ctx = fx.ctx(0);
    let out = check_constraints(&ctx, &SlotPlan::default());
    assert!(out.violations.is_empty());
    assert!(out.tvs.is_empty());
}
