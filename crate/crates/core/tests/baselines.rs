mod common;

use common::Fixture;
use vfc_core::baselines::{broldra, forwarded_delay_s, kmmto, kmmto_unit_hz, nfo, nro, nso};
use vfc_core::engine::check_constraints;
use vfc_core::policy::plan_slot;
use vfc_core::types::Destination;
use vfc_core::{Policy, ScenarioConfig};

fn cfg() -> ScenarioConfig {
    ScenarioConfig::default()
}

#[test]
fn nro_picks_the_nearest_rsu() {
    let fx = Fixture::new(cfg(), &[400.0, 1000.0, 2900.0], &[]);
    let plan = nro(&fx.ctx(0));
    // RSUs sit at 500, 1500, 2500; 1000 is equidistant from the first two
    let rsus: Vec<Destination> = plan.destinations.clone();
    assert_eq!(rsus[0], Destination::Rsu(0));
    assert_eq!(rsus[1], Destination::Rsu(0));
    assert_eq!(rsus[2], Destination::Rsu(2));
}

#[test]
fn nro_splits_one_rsu_between_its_tvs() {
    let fx = Fixture::new(cfg(), &[480.0, 500.0, 520.0], &[]);
    let ctx = fx.ctx(0);
    let plan = nro(&ctx);
    let granted = ctx.solve_rsu(0, &[0, 1, 2]);
    for n in 0..3 {
        assert_eq!(plan.destinations[n], Destination::Rsu(0));
        assert_eq!(Some(plan.alloc_hz[n]), granted[n]);
    }
    let total: f64 = plan.alloc_hz.iter().sum();
    assert!(total <= fx.cfg.compute.rsu_hz * (1.0 + 1e-12));
}

#[test]
fn nfo_without_fvs_in_range_runs_locally() {
    let fx = Fixture::new(cfg(), &[100.0], &[1500.0]);
    let plan = nfo(&fx.ctx(0));
    assert_eq!(plan.destinations, vec![Destination::Local]);
    assert_eq!(plan.alloc_hz[0], fx.scenario.tvs[0].f_hz);
}

#[test]
fn nfo_prefers_the_nearer_fv() {
    let fx = Fixture::new(cfg(), &[1000.0], &[1150.0, 1050.0]);
    let ctx = fx.ctx(0);
    let plan = nfo(&ctx);
    let expected = [1usize, 0]
        .into_iter()
        .find(|&m| ctx.fv_alloc_hz(0, m) > 0.0)
        .map_or(Destination::Local, Destination::Fv);
    assert_eq!(plan.destinations[0], expected);
}

#[test]
fn nso_without_fv_goes_to_the_rsu() {
    let fx = Fixture::new(cfg(), &[1400.0], &[]);
    let plan = nso(&fx.ctx(0));
    assert_eq!(plan.destinations, vec![Destination::Rsu(1)]);
}

#[test]
fn nso_takes_the_faster_branch() {
    for seed in 0..10 {
        let fx = Fixture::new(
            ScenarioConfig {
                rng_seed: seed,
                ..cfg()
            },
            &[1000.0],
            &[1020.0],
        );
        let ctx = fx.ctx(0);
        let plan = nso(&ctx);
        // a lone TV gets its RSU's whole share
        let rsu = ctx.rsu_delay_s(0, 0, fx.cfg.compute.rsu_hz).unwrap();
        let fv = ctx.fv_delay_s(0, 0, ctx.fv_alloc_hz(0, 0));
        let want = match fv {
            Some(d) if d < rsu => Destination::Fv(0),
            _ => Destination::Rsu(0),
        };
        assert_eq!(plan.destinations[0], want, "seed {seed}");
    }
}

#[test]
fn kmmto_respects_unit_slots_and_fv_capacity() {
    let xs: Vec<f64> = (0..12).map(|i| 100.0 + 250.0 * i as f64).collect();
    let fvs = [300.0, 900.0, 1700.0, 2600.0];
    for seed in 0..5 {
        let fx = Fixture::new(
            ScenarioConfig {
                rng_seed: seed,
                ..cfg()
            },
            &xs,
            &fvs,
        );
        let ctx = fx.ctx(0);
        let plan = kmmto(&ctx);
        let unit = kmmto_unit_hz(&ctx);
        let slots = (fx.cfg.compute.rsu_hz / unit).floor() as usize;
        for k in 0..3 {
            let load = plan
                .destinations
                .iter()
                .filter(|&&d| d == Destination::Rsu(k))
                .count();
            assert!(load <= slots);
        }
        for m in 0..fvs.len() {
            let load = plan
                .destinations
                .iter()
                .filter(|&&d| d == Destination::Fv(m))
                .count();
            assert!(load <= 1);
        }
        for (n, d) in plan.destinations.iter().enumerate() {
            if let Destination::Rsu(_) = d {
                assert_eq!(plan.alloc_hz[n], unit);
            }
        }
    }
}

#[test]
fn kmmto_unit_is_the_mean_deadline_rate() {
    let fx = Fixture::new(cfg(), &[100.0, 700.0], &[]);
    let ctx = fx.ctx(0);
    let want = ctx
        .tvs
        .iter()
        .map(|t| t.task.cycles / t.task.deadline_s)
        .sum::<f64>()
        / 2.0;
    assert!((kmmto_unit_hz(&ctx) - want).abs() <= 1e-12 * want);
}

#[test]
fn forwarding_adds_the_rsu_to_fv_leg() {
    let fx = Fixture::new(cfg(), &[500.0], &[700.0]);
    let ctx = fx.ctx(0);
    let tv = &ctx.tvs[0];
    let f = 2.5e9;
    let bits = tv.task.input_bits;
    let want = bits / tv.v2i_rate_bps + bits / ctx.relay_rate_bps[0][0] + tv.task.cycles / f;
    let got = forwarded_delay_s(&ctx, 0, 0, f).unwrap();
    assert!((got - want).abs() <= 1e-12 * want);
    assert!(forwarded_delay_s(&ctx, 0, 0, 0.0).is_none());
}

#[test]
fn broldra_keeps_tasks_when_no_fv_is_covered() {
    // the FV sits in RSU 2's segment, far from the TV's RSU 0
    let fx = Fixture::new(cfg(), &[450.0, 550.0], &[2500.0]);
    let plan = broldra(&fx.ctx(0));
    assert_eq!(plan.destinations, vec![Destination::Rsu(0); 2]);
}

#[test]
fn broldra_forwards_only_when_faster() {
    for seed in 0..10 {
        let fx = Fixture::new(
            ScenarioConfig {
                rng_seed: seed,
                ..cfg()
            },
            &[500.0],
            &[600.0],
        );
        let ctx = fx.ctx(0);
        let plan = broldra(&ctx);
        let keep = ctx.rsu_delay_s(0, 0, fx.cfg.compute.rsu_hz).unwrap();
        let fwd = forwarded_delay_s(&ctx, 0, 0, ctx.fv_alloc_hz(0, 0));
        match fwd {
            Some(d) if d < keep => {
                assert_eq!(plan.destinations[0], Destination::Fv(0));
                assert!(plan.is_relayed(0));
            }
            _ => assert_eq!(plan.destinations[0], Destination::Rsu(0)),
        }
    }
}

#[test]
fn every_policy_passes_through_the_checker() {
    let cfg = ScenarioConfig {
        horizon_slots: 3,
        ..cfg()
    };
    let fx = Fixture::new(
        cfg,
        &(0..25).map(|i| 120.0 * i as f64).collect::<Vec<_>>(),
        &[50.0, 60.0, 70.0, 1500.0],
    );
    for p in Policy::ALL {
        for slot in 0..3 {
            let ctx = fx.ctx(slot);
            let plan = plan_slot(p, &ctx, false);
            assert_eq!(plan.destinations.len(), 25);
            let out = check_constraints(&ctx, &plan);
            assert_eq!(out.tvs.len(), 25);
            for (t, v) in out.tvs.iter().zip(&ctx.tvs) {
                assert!(t.delay_s.is_finite() && t.delay_s > 0.0);
                if t.success {
                    assert!(t.delay_s <= v.task.deadline_s * (1.0 + 1e-9));
                }
            }
        }
    }
}
