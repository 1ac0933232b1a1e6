//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use vfc_core::allocation::AllocationRequest;
use vfc_core::context::{classify_fleet, SlotContext};
use vfc_core::contract::{ContractCost, FvType};
use vfc_core::scenario::{generate_scenario, Scenario};
use vfc_core::types::VehicleState;
use vfc_core::ScenarioConfig;

/// A generated scenario with vehicles pinned to chosen x positions (y = 0).
pub struct Fixture {
    pub cfg: ScenarioConfig,
    pub scenario: Scenario,
    pub states: Vec<VehicleState>,
    pub fv_types: vfc_core::contract::TypeClassification,
}

impl Fixture {
    pub fn new(cfg: ScenarioConfig, tv_x: &[f64], fv_x: &[f64]) -> Self {
        let cfg = ScenarioConfig {
            n_tvs: tv_x.len(),
            n_fvs: fv_x.len(),
            ..cfg
        };
        let scenario = generate_scenario(&cfg).unwrap();
        let mut states = scenario.vehicles.clone();
        for (s, &x) in states.iter_mut().zip(tv_x.iter().chain(fv_x)) {
            s.position_m = [x, 0.0];
        }
        let fv_types = classify_fleet(&cfg, &scenario);
        Fixture {
            cfg,
            scenario,
            states,
            fv_types,
        }
    }

    pub fn ctx(&self, slot: usize) -> SlotContext<'_> {
        SlotContext::new(
            slot,
            &self.cfg,
            &self.scenario,
            &self.states,
            &self.fv_types,
        )
    }
}

/// Per-task frequency window of SP1: at least enough to meet the deadline,
/// at most what the energy cap allows.
fn window(req: &AllocationRequest) -> Vec<(f64, f64)> {
    req.tasks
        .iter()
        .map(|t| {
            let lo = t.cycles / t.deadline_slack_s;
            let hi = (t.energy_cap_j / (req.kappa * t.cycles))
                .sqrt()
                .min(req.f_max_hz);
            (lo, hi)
        })
        .collect()
}

/// Exhaustive grid search for SP1 with one to three tasks, all admitted.
/// Returns `None` when no grid point is feasible.
pub fn sp1_grid(req: &AllocationRequest, steps: usize) -> Option<f64> {
    let w = window(req);
    if w.iter().any(|(lo, hi)| lo > hi) {
        return None;
    }
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .collect()
    };
    let cost = |f: &[f64]| -> f64 { req.tasks.iter().zip(f).map(|(t, f)| t.cycles / f).sum() };
    let cap = req.f_max_hz * (1.0 + 1e-12);
    let mut best = f64::INFINITY;
    let mut point = vec![0.0; w.len()];
    let mut consider = |point: &[f64]| {
        if point.iter().sum::<f64>() <= cap {
            best = best.min(cost(point));
        }
    };
    match w.len() {
        1 => {
            // the best single-task point is the upper end of the window
            point[0] = w[0].1;
            consider(&point);
        }
        2 => {
            for &a in &axis(w[0]) {
                point[0] = a;
                // the remaining budget goes to the second task
                point[1] = (req.f_max_hz - a).min(w[1].1);
                if point[1] >= w[1].0 {
                    consider(&point);
                }
            }
        }
        3 => {
            for &a in &axis(w[0]) {
                for &b in &axis(w[1]) {
                    point[0] = a;
                    point[1] = b;
                    point[2] = (req.f_max_hz - a - b).min(w[2].1);
                    if point[2] >= w[2].0 {
                        consider(&point);
                    }
                }
            }
        }
        _ => panic!("grid oracle handles one to three tasks"),
    }
    best.is_finite().then_some(best)
}

/// MBS utility of a menu whose resources are `f` (one per type), with the
/// rewards that make the lowest type's IR and each adjacent downward IC bind.
/// `None` when the top reward reaches the unit price.
pub fn contract_utility(
    f: &[f64],
    types: &[FvType],
    cost: &ContractCost,
    price: f64,
) -> Option<f64> {
    let k = cost.energy_cost * cost.kappa * cost.cycles;
    let mut w = Vec::with_capacity(f.len());
    for i in 0..f.len() {
        let wi = if i == 0 {
            k * f[0] * f[0] / types[0].theta
        } else {
            w[i - 1] + k * (f[i] * f[i] - f[i - 1] * f[i - 1]) / types[i].theta
        };
        w.push(wi);
    }
    if *w.last()? >= price {
        return None;
    }
    Some(
        types
            .iter()
            .zip(f.iter().zip(&w))
            .map(|(t, (f, w))| t.count * (price * f - t.theta * w))
            .sum(),
    )
}

/// Best utility over a `steps`^3 grid of non-decreasing resources for three types.
pub fn contract_grid3(types: &[FvType], cost: &ContractCost, price: f64, steps: usize) -> f64 {
    assert_eq!(types.len(), 3);
    let axis = |cap: f64| -> Vec<f64> {
        (0..steps)
            .map(|i| cap * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let (a0, a1, a2) = (
        axis(types[0].f_cap),
        axis(types[1].f_cap),
        axis(types[2].f_cap),
    );
    let mut best = f64::NEG_INFINITY;
    for &f0 in &a0 {
        for &f1 in a1.iter().filter(|&&f| f >= f0) {
            for &f2 in a2.iter().filter(|&&f| f >= f1) {
                if let Some(u) = contract_utility(&[f0, f1, f2], types, cost, price) {
                    best = best.max(u);
                }
            }
        }
    }
    best
}

/// Spearman rank correlation (average ranks for ties). `None` when either
/// series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx
        .iter()
        .zip(&ry)
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}
