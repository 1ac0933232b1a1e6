//! The slotted simulation loop: build the slot context, ask the policy for a
//! plan, evaluate and check it, advance mobility.
//!
//! Tasks live for one slot and energy budgets reset every slot. A task
//! succeeds when it finishes by its deadline and no constraint involving its
//! TV or its server is violated. A task that runs locally and still misses its
//! deadline is a failed task, not a policy violation: no destination in reach
//! could have met it without one of the other constraints giving way.

use serde::{Deserialize, Serialize};

use crate::baselines::forwarded_delay_s;
use crate::config::ScenarioConfig;
use crate::context::{classify_fleet, SlotContext};
use crate::error::Result;
use crate::matching::TraceEvent;
use crate::metrics::{completion_ratio, jain_fairness, throughput, RunMetrics, SlotMetrics};
use crate::mobility::{self, Road};
use crate::policy::{plan_slot, MatchingStats, Policy, SlotPlan};
use crate::scenario::{generate_scenario, mobility_stream};
use crate::types::Destination;

/// Relative slack when comparing sums against budgets.
const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// The decision names a destination the TV cannot use.
    OneHot,
    Deadline,
    TvEnergy,
    FvEnergy,
    RsuEnergy,
    FvCapacity,
    RsuCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Node {
    Tv(usize),
    Rsu(usize),
    Fv(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub slot: usize,
    pub constraint: Constraint,
    pub node: Node,
    /// Offending quantity (seconds, joules, hertz or a count).
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvOutcome {
    pub destination: Destination,
    pub alloc_hz: f64,
    pub delay_s: f64,
    pub success: bool,
    pub tv_energy_j: f64,
    pub server_energy_j: f64,
    pub input_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ServerOutcome {
    pub energy_j: f64,
    pub allocated_hz: f64,
    pub tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub slot: usize,
    pub tvs: Vec<TvOutcome>,
    /// RSUs first, then FVs.
    pub servers: Vec<ServerOutcome>,
    pub violations: Vec<Violation>,
    pub matching: Option<MatchingStats>,
}

/// Delay, TV energy and validity of one TV's planned execution.
fn execute(ctx: &SlotContext, plan: &SlotPlan, n: usize) -> (f64, f64, bool) {
    let tv = &ctx.tvs[n];
    let prof = &ctx.scenario.tvs[n];
    let f = plan.alloc_hz[n];
    let valid_f = f.is_finite() && f > 0.0;
    let out = match plan.destinations[n] {
        Destination::Local => Some((tv.task.cycles / f, prof.kappa * tv.task.cycles * f * f)),
        Destination::Rsu(k) if k < ctx.n_rsus() && valid_f => ctx
            .rsu_delay_s(n, k, f)
            .map(|d| (d, ctx.rsu_upload_energy_j(n))),
        Destination::Fv(m) if m < ctx.n_fvs() && valid_f => {
            if plan.is_relayed(n) {
                forwarded_delay_s(ctx, n, m, f).map(|d| (d, ctx.rsu_upload_energy_j(n)))
            } else {
                ctx.fv_delay_s(n, m, f)
                    .map(|d| (d, ctx.fv_upload_energy_j(n, m)))
            }
        }
        _ => None,
    };
    match out {
        Some((d, e)) if valid_f => (d, e, true),
        // an unusable destination leaves the TV to run the task itself
        _ => (tv.local_delay_s, tv.local_energy_j, false),
    }
}

/// Evaluates a plan and checks every constraint.
pub fn check_constraints(ctx: &SlotContext, plan: &SlotPlan) -> SlotOutcome {
    let n_tvs = ctx.n_tvs();
    let k_rsus = ctx.n_rsus();
    let servers = &ctx.scenario.servers;
    let e_tv = ctx.cfg.compute.e_max_tv_j;
    let mut violations = Vec::new();
    let mut flagged = vec![false; n_tvs];
    let mut tvs = Vec::with_capacity(n_tvs);
    let mut load = vec![ServerOutcome::default(); servers.len()];
    let mut server_of = vec![None; n_tvs];

    for n in 0..n_tvs {
        let task = ctx.tvs[n].task;
        let dest = plan.destinations[n];
        let (delay, tv_energy, valid) = execute(ctx, plan, n);
        let slot = ctx.slot;
        if !valid {
            flagged[n] = true;
            violations.push(Violation {
                slot,
                constraint: Constraint::OneHot,
                node: Node::Tv(n),
                value: plan.alloc_hz[n],
                limit: 0.0,
            });
        }
        if valid && dest.is_offload() && delay > task.deadline_s * (1.0 + BUDGET_TOL) {
            flagged[n] = true;
            violations.push(Violation {
                slot,
                constraint: Constraint::Deadline,
                node: Node::Tv(n),
                value: delay,
                limit: task.deadline_s,
            });
        }
        if tv_energy > e_tv * (1.0 + BUDGET_TOL) {
            flagged[n] = true;
            violations.push(Violation {
                slot,
                constraint: Constraint::TvEnergy,
                node: Node::Tv(n),
                value: tv_energy,
                limit: e_tv,
            });
        }
        let mut server_energy = 0.0;
        if valid {
            let s = match dest {
                Destination::Local => None,
                Destination::Rsu(k) => Some(k),
                Destination::Fv(m) => Some(k_rsus + m),
            };
            if let Some(s) = s {
                let f = plan.alloc_hz[n];
                server_energy = servers[s].kappa * task.cycles * f * f;
                load[s].energy_j += server_energy;
                load[s].allocated_hz += f;
                load[s].tasks += 1;
                server_of[n] = Some(s);
            }
        }
        tvs.push(TvOutcome {
            destination: if valid { dest } else { Destination::Local },
            alloc_hz: if valid {
                plan.alloc_hz[n]
            } else {
                ctx.scenario.tvs[n].f_hz
            },
            delay_s: delay,
            success: false,
            tv_energy_j: tv_energy,
            server_energy_j: server_energy,
            input_bits: task.input_bits,
        });
    }

    let mut bad_server = vec![false; servers.len()];
    for (s, (srv, used)) in servers.iter().zip(&load).enumerate() {
        let (node, energy_c, cap_c) = if srv.is_rsu() {
            (Node::Rsu(s), Constraint::RsuEnergy, Constraint::RsuCapacity)
        } else {
            (
                Node::Fv(s - k_rsus),
                Constraint::FvEnergy,
                Constraint::FvCapacity,
            )
        };
        let mut check = |ok: bool, constraint, value, limit| {
            if !ok {
                bad_server[s] = true;
                violations.push(Violation {
                    slot: ctx.slot,
                    constraint,
                    node,
                    value,
                    limit,
                });
            }
        };
        check(
            used.energy_j <= srv.e_max_j * (1.0 + BUDGET_TOL),
            energy_c,
            used.energy_j,
            srv.e_max_j,
        );
        check(
            used.allocated_hz <= srv.f_max_hz * (1.0 + BUDGET_TOL),
            cap_c,
            used.allocated_hz,
            srv.f_max_hz,
        );
        // an FV serves at most one TV per slot
        if !srv.is_rsu() {
            check(used.tasks <= 1, cap_c, used.tasks as f64, 1.0);
        }
    }

    // an FV handed several tasks works through them one at a time, in the
    // order their uploads finish
    for s in k_rsus..servers.len() {
        if load[s].tasks <= 1 {
            continue;
        }
        let mut queue: Vec<(f64, f64, usize)> = (0..n_tvs)
            .filter(|&n| server_of[n] == Some(s))
            .map(|n| {
                let compute = ctx.tvs[n].task.cycles / tvs[n].alloc_hz;
                (tvs[n].delay_s - compute, compute, n)
            })
            .collect();
        queue.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let mut busy_until = 0.0_f64;
        for (upload, compute, n) in queue {
            busy_until = busy_until.max(upload) + compute;
            tvs[n].delay_s = busy_until;
        }
    }

    for (n, out) in tvs.iter_mut().enumerate() {
        let server_ok = server_of[n].is_none_or(|s| !bad_server[s]);
        out.success = !flagged[n]
            && server_ok
            && out.delay_s <= ctx.tvs[n].task.deadline_s * (1.0 + BUDGET_TOL);
    }

    SlotOutcome {
        slot: ctx.slot,
        tvs,
        servers: load,
        violations,
        matching: plan.matching,
    }
}

/// Extra outputs of a detailed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub keep_trace: bool,
    pub keep_menus: bool,
}

/// One contract item offered to a TV in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MenuRecord {
    pub slot: usize,
    pub tv: usize,
    pub type_index: usize,
    pub f_ghz: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub slot: usize,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub slots: Vec<SlotOutcome>,
    pub trace: Vec<TraceRecord>,
    pub menus: Vec<MenuRecord>,
}

impl RunOutput {
    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.slots.iter().flat_map(|s| &s.violations)
    }
}

pub fn run(cfg: &ScenarioConfig, policy: Policy) -> Result<RunMetrics> {
    run_detailed(cfg, policy, RunOptions::default()).map(|o| o.metrics)
}

pub fn run_detailed(
    cfg: &ScenarioConfig,
    policy: Policy,
    options: RunOptions,
) -> Result<RunOutput> {
    let scenario = generate_scenario(cfg)?;
    let fv_types = classify_fleet(cfg, &scenario);
    let road = Road {
        length_m: cfg.road_length_m,
        width_m: cfg.road_width_m,
    };
    let sigma = [cfg.mobility.sigma_mps, cfg.mobility.sigma_y_mps];
    let mut states = scenario.vehicles.clone();
    let mut movers: Vec<_> = (0..states.len())
        .map(|id| mobility_stream(cfg, id))
        .collect();

    let mut slots = Vec::with_capacity(cfg.horizon_slots);
    let mut trace = Vec::new();
    let mut menus = Vec::new();
    for slot in 0..cfg.horizon_slots {
        let ctx = SlotContext::new(slot, cfg, &scenario, &states, &fv_types);
        let mut plan = plan_slot(policy, &ctx, options.keep_trace);
        trace.extend(
            plan.trace
                .drain(..)
                .map(|event| TraceRecord { slot, event }),
        );
        if options.keep_menus {
            for (tv, menu) in ctx.menus.iter().enumerate() {
                for (type_index, item) in menu.items.iter().enumerate() {
                    menus.push(MenuRecord {
                        slot,
                        tv,
                        type_index,
                        f_ghz: item.f,
                        w: item.w,
                    });
                }
            }
        }
        slots.push(check_constraints(&ctx, &plan));
        drop(ctx);
        for (state, rng) in states.iter_mut().zip(movers.iter_mut()) {
            mobility::step(state, cfg.mobility.alpha, sigma, cfg.slot_s, road, rng)?;
        }
    }

    let metrics = summarize(cfg, policy, &slots);
    if cfg.n_tvs > 0 && cfg.horizon_slots > 0 && metrics.completion_ratio == 0.0 {
        log::warn!(
            "no task succeeded in the whole run ({policy}, seed {})",
            cfg.rng_seed
        );
    }
    Ok(RunOutput {
        metrics,
        slots,
        trace,
        menus,
    })
}

pub fn summarize(cfg: &ScenarioConfig, policy: Policy, slots: &[SlotOutcome]) -> RunMetrics {
    let n_tvs = cfg.n_tvs;
    let mut delay_sum = 0.0;
    let mut successes = 0;
    let mut tasks = 0;
    let mut bits = 0.0;
    let mut energy = 0.0;
    let mut violations = 0;
    let mut blocking = 0;
    let mut per_tv = vec![0.0; n_tvs];
    let mut series = Vec::with_capacity(slots.len());
    for s in slots {
        let slot_delay: f64 = s.tvs.iter().map(|t| t.delay_s).sum();
        let slot_succ = s.tvs.iter().filter(|t| t.success).count();
        let slot_bits: f64 = s
            .tvs
            .iter()
            .filter(|t| t.success)
            .map(|t| t.input_bits)
            .sum();
        let slot_energy: f64 = s
            .tvs
            .iter()
            .map(|t| t.tv_energy_j + t.server_energy_j)
            .sum();
        let alloc: Vec<f64> = s.tvs.iter().map(|t| t.alloc_hz).collect();
        for (x, a) in per_tv.iter_mut().zip(&alloc) {
            *x += a;
        }
        delay_sum += slot_delay;
        successes += slot_succ;
        tasks += s.tvs.len();
        bits += slot_bits;
        energy += slot_energy;
        violations += s.violations.len();
        blocking += s.matching.map_or(0, |m| m.blocking_pairs);
        series.push(SlotMetrics {
            slot: s.slot,
            avg_delay_s: if s.tvs.is_empty() {
                0.0
            } else {
                slot_delay / s.tvs.len() as f64
            },
            completion_ratio: completion_ratio(slot_succ, s.tvs.len()),
            throughput_bps: throughput(slot_bits, cfg.slot_s),
            energy_j: slot_energy,
            jain_fairness: jain_fairness(&alloc),
            violations: s.violations.len(),
        });
    }
    RunMetrics {
        policy: policy.name().to_string(),
        seed: cfg.rng_seed,
        n_tvs,
        slots: slots.len(),
        avg_delay_s: if tasks == 0 {
            0.0
        } else {
            delay_sum / tasks as f64
        },
        completion_ratio: completion_ratio(successes, tasks),
        throughput_bps: throughput(bits, slots.len() as f64 * cfg.slot_s),
        jain_fairness: jain_fairness(&per_tv),
        avg_energy_j: if slots.is_empty() {
            0.0
        } else {
            energy / slots.len() as f64
        },
        violations,
        blocking_pairs: blocking,
        series,
    }
}
