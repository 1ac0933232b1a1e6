//! The joint allocation and offloading policy for one slot.
//!
//! 1. Every RSU solves SP1 over the TVs in its coverage (their nearest RSU)
//!    that could still meet their deadline there; the grants become the
//!    demands `f*_{n,k}` used for matching.
//! 2. Every in-range FV offers the contract item of its type for the TV's task.
//! 3. Pairs that would miss the deadline or break an energy budget are dropped,
//!    and TVs and servers run deferred acceptance.
//! 4. RSU allocations are re-solved on the accepted sets; a TV whose local
//!    delay is shorter runs locally, and the RSU sets are re-solved once more.

use crate::context::SlotContext;
use crate::matching::{
    audit_stability, build_preferences, deferred_acceptance, finalize_decisions, PairEstimate,
    Quota, ServerEvaluator,
};
use crate::policy::{MatchingStats, SlotPlan};
use crate::types::Destination;

struct Evaluator<'c, 'a> {
    ctx: &'c SlotContext<'a>,
}

impl ServerEvaluator for Evaluator<'_, '_> {
    fn delays(&mut self, server: usize, tvs: &[usize]) -> Vec<f64> {
        let ctx = self.ctx;
        let k_rsus = ctx.n_rsus();
        if server < k_rsus {
            ctx.solve_rsu(server, tvs)
                .iter()
                .zip(tvs)
                .map(|(f, &n)| {
                    f.and_then(|f| ctx.rsu_delay_s(n, server, f))
                        .unwrap_or(f64::INFINITY)
                })
                .collect()
        } else {
            let m = server - k_rsus;
            tvs.iter()
                .map(|&n| {
                    ctx.fv_delay_s(n, m, ctx.fv_alloc_hz(n, m))
                        .unwrap_or(f64::INFINITY)
                })
                .collect()
        }
    }
}

/// Pairwise estimates `estimates[n][s]` (RSUs first, then FVs).
pub fn pair_estimates(ctx: &SlotContext) -> Vec<Vec<Option<PairEstimate>>> {
    let n_tvs = ctx.n_tvs();
    let k_rsus = ctx.n_rsus();
    let servers = &ctx.scenario.servers;
    let mut est = vec![vec![None; k_rsus + ctx.n_fvs()]; n_tvs];

    for k in 0..k_rsus {
        let candidates: Vec<usize> = (0..n_tvs)
            .filter(|&n| {
                ctx.tvs[n].nearest_rsu == k
                    && ctx.rsu_slack_s(n, k) > 0.0
                    && ctx.tv_energy_ok(ctx.rsu_upload_energy_j(n))
            })
            .collect();
        for (f, &n) in ctx.solve_rsu(k, &candidates).iter().zip(&candidates) {
            let Some(f) = *f else { continue };
            let Some(delay) = ctx.rsu_delay_s(n, k, f) else {
                continue;
            };
            est[n][k] = Some(PairEstimate {
                delay_s: delay,
                server_energy_j: servers[k].kappa * ctx.tvs[n].task.cycles * f * f,
                demand_hz: f,
            });
        }
    }

    for (n, tv) in ctx.tvs.iter().enumerate() {
        for link in &tv.fvs {
            let m = link.fv;
            let server = &servers[k_rsus + m];
            let f = ctx.fv_alloc_hz(n, m);
            let Some(delay) = ctx.fv_delay_s(n, m, f) else {
                continue;
            };
            let energy = server.kappa * tv.task.cycles * f * f;
            let feasible = delay <= tv.task.deadline_s
                && energy <= server.e_max_j
                && f <= server.f_max_hz
                && ctx.tv_energy_ok(ctx.upload_energy_j(n, link.rate_bps));
            if feasible {
                est[n][k_rsus + m] = Some(PairEstimate {
                    delay_s: delay,
                    server_energy_j: energy,
                    demand_hz: f,
                });
            }
        }
    }
    est
}

pub fn quotas(ctx: &SlotContext) -> Vec<Quota> {
    ctx.scenario
        .servers
        .iter()
        .map(|s| Quota {
            budget_hz: s.f_max_hz,
            max_tvs: if s.is_rsu() { None } else { Some(1) },
        })
        .collect()
}

pub fn plan(ctx: &SlotContext, keep_trace: bool) -> SlotPlan {
    let n_tvs = ctx.n_tvs();
    let k_rsus = ctx.n_rsus();
    let estimates = pair_estimates(ctx);
    let prefs = build_preferences(&estimates, k_rsus + ctx.n_fvs());
    let quotas = quotas(ctx);
    let matching = deferred_acceptance(&prefs, &quotas);
    assert!(
        matching.proposals <= n_tvs * (k_rsus + ctx.n_fvs()),
        "deferred acceptance exceeded its proposal bound"
    );
    let blocking = audit_stability(&matching, &prefs, &quotas);

    let local: Vec<f64> = ctx.tvs.iter().map(|t| t.local_delay_s).collect();
    let finished = finalize_decisions(&matching, &local, &mut Evaluator { ctx });

    let mut destinations = vec![Destination::Local; n_tvs];
    let mut alloc_hz: Vec<f64> = ctx.scenario.tvs.iter().map(|p| p.f_hz).collect();
    for (s, tvs) in finished.server_to_tvs.iter().enumerate() {
        if s < k_rsus {
            for (f, &n) in ctx.solve_rsu(s, tvs).iter().zip(tvs) {
                if let Some(f) = f {
                    destinations[n] = Destination::Rsu(s);
                    alloc_hz[n] = *f;
                }
            }
        } else {
            let m = s - k_rsus;
            for &n in tvs {
                destinations[n] = Destination::Fv(m);
                alloc_hz[n] = ctx.fv_alloc_hz(n, m);
            }
        }
    }

    SlotPlan {
        destinations,
        alloc_hz,
        relayed: Vec::new(),
        matching: Some(MatchingStats {
            proposals: matching.proposals,
            rounds: matching.rounds,
            blocking_pairs: blocking.len(),
            unmatched: matching.tv_to_server.iter().filter(|s| s.is_none()).count(),
        }),
        trace: if keep_trace {
            matching.trace
        } else {
            Vec::new()
        },
    }
}
