//! Comparison policies. They share the context, the SP1 allocator and the
//! contract menus with JCRATOA; only the offloading decision differs. Their
//! plans go through the same constraint checker, so a bad choice shows up as
//! a failed task rather than a crash.

use crate::assignment::min_cost_assignment;
use crate::context::{road_distance, SlotContext};
use crate::policy::SlotPlan;
use crate::types::Destination;

/// Cost standing in for an impossible pair in the assignment matrix.
const FORBIDDEN_S: f64 = 1e9;

/// Runs SP1 on each RSU's assigned set; tasks it cannot fit run locally.
fn settle_rsus(ctx: &SlotContext, plan: &mut SlotPlan) {
    for k in 0..ctx.n_rsus() {
        let tvs: Vec<usize> = (0..ctx.n_tvs())
            .filter(|&n| plan.destinations[n] == Destination::Rsu(k))
            .collect();
        for (f, &n) in ctx.solve_rsu(k, &tvs).iter().zip(&tvs) {
            match f {
                Some(f) => plan.alloc_hz[n] = *f,
                None => {
                    plan.destinations[n] = Destination::Local;
                    plan.alloc_hz[n] = ctx.scenario.tvs[n].f_hz;
                }
            }
        }
    }
}

/// Nearest in-range FV offering a positive resource for TV `n`.
fn nearest_fv(ctx: &SlotContext, n: usize) -> Option<usize> {
    ctx.tvs[n]
        .fvs
        .iter()
        .map(|l| l.fv)
        .find(|&m| ctx.fv_alloc_hz(n, m) > 0.0)
}

/// RSU share if its `f_max` were split evenly over the TVs nearest to it.
fn even_shares(ctx: &SlotContext) -> Vec<f64> {
    (0..ctx.n_rsus())
        .map(|k| {
            let load = ctx.tvs.iter().filter(|t| t.nearest_rsu == k).count().max(1);
            ctx.scenario.servers[k].f_max_hz / load as f64
        })
        .collect()
}

pub fn alo(ctx: &SlotContext) -> SlotPlan {
    SlotPlan::all_local(ctx)
}

pub fn nro(ctx: &SlotContext) -> SlotPlan {
    let mut plan = SlotPlan::all_local(ctx);
    for (n, tv) in ctx.tvs.iter().enumerate() {
        plan.destinations[n] = Destination::Rsu(tv.nearest_rsu);
    }
    settle_rsus(ctx, &mut plan);
    plan
}

pub fn nfo(ctx: &SlotContext) -> SlotPlan {
    let mut plan = SlotPlan::all_local(ctx);
    for n in 0..ctx.n_tvs() {
        if let Some(m) = nearest_fv(ctx, n) {
            plan.destinations[n] = Destination::Fv(m);
            plan.alloc_hz[n] = ctx.fv_alloc_hz(n, m);
        }
    }
    plan
}

pub fn nso(ctx: &SlotContext) -> SlotPlan {
    let shares = even_shares(ctx);
    let mut plan = SlotPlan::all_local(ctx);
    for (n, tv) in ctx.tvs.iter().enumerate() {
        let k = tv.nearest_rsu;
        let rsu = ctx.rsu_delay_s(n, k, shares[k]).unwrap_or(f64::INFINITY);
        let fv = nearest_fv(ctx, n)
            .and_then(|m| ctx.fv_delay_s(n, m, ctx.fv_alloc_hz(n, m)).map(|d| (m, d)));
        match fv {
            Some((m, d)) if d < rsu => {
                plan.destinations[n] = Destination::Fv(m);
                plan.alloc_hz[n] = ctx.fv_alloc_hz(n, m);
            }
            _ => plan.destinations[n] = Destination::Rsu(k),
        }
    }
    settle_rsus(ctx, &mut plan);
    plan
}

/// Frequency of one KMMTO server slot: the mean over this slot's tasks of
/// the rate needed to finish within the deadline.
pub fn kmmto_unit_hz(ctx: &SlotContext) -> f64 {
    let n = ctx.n_tvs().max(1) as f64;
    ctx.tvs
        .iter()
        .map(|t| t.task.cycles / t.task.deadline_s)
        .sum::<f64>()
        / n
}

pub fn kmmto(ctx: &SlotContext) -> SlotPlan {
    let n_tvs = ctx.n_tvs();
    let mut plan = SlotPlan::all_local(ctx);
    if n_tvs == 0 {
        return plan;
    }
    let unit = kmmto_unit_hz(ctx);
    // columns: RSU unit slots, one per FV, one local column per TV
    let mut columns: Vec<Destination> = Vec::new();
    for k in 0..ctx.n_rsus() {
        let slots = ((ctx.scenario.servers[k].f_max_hz / unit).floor() as usize).min(n_tvs);
        columns.extend(std::iter::repeat_n(Destination::Rsu(k), slots));
    }
    columns.extend((0..ctx.n_fvs()).map(Destination::Fv));
    let first_local = columns.len();
    columns.extend(std::iter::repeat_n(Destination::Local, n_tvs));

    let cost: Vec<Vec<f64>> = (0..n_tvs)
        .map(|n| {
            columns
                .iter()
                .enumerate()
                .map(|(j, dest)| {
                    let d = match *dest {
                        Destination::Rsu(k) => ctx.rsu_delay_s(n, k, unit),
                        Destination::Fv(m) => ctx.fv_delay_s(n, m, ctx.fv_alloc_hz(n, m)),
                        Destination::Local => {
                            (j - first_local == n).then_some(ctx.tvs[n].local_delay_s)
                        }
                    };
                    d.map_or(FORBIDDEN_S, |d| d.min(FORBIDDEN_S))
                })
                .collect()
        })
        .collect();

    for (n, j) in min_cost_assignment(&cost).into_iter().enumerate() {
        match columns[j] {
            Destination::Rsu(k) => {
                plan.destinations[n] = Destination::Rsu(k);
                plan.alloc_hz[n] = unit;
            }
            Destination::Fv(m) => {
                plan.destinations[n] = Destination::Fv(m);
                plan.alloc_hz[n] = ctx.fv_alloc_hz(n, m);
            }
            Destination::Local => {}
        }
    }
    plan
}

/// Delay of a task uploaded to its nearest RSU, sent on over the air to FV
/// `m` and run there at `f_hz`.
pub fn forwarded_delay_s(ctx: &SlotContext, n: usize, m: usize, f_hz: f64) -> Option<f64> {
    let tv = &ctx.tvs[n];
    let relay = ctx.relay_rate_bps[tv.nearest_rsu][m];
    if !(tv.v2i_rate_bps > 0.0 && relay > 0.0 && f_hz > 0.0) {
        return None;
    }
    let bits = tv.task.input_bits;
    Some(bits / tv.v2i_rate_bps + bits / relay + tv.task.cycles / f_hz)
}

pub fn broldra(ctx: &SlotContext) -> SlotPlan {
    let shares = even_shares(ctx);
    let coverage = ctx.cfg.rsu_coverage_m();
    let n_tvs = ctx.scenario.n_tvs();
    let mut taken = vec![false; ctx.n_fvs()];
    let mut plan = SlotPlan::all_local(ctx);
    plan.relayed = vec![false; ctx.n_tvs()];
    for (n, tv) in ctx.tvs.iter().enumerate() {
        let k = tv.nearest_rsu;
        let rsu_pos = ctx.scenario.servers[k].position_m;
        let keep = ctx.rsu_delay_s(n, k, shares[k]).unwrap_or(f64::INFINITY);
        let best = (0..ctx.n_fvs())
            .filter(|&m| !taken[m])
            .filter(|&m| {
                road_distance(
                    ctx.states[n_tvs + m].position_m,
                    rsu_pos,
                    ctx.cfg.road_length_m,
                ) <= coverage
            })
            .filter_map(|m| forwarded_delay_s(ctx, n, m, ctx.fv_alloc_hz(n, m)).map(|d| (m, d)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match best {
            Some((m, d)) if d < keep => {
                taken[m] = true;
                plan.destinations[n] = Destination::Fv(m);
                plan.alloc_hz[n] = ctx.fv_alloc_hz(n, m);
                plan.relayed[n] = true;
            }
            _ => plan.destinations[n] = Destination::Rsu(k),
        }
    }
    settle_rsus(ctx, &mut plan);
    plan
}
