//! Contract-based incentive mechanism for fog vehicles.
//!
//! The MBS cannot observe an FV's type `theta = sigma * f_max` (willingness
//! times contributable CPU), only the type distribution. It posts a menu of
//! `(f_l, w_l)` items, one per type, that maximizes its own utility subject to
//! individual rationality (IR) and incentive compatibility (IC).
//!
//! With IR tight for the lowest type and every local downward IC tight, the
//! rewards follow from the resources:
//!
//! ```text
//! w_1 = k f_1^2 / theta_1,   w_l = w_{l-1} + k (f_l^2 - f_{l-1}^2) / theta_l,   k = e kappa C
//! ```
//!
//! Substituting into the MBS utility leaves a separable concave objective
//! `sum_l c M_l f_l - k a_l f_l^2` with `a_l = M_l + S_{l+1} (1/theta_l - 1/theta_{l+1})`,
//! `S_l = sum_{i>=l} M_i theta_i`. Maximizing it over `0 <= f_1 <= ... <= f_L`,
//! `f_l <= cap_l` is a weighted isotonic regression, solved exactly by pool
//! adjacent violators. The remaining constraint `w_L < c` is convex in `f`
//! and handled with a Lagrange multiplier found by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `w_L < c` is enforced as `w_L <= c (1 - RESERVE_MARGIN)`.
const RESERVE_MARGIN: f64 = 1e-9;
const VERIFY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FvType {
    pub theta: f64,
    /// Largest resource every FV of this type can contribute.
    pub f_cap: f64,
    /// Number of FVs of this type, `M_l = lambda_l M`.
    pub count: f64,
}

/// An FV's type inputs before classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FvSample {
    pub theta: f64,
    pub f_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeClassification {
    pub types: Vec<FvType>,
    /// Index into `types` for every input FV, in input order.
    pub bucket_of: Vec<usize>,
}

/// Energy cost of serving one task: `k = e * kappa * C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractCost {
    pub energy_cost: f64,
    pub kappa: f64,
    pub cycles: f64,
}

impl ContractCost {
    pub fn coefficient(&self) -> f64 {
        self.energy_cost * self.kappa * self.cycles
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractItem {
    pub f: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu {
    pub items: Vec<ContractItem>,
    pub price: f64,
    pub energy_cost: f64,
}

/// Worst constraint violations found by full enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Largest `-(theta_l w_l - k f_l^2)` over types, clamped at zero.
    pub worst_ir: f64,
    /// Largest `u(theta_i, item_j) - u(theta_i, item_i)` over `i != j`, clamped at zero.
    pub worst_ic: f64,
    /// `(i, j)` pairs whose IC inequality fails beyond the tolerance.
    pub ic_violations: Vec<(usize, usize)>,
    pub ir_violations: Vec<usize>,
    pub monotone: bool,
    /// Utility scale the tolerances are relative to.
    pub scale: f64,
}

impl FeasibilityReport {
    pub fn worst_violation(&self) -> f64 {
        self.worst_ir.max(self.worst_ic)
    }

    pub fn is_feasible(&self) -> bool {
        self.ir_violations.is_empty() && self.ic_violations.is_empty() && self.monotone
    }
}

/// Buckets FVs into types by quantiles of `theta`.
///
/// Bucket sizes follow `type_probs` (largest-remainder rounding of
/// `lambda_l * M`); empty buckets are dropped. A bucket's `theta` is the mean
/// of its members and its cap the smallest member cap.
pub fn classify_types(fvs: &[FvSample], type_probs: &[f64]) -> TypeClassification {
    let m = fvs.len();
    if m == 0 || type_probs.is_empty() {
        return TypeClassification {
            types: Vec::new(),
            bucket_of: vec![0; m],
        };
    }
    let quotas: Vec<f64> = type_probs.iter().map(|p| p * m as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut short = m - sizes.iter().sum::<usize>().min(m);
    let mut by_remainder: Vec<usize> = (0..quotas.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        (quotas[b] - quotas[b].floor())
            .total_cmp(&(quotas[a] - quotas[a].floor()))
            .then(a.cmp(&b))
    });
    for &l in by_remainder.iter().cycle() {
        if short == 0 {
            break;
        }
        sizes[l] += 1;
        short -= 1;
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| fvs[a].theta.total_cmp(&fvs[b].theta).then(a.cmp(&b)));

    let mut types = Vec::new();
    let mut bucket_of = vec![0; m];
    let mut start = 0;
    for size in sizes.into_iter().filter(|&s| s > 0) {
        let members = &order[start..start + size];
        start += size;
        let theta = members.iter().map(|&i| fvs[i].theta).sum::<f64>() / size as f64;
        let f_cap = members
            .iter()
            .map(|&i| fvs[i].f_cap)
            .fold(f64::INFINITY, f64::min);
        for &i in members {
            bucket_of[i] = types.len();
        }
        types.push(FvType {
            theta,
            f_cap,
            count: size as f64,
        });
    }
    TypeClassification { types, bucket_of }
}

/// Utility of an FV of type `theta` accepting `item`: `theta w - e kappa C f^2`.
pub fn fv_utility(theta: f64, item: &ContractItem, cost: &ContractCost) -> f64 {
    theta * item.w - cost.coefficient() * item.f * item.f
}

/// MBS utility: `sum c M_l f_l - sum M_l theta_l w_l`.
pub fn mbs_utility(menu: &ContractMenu, types: &[FvType]) -> f64 {
    menu.items
        .iter()
        .zip(types)
        .map(|(it, t)| menu.price * t.count * it.f - t.count * t.theta * it.w)
        .sum()
}

/// Rewards implied by tight IR (lowest type) and tight local downward IC.
pub fn rewards_for(f: &[f64], types: &[FvType], cost: &ContractCost) -> Vec<f64> {
    let k = cost.coefficient();
    let mut w = Vec::with_capacity(f.len());
    let mut prev_f = 0.0;
    let mut prev_w = 0.0;
    for (fl, t) in f.iter().zip(types) {
        let wl = prev_w + k * (fl * fl - prev_f * prev_f) / t.theta;
        w.push(wl);
        prev_f = *fl;
        prev_w = wl;
    }
    w
}

/// Weighted pool-adjacent-violators with per-element upper bounds:
/// non-decreasing `x` in `[0, cap_i]` minimizing `sum weight_i (x_i - target_i)^2`.
/// Each block sits at its weighted mean clamped to the block's bounds, which
/// keeps the pooling exact for bounded quadratics.
fn isotonic_fit(target: &[f64], weight: &[f64], caps: &[f64]) -> Vec<f64> {
    struct Block {
        sum_wt: f64,
        weight: f64,
        mid: f64,
        cap: f64,
        len: usize,
    }
    impl Block {
        fn value(&self) -> f64 {
            let mean = if self.weight > 0.0 {
                self.sum_wt / self.weight
            } else {
                self.mid
            };
            mean.clamp(0.0, self.cap)
        }
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(target.len());
    for ((&t, &w), &cap) in target.iter().zip(weight).zip(caps) {
        blocks.push(Block {
            sum_wt: w * t,
            weight: w,
            mid: t,
            cap,
            len: 1,
        });
        while blocks.len() >= 2 {
            let n = blocks.len();
            if blocks[n - 2].value() <= blocks[n - 1].value() {
                break;
            }
            let b = blocks.pop().unwrap();
            let a = blocks.last_mut().unwrap();
            a.mid = (a.mid * a.len as f64 + b.mid * b.len as f64) / (a.len + b.len) as f64;
            a.sum_wt += b.sum_wt;
            a.weight += b.weight;
            a.cap = a.cap.min(b.cap);
            a.len += b.len;
        }
    }
    blocks
        .into_iter()
        .flat_map(|b| std::iter::repeat_n(b.value(), b.len))
        .collect()
}

struct ReducedProblem {
    /// Coefficient of `f_l^2` in the total payment, divided by `k`.
    payment: Vec<f64>,
    /// Coefficient of `f_l^2` in `w_L`, divided by `k`.
    top_reward: Vec<f64>,
    /// Effective monotone caps `min_{i >= l} cap_i`.
    caps: Vec<f64>,
    counts: Vec<f64>,
}

impl ReducedProblem {
    fn new(types: &[FvType]) -> Self {
        let l = types.len();
        let mut payment = vec![0.0; l];
        let mut top_reward = vec![0.0; l];
        let mut tail = 0.0; // S_{j+1}
        for j in (0..l).rev() {
            let inv_next = if j + 1 < l {
                1.0 / types[j + 1].theta
            } else {
                0.0
            };
            let gap = 1.0 / types[j].theta - inv_next;
            payment[j] = types[j].count + tail * gap;
            top_reward[j] = gap;
            tail += types[j].count * types[j].theta;
        }
        let mut caps = vec![0.0; l];
        let mut running = f64::INFINITY;
        for j in (0..l).rev() {
            running = running.min(types[j].f_cap);
            caps[j] = running.max(0.0);
        }
        ReducedProblem {
            payment,
            top_reward,
            caps,
            counts: types.iter().map(|t| t.count).collect(),
        }
    }

    /// Maximizer of `sum c M f - k (payment + mu top_reward) f^2` on the monotone box.
    fn solve(&self, price: f64, k: f64, mu: f64) -> Vec<f64> {
        let weight: Vec<f64> = self
            .payment
            .iter()
            .zip(&self.top_reward)
            .map(|(a, b)| a + mu * b)
            .collect();
        let target: Vec<f64> = weight
            .iter()
            .zip(&self.counts)
            .map(|(q, m)| {
                if *q > 0.0 {
                    price * m / (2.0 * k * q)
                } else {
                    0.0
                }
            })
            .collect();
        isotonic_fit(&target, &weight, &self.caps)
    }

    fn top_reward_at(&self, f: &[f64], k: f64) -> f64 {
        k * f
            .iter()
            .zip(&self.top_reward)
            .map(|(f, b)| f * f * b)
            .sum::<f64>()
    }
}

/// Builds the optimal menu for one task.
///
/// Types must have positive, non-decreasing `theta`; equal neighbours are
/// allowed and receive equal items when their caps agree.
pub fn solve_contract(types: &[FvType], cost: &ContractCost, price: f64) -> Result<ContractMenu> {
    if !(price > 0.0 && price.is_finite()) {
        return Err(Error::Domain(format!(
            "unit price must be > 0, got {price}"
        )));
    }
    let k = cost.coefficient();
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!(
            "energy coefficient e*kappa*C must be > 0, got {k}"
        )));
    }
    for (l, t) in types.iter().enumerate() {
        if !(t.theta > 0.0 && t.theta.is_finite()) {
            return Err(Error::Domain(format!(
                "type {l} has non-positive theta {}",
                t.theta
            )));
        }
        if !(t.count >= 0.0) || !(t.f_cap >= 0.0) {
            return Err(Error::Domain(format!(
                "type {l} has a negative count or cap"
            )));
        }
        if l > 0 && t.theta < types[l - 1].theta {
            return Err(Error::Domain(format!(
                "types must be sorted by theta: theta_{l} = {} < theta_{} = {}",
                t.theta,
                l - 1,
                types[l - 1].theta
            )));
        }
    }
    if types.is_empty() {
        return Ok(ContractMenu {
            items: Vec::new(),
            price,
            energy_cost: cost.energy_cost,
        });
    }

    let reduced = ReducedProblem::new(types);
    let reward_limit = price * (1.0 - RESERVE_MARGIN);
    let mut f = reduced.solve(price, k, 0.0);
    if reduced.top_reward_at(&f, k) > reward_limit {
        let mut mu_lo = 0.0;
        let mut mu_hi = 1.0;
        while reduced.top_reward_at(&reduced.solve(price, k, mu_hi), k) > reward_limit {
            mu_hi *= 2.0;
        }
        for _ in 0..200 {
            if mu_hi - mu_lo <= 1e-14 * mu_hi {
                break;
            }
            let mid = 0.5 * (mu_lo + mu_hi);
            if reduced.top_reward_at(&reduced.solve(price, k, mid), k) > reward_limit {
                mu_lo = mid;
            } else {
                mu_hi = mid;
            }
        }
        f = reduced.solve(price, k, mu_hi);
    }

    let w = rewards_for(&f, types, cost);
    let menu = ContractMenu {
        items: f
            .into_iter()
            .zip(w)
            .map(|(f, w)| ContractItem { f, w })
            .collect(),
        price,
        energy_cost: cost.energy_cost,
    };

    let report = verify_feasibility(&menu, types, cost);
    if !report.is_feasible() {
        return Err(Error::Contract(format!(
            "solved menu violates IR/IC: worst IR {:.3e}, worst IC {:.3e}, monotone {}",
            report.worst_ir, report.worst_ic, report.monotone
        )));
    }
    if menu.items.last().is_some_and(|it| it.w >= price) {
        return Err(Error::Contract("top reward reaches the unit price".into()));
    }
    Ok(menu)
}

/// Checks all `L` IR and `L(L-1)` IC inequalities plus monotonicity of `f`
/// and `w`. Tolerances are `1e-9` relative to the menu's utility scale.
pub fn verify_feasibility(
    menu: &ContractMenu,
    types: &[FvType],
    cost: &ContractCost,
) -> FeasibilityReport {
    let k = cost.coefficient();
    let scale = menu
        .items
        .iter()
        .zip(types)
        .map(|(it, t)| (t.theta * it.w).abs().max(k * it.f * it.f))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = VERIFY_REL_TOL * scale;

    let mut report = FeasibilityReport {
        worst_ir: 0.0,
        worst_ic: 0.0,
        ic_violations: Vec::new(),
        ir_violations: Vec::new(),
        monotone: true,
        scale,
    };
    for (i, (item, t)) in menu.items.iter().zip(types).enumerate() {
        let own = fv_utility(t.theta, item, cost);
        report.worst_ir = report.worst_ir.max(-own);
        if own < -tol {
            report.ir_violations.push(i);
        }
        for (j, other) in menu.items.iter().enumerate() {
            if i == j {
                continue;
            }
            let gain = fv_utility(t.theta, other, cost) - own;
            report.worst_ic = report.worst_ic.max(gain);
            if gain > tol {
                report.ic_violations.push((i, j));
            }
        }
    }
    report.monotone = menu.items.windows(2).all(|p| {
        p[1].f >= p[0].f - VERIFY_REL_TOL * p[1].f.abs().max(1.0) && p[1].w >= p[0].w - tol
    });
    report
}

/// Resource an FV in `bucket` contributes to the task the menu was solved for.
pub fn fv_allocation_for(bucket: usize, menu: &ContractMenu) -> f64 {
    menu.items.get(bucket).map_or(0.0, |it| it.f)
}
