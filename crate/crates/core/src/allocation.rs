//! RSU computing resource allocation.
//!
//! Each RSU splits its CPU budget over the tasks assigned to it so as to
//! minimize total computation delay `sum C_n / f_n`, subject to the budget,
//! each task's deadline (a lower bound on `f_n`) and the per-task energy cap (an
//! upper bound on `f_n`). The program is convex and separable, so the KKT
//! conditions give `f_n(lambda) = clamp(sqrt(C_n / lambda), lo_n, hi_n)` for
//! the budget multiplier `lambda`, which is found by bisection.

use serde::{Deserialize, Serialize};

const BISECTION_REL_TOL: f64 = 1e-10;
const BISECTION_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationTask {
    /// Caller's identifier, used for deterministic tie-breaks.
    pub id: usize,
    pub cycles: f64,
    /// Deadline minus upload and relay delay. May be non-positive.
    pub deadline_slack_s: f64,
    pub energy_cap_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRequest {
    pub tasks: Vec<AllocationTask>,
    pub f_max_hz: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBounds {
    pub lo: f64,
    pub hi: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// The deadline cannot be met within the energy cap (or has already passed).
    InfeasibleBox,
    /// Dropped because the feasible tasks together need more than the budget.
    Evicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Allocation {
    Granted(f64),
    Rejected(RejectReason),
}

impl Allocation {
    pub fn hz(self) -> Option<f64> {
        match self {
            Allocation::Granted(f) => Some(f),
            Allocation::Rejected(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    /// One entry per request task, in request order.
    pub allocations: Vec<Allocation>,
    /// Budget multiplier; zero when the budget does not bind.
    pub multiplier: f64,
}

impl AllocationResult {
    pub fn total_hz(&self) -> f64 {
        self.allocations.iter().filter_map(|a| a.hz()).sum()
    }

    /// `sum C_n / f_n` over granted tasks.
    pub fn objective(&self, request: &AllocationRequest) -> f64 {
        request
            .tasks
            .iter()
            .zip(&self.allocations)
            .filter_map(|(t, a)| a.hz().map(|f| t.cycles / f))
            .sum()
    }
}

/// Frequency box of each task: `lo` meets the deadline, `hi` exhausts the energy cap.
pub fn per_task_bounds(request: &AllocationRequest) -> Vec<FrequencyBounds> {
    request
        .tasks
        .iter()
        .map(|t| {
            let lo = if t.deadline_slack_s > 0.0 {
                t.cycles / t.deadline_slack_s
            } else {
                f64::INFINITY
            };
            let hi = (t.energy_cap_j / (request.kappa * t.cycles)).sqrt();
            FrequencyBounds {
                lo,
                hi,
                feasible: lo <= hi,
            }
        })
        .collect()
}

fn allocate_at(lambda: f64, cycles: &[f64], bounds: &[FrequencyBounds]) -> Vec<f64> {
    cycles
        .iter()
        .zip(bounds)
        .map(|(&c, b)| {
            let free = if lambda > 0.0 {
                (c / lambda).sqrt()
            } else {
                f64::INFINITY
            };
            free.clamp(b.lo, b.hi)
        })
        .collect()
}

/// Solves the budgeted allocation. Tasks whose box is empty, or whose
/// deadline needs more than the whole budget, are rejected. If the remaining
/// tasks need more than the budget at their deadline-minimal frequencies,
/// tasks are evicted in ascending order of the server's preference (the
/// inverse of their energy at the minimal frequency; ties evict the larger id)
/// until the rest fits.
pub fn solve_sp1(request: &AllocationRequest) -> AllocationResult {
    let bounds = per_task_bounds(request);
    let n = request.tasks.len();
    let mut allocations = vec![Allocation::Rejected(RejectReason::InfeasibleBox); n];

    let mut kept: Vec<usize> = (0..n)
        .filter(|&i| bounds[i].feasible && bounds[i].lo <= request.f_max_hz)
        .collect();

    let mut min_need: f64 = kept.iter().map(|&i| bounds[i].lo).sum();
    if min_need > request.f_max_hz {
        // evict the most energy-hungry first
        let energy_at_lo =
            |i: usize| request.kappa * request.tasks[i].cycles * bounds[i].lo.powi(2);
        let mut order = kept.clone();
        order.sort_by(|&a, &b| {
            energy_at_lo(b)
                .total_cmp(&energy_at_lo(a))
                .then(request.tasks[b].id.cmp(&request.tasks[a].id))
        });
        for i in order {
            if min_need <= request.f_max_hz {
                break;
            }
            min_need -= bounds[i].lo;
            allocations[i] = Allocation::Rejected(RejectReason::Evicted);
            kept.retain(|&k| k != i);
        }
    }

    if kept.is_empty() {
        return AllocationResult {
            allocations,
            multiplier: 0.0,
        };
    }

    let cycles: Vec<f64> = kept.iter().map(|&i| request.tasks[i].cycles).collect();
    let boxes: Vec<FrequencyBounds> = kept.iter().map(|&i| bounds[i]).collect();
    let f_max = request.f_max_hz;

    let hi_sum: f64 = boxes.iter().map(|b| b.hi).sum();
    let (freqs, multiplier) = if hi_sum <= f_max {
        (boxes.iter().map(|b| b.hi).collect::<Vec<_>>(), 0.0)
    } else {
        // sum f(lambda) is non-increasing in lambda; bracket so that all tasks
        // sit on `hi` at the low end and on `lo` at the high end.
        let mut lam_lo = cycles
            .iter()
            .zip(&boxes)
            .map(|(c, b)| c / (b.hi * b.hi))
            .fold(f64::INFINITY, f64::min);
        let mut lam_hi = cycles
            .iter()
            .zip(&boxes)
            .map(|(c, b)| c / (b.lo * b.lo))
            .fold(0.0, f64::max);
        if !lam_hi.is_finite() || lam_hi <= lam_lo {
            lam_hi = lam_lo * 2.0;
            while allocate_at(lam_hi, &cycles, &boxes).iter().sum::<f64>() > f_max {
                lam_hi *= 2.0;
            }
        }
        for _ in 0..BISECTION_MAX_ITERS {
            if lam_hi - lam_lo <= BISECTION_REL_TOL * lam_hi {
                break;
            }
            let mid = (lam_lo * lam_hi).sqrt();
            let mid = if mid > lam_lo && mid < lam_hi {
                mid
            } else {
                0.5 * (lam_lo + lam_hi)
            };
            if allocate_at(mid, &cycles, &boxes).iter().sum::<f64>() > f_max {
                lam_lo = mid;
            } else {
                lam_hi = mid;
            }
        }
        // Polish: with the clamp pattern fixed, sum f = f_max has a closed form.
        let at_hi = allocate_at(lam_hi, &cycles, &boxes);
        let (mut clamped, mut free_root) = (0.0, 0.0);
        for ((f, c), b) in at_hi.iter().zip(&cycles).zip(&boxes) {
            if *f <= b.lo || *f >= b.hi {
                clamped += f;
            } else {
                free_root += c.sqrt();
            }
        }
        let mut best = (at_hi, lam_hi);
        if free_root > 0.0 && f_max > clamped {
            let lam = (free_root / (f_max - clamped)).powi(2);
            let f = allocate_at(lam, &cycles, &boxes);
            if f.iter().sum::<f64>() <= f_max * (1.0 + 1e-12) {
                best = (f, lam);
            }
        }
        best
    };

    for (&i, f) in kept.iter().zip(freqs) {
        allocations[i] = Allocation::Granted(f);
    }
    AllocationResult {
        allocations,
        multiplier,
    }
}
