//! Many-to-one deferred acceptance between TVs and servers.
//!
//! TVs rank servers by `1 / delay`, servers rank TVs by `1 / energy`. Each
//! round every free TV proposes to its best server not yet tried; a server
//! pools its proposers with the TVs it already holds and admits them first-fit
//! in its preference order while the summed demand stays within its budget
//! (and, for FVs, while the head count stays within capacity). Rejected TVs
//! strike that server. Every TV proposes to a server at most once, so the
//! loop ends after at most `N * S` proposals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

const BUDGET_SLACK: f64 = 1e-12;

/// What a TV would experience at a server, as estimated before matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub delay_s: f64,
    pub server_energy_j: f64,
    /// Resource the server would commit, `f*_{n,s}`.
    pub demand_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceTable {
    /// Per TV, reachable servers by descending `tv_value`.
    pub tv_prefs: Vec<Vec<usize>>,
    /// Per server, TVs that can reach it by descending `server_value`.
    pub server_prefs: Vec<Vec<usize>>,
    /// `tv_value[n][s] = 1 / T_n` at server `s`.
    pub tv_value: Vec<Vec<Option<f64>>>,
    /// `server_value[s][n] = 1 / E_{n,s}`.
    pub server_value: Vec<Vec<Option<f64>>>,
    /// `demand[n][s] = f*_{n,s}`.
    pub demand: Vec<Vec<Option<f64>>>,
}

impl PreferenceTable {
    pub fn n_tvs(&self) -> usize {
        self.tv_prefs.len()
    }

    pub fn n_servers(&self) -> usize {
        self.server_prefs.len()
    }
}

/// Server capacity for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quota {
    pub budget_hz: f64,
    /// Head-count limit; `None` for RSUs.
    pub max_tvs: Option<usize>,
}

/// Builds both sides' preference lists from per-pair estimates
/// (`estimates[n][s]`, `None` for unreachable pairs). Ties go to the lower id.
pub fn build_preferences(
    estimates: &[Vec<Option<PairEstimate>>],
    n_servers: usize,
) -> PreferenceTable {
    let n_tvs = estimates.len();
    let mut tv_value = vec![vec![None; n_servers]; n_tvs];
    let mut server_value = vec![vec![None; n_tvs]; n_servers];
    let mut demand = vec![vec![None; n_servers]; n_tvs];
    for (n, row) in estimates.iter().enumerate() {
        for (s, est) in row.iter().enumerate().take(n_servers) {
            if let Some(e) = est {
                tv_value[n][s] = Some(1.0 / e.delay_s);
                server_value[s][n] = Some(1.0 / e.server_energy_j);
                demand[n][s] = Some(e.demand_hz);
            }
        }
    }
    let sorted = |values: &[Option<f64>]| {
        let mut ids: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
        ids.sort_by(|&a, &b| {
            values[b]
                .unwrap()
                .total_cmp(&values[a].unwrap())
                .then(a.cmp(&b))
        });
        ids
    };
    PreferenceTable {
        tv_prefs: tv_value.iter().map(|v| sorted(v)).collect(),
        server_prefs: server_value.iter().map(|v| sorted(v)).collect(),
        tv_value,
        server_value,
        demand,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Propose {
        round: usize,
        tv: usize,
        server: usize,
    },
    Reject {
        round: usize,
        tv: usize,
        server: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// Server holding each TV, `None` if the TV exhausted its list.
    pub tv_to_server: Vec<Option<usize>>,
    pub server_to_tvs: Vec<Vec<usize>>,
    /// `(tv, server)` rejections in order.
    pub rejections: Vec<(usize, usize)>,
    pub proposals: usize,
    pub rounds: usize,
    pub trace: Vec<TraceEvent>,
}

/// First-fit admission of `pool` (sorted by the server's ranking) under `quota`.
fn admit(
    pool: &[usize],
    server: usize,
    prefs: &PreferenceTable,
    quota: Quota,
) -> (Vec<usize>, Vec<usize>) {
    let limit = quota.budget_hz * (1.0 + BUDGET_SLACK);
    let mut used = 0.0;
    let (mut kept, mut rejected) = (Vec::new(), Vec::new());
    for &n in pool {
        let d = prefs.demand[n][server].unwrap_or(f64::INFINITY);
        let fits_count = quota.max_tvs.is_none_or(|m| kept.len() < m);
        if fits_count && used + d <= limit {
            used += d;
            kept.push(n);
        } else {
            rejected.push(n);
        }
    }
    (kept, rejected)
}

pub fn deferred_acceptance(prefs: &PreferenceTable, quotas: &[Quota]) -> Matching {
    let n_tvs = prefs.n_tvs();
    let n_servers = prefs.n_servers();
    assert_eq!(quotas.len(), n_servers, "one quota per server");

    let mut rank = vec![vec![usize::MAX; n_tvs]; n_servers];
    for (s, list) in prefs.server_prefs.iter().enumerate() {
        for (pos, &n) in list.iter().enumerate() {
            rank[s][n] = pos;
        }
    }

    let mut next = vec![0usize; n_tvs];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); n_servers];
    let mut free: Vec<usize> = (0..n_tvs).collect();
    let mut m = Matching {
        tv_to_server: vec![None; n_tvs],
        server_to_tvs: Vec::new(),
        rejections: Vec::new(),
        proposals: 0,
        rounds: 0,
        trace: Vec::new(),
    };

    while !free.is_empty() {
        m.rounds += 1;
        let mut pools: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &n in &free {
            if let Some(&s) = prefs.tv_prefs[n].get(next[n]) {
                next[n] += 1;
                m.proposals += 1;
                m.trace.push(TraceEvent::Propose {
                    round: m.rounds,
                    tv: n,
                    server: s,
                });
                pools.entry(s).or_default().push(n);
            }
        }
        if pools.is_empty() {
            break;
        }
        let mut next_free = Vec::new();
        for (s, proposers) in pools {
            let mut pool = std::mem::take(&mut held[s]);
            pool.extend(proposers);
            pool.sort_by_key(|&n| (rank[s][n], n));
            let (kept, rejected) = admit(&pool, s, prefs, quotas[s]);
            for n in rejected {
                m.rejections.push((n, s));
                m.trace.push(TraceEvent::Reject {
                    round: m.rounds,
                    tv: n,
                    server: s,
                });
                next_free.push(n);
            }
            held[s] = kept;
        }
        next_free.sort_unstable();
        free = next_free;
    }

    for (s, tvs) in held.iter().enumerate() {
        for &n in tvs {
            m.tv_to_server[n] = Some(s);
        }
    }
    m.server_to_tvs = held;
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingPair {
    pub tv: usize,
    pub server: usize,
}

/// Lists every `(n, s)` where `n` strictly prefers `s` to its current match
/// and `s` would take `n`: either its spare budget covers `n`'s demand, or
/// dropping kept TVs that `s` ranks strictly below `n` frees enough.
pub fn audit_stability(
    matching: &Matching,
    prefs: &PreferenceTable,
    quotas: &[Quota],
) -> Vec<BlockingPair> {
    let mut blocking = Vec::new();
    for n in 0..prefs.n_tvs() {
        let current = matching.tv_to_server[n].and_then(|s| prefs.tv_value[n][s]);
        for &s in &prefs.tv_prefs[n] {
            if Some(s) == matching.tv_to_server[n] {
                continue;
            }
            let value = prefs.tv_value[n][s].expect("listed pair has a value");
            if current.is_some_and(|c| value <= c) {
                continue;
            }
            let Some(need) = prefs.demand[n][s] else {
                continue;
            };
            let my_rank = prefs.server_value[s][n].expect("listed pair has a value");
            let kept = &matching.server_to_tvs[s];
            let used: f64 = kept.iter().filter_map(|&j| prefs.demand[j][s]).sum();
            let spare = quotas[s].budget_hz - used;
            let below: Vec<usize> = kept
                .iter()
                .copied()
                .filter(|&j| prefs.server_value[s][j].is_some_and(|v| v < my_rank))
                .collect();
            let freed: f64 = below.iter().filter_map(|&j| prefs.demand[j][s]).sum();
            let count_ok = |evicted: usize| {
                quotas[s]
                    .max_tvs
                    .is_none_or(|cap| kept.len() - evicted < cap)
            };
            let slack = quotas[s].budget_hz * BUDGET_SLACK;
            let admits_as_is = need <= spare + slack && count_ok(0);
            let admits_by_eviction =
                !below.is_empty() && need <= spare + freed + slack && count_ok(below.len());
            if admits_as_is || admits_by_eviction {
                blocking.push(BlockingPair { tv: n, server: s });
            }
        }
    }
    blocking
}

/// Delays a server's TVs would see if it served exactly a given set.
pub trait ServerEvaluator {
    fn delays(&mut self, server: usize, tvs: &[usize]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalAssignment {
    /// Server per TV; `None` means local execution.
    pub tv_to_server: Vec<Option<usize>>,
    pub server_to_tvs: Vec<Vec<usize>>,
}

/// Turns a matching into one-hot decisions. Unmatched TVs run locally, and so
/// does any matched TV whose local delay beats its delay at the server once the
/// server's final set is known.
pub fn finalize_decisions<E: ServerEvaluator>(
    matching: &Matching,
    local_delay_s: &[f64],
    evaluator: &mut E,
) -> FinalAssignment {
    let mut tv_to_server = matching.tv_to_server.clone();
    let mut server_to_tvs = matching.server_to_tvs.clone();
    for (s, tvs) in server_to_tvs.iter_mut().enumerate() {
        if tvs.is_empty() {
            continue;
        }
        let delays = evaluator.delays(s, tvs);
        let stay: Vec<usize> = tvs
            .iter()
            .zip(&delays)
            .filter(|&(&n, &d)| !(local_delay_s[n] < d))
            .map(|(&n, _)| n)
            .collect();
        for &n in tvs.iter() {
            if !stay.contains(&n) {
                tv_to_server[n] = None;
            }
        }
        *tvs = stay;
    }
    FinalAssignment {
        tv_to_server,
        server_to_tvs,
    }
}
