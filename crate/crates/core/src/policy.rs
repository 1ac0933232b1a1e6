//! Offloading policies and the per-slot plan they produce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::context::SlotContext;
use crate::error::Error;
use crate::jcratoa;
use crate::matching::TraceEvent;
use crate::types::Destination;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Contract-incentivised FVs, convex RSU allocation and stable matching.
    Jcratoa,
    /// All tasks local.
    Alo,
    /// Nearest RSU.
    Nro,
    /// Nearest FV in range, else local.
    Nfo,
    /// Better of the nearest RSU and the nearest FV.
    Nso,
    /// Minimum total delay assignment (Kuhn-Munkres).
    Kmmto,
    /// Nearest RSU keeps the task or greedily forwards it to an FV.
    Broldra,
}

impl Policy {
    pub const ALL: [Policy; 7] = [
        Policy::Jcratoa,
        Policy::Alo,
        Policy::Nro,
        Policy::Nfo,
        Policy::Nso,
        Policy::Kmmto,
        Policy::Broldra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Jcratoa => "jcratoa",
            Policy::Alo => "alo",
            Policy::Nro => "nro",
            Policy::Nfo => "nfo",
            Policy::Nso => "nso",
            Policy::Kmmto => "kmmto",
            Policy::Broldra => "broldra",
        }
    }

    pub fn baselines() -> impl Iterator<Item = Policy> {
        Self::ALL.into_iter().filter(|p| *p != Policy::Jcratoa)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == lower)
            .ok_or_else(|| {
                let names: Vec<&str> = Policy::ALL.iter().map(|p| p.name()).collect();
                Error::config(
                    "policy",
                    format!(
                        "unknown policy '{s}' (expected one of {})",
                        names.join(", ")
                    ),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchingStats {
    pub proposals: usize,
    pub rounds: usize,
    pub blocking_pairs: usize,
    pub unmatched: usize,
}

/// What a policy decided for one slot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotPlan {
    pub destinations: Vec<Destination>,
    /// Frequency serving each task: the TV's own CPU when local.
    pub alloc_hz: Vec<f64>,
    /// FV tasks that reach their FV through the TV's nearest RSU, which sends
    /// them on over the air, instead of a direct V2V upload. Empty means none.
    pub relayed: Vec<bool>,
    pub matching: Option<MatchingStats>,
    pub trace: Vec<TraceEvent>,
}

impl SlotPlan {
    pub fn is_relayed(&self, n: usize) -> bool {
        self.relayed.get(n).copied().unwrap_or(false)
    }

    /// Every TV local at its own frequency.
    pub fn all_local(ctx: &SlotContext) -> Self {
        SlotPlan {
            destinations: vec![Destination::Local; ctx.n_tvs()],
            alloc_hz: ctx.scenario.tvs.iter().map(|p| p.f_hz).collect(),
            relayed: Vec::new(),
            matching: None,
            trace: Vec::new(),
        }
    }
}

pub fn plan_slot(policy: Policy, ctx: &SlotContext, keep_trace: bool) -> SlotPlan {
    match policy {
        Policy::Jcratoa => jcratoa::plan(ctx, keep_trace),
        Policy::Alo => baselines::alo(ctx),
        Policy::Nro => baselines::nro(ctx),
        Policy::Nfo => baselines::nfo(ctx),
        Policy::Nso => baselines::nso(ctx),
        Policy::Kmmto => baselines::kmmto(ctx),
        Policy::Broldra => baselines::broldra(ctx),
    }
}
