use serde::{Deserialize, Serialize};

/// One slot's computation job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub input_bits: f64,
    pub output_bits: f64,
    pub cycles: f64,
    pub deadline_s: f64,
}

impl Task {
    pub fn new(input_bits: f64, output_bits: f64, cycles: f64, deadline_s: f64) -> Self {
        debug_assert!(input_bits > 0.0 && cycles > 0.0 && deadline_s > 0.0 && output_bits >= 0.0);
        Task {
            input_bits,
            output_bits,
            cycles,
            deadline_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// Task vehicle.
    Tv,
    /// Fog vehicle.
    Fv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: usize,
    pub position_m: [f64; 2],
    pub velocity_mps: [f64; 2],
    pub mean_velocity_mps: [f64; 2],
    pub role: Role,
}

/// Static per-TV radio and compute parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvProfile {
    pub f_hz: f64,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub kappa: f64,
    pub e_max_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ServerKind {
    /// Road side unit. `hops_to[k]` is the fiber hop count to RSU `k`.
    Rsu { hops_to: Vec<u32> },
    /// Fog vehicle backed by vehicle `vehicle`, with private type value `theta`.
    Fv { vehicle: usize, theta: f64 },
}

/// An RSU or FV able to execute offloaded tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerProfile {
    pub id: usize,
    pub kind: ServerKind,
    /// RSU position; FVs start here and then follow their vehicle.
    pub position_m: [f64; 2],
    pub f_max_hz: f64,
    pub e_max_j: f64,
    pub kappa: f64,
}

impl ServerProfile {
    pub fn is_rsu(&self) -> bool {
        matches!(self.kind, ServerKind::Rsu { .. })
    }

    pub fn theta(&self) -> Option<f64> {
        match self.kind {
            ServerKind::Fv { theta, .. } => Some(theta),
            ServerKind::Rsu { .. } => None,
        }
    }
}

/// Where a TV's task runs in a slot. Indices are per kind: `Rsu(k)` is the
/// k-th RSU, `Fv(m)` the m-th FV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Destination {
    Local,
    Rsu(usize),
    Fv(usize),
}

impl Destination {
    pub fn is_offload(self) -> bool {
        !matches!(self, Destination::Local)
    }
}

/// One-hot offloading decision of a TV. Holding exactly one `Destination`
/// makes "at most one destination per TV" true by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffloadDecision {
    pub tv_id: usize,
    pub destination: Destination,
}

impl OffloadDecision {
    pub fn local(tv_id: usize) -> Self {
        OffloadDecision {
            tv_id,
            destination: Destination::Local,
        }
    }
}
