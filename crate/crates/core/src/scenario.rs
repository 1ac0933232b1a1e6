//! Scenario generation: vehicles, servers and the per-slot task stream.
//!
//! Each TV and FV draws its setup, tasks and mobility from its own stream, so
//! adding vehicles to a scenario leaves the existing ones untouched.

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::rng::{stream, SimRng, StreamTag};
use crate::types::{Role, ServerKind, ServerProfile, Task, TvProfile, VehicleState};

/// Stream index offset for FV mobility, keeping it clear of TV indices.
const FV_MOBILITY_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// TVs first (ids `0..n_tvs`), then FVs.
    pub vehicles: Vec<VehicleState>,
    pub tvs: Vec<TvProfile>,
    /// RSUs first, then FVs; `servers[i].id == i`.
    pub servers: Vec<ServerProfile>,
    /// `tasks[slot][tv]`.
    pub tasks: Vec<Vec<Task>>,
}

impl Scenario {
    pub fn n_tvs(&self) -> usize {
        self.tvs.len()
    }

    pub fn n_rsus(&self) -> usize {
        self.servers.iter().filter(|s| s.is_rsu()).count()
    }

    pub fn n_fvs(&self) -> usize {
        self.servers.len() - self.n_rsus()
    }

    pub fn tv_state(&self, n: usize) -> &VehicleState {
        &self.vehicles[n]
    }

    /// Vehicle state behind FV `m`.
    pub fn fv_state(&self, m: usize) -> &VehicleState {
        &self.vehicles[self.n_tvs() + m]
    }
}

/// x-coordinate of RSU `k`: the centre of the k-th of `n` equal road segments.
pub fn rsu_x(k: usize, n: usize, road_length_m: f64) -> f64 {
    (k as f64 + 0.5) * road_length_m / n as f64
}

fn place_vehicle(cfg: &ScenarioConfig, id: usize, role: Role, rng: &mut SimRng) -> VehicleState {
    let x = rng.random_range(0.0..cfg.road_length_m);
    let y = if cfg.road_width_m > 0.0 {
        rng.random_range(0.0..=cfg.road_width_m)
    } else {
        0.0
    };
    let heading = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mean = [heading * cfg.mobility.mean_speed_mps, 0.0];
    VehicleState {
        id,
        position_m: [x, y],
        velocity_mps: mean,
        mean_velocity_mps: mean,
        role,
    }
}

fn draw_task(cfg: &ScenarioConfig, rng: &mut SimRng) -> Task {
    let t = &cfg.task;
    let input_bits = t.input_bits.sample(rng);
    let cycles = input_bits * t.cycles_per_bit.sample(rng);
    let output_bits = input_bits * t.output_ratio.sample(rng);
    Task::new(input_bits, output_bits, cycles, t.deadline_s.sample(rng))
}

/// Mobility stream of vehicle `id` (TVs first, then FVs).
pub fn mobility_stream(cfg: &ScenarioConfig, id: usize) -> SimRng {
    let index = if id < cfg.n_tvs {
        id as u64
    } else {
        FV_MOBILITY_OFFSET + (id - cfg.n_tvs) as u64
    };
    stream(cfg.rng_seed, StreamTag::Mobility, index)
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let seed = cfg.rng_seed;
    let c = &cfg.compute;
    let mut vehicles = Vec::with_capacity(cfg.n_tvs + cfg.n_fvs);
    let mut tvs = Vec::with_capacity(cfg.n_tvs);
    for n in 0..cfg.n_tvs {
        let mut rng = stream(seed, StreamTag::TvSetup, n as u64);
        vehicles.push(place_vehicle(cfg, n, Role::Tv, &mut rng));
        tvs.push(TvProfile {
            f_hz: c.tv_hz.sample(&mut rng),
            tx_power_w: cfg.channel.tx_power_w.sample(&mut rng),
            bandwidth_hz: cfg.channel.bandwidth_hz.sample(&mut rng),
            kappa: c.kappa_tv,
            e_max_j: c.e_max_tv_j,
        });
    }

    let mut servers = Vec::with_capacity(cfg.n_rsus + cfg.n_fvs);
    for k in 0..cfg.n_rsus {
        servers.push(ServerProfile {
            id: k,
            kind: ServerKind::Rsu {
                hops_to: (0..cfg.n_rsus).map(|j| k.abs_diff(j) as u32).collect(),
            },
            position_m: [rsu_x(k, cfg.n_rsus, cfg.road_length_m), 0.0],
            f_max_hz: c.rsu_hz,
            e_max_j: c.e_max_rsu_j,
            kappa: c.kappa_rsu,
        });
    }
    for m in 0..cfg.n_fvs {
        let mut rng = stream(seed, StreamTag::FvSetup, m as u64);
        let vehicle = place_vehicle(cfg, cfg.n_tvs + m, Role::Fv, &mut rng);
        let f_max_hz = c.fv_hz.sample(&mut rng);
        let sigma = cfg.contract.willingness.sample(&mut rng);
        servers.push(ServerProfile {
            id: cfg.n_rsus + m,
            kind: ServerKind::Fv {
                vehicle: vehicle.id,
                theta: sigma * f_max_hz / 1e9,
            },
            position_m: vehicle.position_m,
            f_max_hz,
            e_max_j: c.e_max_fv_j,
            kappa: c.kappa_fv,
        });
        vehicles.push(vehicle);
    }

    let mut tasks = vec![Vec::with_capacity(cfg.n_tvs); cfg.horizon_slots];
    for n in 0..cfg.n_tvs {
        let mut rng = stream(seed, StreamTag::Tasks, n as u64);
        for slot in tasks.iter_mut() {
            slot.push(draw_task(cfg, &mut rng));
        }
    }

    Ok(Scenario {
        vehicles,
        tvs,
        servers,
        tasks,
    })
}
