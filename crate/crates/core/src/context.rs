//! Per-slot view of the system shared by every policy: the tasks, link rates,
//! candidate delays and contract menus. Channel draws depend only on the seed,
//! the slot and the link, never on the policy being evaluated.

use rand::RngCore;

use crate::allocation::{solve_sp1, AllocationRequest, AllocationTask};
use crate::channel::{transmission_rate, ChannelModel, LinkKind};
use crate::compute::{fv_offload_delay, local_delay, rsu_offload_delay};
use crate::config::ScenarioConfig;
use crate::contract::{
    solve_contract, ContractCost, ContractMenu, FvSample, FvType, TypeClassification,
};
use crate::rng::{stream, StreamTag};
use crate::scenario::Scenario;
use crate::types::{ServerKind, Task, VehicleState};

const GHZ: f64 = 1e9;
const RELAY_LINK_BIT: u64 = 1 << 63;

/// Distance along a ring road of length `road` plus the lateral offset.
pub fn road_distance(a: [f64; 2], b: [f64; 2], road_length_m: f64) -> f64 {
    let dx = (a[0] - b[0]).abs().rem_euclid(road_length_m);
    dx.min(road_length_m - dx).hypot(a[1] - b[1])
}

/// Splits FVs into contract types by their `theta`.
pub fn classify_fleet(cfg: &ScenarioConfig, scenario: &Scenario) -> TypeClassification {
    let samples: Vec<FvSample> = scenario
        .servers
        .iter()
        .filter_map(|s| match s.kind {
            ServerKind::Fv { theta, .. } => Some(FvSample {
                theta,
                f_cap: s.f_max_hz / GHZ,
            }),
            ServerKind::Rsu { .. } => None,
        })
        .collect();
    crate::contract::classify_types(&samples, &cfg.contract.type_probs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FvLink {
    pub fv: usize,
    pub distance_m: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvView {
    pub task: Task,
    pub local_delay_s: f64,
    pub local_energy_j: f64,
    pub nearest_rsu: usize,
    pub rsu_distance_m: f64,
    pub v2i_rate_bps: f64,
    /// FVs within range, nearest first (ties by id).
    pub fvs: Vec<FvLink>,
}

pub struct SlotContext<'a> {
    pub slot: usize,
    pub cfg: &'a ScenarioConfig,
    pub scenario: &'a Scenario,
    pub states: &'a [VehicleState],
    pub tvs: Vec<TvView>,
    pub fv_types: &'a TypeClassification,
    /// Contract menu solved for each TV's task; resources in GHz.
    pub menus: Vec<ContractMenu>,
    /// Wireless rate from RSU `k` down to FV `m`, `relay_rate_bps[k][m]`.
    pub relay_rate_bps: Vec<Vec<f64>>,
}

fn link_rng(seed: u64, slot: usize, tv: usize, server: usize) -> impl RngCore {
    let mut rng = stream(
        seed,
        StreamTag::Channel,
        ((tv as u64) << 24) | server as u64,
    );
    rng.set_word_pos((slot as u128) << 32);
    rng
}

/// Stream for the RSU -> FV hop, kept apart from every TV link.
fn relay_rng(seed: u64, slot: usize, rsu: usize, fv: usize) -> impl RngCore {
    let mut rng = stream(
        seed,
        StreamTag::Channel,
        RELAY_LINK_BIT | ((rsu as u64) << 24) | fv as u64,
    );
    rng.set_word_pos((slot as u128) << 32);
    rng
}

impl<'a> SlotContext<'a> {
    pub fn new(
        slot: usize,
        cfg: &'a ScenarioConfig,
        scenario: &'a Scenario,
        states: &'a [VehicleState],
        fv_types: &'a TypeClassification,
    ) -> Self {
        let model = ChannelModel::from(&cfg.channel);
        let n_rsus = scenario.n_rsus();
        let n_tvs = scenario.n_tvs();
        let road = cfg.road_length_m;
        let mut tvs = Vec::with_capacity(n_tvs);
        for n in 0..n_tvs {
            let task = scenario.tasks[slot][n];
            let prof = &scenario.tvs[n];
            let pos = states[n].position_m;
            let (nearest_rsu, rsu_distance_m) = (0..n_rsus)
                .map(|k| (k, road_distance(pos, scenario.servers[k].position_m, road)))
                .fold(
                    (0, f64::INFINITY),
                    |best, cur| if cur.1 < best.1 { cur } else { best },
                );
            let mut rng = link_rng(cfg.rng_seed, slot, n, nearest_rsu);
            let draw = model.channel_gain(
                LinkKind::V2i,
                model.geometry(LinkKind::V2i, rsu_distance_m),
                &mut rng,
            );
            let v2i_rate_bps = transmission_rate(
                prof.bandwidth_hz,
                prof.tx_power_w,
                draw.gain,
                cfg.channel.noise_w,
            );

            let mut fvs = Vec::new();
            for m in 0..scenario.n_fvs() {
                let d = road_distance(pos, states[n_tvs + m].position_m, road);
                if d > cfg.tv_range_m {
                    continue;
                }
                let mut rng = link_rng(cfg.rng_seed, slot, n, n_rsus + m);
                let draw =
                    model.channel_gain(LinkKind::V2v, model.geometry(LinkKind::V2v, d), &mut rng);
                fvs.push(FvLink {
                    fv: m,
                    distance_m: d,
                    rate_bps: transmission_rate(
                        prof.bandwidth_hz,
                        prof.tx_power_w,
                        draw.gain,
                        cfg.channel.noise_w,
                    ),
                });
            }
            fvs.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m).then(a.fv.cmp(&b.fv)));

            tvs.push(TvView {
                task,
                local_delay_s: local_delay(&task, prof.f_hz),
                local_energy_j: prof.kappa * task.cycles * prof.f_hz * prof.f_hz,
                nearest_rsu,
                rsu_distance_m,
                v2i_rate_bps,
                fvs,
            });
        }

        let menus = tvs
            .iter()
            .map(|tv| Self::menu_for(cfg, fv_types, &tv.task))
            .collect();
        let ch = &cfg.channel;
        let relay_rate_bps = (0..n_rsus)
            .map(|k| {
                (0..scenario.n_fvs())
                    .map(|m| {
                        let d = road_distance(
                            scenario.servers[k].position_m,
                            states[n_tvs + m].position_m,
                            road,
                        );
                        let mut rng = relay_rng(cfg.rng_seed, slot, k, m);
                        let draw = model.channel_gain(
                            LinkKind::V2i,
                            model.geometry(LinkKind::V2i, d),
                            &mut rng,
                        );
                        transmission_rate(
                            ch.bandwidth_hz.mean(),
                            ch.tx_power_w.mean(),
                            draw.gain,
                            ch.noise_w,
                        )
                    })
                    .collect()
            })
            .collect();
        SlotContext {
            slot,
            cfg,
            scenario,
            states,
            tvs,
            fv_types,
            menus,
            relay_rate_bps,
        }
    }

    /// Menu for one task. Each type's cap is also limited by what an FV can
    /// run within its energy budget, `sqrt(E / (kappa C))`.
    fn menu_for(cfg: &ScenarioConfig, fv_types: &TypeClassification, task: &Task) -> ContractMenu {
        let c = &cfg.compute;
        let energy_cap_ghz = (c.e_max_fv_j / (c.kappa_fv * task.cycles)).sqrt() / GHZ;
        let types: Vec<FvType> = fv_types
            .types
            .iter()
            .map(|t| FvType {
                f_cap: t.f_cap.min(energy_cap_ghz),
                ..*t
            })
            .collect();
        let cost = ContractCost {
            energy_cost: cfg.contract.energy_cost,
            kappa: c.kappa_fv * GHZ * GHZ,
            cycles: task.cycles,
        };
        solve_contract(&types, &cost, cfg.contract.price_per_ghz).unwrap_or_else(|e| {
            log::warn!("contract menu unavailable: {e}");
            ContractMenu {
                items: Vec::new(),
                price: cfg.contract.price_per_ghz,
                energy_cost: cfg.contract.energy_cost,
            }
        })
    }

    pub fn n_tvs(&self) -> usize {
        self.tvs.len()
    }

    pub fn n_rsus(&self) -> usize {
        self.cfg.n_rsus
    }

    pub fn n_fvs(&self) -> usize {
        self.scenario.n_fvs()
    }

    pub fn hops(&self, n: usize, k: usize) -> u32 {
        self.tvs[n].nearest_rsu.abs_diff(k) as u32
    }

    /// Time left for computation at RSU `k` after upload and relay.
    pub fn rsu_slack_s(&self, n: usize, k: usize) -> f64 {
        let tv = &self.tvs[n];
        if !(tv.v2i_rate_bps > 0.0) {
            return f64::NEG_INFINITY;
        }
        let relay = self.hops(n, k) as f64 * tv.task.input_bits / self.cfg.compute.fiber_rate_bps;
        tv.task.deadline_s - tv.task.input_bits / tv.v2i_rate_bps - relay
    }

    pub fn rsu_delay_s(&self, n: usize, k: usize, f_hz: f64) -> Option<f64> {
        let tv = &self.tvs[n];
        rsu_offload_delay(
            &tv.task,
            tv.v2i_rate_bps,
            self.hops(n, k),
            self.cfg.compute.fiber_rate_bps,
            f_hz,
        )
        .ok()
        .map(|d| d.total_s)
    }

    pub fn fv_link(&self, n: usize, m: usize) -> Option<&FvLink> {
        self.tvs[n].fvs.iter().find(|l| l.fv == m)
    }

    /// Resource FV `m` commits to TV `n`'s task under the contract.
    pub fn fv_alloc_hz(&self, n: usize, m: usize) -> f64 {
        let bucket = self.fv_types.bucket_of[m];
        crate::contract::fv_allocation_for(bucket, &self.menus[n]) * GHZ
    }

    pub fn fv_delay_s(&self, n: usize, m: usize, f_hz: f64) -> Option<f64> {
        let link = self.fv_link(n, m)?;
        if !(f_hz > 0.0) {
            return None;
        }
        fv_offload_delay(&self.tvs[n].task, link.rate_bps, f_hz)
            .ok()
            .map(|d| d.total_s)
    }

    /// TV transmit energy for uploading at `rate_bps`.
    pub fn upload_energy_j(&self, n: usize, rate_bps: f64) -> f64 {
        let p = self.scenario.tvs[n].tx_power_w;
        if rate_bps > 0.0 {
            p * self.tvs[n].task.input_bits / rate_bps
        } else {
            f64::INFINITY
        }
    }

    pub fn rsu_upload_energy_j(&self, n: usize) -> f64 {
        self.upload_energy_j(n, self.tvs[n].v2i_rate_bps)
    }

    pub fn fv_upload_energy_j(&self, n: usize, m: usize) -> f64 {
        self.fv_link(n, m)
            .map_or(f64::INFINITY, |l| self.upload_energy_j(n, l.rate_bps))
    }

    pub fn tv_energy_ok(&self, energy_j: f64) -> bool {
        energy_j <= self.cfg.compute.e_max_tv_j
    }

    /// SP1 at RSU `k` over `tvs`, energy budget split evenly. Returns the
    /// granted frequency per entry of `tvs`.
    pub fn solve_rsu(&self, k: usize, tvs: &[usize]) -> Vec<Option<f64>> {
        if tvs.is_empty() {
            return Vec::new();
        }
        let server = &self.scenario.servers[k];
        let cap = server.e_max_j / tvs.len() as f64;
        let request = AllocationRequest {
            tasks: tvs
                .iter()
                .map(|&n| AllocationTask {
                    id: n,
                    cycles: self.tvs[n].task.cycles,
                    deadline_slack_s: self.rsu_slack_s(n, k),
                    energy_cap_j: cap,
                })
                .collect(),
            f_max_hz: server.f_max_hz,
            kappa: server.kappa,
        };
        solve_sp1(&request)
            .allocations
            .iter()
            .map(|a| a.hz())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::generate_scenario;

    #[test]
    fn ring_distance_wraps() {
        assert_eq!(road_distance([2990.0, 0.0], [10.0, 0.0], 3000.0), 20.0);
        assert_eq!(
            road_distance([100.0, 0.0], [400.0, 4.0], 3000.0),
            300.0f64.hypot(4.0)
        );
    }

    #[test]
    fn context_is_reproducible() {
        let cfg = ScenarioConfig::default();
        let sc = generate_scenario(&cfg).unwrap();
        let types = classify_fleet(&cfg, &sc);
        let a = SlotContext::new(3, &cfg, &sc, &sc.vehicles, &types);
        let b = SlotContext::new(3, &cfg, &sc, &sc.vehicles, &types);
        assert_eq!(a.tvs, b.tvs);
        let c = SlotContext::new(4, &cfg, &sc, &sc.vehicles, &types);
        assert_ne!(a.tvs[0].v2i_rate_bps, c.tvs[0].v2i_rate_bps);
        assert_eq!(types.types.len(), 3);
        for (n, tv) in a.tvs.iter().enumerate() {
            assert!(tv.v2i_rate_bps > 0.0);
            assert!(tv.nearest_rsu < 3);
            assert!(tv.fvs.iter().all(|l| l.distance_m <= cfg.tv_range_m));
            assert_eq!(a.menus[n].items.len(), 3);
        }
    }

    #[test]
    fn nearest_rsu_for_a_vehicle_at_400m() {
        let cfg = ScenarioConfig::default();
        let mut sc = generate_scenario(&cfg).unwrap();
        sc.vehicles[0].position_m = [400.0, 0.0];
        let types = classify_fleet(&cfg, &sc);
        let ctx = SlotContext::new(0, &cfg, &sc, &sc.vehicles, &types);
        assert_eq!(ctx.tvs[0].nearest_rsu, 0);
        assert_eq!(ctx.hops(0, 2), 2);
    }
}
