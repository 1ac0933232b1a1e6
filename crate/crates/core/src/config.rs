//! Scenario configuration.
//!
//! The on-disk format is TOML with a handful of nested tables. Values are
//! written in the units people usually quote for vehicular networks (KB, MHz,
//! GHz, dBm) and converted to SI once, when the file is ingested. Every key is
//! optional; missing keys take the default scenario value. Unknown keys are
//! rejected.
//!
//! ```toml
//! rng_seed = 7
//! n_tvs = 20
//!
//! [task]
//! size_kb = [300.0, 1000.0]
//!
//! [contract]
//! types = 3
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KB_BITS: f64 = 8.0 * 1024.0;
const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Closed interval used for uniform draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Span { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Span { lo: v, hi: v }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn scaled(self, k: f64) -> Self {
        Span::new(self.lo * k, self.hi * k)
    }
}

/// Task distribution, SI units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskParams {
    pub input_bits: Span,
    /// Output size as a fraction of the input size.
    pub output_ratio: Span,
    pub cycles_per_bit: Span,
    pub deadline_s: Span,
}

/// Nakagami shape parameter per link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NakagamiParams {
    pub v2i_los: f64,
    pub v2i_nlos: f64,
    pub v2v_los: f64,
    pub v2v_nlos: f64,
}

impl Default for NakagamiParams {
    fn default() -> Self {
        NakagamiParams {
            v2i_los: 3.0,
            v2i_nlos: 1.0,
            v2v_los: 2.0,
            v2v_nlos: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelParams {
    pub bandwidth_hz: Span,
    pub tx_power_w: Span,
    pub noise_w: f64,
    pub carrier_hz: f64,
    /// Standard deviation of the V2I LoS shadow fading term.
    pub shadow_db: f64,
    pub rsu_antenna_m: f64,
    pub vehicle_antenna_m: f64,
    pub nakagami: NakagamiParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobilityParams {
    pub alpha: f64,
    pub mean_speed_mps: f64,
    pub sigma_mps: f64,
    /// Lateral velocity spread; the lateral mean is zero.
    pub sigma_y_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComputeParams {
    pub tv_hz: Span,
    pub fv_hz: Span,
    pub rsu_hz: f64,
    pub fiber_rate_bps: f64,
    pub kappa_tv: f64,
    pub kappa_fv: f64,
    pub kappa_rsu: f64,
    pub e_max_tv_j: f64,
    pub e_max_fv_j: f64,
    pub e_max_rsu_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractParams {
    pub types: usize,
    /// Type probabilities, one per type, summing to one.
    pub type_probs: Vec<f64>,
    /// Range of the willingness factor drawn once per FV.
    pub willingness: Span,
    /// Unit energy cost `e`.
    pub energy_cost: f64,
    /// Unit resource price `c`, per GHz.
    pub price_per_ghz: f64,
}

/// Keys accepted by [`ScenarioConfig::with_param`].
pub const SWEEP_KEYS: &[&str] = &[
    "n_tvs",
    "n_fvs",
    "n_rsus",
    "horizon_slots",
    "rng_seed",
    "tv_range_m",
    "task_kb",
    "rsu_ghz",
];

/// Fully validated scenario, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub rng_seed: u64,
    pub road_length_m: f64,
    pub road_width_m: f64,
    pub n_tvs: usize,
    pub n_fvs: usize,
    pub n_rsus: usize,
    pub tv_range_m: f64,
    pub slot_s: f64,
    pub horizon_slots: usize,
    pub task: TaskParams,
    pub channel: ChannelParams,
    pub mobility: MobilityParams,
    pub compute: ComputeParams,
    pub contract: ContractParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioFile::default()
            .into_config()
            .expect("default scenario is valid")
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            // toml reports unknown keys as a parse error; surface the key when we can.
            Error::Parse(e.message().to_string())
        })?;
        file.into_config()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Coverage radius of each RSU; segments are equal so coverage never overlaps.
    pub fn rsu_coverage_m(&self) -> f64 {
        self.road_length_m / (2.0 * self.n_rsus.max(1) as f64)
    }

    /// Re-runs the ingestion checks on a config built or edited in code.
    pub fn validate(&self) -> Result<()> {
        self.to_file().into_config().map(|_| ())
    }

    /// Copy with one sweepable parameter replaced. `task_kb` pins the task
    /// size to a single value.
    pub fn with_param(&self, key: &str, value: f64) -> Result<Self> {
        let count = |v: f64| -> Result<usize> {
            if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(
                    key,
                    format!("expected a non-negative integer, got {v}"),
                ))
            }
        };
        let mut file = self.to_file();
        match key {
            "n_tvs" => file.n_tvs = count(value)?,
            "n_fvs" => file.n_fvs = count(value)?,
            "n_rsus" => file.n_rsus = count(value)?,
            "horizon_slots" => file.horizon_slots = count(value)?,
            "rng_seed" | "seed" => file.rng_seed = count(value)? as u64,
            "tv_range_m" => file.tv_range_m = value,
            "task_kb" => file.task.size_kb = [value, value],
            "rsu_ghz" => file.compute.rsu_ghz = value,
            _ => {
                return Err(Error::config(
                    key,
                    format!(
                        "not a sweepable parameter (expected one of {})",
                        SWEEP_KEYS.join(", ")
                    ),
                ))
            }
        }
        let mut out = file.into_config()?;
        // keep exact SI values for everything not overridden
        if key != "task_kb" {
            out.task = self.task.clone();
        }
        out.channel = self.channel.clone();
        if key != "rsu_ghz" {
            out.compute = self.compute.clone();
        }
        out.contract = self.contract.clone();
        out.mobility = self.mobility.clone();
        Ok(out)
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_slots as f64 * self.slot_s
    }

    /// Rebuilds the file representation, e.g. to apply a sweep override.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            rng_seed: self.rng_seed,
            road_length_m: self.road_length_m,
            road_width_m: self.road_width_m,
            n_tvs: self.n_tvs,
            n_fvs: self.n_fvs,
            n_rsus: self.n_rsus,
            tv_range_m: self.tv_range_m,
            slot_s: self.slot_s,
            horizon_slots: self.horizon_slots,
            task: TaskFile {
                size_kb: pair(self.task.input_bits.scaled(1.0 / KB_BITS)),
                output_ratio: pair(self.task.output_ratio),
                cycles_per_bit: pair(self.task.cycles_per_bit),
                deadline_s: pair(self.task.deadline_s),
            },
            channel: ChannelFile {
                bandwidth_mhz: pair(self.channel.bandwidth_hz.scaled(1.0 / MHZ)),
                tx_power_dbm: [
                    watts_to_dbm(self.channel.tx_power_w.lo),
                    watts_to_dbm(self.channel.tx_power_w.hi),
                ],
                noise_dbm: watts_to_dbm(self.channel.noise_w),
                carrier_ghz: self.channel.carrier_hz / GHZ,
                shadow_db: self.channel.shadow_db,
                rsu_antenna_m: self.channel.rsu_antenna_m,
                vehicle_antenna_m: self.channel.vehicle_antenna_m,
                nakagami: self.channel.nakagami,
            },
            mobility: MobilityFile {
                alpha: self.mobility.alpha,
                mean_speed_mps: self.mobility.mean_speed_mps,
                sigma_mps: self.mobility.sigma_mps,
                sigma_y_mps: self.mobility.sigma_y_mps,
            },
            compute: ComputeFile {
                tv_ghz: pair(self.compute.tv_hz.scaled(1.0 / GHZ)),
                fv_ghz: pair(self.compute.fv_hz.scaled(1.0 / GHZ)),
                rsu_ghz: self.compute.rsu_hz / GHZ,
                fiber_gbps: self.compute.fiber_rate_bps / GHZ,
                kappa_tv: self.compute.kappa_tv,
                kappa_fv: self.compute.kappa_fv,
                kappa_rsu: self.compute.kappa_rsu,
                e_max_tv_j: self.compute.e_max_tv_j,
                e_max_fv_j: self.compute.e_max_fv_j,
                e_max_rsu_j: self.compute.e_max_rsu_j,
            },
            contract: ContractFile {
                types: self.contract.types,
                type_probs: Some(self.contract.type_probs.clone()),
                willingness: pair(self.contract.willingness),
                energy_cost: self.contract.energy_cost,
                price_per_ghz: self.contract.price_per_ghz,
            },
        }
    }
}

fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn pair(s: Span) -> [f64; 2] {
    [s.lo, s.hi]
}

/// On-disk scenario, in the units people write (KB, MHz, dBm, GHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub rng_seed: u64,
    pub road_length_m: f64,
    pub road_width_m: f64,
    pub n_tvs: usize,
    pub n_fvs: usize,
    pub n_rsus: usize,
    pub tv_range_m: f64,
    pub slot_s: f64,
    pub horizon_slots: usize,
    pub task: TaskFile,
    pub channel: ChannelFile,
    pub mobility: MobilityFile,
    pub compute: ComputeFile,
    pub contract: ContractFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskFile {
    pub size_kb: [f64; 2],
    pub output_ratio: [f64; 2],
    pub cycles_per_bit: [f64; 2],
    pub deadline_s: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelFile {
    pub bandwidth_mhz: [f64; 2],
    pub tx_power_dbm: [f64; 2],
    pub noise_dbm: f64,
    pub carrier_ghz: f64,
    pub shadow_db: f64,
    pub rsu_antenna_m: f64,
    pub vehicle_antenna_m: f64,
    pub nakagami: NakagamiParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityFile {
    pub alpha: f64,
    pub mean_speed_mps: f64,
    pub sigma_mps: f64,
    pub sigma_y_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComputeFile {
    pub tv_ghz: [f64; 2],
    pub fv_ghz: [f64; 2],
    pub rsu_ghz: f64,
    pub fiber_gbps: f64,
    pub kappa_tv: f64,
    pub kappa_fv: f64,
    pub kappa_rsu: f64,
    pub e_max_tv_j: f64,
    pub e_max_fv_j: f64,
    pub e_max_rsu_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractFile {
    pub types: usize,
    /// Defaults to uniform over `types`.
    pub type_probs: Option<Vec<f64>>,
    pub willingness: [f64; 2],
    pub energy_cost: f64,
    pub price_per_ghz: f64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        ScenarioFile {
            rng_seed: 1,
            road_length_m: 3000.0,
            road_width_m: 10.0,
            n_tvs: 20,
            n_fvs: 12,
            n_rsus: 3,
            tv_range_m: 200.0,
            slot_s: 1.0,
            horizon_slots: 40,
            task: TaskFile::default(),
            channel: ChannelFile::default(),
            mobility: MobilityFile::default(),
            compute: ComputeFile::default(),
            contract: ContractFile::default(),
        }
    }
}

impl Default for TaskFile {
    fn default() -> Self {
        TaskFile {
            size_kb: [300.0, 1000.0],
            output_ratio: [0.01, 0.1],
            cycles_per_bit: [100.0, 200.0],
            deadline_s: [0.5, 5.0],
        }
    }
}

impl Default for ChannelFile {
    fn default() -> Self {
        ChannelFile {
            bandwidth_mhz: [20.0, 40.0],
            tx_power_dbm: [20.0, 50.0],
            noise_dbm: -98.0,
            carrier_ghz: 5.9,
            shadow_db: 4.0,
            rsu_antenna_m: 10.0,
            vehicle_antenna_m: 1.5,
            nakagami: NakagamiParams::default(),
        }
    }
}

impl Default for MobilityFile {
    fn default() -> Self {
        MobilityFile {
            alpha: 0.9,
            mean_speed_mps: 25.0,
            sigma_mps: 5.0,
            sigma_y_mps: 0.1,
        }
    }
}

impl Default for ComputeFile {
    fn default() -> Self {
        ComputeFile {
            tv_ghz: [0.5, 1.0],
            fv_ghz: [1.0, 10.0],
            rsu_ghz: 30.0,
            fiber_gbps: 1.0,
            kappa_tv: 1e-28,
            kappa_fv: 1e-28,
            kappa_rsu: 1e-28,
            e_max_tv_j: 30.0,
            e_max_fv_j: 10.0,
            e_max_rsu_j: 300.0,
        }
    }
}

impl Default for ContractFile {
    fn default() -> Self {
        ContractFile {
            types: 3,
            type_probs: None,
            willingness: [0.5, 1.5],
            energy_cost: 1.0,
            price_per_ghz: 1.0,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::config(
            field,
            format!("must be finite and >= 0, got {v}"),
        ))
    }
}

fn span(field: &str, v: [f64; 2], allow_zero: bool) -> Result<Span> {
    let check = if allow_zero { non_negative } else { positive };
    let lo = check(field, v[0])?;
    let hi = check(field, v[1])?;
    if lo > hi {
        return Err(Error::config(
            field,
            format!("lower bound {lo} exceeds upper bound {hi}"),
        ));
    }
    Ok(Span::new(lo, hi))
}

impl ScenarioFile {
    /// Validates and converts to SI.
    pub fn into_config(self) -> Result<ScenarioConfig> {
        let road_length_m = positive("road_length_m", self.road_length_m)?;
        let road_width_m = non_negative("road_width_m", self.road_width_m)?;
        if self.n_rsus == 0 {
            return Err(Error::config("n_rsus", "must be at least 1"));
        }
        let tv_range_m = positive("tv_range_m", self.tv_range_m)?;
        let slot_s = positive("slot_s", self.slot_s)?;

        let t = &self.task;
        let task = TaskParams {
            input_bits: span("task.size_kb", t.size_kb, false)?.scaled(KB_BITS),
            output_ratio: span("task.output_ratio", t.output_ratio, true)?,
            cycles_per_bit: span("task.cycles_per_bit", t.cycles_per_bit, false)?,
            deadline_s: span("task.deadline_s", t.deadline_s, false)?,
        };

        let c = &self.channel;
        let power = c.tx_power_dbm;
        if !(power[0].is_finite() && power[1].is_finite()) || power[0] > power[1] {
            return Err(Error::config(
                "channel.tx_power_dbm",
                "must be a finite ascending pair",
            ));
        }
        if !c.noise_dbm.is_finite() {
            return Err(Error::config("channel.noise_dbm", "must be finite"));
        }
        let n = c.nakagami;
        for (name, m) in [
            ("channel.nakagami.v2i_los", n.v2i_los),
            ("channel.nakagami.v2i_nlos", n.v2i_nlos),
            ("channel.nakagami.v2v_los", n.v2v_los),
            ("channel.nakagami.v2v_nlos", n.v2v_nlos),
        ] {
            if !(m.is_finite() && m >= 0.5) {
                return Err(Error::config(
                    name,
                    format!("Nakagami m must be >= 0.5, got {m}"),
                ));
            }
        }
        let channel = ChannelParams {
            bandwidth_hz: span("channel.bandwidth_mhz", c.bandwidth_mhz, false)?.scaled(MHZ),
            tx_power_w: Span::new(dbm_to_watts(power[0]), dbm_to_watts(power[1])),
            noise_w: dbm_to_watts(c.noise_dbm),
            carrier_hz: positive("channel.carrier_ghz", c.carrier_ghz)? * GHZ,
            shadow_db: non_negative("channel.shadow_db", c.shadow_db)?,
            rsu_antenna_m: positive("channel.rsu_antenna_m", c.rsu_antenna_m)?,
            vehicle_antenna_m: positive("channel.vehicle_antenna_m", c.vehicle_antenna_m)?,
            nakagami: n,
        };

        let m = &self.mobility;
        if !(m.alpha.is_finite() && (0.0..=1.0).contains(&m.alpha)) {
            return Err(Error::config(
                "mobility.alpha",
                format!("must lie in [0, 1], got {}", m.alpha),
            ));
        }
        let mobility = MobilityParams {
            alpha: m.alpha,
            mean_speed_mps: non_negative("mobility.mean_speed_mps", m.mean_speed_mps)?,
            sigma_mps: non_negative("mobility.sigma_mps", m.sigma_mps)?,
            sigma_y_mps: non_negative("mobility.sigma_y_mps", m.sigma_y_mps)?,
        };

        let k = &self.compute;
        let compute = ComputeParams {
            tv_hz: span("compute.tv_ghz", k.tv_ghz, false)?.scaled(GHZ),
            fv_hz: span("compute.fv_ghz", k.fv_ghz, false)?.scaled(GHZ),
            rsu_hz: positive("compute.rsu_ghz", k.rsu_ghz)? * GHZ,
            fiber_rate_bps: positive("compute.fiber_gbps", k.fiber_gbps)? * GHZ,
            kappa_tv: positive("compute.kappa_tv", k.kappa_tv)?,
            kappa_fv: positive("compute.kappa_fv", k.kappa_fv)?,
            kappa_rsu: positive("compute.kappa_rsu", k.kappa_rsu)?,
            e_max_tv_j: positive("compute.e_max_tv_j", k.e_max_tv_j)?,
            e_max_fv_j: positive("compute.e_max_fv_j", k.e_max_fv_j)?,
            e_max_rsu_j: positive("compute.e_max_rsu_j", k.e_max_rsu_j)?,
        };

        let ct = &self.contract;
        if ct.types == 0 {
            return Err(Error::config("contract.types", "L must be at least 1"));
        }
        let type_probs = match &ct.type_probs {
            None => vec![1.0 / ct.types as f64; ct.types],
            Some(p) => {
                if p.len() != ct.types {
                    return Err(Error::config(
                        "contract.type_probs",
                        format!("expected {} entries, got {}", ct.types, p.len()),
                    ));
                }
                if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                    return Err(Error::config("contract.type_probs", "entries must be >= 0"));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::config(
                        "contract.type_probs",
                        format!("must sum to 1, got {sum}"),
                    ));
                }
                p.clone()
            }
        };
        let contract = ContractParams {
            types: ct.types,
            type_probs,
            willingness: span("contract.willingness", ct.willingness, false)?,
            energy_cost: positive("contract.energy_cost", ct.energy_cost)?,
            price_per_ghz: positive("contract.price_per_ghz", ct.price_per_ghz)?,
        };

        Ok(ScenarioConfig {
            rng_seed: self.rng_seed,
            road_length_m,
            road_width_m,
            n_tvs: self.n_tvs,
            n_fvs: self.n_fvs,
            n_rsus: self.n_rsus,
            tv_range_m,
            slot_s,
            horizon_slots: self.horizon_slots,
            task,
            channel,
            mobility,
            compute,
            contract,
        })
    }
}
