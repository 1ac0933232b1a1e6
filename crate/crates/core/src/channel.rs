//! Probabilistic LoS channel for V2I and V2V links.
//!
//! Path loss follows the 3GPP TR 38.901 UMi street-canyon model for V2I and the
//! ETSI TR 103 257 highway model for V2V. Carrier frequency enters the log
//! terms in GHz. The received power gain blends the LoS and NLoS branches by
//! the LoS probability, each branch being Nakagami-m small-scale fading on top
//! of the large-scale attenuation.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{ChannelParams, NakagamiParams};

const SPEED_OF_LIGHT_MPS: f64 = 3.0e8;

/// V2I path loss validity range on the horizontal distance.
pub const V2I_MIN_HORIZONTAL_M: f64 = 10.0;
pub const V2I_MAX_HORIZONTAL_M: f64 = 5000.0;
/// Below this separation the V2V log-distance terms are clamped.
pub const V2V_MIN_DISTANCE_M: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    V2i,
    V2v,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Visibility {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkClass {
    pub kind: LinkKind,
    pub visibility: Visibility,
}

impl LinkClass {
    pub const fn new(kind: LinkKind, visibility: Visibility) -> Self {
        LinkClass { kind, visibility }
    }
}

/// One realization of a link's channel. Branch arrays are `[LoS, NLoS]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub los_prob: f64,
    pub large_scale_db: [f64; 2],
    pub small_scale: [f64; 2],
    pub gain: f64,
}

/// Link endpoints: horizontal separation and antenna height difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub horizontal_m: f64,
    pub height_diff_m: f64,
}

impl Geometry {
    pub fn planar(distance_m: f64) -> Self {
        Geometry {
            horizontal_m: distance_m,
            height_diff_m: 0.0,
        }
    }

    pub fn distance_3d(&self) -> f64 {
        self.horizontal_m.hypot(self.height_diff_m)
    }
}

/// LoS probability of a V2I link at horizontal distance `d`.
pub fn los_probability_v2i(horizontal_distance_m: f64) -> f64 {
    let d = horizontal_distance_m;
    if d <= 18.0 {
        1.0
    } else {
        18.0 / d + (-d / 36.0).exp() * (1.0 - 18.0 / d)
    }
}

/// LoS probability of a V2V link at distance `d`.
pub fn los_probability_v2v(distance_m: f64) -> f64 {
    (1.05 * (-0.014 * distance_m).exp()).min(1.0)
}

/// Radio parameters that shape the large-scale path loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    pub carrier_hz: f64,
    pub rsu_antenna_m: f64,
    pub vehicle_antenna_m: f64,
}

impl PathLossParams {
    fn carrier_ghz(&self) -> f64 {
        self.carrier_hz / 1e9
    }

    /// `d' = 4 H_k H_n f_c / c`.
    pub fn breakpoint_m(&self) -> f64 {
        4.0 * self.rsu_antenna_m * self.vehicle_antenna_m * self.carrier_hz / SPEED_OF_LIGHT_MPS
    }
}

impl From<&ChannelParams> for PathLossParams {
    fn from(c: &ChannelParams) -> Self {
        PathLossParams {
            carrier_hz: c.carrier_hz,
            rsu_antenna_m: c.rsu_antenna_m,
            vehicle_antenna_m: c.vehicle_antenna_m,
        }
    }
}

fn clamp_v2i(horizontal_m: f64) -> f64 {
    if horizontal_m < V2I_MIN_HORIZONTAL_M || horizontal_m > V2I_MAX_HORIZONTAL_M {
        log::warn!(
            "V2I horizontal distance {horizontal_m:.2} m outside [{V2I_MIN_HORIZONTAL_M}, {V2I_MAX_HORIZONTAL_M}] m, clamping"
        );
    }
    horizontal_m.clamp(V2I_MIN_HORIZONTAL_M, V2I_MAX_HORIZONTAL_M)
}

fn v2i_los_db(d3: f64, dh: f64, p: &PathLossParams, shadow_db: f64) -> f64 {
    let fc = p.carrier_ghz();
    let bp = p.breakpoint_m();
    if dh <= bp {
        32.4 + 21.0 * d3.log10() + 20.0 * fc.log10() + shadow_db
    } else {
        let dh_ant = p.vehicle_antenna_m - p.rsu_antenna_m;
        32.4 + 40.0 * d3.log10() + 20.0 * fc.log10() - 9.5 * (bp * bp + dh_ant * dh_ant).log10()
            + shadow_db
    }
}

/// Large-scale path loss in dB. `shadow_db` is the V2I LoS shadow fading
/// realization (ignored for V2V). Distances outside a formula's validity range
/// are clamped to the nearest valid value.
pub fn large_scale_db(
    link: LinkClass,
    distance_3d_m: f64,
    horizontal_distance_m: f64,
    params: &PathLossParams,
    shadow_db: f64,
) -> f64 {
    let fc = params.carrier_ghz();
    match link.kind {
        LinkKind::V2i => {
            let dh = clamp_v2i(horizontal_distance_m);
            let vertical = (distance_3d_m.powi(2) - horizontal_distance_m.powi(2))
                .max(0.0)
                .sqrt();
            let d3 = dh.hypot(vertical);
            let los = v2i_los_db(d3, dh, params, shadow_db);
            match link.visibility {
                Visibility::Los => los,
                Visibility::Nlos => {
                    let nlos = 35.3 * d3.log10() + 22.4 + 21.3 * fc.log10()
                        - 0.3 * (params.vehicle_antenna_m - 1.5);
                    los.max(nlos)
                }
            }
        }
        LinkKind::V2v => {
            let d = distance_3d_m.max(V2V_MIN_DISTANCE_M);
            match link.visibility {
                Visibility::Los => 38.77 + 16.7 * d.log10() + 18.2 * fc.log10(),
                Visibility::Nlos => 36.85 + 30.0 * d.log10() + 18.9 * fc.log10(),
            }
        }
    }
}

/// Draws a Nakagami-m amplitude whose square has mean `mean_power`.
///
/// `|h|^2` is Gamma distributed with shape `m` and scale `mean_power / m`.
pub fn sample_nakagami<R: Rng + ?Sized>(m_param: f64, mean_power: f64, rng: &mut R) -> f64 {
    assert!(m_param >= 0.5, "Nakagami m must be >= 0.5, got {m_param}");
    assert!(mean_power > 0.0, "mean power must be > 0, got {mean_power}");
    let power: f64 = Gamma::new(m_param, mean_power / m_param)
        .expect("validated gamma parameters")
        .sample(rng);
    power.sqrt()
}

/// Blends the two branches: `P g_L + (1 - P) g_N`, `g_x = |h_x|^2 10^(-La_x / 10)`.
pub fn compose_gain(los_prob: f64, large_scale_db: [f64; 2], small_scale: [f64; 2]) -> f64 {
    let branch = |i: usize| small_scale[i] * small_scale[i] * 10f64.powf(-large_scale_db[i] / 10.0);
    los_prob * branch(0) + (1.0 - los_prob) * branch(1)
}

/// Everything needed to draw link gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub path_loss: PathLossParams,
    pub shadow_db: f64,
    pub nakagami: NakagamiParams,
}

impl From<&ChannelParams> for ChannelModel {
    fn from(c: &ChannelParams) -> Self {
        ChannelModel {
            path_loss: c.into(),
            shadow_db: c.shadow_db,
            nakagami: c.nakagami,
        }
    }
}

impl ChannelModel {
    fn nakagami_m(&self, link: LinkClass) -> f64 {
        let n = &self.nakagami;
        match (link.kind, link.visibility) {
            (LinkKind::V2i, Visibility::Los) => n.v2i_los,
            (LinkKind::V2i, Visibility::Nlos) => n.v2i_nlos,
            (LinkKind::V2v, Visibility::Los) => n.v2v_los,
            (LinkKind::V2v, Visibility::Nlos) => n.v2v_nlos,
        }
    }

    /// Height difference for a link of this kind; V2V links are planar.
    pub fn geometry(&self, kind: LinkKind, horizontal_m: f64) -> Geometry {
        match kind {
            LinkKind::V2i => Geometry {
                horizontal_m,
                height_diff_m: self.path_loss.rsu_antenna_m - self.path_loss.vehicle_antenna_m,
            },
            LinkKind::V2v => Geometry::planar(horizontal_m),
        }
    }

    /// Draws shadowing and small-scale fading for one link and returns the blended gain.
    pub fn channel_gain<R: Rng + ?Sized>(
        &self,
        kind: LinkKind,
        geometry: Geometry,
        rng: &mut R,
    ) -> ChannelDraw {
        let d3 = geometry.distance_3d();
        let los_prob = match kind {
            LinkKind::V2i => los_probability_v2i(geometry.horizontal_m),
            LinkKind::V2v => los_probability_v2v(d3),
        };
        let shadow = match kind {
            LinkKind::V2i if self.shadow_db > 0.0 => Normal::new(0.0, self.shadow_db)
                .expect("finite shadow std")
                .sample(rng),
            _ => 0.0,
        };
        let los = LinkClass::new(kind, Visibility::Los);
        let nlos = LinkClass::new(kind, Visibility::Nlos);
        let large = [
            large_scale_db(los, d3, geometry.horizontal_m, &self.path_loss, shadow),
            large_scale_db(nlos, d3, geometry.horizontal_m, &self.path_loss, shadow),
        ];
        let small = [
            sample_nakagami(self.nakagami_m(los), 1.0, rng),
            sample_nakagami(self.nakagami_m(nlos), 1.0, rng),
        ];
        ChannelDraw {
            los_prob,
            large_scale_db: large,
            small_scale: small,
            gain: compose_gain(los_prob, large, small),
        }
    }
}

/// Shannon rate `B log2(1 + p h / N0)` in bits per second.
pub fn transmission_rate(bandwidth_hz: f64, tx_power_w: f64, gain: f64, noise_w: f64) -> f64 {
    bandwidth_hz * (1.0 + tx_power_w * gain / noise_w).log2()
}
