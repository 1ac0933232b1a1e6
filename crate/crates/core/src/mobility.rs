//! Gauss-Markov vehicle mobility.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::VehicleState;

/// Straight road: x runs along it and wraps, y stays within the carriageway.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Road {
    pub length_m: f64,
    pub width_m: f64,
}

/// Next velocity under the Gauss-Markov model,
/// `v' = a v + (1 - a) v_mean + sqrt(1 - a^2) w` with `w ~ N(0, sigma^2)` drawn
/// independently per axis.
pub fn step_velocity<R: Rng + ?Sized>(
    state: &VehicleState,
    alpha: f64,
    sigma_mps: [f64; 2],
    rng: &mut R,
) -> Result<[f64; 2]> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "memory level alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if sigma_mps.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Domain(
            "velocity standard deviation must be >= 0".into(),
        ));
    }
    let noise_gain = (1.0 - alpha * alpha).max(0.0).sqrt();
    let mut next = [0.0; 2];
    for axis in 0..2 {
        let z: f64 = StandardNormal.sample(rng);
        next[axis] = alpha * state.velocity_mps[axis]
            + (1.0 - alpha) * state.mean_velocity_mps[axis]
            + noise_gain * sigma_mps[axis] * z;
    }
    Ok(next)
}

/// Next position, `q' = q + v tau`, wrapped along the road and clamped across it.
pub fn step_position(state: &VehicleState, slot_s: f64, road: Road) -> [f64; 2] {
    let x = state.position_m[0] + state.velocity_mps[0] * slot_s;
    let y = state.position_m[1] + state.velocity_mps[1] * slot_s;
    [x.rem_euclid(road.length_m), y.clamp(0.0, road.width_m)]
}

/// Advances one slot: position with the current velocity, then velocity.
pub fn step<R: Rng + ?Sized>(
    state: &mut VehicleState,
    alpha: f64,
    sigma_mps: [f64; 2],
    slot_s: f64,
    road: Road,
    rng: &mut R,
) -> Result<()> {
    state.position_m = step_position(state, slot_s, road);
    state.velocity_mps = step_velocity(state, alpha, sigma_mps, rng)?;
    Ok(())
}
