//! Delay and energy accounting for local, RSU and FV execution.
//!
//! Result download is not modelled; outputs are assumed small next to inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Destination, Task};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub upload_s: f64,
    pub relay_s: f64,
    pub compute_s: f64,
    pub total_s: f64,
}

impl DelayBreakdown {
    fn new(upload_s: f64, relay_s: f64, compute_s: f64) -> Self {
        DelayBreakdown {
            upload_s,
            relay_s,
            compute_s,
            total_s: upload_s + relay_s + compute_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub tv_j: f64,
    pub server_j: f64,
}

pub fn local_delay(task: &Task, f_tv_hz: f64) -> f64 {
    task.cycles / f_tv_hz
}

/// Delay of a task served by an RSU `hops` fiber hops away from the RSU the
/// TV uploads to. The relay term carries the input data over fiber.
pub fn rsu_offload_delay(
    task: &Task,
    rate_to_nearest_bps: f64,
    hops: u32,
    fiber_rate_bps: f64,
    f_alloc_hz: f64,
) -> Result<DelayBreakdown> {
    if !(rate_to_nearest_bps > 0.0) {
        return Err(Error::Unreachable);
    }
    let relay = hops as f64 * task.input_bits / fiber_rate_bps;
    Ok(DelayBreakdown::new(
        task.input_bits / rate_to_nearest_bps,
        relay,
        task.cycles / f_alloc_hz,
    ))
}

pub fn fv_offload_delay(task: &Task, rate_bps: f64, f_alloc_hz: f64) -> Result<DelayBreakdown> {
    if !(rate_bps > 0.0) {
        return Err(Error::Unreachable);
    }
    Ok(DelayBreakdown::new(
        task.input_bits / rate_bps,
        0.0,
        task.cycles / f_alloc_hz,
    ))
}

/// Delay of every destination a TV could pick in a slot; `None` marks an
/// unavailable destination.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateDelays {
    pub local_s: f64,
    pub rsu_s: Vec<Option<f64>>,
    pub fv_s: Vec<Option<f64>>,
}

/// Completion delay of the branch selected by `destination`.
pub fn total_delay(destination: Destination, delays: &CandidateDelays) -> Option<f64> {
    match destination {
        Destination::Local => Some(delays.local_s),
        Destination::Rsu(k) => delays.rsu_s.get(k).copied().flatten(),
        Destination::Fv(m) => delays.fv_s.get(m).copied().flatten(),
    }
}

/// Energy spent by the TV: computation when local, transmission otherwise.
pub fn tv_energy(
    destination: Destination,
    task: &Task,
    f_tv_hz: f64,
    kappa_tv: f64,
    tx_power_w: f64,
    rate_bps: f64,
) -> f64 {
    match destination {
        Destination::Local => kappa_tv * task.cycles * f_tv_hz * f_tv_hz,
        _ if rate_bps > 0.0 => tx_power_w * task.input_bits / rate_bps,
        _ => f64::INFINITY,
    }
}

/// Energy spent by a server executing `task` at `f_alloc_hz`.
pub fn server_energy(task: &Task, f_alloc_hz: f64, kappa_s: f64) -> f64 {
    kappa_s * task.cycles * f_alloc_hz * f_alloc_hz
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn task(input_bits: f64, cycles: f64) -> Task {
        Task::new(input_bits, 0.0, cycles, 10.0)
    }

    #[test]
    fn local_delay_examples() {
        assert_eq!(local_delay(&task(1.0, 1e9), 1e9), 1.0);
        assert_eq!(local_delay(&task(1.0, 2e9), 0.5e9), 4.0);
        assert_eq!(local_delay(&task(1.0, 5e8), 1e9), 0.5);
    }

    #[test]
    fn rsu_delay_examples() {
        let t = task(8e6, 1e9);
        let d = rsu_offload_delay(&t, 8e6, 0, 1e9, 10e9).unwrap();
        assert_eq!(d.relay_s, 0.0);
        assert!((d.total_s - 1.1).abs() < 1e-12);
        let d2 = rsu_offload_delay(&t, 8e6, 0, 1e9, 20e9).unwrap();
        assert_eq!(d2.upload_s, d.upload_s);
        assert_eq!(d2.relay_s, d.relay_s);
        assert!((d2.compute_s - d.compute_s / 2.0).abs() < 1e-15);
        let d3 = rsu_offload_delay(&t, 8e6, 2, 1e9, 10e9).unwrap();
        assert!((d3.relay_s - 2.0 * 8e6 / 1e9).abs() < 1e-15);
        assert!(matches!(
            rsu_offload_delay(&t, 0.0, 0, 1e9, 1e9),
            Err(Error::Unreachable)
        ));
    }

    #[test]
    fn fv_delay_examples() {
        let t = task(4e6, 1e9);
        assert!((fv_offload_delay(&t, 4e6, 2e9).unwrap().total_s - 1.5).abs() < 1e-12);
        assert!((fv_offload_delay(&t, 1e30, 2e9).unwrap().total_s - 0.5).abs() < 1e-12);
        let rsu = rsu_offload_delay(&t, 4e6, 0, 1e9, 2e9).unwrap();
        assert_eq!(rsu.total_s, fv_offload_delay(&t, 4e6, 2e9).unwrap().total_s);
        assert!(matches!(
            fv_offload_delay(&t, 0.0, 1e9),
            Err(Error::Unreachable)
        ));
    }

    #[test]
    fn total_delay_selects_branch() {
        let delays = CandidateDelays {
            local_s: 1.0,
            rsu_s: vec![Some(0.4), None],
            fv_s: vec![Some(0.7)],
        };
        assert_eq!(total_delay(Destination::Local, &delays), Some(1.0));
        assert_eq!(total_delay(Destination::Rsu(0), &delays), Some(0.4));
        assert_eq!(total_delay(Destination::Rsu(1), &delays), None);
        assert_eq!(total_delay(Destination::Fv(0), &delays), Some(0.7));
    }

    #[test]
    fn total_delay_equals_one_hot_expansion() {
        let delays = CandidateDelays {
            local_s: 1.3,
            rsu_s: vec![Some(0.4), Some(0.9)],
            fv_s: vec![Some(0.7), Some(0.2)],
        };
        let dests = [
            Destination::Local,
            Destination::Rsu(0),
            Destination::Rsu(1),
            Destination::Fv(0),
            Destination::Fv(1),
        ];
        let values = [1.3, 0.4, 0.9, 0.7, 0.2];
        for (i, &d) in dests.iter().enumerate() {
            let expansion: f64 = (0..dests.len())
                .map(|j| if j == i { 1.0 } else { 0.0 } * values[j])
                .sum();
            assert_eq!(total_delay(d, &delays), Some(expansion));
        }
    }

    #[test]
    fn energy_examples() {
        let t = task(1e6, 1e9);
        assert!((tv_energy(Destination::Local, &t, 1e9, 1e-28, 0.1, 1.0) - 0.1).abs() < 1e-15);
        assert!(
            (tv_energy(Destination::Rsu(0), &task(1e6, 1e9), 1e9, 1e-28, 0.1, 1e6) - 0.1).abs()
                < 1e-15
        );
        let e1 = tv_energy(Destination::Local, &t, 1e9, 1e-28, 0.1, 1.0);
        let e2 = tv_energy(Destination::Local, &t, 2e9, 1e-28, 0.1, 1.0);
        assert!((e2 / e1 - 4.0).abs() < 1e-12);
        assert!((server_energy(&t, 1e9, 1e-28) - 0.1).abs() < 1e-15);
        assert_eq!(server_energy(&t, 0.0, 1e-28), 0.0);
        assert!(
            (server_energy(&t, 2e9, 1e-28) / server_energy(&t, 1e9, 1e-28) - 4.0).abs() < 1e-12
        );
    }

    proptest! {
        #[test]
        fn delay_and_energy_monotone_in_frequency(
            bits in 1e5f64..1e7, cycles in 1e7f64..1e10, rate in 1e5f64..1e9, f in 1e8f64..3e10, k in 1.01f64..10.0
        ) {
            let t = task(bits, cycles);
            let lo = fv_offload_delay(&t, rate, f).unwrap().total_s;
            let hi = fv_offload_delay(&t, rate, k * f).unwrap().total_s;
            prop_assert!(hi <= lo);
            let ratio = server_energy(&t, 2.0 * f, 1e-28) / server_energy(&t, f, 1e-28);
            prop_assert!((ratio - 4.0).abs() < 1e-9);
            prop_assert!(server_energy(&t, k * f, 1e-28) > server_energy(&t, f, 1e-28));
        }
    }
}
