//! Run-level performance metrics.

use serde::{Deserialize, Serialize};

/// Jain's index `(sum x)^2 / (N sum x^2)`; an all-zero or empty input counts
/// as perfectly fair.
pub fn jain_fairness(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || sq == 0.0 {
        1.0
    } else {
        sum * sum / (x.len() as f64 * sq)
    }
}

/// Successfully delivered input bits per second over the horizon.
pub fn throughput(successful_bits: f64, horizon_s: f64) -> f64 {
    if horizon_s > 0.0 {
        successful_bits / horizon_s
    } else {
        0.0
    }
}

pub fn completion_ratio(successes: usize, tasks: usize) -> f64 {
    if tasks == 0 {
        0.0
    } else {
        successes as f64 / tasks as f64
    }
}

/// One slot's contribution to the run metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: usize,
    pub avg_delay_s: f64,
    pub completion_ratio: f64,
    pub throughput_bps: f64,
    pub energy_j: f64,
    pub jain_fairness: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub policy: String,
    pub seed: u64,
    pub n_tvs: usize,
    pub slots: usize,
    /// Mean completion delay over every task of the run.
    pub avg_delay_s: f64,
    pub completion_ratio: f64,
    pub throughput_bps: f64,
    /// Jain's index over each TV's total allocated CPU frequency.
    pub jain_fairness: f64,
    /// Energy spent by TVs and servers per slot.
    pub avg_energy_j: f64,
    pub violations: usize,
    pub blocking_pairs: usize,
    pub series: Vec<SlotMetrics>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_examples() {
        assert_eq!(jain_fairness(&[2.0, 2.0, 2.0]), 1.0);
        assert!((jain_fairness(&[0.0, 0.0, 5.0, 0.0]) - 0.25).abs() < 1e-15);
        assert!((jain_fairness(&[1.0, 2.0, 3.0]) - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(jain_fairness(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput(0.0, 40.0), 0.0);
        assert_eq!(throughput(8e6, 40.0), 2e5);
        assert_eq!(throughput(8e6, 80.0), 1e5);
    }

    #[test]
    fn completion_examples() {
        assert_eq!(completion_ratio(40, 40), 1.0);
        assert_eq!(completion_ratio(0, 40), 0.0);
        assert_eq!(completion_ratio(30, 40), 0.75);
        assert_eq!(completion_ratio(0, 0), 0.0);
    }
}
