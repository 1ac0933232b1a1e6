//! Parameter sweeps: one run per (value, policy, seed), fanned out across
//! threads, with a fixed CSV layout and per-policy summaries for plotting.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::engine::run;
use crate::error::{Error, Result};
use crate::metrics::RunMetrics;
use crate::policy::Policy;

/// Column order of a sweep CSV.
pub const CSV_COLUMNS: [&str; 8] = [
    "param_value",
    "policy",
    "seed",
    "avg_delay_s",
    "completion_ratio",
    "throughput_bps",
    "jain_fairness",
    "avg_energy_j",
];

/// Metrics a sweep row carries, in CSV order.
pub const METRICS: [&str; 5] = [
    "avg_delay_s",
    "completion_ratio",
    "throughput_bps",
    "jain_fairness",
    "avg_energy_j",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
    pub policies: Vec<Policy>,
    /// Repetitions per (value, policy); seeds are `base + 0..seeds`.
    pub seeds: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config {
                field: "values".into(),
                reason: "the value list is empty".into(),
            });
        }
        if self.policies.is_empty() {
            return Err(Error::Config {
                field: "policies".into(),
                reason: "no policy given".into(),
            });
        }
        if self.seeds == 0 {
            return Err(Error::Config {
                field: "seeds".into(),
                reason: "need at least one seed".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub policy: String,
    pub seed: u64,
    pub avg_delay_s: f64,
    pub completion_ratio: f64,
    pub throughput_bps: f64,
    pub jain_fairness: f64,
    pub avg_energy_j: f64,
}

impl SweepRow {
    pub fn new(param_value: f64, m: &RunMetrics) -> Self {
        SweepRow {
            param_value,
            policy: m.policy.clone(),
            seed: m.seed,
            avg_delay_s: m.avg_delay_s,
            completion_ratio: m.completion_ratio,
            throughput_bps: m.throughput_bps,
            jain_fairness: m.jain_fairness,
            avg_energy_j: m.avg_energy_j,
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "avg_delay_s" => self.avg_delay_s,
            "completion_ratio" => self.completion_ratio,
            "throughput_bps" => self.throughput_bps,
            "jain_fairness" => self.jain_fairness,
            "avg_energy_j" => self.avg_energy_j,
            _ => return None,
        })
    }
}

/// Runs every (value, policy, seed) combination of `spec` on top of `base`.
/// Rows come back ordered by value, then policy, then seed.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &value in &spec.values {
        let cfg = base.with_param(&spec.param, value)?;
        for &policy in &spec.policies {
            for i in 0..spec.seeds {
                jobs.push((value, policy, cfg.rng_seed + i as u64));
            }
        }
    }
    jobs.par_iter()
        .map(|&(value, policy, seed)| {
            let cfg = base.with_param(&spec.param, value)?;
            let cfg = ScenarioConfig {
                rng_seed: seed,
                ..cfg
            };
            run(&cfg, policy).map(|m| SweepRow::new(value, &m))
        })
        .collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_error)?;
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Parse(format!(
            "unexpected sweep header `{}` (expected `{}`)",
            headers.iter().collect::<Vec<_>>().join(","),
            CSV_COLUMNS.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Mean and standard error of one metric at one swept value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

/// Seed-averaged series of `metric` per policy, points sorted by x.
pub fn summarize(rows: &[SweepRow], metric: &str) -> Result<BTreeMap<String, Vec<SeriesPoint>>> {
    if !METRICS.contains(&metric) {
        return Err(Error::Config {
            field: "metric".into(),
            reason: format!("unknown metric `{metric}` (valid: {})", METRICS.join(", ")),
        });
    }
    let mut groups: BTreeMap<&str, Vec<(f64, Vec<f64>)>> = BTreeMap::new();
    for row in rows {
        let series = groups.entry(&row.policy).or_default();
        let y = row.metric(metric).expect("metric name checked");
        match series.iter_mut().find(|(x, _)| *x == row.param_value) {
            Some((_, ys)) => ys.push(y),
            None => series.push((row.param_value, vec![y])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(policy, mut series)| {
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            let points = series
                .into_iter()
                .map(|(x, ys)| {
                    let n = ys.len();
                    let mean = ys.iter().sum::<f64>() / n as f64;
                    let std_err = if n > 1 {
                        let var =
                            ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                        (var / n as f64).sqrt()
                    } else {
                        0.0
                    };
                    SeriesPoint {
                        x,
                        mean,
                        std_err,
                        n,
                    }
                })
                .collect();
            (policy.to_string(), points)
        })
        .collect())
}
