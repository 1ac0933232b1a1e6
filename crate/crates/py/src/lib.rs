//! Python bindings. Structured results cross the boundary as JSON and come
//! out as plain dicts and lists, so the Python side needs no extra classes.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use vfc_core::allocation::{solve_sp1 as core_sp1, AllocationRequest, AllocationTask};
use vfc_core::contract::{self, ContractCost, FvType};
use vfc_core::sweep::{self, SweepSpec};
use vfc_core::{metrics, Policy, ScenarioConfig};

fn to_py(e: vfc_core::Error) -> PyErr {
    match e {
        vfc_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_policy(name: &str) -> PyResult<Policy> {
    name.parse().map_err(to_py)
}

/// A validated simulation scenario.
#[pyclass(name = "Scenario", module = "vfc_sim")]
pub struct PyScenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// The built-in default scenario.
    #[new]
    fn new() -> Self {
        PyScenario {
            cfg: ScenarioConfig::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        ScenarioConfig::from_toml_str(text)
            .map(|cfg| PyScenario { cfg })
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        ScenarioConfig::from_path(path)
            .map(|cfg| PyScenario { cfg })
            .map_err(to_py)
    }

    /// Copy with one sweepable parameter replaced.
    fn with_param(&self, key: &str, value: f64) -> PyResult<Self> {
        self.cfg
            .with_param(key, value)
            .map(|cfg| PyScenario { cfg })
            .map_err(to_py)
    }

    #[getter]
    fn rng_seed(&self) -> u64 {
        self.cfg.rng_seed
    }

    #[getter]
    fn n_tvs(&self) -> usize {
        self.cfg.n_tvs
    }

    #[getter]
    fn n_fvs(&self) -> usize {
        self.cfg.n_fvs
    }

    #[getter]
    fn horizon_slots(&self) -> usize {
        self.cfg.horizon_slots
    }

    /// Runs the scenario and returns the metrics as a dict.
    #[pyo3(signature = (policy, seed=None))]
    fn run<'py>(
        &self,
        py: Python<'py>,
        policy: &str,
        seed: Option<u64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let policy = parse_policy(policy)?;
        let mut cfg = self.cfg.clone();
        if let Some(seed) = seed {
            cfg.rng_seed = seed;
        }
        let m = py.detach(|| vfc_core::run(&cfg, policy)).map_err(to_py)?;
        to_dict(py, &m)
    }

    /// One row per (value, policy, seed), as a list of dicts.
    #[pyo3(signature = (param, values, policies=None, seeds=1))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        param: &str,
        values: Vec<f64>,
        policies: Option<Vec<String>>,
        seeds: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let policies = match policies {
            Some(names) => names
                .iter()
                .map(|n| parse_policy(n))
                .collect::<PyResult<_>>()?,
            None => Policy::ALL.to_vec(),
        };
        let spec = SweepSpec {
            param: param.to_string(),
            values,
            policies,
            seeds,
        };
        let rows = py
            .detach(|| sweep::run_sweep(&self.cfg, &spec))
            .map_err(to_py)?;
        to_dict(py, &rows)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n_tvs={}, n_fvs={}, n_rsus={}, horizon_slots={}, rng_seed={})",
            self.cfg.n_tvs,
            self.cfg.n_fvs,
            self.cfg.n_rsus,
            self.cfg.horizon_slots,
            self.cfg.rng_seed
        )
    }
}

/// Policy names accepted by `Scenario.run`.
#[pyfunction]
fn policies() -> Vec<&'static str> {
    Policy::ALL.iter().map(|p| p.name()).collect()
}

/// Splits an RSU's cycle budget across tasks.
///
/// `tasks` holds `(cycles, deadline_slack_s, energy_cap_j)` triples. Returns
/// `(allocations, multiplier)` where a rejected task gets `None`.
#[pyfunction]
fn solve_sp1(
    tasks: Vec<(f64, f64, f64)>,
    f_max_hz: f64,
    kappa: f64,
) -> PyResult<(Vec<Option<f64>>, f64)> {
    let request = sp1_request(&tasks, f_max_hz, kappa)?;
    let result = core_sp1(&request);
    Ok((
        result.allocations.iter().map(|a| a.hz()).collect(),
        result.multiplier,
    ))
}

fn sp1_request(
    tasks: &[(f64, f64, f64)],
    f_max_hz: f64,
    kappa: f64,
) -> PyResult<AllocationRequest> {
    let finite = |v: f64| v.is_finite();
    if !(f_max_hz >= 0.0 && finite(f_max_hz) && kappa > 0.0 && finite(kappa)) {
        return Err(PyValueError::new_err(
            "f_max_hz must be finite and non-negative, kappa finite and positive",
        ));
    }
    if tasks
        .iter()
        .any(|&(c, _, e)| !(c > 0.0 && finite(c) && e >= 0.0))
    {
        return Err(PyValueError::new_err(
            "every task needs positive cycles and a non-negative energy cap",
        ));
    }
    Ok(AllocationRequest {
        tasks: tasks
            .iter()
            .enumerate()
            .map(
                |(id, &(cycles, deadline_slack_s, energy_cap_j))| AllocationTask {
                    id,
                    cycles,
                    deadline_slack_s,
                    energy_cap_j,
                },
            )
            .collect(),
        f_max_hz,
        kappa,
    })
}

/// Optimal contract menu for FV types given as `(theta, f_cap, count)`,
/// sorted by ascending theta. Returns a list of `(f, w)` items.
#[pyfunction]
#[pyo3(signature = (types, price, energy_cost=1.0, kappa=1e-28, cycles=1e9))]
fn solve_contract(
    types: Vec<(f64, f64, f64)>,
    price: f64,
    energy_cost: f64,
    kappa: f64,
    cycles: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let types: Vec<FvType> = types
        .into_iter()
        .map(|(theta, f_cap, count)| FvType {
            theta,
            f_cap,
            count,
        })
        .collect();
    let cost = ContractCost {
        energy_cost,
        kappa,
        cycles,
    };
    let menu = contract::solve_contract(&types, &cost, price).map_err(to_py)?;
    Ok(menu.items.iter().map(|i| (i.f, i.w)).collect())
}

/// Jain's fairness index of a non-negative sequence.
#[pyfunction]
fn jain_fairness(x: Vec<f64>) -> f64 {
    metrics::jain_fairness(&x)
}

#[pymodule]
fn vfc_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(policies, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sp1, m)?)?;
    m.add_function(wrap_pyfunction!(solve_contract, m)?)?;
    m.add_function(wrap_pyfunction!(jain_fairness, m)?)?;
    m.add("METRICS", sweep::METRICS.to_vec())?;
    Ok(())
}
