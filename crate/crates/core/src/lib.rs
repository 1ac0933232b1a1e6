//! Time-slotted vehicular fog computing simulator.
//!
//! Task vehicles (TVs) generate one job per slot and may run it locally or
//! offload it to a road side unit (RSU) or a fog vehicle (FV). The JCRATOA
//! policy combines convex RSU allocation ([`allocation`]), a contract menu
//! for FVs ([`contract`]) and deferred-acceptance matching ([`matching`]);
//! [`baselines`] holds the comparison policies and [`engine`] runs the loop.

pub mod allocation;
pub mod assignment;
pub mod baselines;
pub mod channel;
pub mod compute;
pub mod config;
pub mod context;
pub mod contract;
pub mod engine;
pub mod error;
pub mod jcratoa;
pub mod matching;
pub mod metrics;
pub mod mobility;
pub mod policy;
pub mod rng;
pub mod scenario;
pub mod sweep;
pub mod types;

pub use config::ScenarioConfig;
pub use engine::{run, run_detailed, RunOptions, RunOutput};
pub use error::{Error, Result};
pub use metrics::RunMetrics;
pub use policy::Policy;
