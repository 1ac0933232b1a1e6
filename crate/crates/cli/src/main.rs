use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use vfc_core::sweep::{self, SweepSpec};
use vfc_core::{run_detailed, Policy, RunOptions, ScenarioConfig};

mod plot;

/// Vehicular fog computing simulator.
#[derive(Debug, Parser)]
#[command(name = "vfc-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario under one policy.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        policy: String,
        /// Overrides the scenario's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for metrics.json and slots.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write the matching trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write every contract menu offered, as CSV.
        #[arg(long)]
        menus: Option<PathBuf>,
    },
    /// Sweep one parameter over policies and seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Comma-separated policy names; all policies when omitted.
        #[arg(long)]
        policies: Option<String>,
        /// Seeds per (value, policy), counted up from the scenario's rng_seed.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Plot one metric of a sweep CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Input { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(vfc_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input { .. } => 2,
            CliError::Invalid(_) => 3,
            CliError::Output { .. } | CliError::Core(_) => 1,
        }
    }

    /// Classifies a core error met while reading `path`.
    fn reading(path: &Path, e: vfc_core::Error) -> Self {
        match e {
            vfc_core::Error::Io(source) => CliError::Input {
                path: path.to_path_buf(),
                source,
            },
            other => CliError::from(other),
        }
    }
}

impl From<vfc_core::Error> for CliError {
    fn from(e: vfc_core::Error) -> Self {
        match e {
            e @ (vfc_core::Error::Config { .. } | vfc_core::Error::Parse(_)) => {
                CliError::Invalid(e.to_string())
            }
            other => CliError::Core(other),
        }
    }
}

fn output_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::from_path(path).map_err(|e| CliError::reading(path, e))
}

fn parse_policies(list: &str) -> Result<Vec<Policy>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Policy>().map_err(CliError::from))
        .collect()
}

fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Invalid(format!("`{s}` in --values is not a number")))
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(output_error(path))
}

fn cmd_run(
    config: &Path,
    policy: &str,
    seed: Option<u64>,
    out_dir: &Path,
    trace: Option<&Path>,
    menus: Option<&Path>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    let policy: Policy = policy.parse()?;
    if let Some(seed) = seed {
        cfg.rng_seed = seed;
    }
    let options = RunOptions {
        keep_trace: trace.is_some(),
        keep_menus: menus.is_some(),
    };
    let out = run_detailed(&cfg, policy, options)?;

    fs::create_dir_all(out_dir).map_err(output_error(out_dir))?;
    let metrics_path = out_dir.join("metrics.json");
    let mut json = serde_json::to_string_pretty(&out.metrics).expect("metrics serialize");
    json.push('\n');
    fs::write(&metrics_path, json).map_err(output_error(&metrics_path))?;

    let slots_path = out_dir.join("slots.csv");
    let mut w = csv::Writer::from_writer(create(&slots_path)?);
    for s in &out.metrics.series {
        w.serialize(s).map_err(|e| csv_output(&slots_path, e))?;
    }
    w.flush().map_err(output_error(&slots_path))?;

    if let Some(path) = trace {
        let mut w = create(path)?;
        for rec in &out.trace {
            serde_json::to_writer(&mut w, rec).expect("trace serializes");
            w.write_all(b"\n").map_err(output_error(path))?;
        }
        w.flush().map_err(output_error(path))?;
    }
    if let Some(path) = menus {
        let mut w = csv::Writer::from_writer(create(path)?);
        for rec in &out.menus {
            w.serialize(rec).map_err(|e| csv_output(path, e))?;
        }
        w.flush().map_err(output_error(path))?;
    }

    let m = &out.metrics;
    println!(
        "{} seed {}: delay {:.4} s, completion {:.4}, throughput {:.4e} b/s, fairness {:.4}, energy {:.4} J/slot, {} violations",
        m.policy,
        m.seed,
        m.avg_delay_s,
        m.completion_ratio,
        m.throughput_bps,
        m.jain_fairness,
        m.avg_energy_j,
        m.violations
    );
    Ok(())
}

fn csv_output(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Output {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Core(vfc_core::Error::Parse(format!("{other:?}"))),
    }
}

fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &str,
    policies: Option<&str>,
    seeds: usize,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let spec = SweepSpec {
        param: param.to_string(),
        values: parse_values(values)?,
        policies: match policies {
            Some(list) => parse_policies(list)?,
            None => Policy::ALL.to_vec(),
        },
        seeds,
    };
    spec.validate()?;
    // reject a bad key before any run starts
    for &v in &spec.values {
        cfg.with_param(param, v)?;
    }
    let rows = sweep::run_sweep(&cfg, &spec)?;
    let file = create(out)?;
    sweep::write_csv(file, &rows).map_err(|e| match e {
        vfc_core::Error::Io(source) => CliError::Output {
            path: out.to_path_buf(),
            source,
        },
        other => CliError::from(other),
    })?;
    println!("{} rows written to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_plot(input: &Path, metric: &str, out: &Path) -> Result<(), CliError> {
    if !sweep::METRICS.contains(&metric) {
        return Err(CliError::Invalid(format!(
            "unknown metric `{metric}`; valid metrics: {}",
            sweep::METRICS.join(", ")
        )));
    }
    let file = File::open(input).map_err(|source| CliError::Input {
        path: input.to_path_buf(),
        source,
    })?;
    let rows = sweep::read_csv(file).map_err(|e| CliError::reading(input, e))?;
    let series = sweep::summarize(&rows, metric)?;
    let svg = plot::render(&series, metric);
    fs::write(out, svg).map_err(output_error(out))?;
    println!("{} series plotted to {}", series.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            policy,
            seed,
            out_dir,
            trace,
            menus,
        } => cmd_run(
            config,
            policy,
            *seed,
            out_dir,
            trace.as_deref(),
            menus.as_deref(),
        ),
        Command::Sweep {
            config,
            param,
            values,
            policies,
            seeds,
            out,
        } => cmd_sweep(config, param, values, policies.as_deref(), *seeds, out),
        Command::Plot { input, metric, out } => cmd_plot(input, metric, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
