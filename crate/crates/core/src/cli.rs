// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 malformed input (topology or
//! scenario), 3 workload error (unknown client, gateway rejection).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::simnet::{compare, simulate, Mode, Scenario, ScenarioDoc, SimConfig, SimError};
use crate::topology::{load_graph, TopologyDoc, TopologyError};

#[derive(Debug, Parser)]
#[command(name = "ipicn", version, about = "IP-over-ICN simulator")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write its KPI report as JSON.
    Run(RunArgs),
    /// Load a topology and print a summary.
    Validate {
        topology: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Icn,
    Ip,
    Compare,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Topology document (JSON)
    #[arg(long)]
    pub topology: PathBuf,
    /// Scenario document (JSON)
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario's mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Overrides the scenario's seed (default 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report destination, replaced atomically
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a CSV event trace (of the ICN run when comparing).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// HTTP request coalescing window
    #[arg(long, default_value_t = crate::gateways::DEFAULT_WINDOW_US)]
    pub window_us: u64,
    /// Make control signalling instantaneous and free.
    #[arg(long)]
    pub ideal_control: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Run(SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Input(_) | CliError::Run(SimError::Topology(_)) => 2,
            CliError::Run(_) => 3,
        }
    }
}

/// Unreadable inputs are input errors; `Io` is reserved for writing results.
fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes through a sibling temporary file so readers never see a partial report.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let io_err = |source| CliError::Io { path: path.into(), source };
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

fn load_topology(path: &Path) -> Result<TopologyDoc, CliError> {
    TopologyDoc::from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn topology_input(path: &Path) -> impl Fn(TopologyError) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

pub fn run_cmd(args: &RunArgs) -> Result<(), CliError> {
    let topology = load_topology(&args.topology)?;
    let doc = ScenarioDoc::from_json(&read(&args.scenario)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.scenario.display())))?;
    let mut sc = Scenario::from_docs(topology, doc);
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    // reject a bad topology as input before any simulation starts
    load_graph(&sc.topology, sc.seed).map_err(topology_input(&args.topology))?;
    let mode = args.mode.unwrap_or(match sc.mode {
        Mode::Icn => ModeArg::Icn,
        Mode::IpBaseline => ModeArg::Ip,
    });
    let cfg = SimConfig {
        window_us: args.window_us,
        ideal_control: args.ideal_control,
        trace: args.trace.is_some(),
        ..SimConfig::default()
    };
    let (json, trace) = match mode {
        ModeArg::Icn | ModeArg::Ip => {
            sc.mode = if mode == ModeArg::Icn { Mode::Icn } else { Mode::IpBaseline };
            let out = simulate(&sc, &cfg).map_err(CliError::Run)?;
            if out.truncated {
                log::warn!("time limit reached with events outstanding");
            }
            (out.report.to_canonical_json(), out.trace_csv())
        }
        ModeArg::Compare => {
            let trace = if cfg.trace {
                simulate(&sc.clone().with_mode(Mode::Icn), &cfg).map_err(CliError::Run)?.trace_csv()
            } else {
                String::new()
            };
            (compare(&sc, &cfg).map_err(CliError::Run)?.to_canonical_json(), trace)
        }
    };
    write_atomic(&args.out, &json)?;
    if let Some(path) = &args.trace {
        write_atomic(path, &trace)?;
    }
    log::info!("wrote {}", args.out.display());
    Ok(())
}

/// Summary line printed by `validate`.
pub fn validate_cmd(path: &Path, seed: u64) -> Result<String, CliError> {
    let doc = load_topology(path)?;
    let g = load_graph(&doc, seed).map_err(topology_input(path))?;
    Ok(format!(
        "ok: {} nodes, {} links, {} naps, border {}, rendezvous at node {}",
        g.node_count(),
        g.links().len() / 2,
        g.naps().len(),
        g.border().map_or("none".to_string(), |b| format!("at node {}", b.node)),
        g.rv_node(),
    ))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    let result = match &cli.command {
        Command::Run(args) => run_cmd(args),
        Command::Validate { topology, seed } => validate_cmd(topology, *seed).map(|s| println!("{s}")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
