//! Command-line front end for `tiltsense`: scenario files, parameter sweeps,
//! figure data and Monte Carlo saturation runs, written as CSV or JSON with
//! SVG plots and a metadata sidecar per run.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;
pub mod units;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::CommandOutput;
use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::{BeamSummary, Format, Metadata, OutputSet};

#[derive(Debug, Parser)]
#[command(
    name = "tiltsense",
    version,
    about = "Fisher information and Cramér–Rao studies of optical tilt sensing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for output files. Defaults to `[output] dir`, then the current directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed for Monte Carlo runs, overriding the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Output does not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Analytic and numerical Fisher information against the quantum bound.
    Fisher,
    /// Outcome probability tables over the scenario grid.
    Sweep,
    /// Post-selected information per photon across the detector and along the axis.
    Figure3,
    /// Detection probability and the information it carries.
    Figure4,
    /// Maximum-likelihood trials against the Cramér–Rao variance.
    Montecarlo,
    /// Parse and check a scenario without running it.
    ValidateConfig,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fisher => "fisher",
            Command::Sweep => "sweep",
            Command::Figure3 => "figure3",
            Command::Figure4 => "figure4",
            Command::Montecarlo => "montecarlo",
            Command::ValidateConfig => "validate-config",
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// What a successful invocation produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Written(Vec<PathBuf>),
    Validated(String),
}

/// Runs one invocation. Output files are written even when a statistical
/// check fails, so the failing numbers can be inspected.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} threads: {e}", cli.threads.unwrap_or(0))))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let cfg = match (&cli.config, cli.command) {
        (Some(path), _) => load(path)?,
        (None, Command::Figure3 | Command::Figure4) => ScenarioConfig::figure_default(),
        (None, cmd) => return Err(CliError::Config(format!("`{}` needs --config <path>", cmd.name()))),
    };
    let output: CommandOutput = match cli.command {
        Command::ValidateConfig => return Ok(Outcome::Validated(summary(&cfg))),
        Command::Fisher => commands::fisher(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Figure3 => commands::figure3(&cfg)?,
        Command::Figure4 => commands::figure4(&cfg)?,
        Command::Montecarlo => commands::montecarlo(&cfg, cli.seed)?,
    };

    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let mut files = OutputSet::create(&dir)?;
    for table in &output.tables {
        files.write_table(table, cli.format)?;
    }
    for (stem, figure) in &output.figures {
        files.write(&format!("{stem}.svg"), &figure.render())?;
    }
    let seed = match cli.command {
        Command::Montecarlo => cli.seed.or(cfg.montecarlo.map(|m| m.seed)),
        _ => None,
    };
    let meta = Metadata {
        tool: "tiltsense",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        format: cli.format,
        seed,
        beam: BeamSummary::from(&cfg.beam),
        outputs: Vec::new(),
        config: cli.config.as_ref().map(|_| cfg.source.clone()),
    };
    let written = files.finish(cli.command.name(), meta)?;
    match output.failure {
        Some(msg) => Err(CliError::Statistical(msg)),
        None => Ok(Outcome::Written(written)),
    }
}

fn summary(cfg: &ScenarioConfig) -> String {
    let mut s = format!(
        "beam: wavelength {:e} m, w0 {:e} m, z_R {:e} m, {} xi value(s)\n",
        cfg.beam.wavelength(),
        cfg.beam.w0(),
        cfg.beam.rayleigh_range(),
        cfg.xi.len()
    );
    for r in &cfg.runs {
        s += &format!(
            "run `{}`: {} with {} z x {} theta point(s){}\n",
            r.name,
            r.scheme.name(),
            r.z.len(),
            r.theta.len(),
            r.x.as_ref()
                .map_or(String::new(), |x| format!(", {} x point(s)", x.len()))
        );
    }
    if let Some(m) = cfg.montecarlo {
        s += &format!("montecarlo: nu {}, {} trials, seed {}\n", m.nu, m.trials, m.seed);
    }
    s
}
