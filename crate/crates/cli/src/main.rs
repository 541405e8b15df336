//! `cascade`: batch driver for simulation, tomography, fitting and key rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Format, Preset, RunConfig, Sampling};

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Simulate and analyse entangled photon pairs from a quantum-dot cascade")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for Poisson sampling.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Tomography window width in ps.
    #[arg(long = "window-ps", global = true, value_name = "N")]
    window_ps: Option<f64>,
    /// Format of curve and table outputs.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the 36 coincidence histograms and their metadata sidecar.
    Simulate {
        /// Replace the source and detector with a reference combination.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, value_enum)]
        sampling: Option<Sampling>,
        /// Integration time per setting in seconds.
        #[arg(long, value_name = "S")]
        t_exp_s: Option<f64>,
    },
    /// Reconstruct time-binned states and write entanglement curves.
    Tomo {
        /// Histogram CSV written by `simulate`.
        #[arg(long, value_name = "PATH")]
        histograms: Option<PathBuf>,
    },
    /// Fit one kind of measurement and write a JSON fit result.
    Fit(FitArgs),
    /// Time-resolved six-state key rates.
    Keyrate {
        /// States JSON written by `tomo`.
        #[arg(long, value_name = "PATH", conflicts_with_all = ["histograms", "ideal"])]
        states: Option<PathBuf>,
        /// Histogram CSV; reconstructed before evaluating the rates.
        #[arg(long, value_name = "PATH", conflicts_with = "ideal")]
        histograms: Option<PathBuf>,
        /// Use the noiseless oscillating state of the configured source.
        #[arg(long)]
        ideal: bool,
        #[arg(long, value_name = "PS")]
        from_ps: Option<f64>,
        #[arg(long, value_name = "PS")]
        to_ps: Option<f64>,
        /// Optimise the basis separately in every window.
        #[arg(long)]
        per_window: bool,
    },
    /// Run simulate, tomo and keyrate for the SNSPD, SPAD and ideal cases.
    Reproduce {
        /// Restrict to some of the cases.
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<Preset>,
    },
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(value_enum)]
    kind: commands::FitKind,
    /// Two- or three-column CSV; not used by `efficiency`.
    data: Option<PathBuf>,
    #[command(flatten)]
    opts: commands::FitOptions,
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.output.dir = o.clone();
    }
    if let Some(w) = g.window_ps {
        cfg.tomography.window_ps = w;
    }
    if let Some(f) = g.format {
        cfg.output.format = f;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<commands::Report> {
    let mut cfg = effective_config(&cli.global)?;
    match cli.command {
        Command::Simulate { preset, sampling, t_exp_s } => {
            if let Some(p) = preset {
                cfg = cfg.with_preset(p);
            }
            if let Some(s) = sampling {
                cfg.experiment.sampling = s;
            }
            if let Some(t) = t_exp_s {
                cfg.experiment.t_exp_s = t;
            }
            commands::simulate(&cfg)
        }
        Command::Tomo { histograms } => {
            if histograms.is_some() {
                cfg.inputs.histograms = histograms;
            }
            commands::tomo(&cfg)
        }
        Command::Fit(a) => {
            if a.data.is_some() {
                cfg.inputs.data = a.data;
            }
            commands::fit(&cfg, a.kind, &a.opts)
        }
        Command::Keyrate { states, histograms, ideal, from_ps, to_ps, per_window } => {
            if states.is_some() {
                cfg.inputs.states = states;
            }
            if histograms.is_some() {
                cfg.inputs.histograms = histograms;
            }
            if let Some(f) = from_ps {
                cfg.keyrate.from_ps = f;
            }
            if to_ps.is_some() {
                cfg.keyrate.to_ps = to_ps;
            }
            cfg.keyrate.per_window |= per_window;
            commands::keyrate(&cfg, ideal)
        }
        Command::Reproduce { only } => {
            let presets = if only.is_empty() { Preset::ALL.to_vec() } else { only };
            commands::reproduce(&cfg, &presets)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => report.finish(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
