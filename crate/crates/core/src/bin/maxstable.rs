use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use maxstable::pipeline::{self, BootstrapArgs, FitArgs, ReportArgs};

#[derive(Parser)]
#[command(name = "maxstable", version, about = "Max-stable models of precipitation extremes from ensemble forecasts")]
struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "UPPER")]
enum BasisModel {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "UPPER")]
enum FitModel {
    A,
    B,
    C,
    D,
    E,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario with known truth.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Marginal GEV fits.
    Margins {
        #[command(subcommand)]
        action: MarginsAction,
    },
    /// Rank-transform forecasts into a unit Fréchet panel.
    Transform {
        #[arg(long)]
        forecasts: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical extremal coefficients of order 2 or 3.
    Ec {
        #[arg(long)]
        maxima: PathBuf,
        #[arg(long)]
        stations: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
        order: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral basis from a panel.
    Basis {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long, value_enum)]
        model: BasisModel,
        #[arg(long, default_value_t = 0.9)]
        quantile: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model to empirical pairwise coefficients.
    Fit {
        #[arg(long, value_enum)]
        model: FitModel,
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long)]
        ec: PathBuf,
        #[arg(long)]
        stations: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate fields of a fitted model over the grid.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, env = "MAXSTABLE_SEED")]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parametric-bootstrap envelopes of pairwise coefficients.
    Bootstrap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        stations: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        replicates: u64,
        #[arg(long, default_value_t = 190, value_parser = clap::value_parser!(u64).range(1..))]
        blocks: u64,
        #[arg(long, env = "MAXSTABLE_SEED")]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot-ready CSV tables.
    Report {
        /// Fitted model(s); the first one is paired with the envelope.
        #[arg(long = "fit", required = true)]
        fits: Vec<PathBuf>,
        #[arg(long)]
        ec: PathBuf,
        #[arg(long)]
        envelope: Option<PathBuf>,
        #[arg(long)]
        stations: PathBuf,
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Empirical triplewise coefficients (enables the triplewise table).
        #[arg(long)]
        triples: Option<PathBuf>,
        #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
        mc_fields: u64,
        #[arg(long, env = "MAXSTABLE_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum MarginsAction {
    /// PWM GEV fit and KS test per station.
    Fit {
        #[arg(long)]
        maxima: PathBuf,
        #[arg(long)]
        stations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn letter<T: ValueEnum>(v: T) -> char {
    v.to_possible_value().unwrap().get_name().to_ascii_uppercase().chars().next().unwrap()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring worker threads")?;
    }
    let manifest = match &cli.command {
        Command::Synth { config, out } => pipeline::run_stage("synth", out, true, || pipeline::synth(config, out)),
        Command::Margins { action: MarginsAction::Fit { maxima, stations, out } } => {
            pipeline::run_stage("margins fit", out, false, || pipeline::margins_fit(maxima, stations.as_deref(), out))
        }
        Command::Transform { forecasts, grid, out } => {
            pipeline::run_stage("transform", out, false, || pipeline::transform(forecasts, grid, out))
        }
        Command::Ec { maxima, stations, order, out } => {
            pipeline::run_stage("ec", out, false, || pipeline::ec(maxima, stations, *order as usize, out))
        }
        Command::Basis { panel, model, quantile, out } => {
            pipeline::run_stage("basis", out, true, || pipeline::basis(panel, letter(*model), *quantile, out))
        }
        Command::Fit { model, basis, ec, stations, grid, out } => pipeline::run_stage("fit", out, false, || {
            pipeline::fit(&FitArgs { model: letter(*model), basis: basis.as_deref(), ec, stations, grid, out })
        }),
        Command::Simulate { model, grid, n, seed, out } => {
            pipeline::run_stage("simulate", out, false, || pipeline::simulate(model, grid, *n as usize, *seed, out))
        }
        Command::Bootstrap { model, stations, grid, replicates, blocks, seed, out } => {
            pipeline::run_stage("bootstrap", out, false, || {
                pipeline::bootstrap(&BootstrapArgs {
                    fit: model,
                    stations,
                    grid,
                    replicates: *replicates as usize,
                    blocks: *blocks as usize,
                    seed: *seed,
                    out,
                })
            })
        }
        Command::Report { fits, ec, envelope, stations, grid, triples, mc_fields, seed, out } => {
            pipeline::run_stage("report", out, true, || {
                pipeline::report(&ReportArgs {
                    fits,
                    ec,
                    envelope: envelope.as_deref(),
                    stations,
                    grid: grid.as_deref(),
                    triples: triples.as_deref(),
                    mc_fields: *mc_fields as usize,
                    seed: *seed,
                    out,
                })
            })
        }
    }?;
    log::info!("{} finished in {:.2}s", manifest.command, manifest.wall_time_s);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<maxstable::Error>() {
        Some(e) if e.is_numerical() => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

