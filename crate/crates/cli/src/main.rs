//! `whittaker`: mode tables, packet snapshots, lifetime/spread characterisation,
//! radiative decay curves and the spread-lifetime table, as CSV/JSON files.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure. Errors are
//! written to stderr as one JSON line.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use commands::Output;
use config::Settings;
use whittaker::packet::DEFAULT_PPW;
use whittaker::specfun::QuadratureSpec;
use whittaker::Error;

#[derive(Parser, Debug)]
#[command(name = "whittaker", version, about = "Hydrogen continuum wavepackets and their radiative decay")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run file with `key = value` lines; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files [default: .]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (outputs do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative tolerance of the mode quadrature
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Bootstrap seed [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Mean kinetic energy, eV
    #[arg(long, global = true, allow_negative_numbers = true)]
    energy_ev: Option<f64>,
    /// Energy spread, eV
    #[arg(long, global = true, allow_negative_numbers = true)]
    spread_ev: Option<f64>,
    /// Last decay time, fs [default: five lifetimes]
    #[arg(long, global = true, allow_negative_numbers = true)]
    tmax_fs: Option<f64>,
    /// Radial points per shortest half wavelength
    #[arg(long, global = true)]
    grid_ppw: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate one continuum mode w(x) on a uniform x grid
    Mode {
        #[arg(long, allow_negative_numbers = true)]
        kappa: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Radial field snapshots and their envelopes
    Packet {
        /// Comma-separated times in fs [default: 0, T, 2T]
        #[arg(long)]
        times: Option<String>,
    },
    /// Spatial spread and diffraction lifetime
    Characterize,
    /// Per-level and total decay probability, and the average rate
    Decay,
    /// Spread-lifetime trade-off table
    Table1,
    /// Recover the spread and lifetime constants from simulation
    Calibrate {
        #[arg(long)]
        resamples: Option<usize>,
    },
}

#[derive(Serialize)]
struct Failure<'a> {
    error: &'a str,
    message: String,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    let line = serde_json::to_string(&Failure { error: kind, message }).expect("plain struct");
    eprintln!("{line}");
    ExitCode::from(code)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}

fn write_all(dir: &Path, files: &[Output]) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Domain(format!("cannot create {}: {e}", dir.display())))?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents)
                .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    let settings = match &cli.config {
        Some(path) => Settings::new(config::load(path)?),
        None => Settings::default(),
    };
    if let Some(n) = settings.get(cli.threads, "threads")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Domain(format!("--threads: {e}")))?;
    }
    let out_dir = settings.path(cli.out_dir.clone(), "out-dir", ".");
    let ppw = settings.or(cli.grid_ppw, "grid-ppw", DEFAULT_PPW)?;
    let packet_params = || -> Result<_, Error> {
        commands::params(
            settings.require(cli.energy_ev, "energy-ev")?,
            settings.require(cli.spread_ev, "spread-ev")?,
        )
    };

    let files = match cli.command {
        Command::Mode {
            kappa,
            x_min,
            x_max,
            points,
        } => {
            let mut quad = QuadratureSpec::default();
            if let Some(tol) = settings.get(cli.rel_tol, "rel-tol")? {
                quad = quad.with_rel_tol(tol)?;
            }
            commands::mode(&commands::ModeArgs {
                kappa: settings.require(kappa, "kappa")?,
                x_min: settings.or(x_min, "x-min", 0.0)?,
                x_max: settings.or(x_max, "x-max", 100.0)?,
                points: settings.or(points, "points", 2000)?,
                quad,
            })?
        }
        Command::Packet { times } => commands::packet(&packet_params()?, settings.list(times, "times")?, ppw)?,
        Command::Characterize => commands::characterize(&packet_params()?, ppw)?,
        Command::Decay => commands::decay(&packet_params()?, settings.get(cli.tmax_fs, "tmax-fs")?)?,
        Command::Table1 => commands::table(),
        Command::Calibrate { resamples } => commands::calibrate(
            settings.get(cli.energy_ev, "energy-ev")?,
            settings.or(cli.seed, "seed", 0)?,
            settings.or(resamples, "resamples", 1000)?,
        )?,
    };
    write_all(&out_dir, &files)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first.to_string(), 2);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string(), exit_code(&e)),
    }
}
