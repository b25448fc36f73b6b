//! `folia`: run bi-submersion, algebroid and Weinstein checks from JSON job files.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use commands::{Job, JobError};
use config::{parse_config, rational_point};
use folia_core::charts::{DEFAULT_DEGREE_BOUND, DEFAULT_SAMPLES};
use folia_core::weinstein::DEFAULT_GRID;
use report::{Report, Settings};

const DEFAULT_TOL: f64 = 1e-6;
const USAGE_EXIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "folia", version, about = "Verify bi-submersions, algebroid kernels and Weinstein constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Involutivity of a module, a bi-submersion's kernel frames or an algebroid's image foliation.
    CheckInvolutivity(Flags),
    /// Foliation and algebraic verification of a symbolic bi-submersion.
    CheckBisubmersion(Flags),
    /// Build and verify the path-holonomy bi-submersion of a module at a point.
    PathHolonomy(Flags),
    /// Invariants, kernel module and fiber dimensions of a Lie algebroid.
    AlgebroidReport(Flags),
    /// Build the bi-submersion `V × Bⁿ × H̃_x` and check its map to A-paths.
    Weinstein(Flags),
    /// Flow-sum, middle-term and acceleration checks.
    FlowsVerify(Flags),
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// JSON job file.
    config: PathBuf,
    /// Degree bound for module membership and syzygies [default: 8].
    #[arg(long)]
    degree_bound: Option<u32>,
    /// Residual tolerance [default: 1e-6].
    #[arg(long)]
    tol: Option<f64>,
    /// Number of random samples per check [default: 50].
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for all sampling [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// A-path grid intervals [default: 256].
    #[arg(long)]
    grid: Option<usize>,
    /// Comma-separated exact coordinates, e.g. `1,0,0` or `1/2,-3`.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write gnuplot-compatible columns of the main curve.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Write the main curve as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::CheckInvolutivity(f) => ("check-involutivity", f),
            Command::CheckBisubmersion(f) => ("check-bisubmersion", f),
            Command::PathHolonomy(f) => ("path-holonomy", f),
            Command::AlgebroidReport(f) => ("algebroid-report", f),
            Command::Weinstein(f) => ("weinstein", f),
            Command::FlowsVerify(f) => ("flows-verify", f),
        }
    }
}

enum Failure {
    Usage(String),
    Io(anyhow::Error),
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let (name, flags) = cli.command.parts();
    let bytes = std::fs::read(&flags.config)
        .with_context(|| format!("reading {}", flags.config.display()))
        .map_err(Failure::Io)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::Usage("config is not UTF-8".into()))?;
    let cfg = parse_config(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    let point = flags
        .point
        .as_deref()
        .map(|p| {
            let coords: Vec<String> = p.split(',').map(|c| c.trim().to_string()).collect();
            rational_point(&coords, "--point")
        })
        .transpose()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let tol = flags.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let settings = Settings {
        degree_bound: flags.degree_bound.or(cfg.degree_bound).unwrap_or(DEFAULT_DEGREE_BOUND),
        tol,
        samples: flags.samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES).max(1),
        seed: flags.seed.or(cfg.seed).unwrap_or(0),
        grid: flags.grid.or(cfg.grid).unwrap_or(DEFAULT_GRID).max(8),
        point: point.as_ref().map(|p| p.iter().map(|q| q.to_string()).collect()),
    };
    let job_name = cfg.name.clone();
    let job = Job {
        cfg,
        settings: settings.clone(),
        point,
        plot_data: flags.plot_data.clone(),
        csv: flags.csv.clone(),
    };
    let checks = match &cli.command {
        Command::CheckInvolutivity(_) => commands::check_involutivity(&job),
        Command::CheckBisubmersion(_) => commands::check_bisubmersion(&job),
        Command::PathHolonomy(_) => commands::path_holonomy(&job),
        Command::AlgebroidReport(_) => commands::algebroid_report(&job),
        Command::Weinstein(_) => commands::weinstein(&job),
        Command::FlowsVerify(_) => commands::flows_verify(&job),
    }
    .map_err(|e| match e {
        JobError::Config(c) => Failure::Usage(c.to_string()),
        JobError::Io(io) => Failure::Io(io.into()),
    })?;
    let report = Report::new(name, job_name, &bytes, settings, checks);
    let json = report.to_json();
    match &flags.output {
        Some(p) => {
            std::fs::write(p, &json)
                .with_context(|| format!("writing {}", p.display()))
                .map_err(Failure::Io)?;
            for c in &report.checks {
                eprintln!("{}: {}", c.name, c.verdict);
            }
        }
        None => print!("{json}"),
    }
    Ok(report.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_EXIT)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_EXIT)
        }
    }
}
