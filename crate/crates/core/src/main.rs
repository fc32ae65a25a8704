//! Experiment runner: `geomax run <config.toml>` executes one experiment and
//! writes `<prefix>.report.json` plus `<prefix>.<table>.csv`;
//! `geomax list` prints the registry.
//!
//! Exit codes: 0 pass, 1 property violation (report still written),
//! 2 config error, 3 resolution/window error.

use clap::{Parser, Subcommand};
use geomax::config::ExperimentConfig;
use geomax::experiments::{registry, run_experiment};
use geomax::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "geomax",
    version,
    about = "weighted maximal-operator experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's resolution (power of two).
        #[arg(long)]
        resolution: Option<usize>,
        /// Directory for the output files (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the registered experiments.
    List,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Resolution(_) => 3,
        _ => 2,
    }
}

fn run(config: PathBuf, seed: Option<u64>, resolution: Option<usize>, out: Option<PathBuf>) -> u8 {
    let mut cfg = match ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = resolution {
        cfg.resolution = r;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return exit_code_for(&e);
    }
    let (pass, report, tables) = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let prefix = cfg
        .output
        .clone()
        .unwrap_or_else(|| cfg.experiment.name.clone());
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return 2;
    }
    let report_path = dir.join(format!("{prefix}.report.json"));
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    if let Err(e) = std::fs::write(&report_path, json) {
        eprintln!("error: cannot write {}: {e}", report_path.display());
        return 2;
    }
    for (name, content) in &tables {
        let path = dir.join(format!("{prefix}.{name}.csv"));
        if let Err(e) = std::fs::write(&path, content) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
    }
    println!(
        "{}: {} (report: {})",
        cfg.experiment.name,
        if pass { "pass" } else { "VIOLATION" },
        report_path.display()
    );
    if pass {
        0
    } else {
        1
    }
}

fn list() -> u8 {
    for e in registry() {
        println!("{:<16} {}", e.name, e.description);
        println!("{:<16}   params: {}", "", e.params);
    }
    0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run {
            config,
            seed,
            resolution,
            out,
        } => run(config, seed, resolution, out),
        Cmd::List => list(),
    };
    ExitCode::from(code)
}
