//! The `dln` command line. Exit codes: 0 success, 1 configuration error,
//! 2 runtime failure, 3 verification failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::batch::run_batch;
use crate::config::{ArtifactKind, ExperimentConfig};
use crate::emit::{artifact_path, emit, heatmap_csv, write_file};
use crate::error::{HarnessError, Result};
use crate::heatmap::{compute_heatmap, diagonal_target};
use crate::presets;
use crate::verify::{run_all, Level};
use crate::volume::volume_study;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "DLN_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dln", version, about = "Seeded deep linear network experiments")]
pub struct Cli {
    /// Overrides `seed_base` (run) or `volume_mc.seed` (volume-mc).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded batch and write its artifacts.
    Run { config: PathBuf },
    /// Compare Monte Carlo volumes around the distinguished 3x3 completion
    /// and random rank-two minimisers.
    VolumeMc { config: PathBuf },
    /// Write the log-volume heatmap over the minimiser plane of a 2x2
    /// diagonal problem.
    Heatmap { config: PathBuf },
    /// Run the oracle suites.
    Verify {
        /// `quick` or `full`.
        #[arg(long, default_value = "full")]
        level: Level,
    },
    /// List the built-in experiment presets.
    Presets {
        /// Print the full JSON configuration of one preset instead.
        #[arg(long, value_name = "NAME")]
        json: Option<String>,
    },
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn jobs(cli: &Cli) -> usize {
    cli.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let config = ExperimentConfig::load(path)?;
    config.resolve()?;
    Ok(config)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let mut config = load(config)?;
            if let Some(seed) = cli.seed {
                config.seed_base = seed;
            }
            let result = run_batch(&config, jobs(cli))?;
            let written = emit(&result, &cli.out)?;
            let s = result.summary();
            println!(
                "{}: {} runs, {} converged, median effective rank {}",
                s.name,
                s.n_runs,
                s.converged,
                s.median_effective_rank_converged.map_or("n/a".to_string(), |m| format!("{m:.6}"))
            );
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::VolumeMc { config } => {
            let mut config = load(config)?;
            if let Some(seed) = cli.seed {
                config.volume_mc.seed = seed;
            }
            let study = volume_study(&config, jobs(cli))?;
            let path = cli.out.join(format!("{}_volume.json", config.name));
            write_file(&path, &study.to_json())?;
            println!(
                "{}: log mean density at M {:.6}, best competitor margin {:.6}",
                config.name, study.distinguished.log_mean_density, study.margin
            );
            println!("wrote {}", path.display());
        }
        Command::Heatmap { config } => {
            let config = load(config)?;
            let resolved = config.resolve()?;
            let diag = diagonal_target(&resolved.problem)?;
            let map = compute_heatmap(config.flow.depth, diag, &config.heatmap)?;
            let path = artifact_path(&cli.out, &config.name, ArtifactKind::Heatmap);
            write_file(&path, &heatmap_csv(&map))?;
            let singular = map.cells.iter().filter(|c| c.log_density.is_none()).count();
            println!("{}: {} cells, {singular} without a density", config.name, map.cells.len());
            println!("wrote {}", path.display());
        }
        Command::Verify { level } => {
            let reports = run_all(*level, jobs(cli))?;
            for r in &reports {
                println!("{}", r.line());
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.suite).collect();
            if !failed.is_empty() {
                return Err(HarnessError::Verification(failed.join(", ")));
            }
        }
        Command::Presets { json } => match json {
            Some(name) => println!("{}", presets::default_config(name)?.to_json()),
            None => print!("{}", presets::listing()),
        },
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_exit_with_one() {
        assert_eq!(run(["dln", "bogus"]), 1);
        assert_eq!(run(["dln", "run"]), 1);
        assert_eq!(run(["dln", "--jobs", "x", "presets"]), 1);
    }

    #[test]
    fn help_exits_with_zero() {
        assert_eq!(run(["dln", "--help"]), 0);
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert_eq!(run(["dln", "presets", "--json", "nope"]), 1);
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let code = run([
            "dln".as_ref(),
            "--out".as_ref(),
            out.as_os_str(),
            "run".as_ref(),
            dir.path().join("missing.json").as_os_str(),
        ]);
        assert_eq!(code, 1);
        assert!(!out.exists());
    }
}
