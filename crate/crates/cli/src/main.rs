//! `rowsim` — drive the DRAM mapping / Rowhammer mitigation simulator.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 I/O error,
//! 4 verification failure.

mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rowsim_core::error::SimError;
use rowsim_core::sim::{
    illustration, sweep, sweep_to_csv, MappingConfig, SimConfig, Simulator, DEFAULT_SEED,
};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rowsim",
    version,
    about = "DRAM line-to-row mapping and Rowhammer mitigation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write report.json / report.csv.
    Simulate {
        /// Scenario description (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Hot-row table of the single-bank 4 GB model (three kernels under
    /// the sequential and the encrypted mapping) plus the scatter census.
    Illustration {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite: bijection, rubixd-permutation, security,
    /// or tracker.
    Verify {
        suite: String,
        /// Force one mitigation scheme across the security suite (e.g.
        /// victim-refresh, which the Half-Double pattern defeats).
        #[arg(long)]
        force_scheme: Option<String>,
    },
    /// Cross-product of thresholds and mappings over one base scenario;
    /// writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated Rowhammer thresholds, e.g. 128,256,512,1024.
        #[arg(long, value_delimiter = ',', required = true)]
        trh: Vec<u64>,
        /// Comma-separated mappings, e.g.
        /// coffeelake,skylake,mop,rubix-s:gs4,rubix-s:gs1,rubix-d:gs4.
        #[arg(long, value_delimiter = ',', required = true)]
        mappings: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn exit_code_for(err: &SimError) -> u8 {
    match err {
        SimError::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn read_config(path: &Path) -> Result<SimConfig, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    SimConfig::from_json(&text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), SimError> {
    std::fs::write(path, contents).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<ExitCode, SimError> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let mut cfg = read_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = Simulator::run(&cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| SimError::Io(e.to_string()))?;
            write_file(&out.join("report.json"), &report.to_json())?;
            write_file(&out.join("report.csv"), &report.to_csv())?;
            println!(
                "{} + {} + {}@{}: {} accesses, {} activations, hit rate {:.4}, hot rows(64) {}, mitigation events {}, flips {}",
                report.workload,
                report.mapping,
                report.mitigation,
                report.t_rh,
                report.total_accesses,
                report.total_activations,
                report.hit_rate,
                report.hot_rows_64,
                report.total_mitigation_events(),
                report.flips.len()
            );
            println!("wrote {}", out.join("report.json").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Illustration { seed } => {
            let table = illustration(seed.unwrap_or(DEFAULT_SEED))?;
            println!("hot rows (>=64 activations in 64ms), 4MB footprint, 1M accesses:");
            println!("{:<10} {:>10} {:>16}", "kernel", "linear", "rubix-s:gs1");
            for kernel in ["stream", "stride", "random"] {
                let hot = |mapping: &str| {
                    table
                        .cells
                        .iter()
                        .find(|c| c.kernel == kernel && c.mapping == mapping)
                        .map(|c| c.hot_rows_64)
                        .unwrap_or(0)
                };
                println!(
                    "{:<10} {:>10} {:>16}",
                    kernel,
                    hot("linear"),
                    hot("rubix-s:gs1")
                );
            }
            println!();
            println!("per-row activations (linear mapping):");
            for cell in table.cells.iter().filter(|c| c.mapping == "linear") {
                println!(
                    "  {:<8} mean {:8.2}  stdev {:6.2}  activations {}",
                    cell.kernel, cell.acts_per_row_mean, cell.acts_per_row_stdev, cell.activations
                );
            }
            println!();
            println!(
                "scatter census: 64K lines into 1M rows, 10 keys, rows holding exactly k lines:"
            );
            for (i, (mean, stdev)) in table
                .census_mean
                .iter()
                .zip(&table.census_stdev)
                .enumerate()
            {
                println!("  {} lines: {:>10.1} +/- {:.1}", i + 1, mean, stdev);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            suite,
            force_scheme,
        } => {
            let passed = verify::run_suite(&suite, force_scheme.as_deref())?;
            if passed {
                println!("verify {suite}: PASS");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("verify {suite}: FAIL");
                Ok(ExitCode::from(EXIT_VERIFY))
            }
        }
        Command::Sweep {
            config,
            trh,
            mappings,
            out,
        } => {
            let cfg = read_config(&config)?;
            let mappings = mappings
                .iter()
                .map(|m| MappingConfig::parse(m))
                .collect::<Result<Vec<_>, _>>()?;
            let cells = sweep(&cfg, &trh, &mappings)?;
            std::fs::create_dir_all(&out).map_err(|e| SimError::Io(e.to_string()))?;
            write_file(&out.join("sweep.csv"), &sweep_to_csv(&cells))?;
            for cell in &cells {
                println!(
                    "{:<14} t_rh {:>5}: events {:>8}, blocked {:>14.1} ns, hot rows(64) {:>7}, flips {}",
                    cell.mapping,
                    cell.t_rh,
                    cell.report.total_mitigation_events(),
                    cell.report.channel_blocked_ns,
                    cell.report.hot_rows_64,
                    cell.report.flips.len()
                );
            }
            println!("wrote {}", out.join("sweep.csv").display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
