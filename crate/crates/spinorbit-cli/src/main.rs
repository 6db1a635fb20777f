//! Command-line front end for the spin-orbit toolkit.
//!
//! `spinorbit run <config.json>` executes one experiment described by a JSON
//! config, writes a CSV table plus a JSON provenance sidecar into the output
//! directory, and prints one PASS/FAIL line per contract check.
//! `spinorbit validate <config.json>` stops after the schema and feasibility
//! stage without producing artifacts.
//!
//! Exit codes: 0 all checks pass, 1 I/O failure, 2 schema violation,
//! 3 numerical guard tripped or a check failed.

mod config;
mod experiments;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_config, CliFailure};
use experiments::{run_experiment, validate_experiment, RunContext};

#[derive(Parser)]
#[command(name = "spinorbit", version, about = "Semiclassical spin-orbit experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config and write its artifacts.
    Run {
        /// Path to the JSON experiment config.
        config: PathBuf,
        /// Directory receiving the CSV table and JSON sidecar.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads for scan experiments; 0 keeps the library default.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Reserved for future stochastic experiments; recorded in the
        /// sidecar. All current experiments are deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config's schema and feasibility without running it.
    Validate {
        /// Path to the JSON experiment config.
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}: {}", failure.label(), failure.message());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}

fn read_config(path: &PathBuf) -> Result<String, CliFailure> {
    std::fs::read_to_string(path)
        .map_err(|e| CliFailure::Schema(format!("cannot read {}: {e}", path.display())))
}

fn real_main() -> Result<(), CliFailure> {
    let cli = Cli::parse();
    match cli.cmd {
        Command::Validate { config } => {
            let text = read_config(&config)?;
            let exp = parse_config(&text)?;
            println!(
                "schema: ok (kind {}, schema version {})",
                exp.kind(),
                config::SCHEMA_VERSION
            );
            let notes = validate_experiment(&exp)?;
            println!("feasibility: ok ({})", notes.join("; "));
            Ok(())
        }
        Command::Run {
            config,
            out_dir,
            threads,
            seed,
        } => {
            let text = read_config(&config)?;
            let exp = parse_config(&text)?;
            if threads > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .map_err(|e| CliFailure::Schema(format!("cannot set thread pool: {e}")))?;
            }
            let ctx = RunContext {
                out_dir: &out_dir,
                config_sha256: spinorbit::io::sha256_hex(text.as_bytes()),
                threads,
                seed,
            };
            let report = run_experiment(&exp, &ctx)?;
            for check in &report.checks {
                let verdict = if check.pass { "PASS" } else { "FAIL" };
                println!("check {}: {verdict} ({})", check.name, check.detail);
            }
            for path in &report.artifacts {
                println!("wrote {}", path.display());
            }
            let failed = report.checks.iter().filter(|c| !c.pass).count();
            if failed == 0 {
                println!("run: all {} checks PASS", report.checks.len());
                Ok(())
            } else {
                println!("run: {failed} of {} checks FAILED", report.checks.len());
                Err(CliFailure::Numerical(format!(
                    "{failed} contract check(s) failed"
                )))
            }
        }
    }
}
