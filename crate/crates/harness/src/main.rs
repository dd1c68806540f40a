use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gibbslab::config::LANDSCAPES;
use gibbslab::{ExperimentConfig, HarnessError, RunOptions, Theorem};

#[derive(Parser)]
#[command(
    name = "gibbslab",
    version,
    about = "Excess-risk bound experiments for Gibbs-ERM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write a new report directory.
    Run {
        /// Experiment TOML file.
        config: PathBuf,
        /// Base output directory (overrides the configuration).
        #[arg(long, env = "GIBBSLAB_OUT")]
        out: Option<PathBuf>,
        /// Worker threads; all cores when absent. Results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Restrict to these theorems (repeatable).
        #[arg(long = "theorem", value_parser = parse_theorem)]
        theorems: Vec<Theorem>,
    },
    /// Validate a configuration and print its canonical JSON form.
    Validate { config: PathBuf },
    /// List the built-in landscapes and data models.
    ListLandscapes,
}

fn parse_theorem(s: &str) -> Result<Theorem, String> {
    Theorem::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Theorem::ALL.iter().map(|t| t.as_str()).collect();
        format!(
            "unknown theorem {s:?}; expected one of {}",
            names.join(", ")
        )
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
            theorems,
        } => {
            let opts = RunOptions {
                out_dir: out,
                workers,
                seed,
                theorems: (!theorems.is_empty()).then_some(theorems),
            };
            let outcome = gibbslab::run_config_file(&config, &opts)
                .with_context(|| format!("running {}", config.display()))?;
            let r = &outcome.report;
            let failed: Vec<_> = r.failures().collect();
            let unassessed = r.rows.iter().filter(|row| !row.oracle.is_finite()).count();
            println!(
                "{} rows, {} failed -> {}",
                r.rows.len(),
                failed.len(),
                outcome.dir.display()
            );
            if unassessed > 0 {
                println!("{unassessed} rows have no oracle value (regions never visited) and are not asserted");
            }
            for f in &failed {
                println!(
                    "FAIL {} {} minimum={:?} margin={:e}",
                    f.theorem, f.point, f.minimum, f.margin
                );
            }
            Ok(if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("validating {}", config.display()))?;
            println!("{}", cfg.to_canonical_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::ListLandscapes => {
            for (name, desc) in LANDSCAPES {
                println!("{name:<16} {desc}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<HarnessError>()
                .map_or(3, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
