//! Command layer for the `tagauth` binary.

pub mod config;
pub mod error;
pub mod figures;
pub mod report;
pub mod simulate;
pub mod svg;
pub mod theory_cmd;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "tagauth", version, about = "Tag-based physical-layer authentication experiments")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs; all cores when unset.
    #[arg(long, global = true, env = "TAGAUTH_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate closed-form expressions.
    Theory(theory_cmd::TheoryArgs),
    /// Run an experiment described by a TOML config.
    Simulate {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
    /// Regenerate a figure's data at desk scale.
    Reproduce(figures::ReproduceArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Theory(a) => {
            println!("{}", theory_cmd::run(a)?);
            Ok(())
        }
        Command::Simulate { config, out_dir } => {
            let files = simulate::run(config, out_dir.as_deref())?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Reproduce(a) => {
            let out = figures::run(a)?;
            for line in &out.summary {
                println!("{line}");
            }
            let mut failed = 0;
            for c in &out.checks {
                failed += usize::from(!c.pass);
                let status = if c.pass { "PASS" } else { "FAIL" };
                if c.detail.is_empty() {
                    println!("{status} {}", c.name);
                } else {
                    println!("{status} {}: {}", c.name, c.detail);
                }
            }
            println!("wrote {} files to {}", out.files.len(), a.out_dir.display());
            if a.check && failed > 0 {
                return Err(CliError::Check(failed));
            }
            Ok(())
        }
    }
}
