//! `schrokato`: config-driven experiments on heat kernels, Kato-class
//! potentials, Feynman–Kac estimators and semigroup domination.
//!
//! Exit status: 0 when every contract holds, 2 when one is violated,
//! 1 on usage or configuration errors.

// `!(x > 0.0)` guards reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod setup;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{CliError, CliResult, Run};
use config::{parse_config, ExperimentConfig, Format};
use output::{sha256_hex, Artifacts};

#[derive(Debug, Parser)]
#[command(name = "schrokato", version, about = "Heat kernel, Kato class and Feynman-Kac experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file (TOML, or JSON with a `.json` extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `schrokato-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Diagonal heat kernel, mass, Chapman-Kolmogorov residuals, control pairs.
    Kernel,
    /// Dynkin and resolvent functionals with the class verdict.
    Kato,
    /// Feynman-Kac Monte Carlo against the matrix exponential.
    Fk,
    /// Bottom of the spectrum and low eigenvalues.
    Spectrum,
    /// Kato-Simon, diamagnetic and positivity checks.
    Dominate,
    /// Operator export as Matrix Market and lattice JSON.
    Lattice,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Kato => "kato",
            Command::Fk => "fk",
            Command::Spectrum => "spectrum",
            Command::Dominate => "dominate",
            Command::Lattice => "lattice",
        }
    }
}

/// SHA-256 of the effective config (output directory excluded) and the
/// bytes of any referenced lattice file.
fn config_hash(cfg: &ExperimentConfig, base: &Path) -> CliResult<String> {
    let mut effective = cfg.clone();
    effective.out = None;
    let mut inputs = serde_json::Map::new();
    if let Some(file) = cfg.graph.as_ref().and_then(|g| g.file.as_ref()) {
        let bytes = std::fs::read(base.join(file))?;
        inputs.insert(file.display().to_string(), json!(sha256_hex(&bytes)));
    }
    let canonical = json!({ "config": effective, "inputs": inputs });
    Ok(sha256_hex(canonical.to_string().as_bytes()))
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SCHROKATO_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("SCHROKATO_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(CliError::Usage("SCHROKATO_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<bool> {
    configure_threads()?;
    let path = cli.config.ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let mut cfg = parse_config(&path)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    let seed = cfg.seed.ok_or_else(|| CliError::Usage("a seed is required: set `seed` in the config or pass --seed".into()))?;
    let format = cli.format.or(cfg.format).unwrap_or(Format::Csv);
    cfg.format = Some(format);
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("schrokato-out"));
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let hash = config_hash(&cfg, &base)?;
    let source = setup::build_source(&cfg, seed, &base)?;
    let art = Artifacts::create(&out, hash)?;
    let mut r = Run { cfg: &cfg, seed, format, source, art };
    match cli.command {
        Command::Kernel => commands::kernel(&mut r)?,
        Command::Kato => commands::kato(&mut r)?,
        Command::Fk => commands::fk(&mut r)?,
        Command::Spectrum => commands::spectrum(&mut r)?,
        Command::Dominate => commands::dominate(&mut r)?,
        Command::Lattice => commands::lattice(&mut r)?,
    }
    for c in r.art.contracts() {
        eprintln!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(r.art.finish(cli.command.name(), seed)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
