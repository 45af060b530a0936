mod args;
mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;

use args::{Cli, Command, Overlay};

/// Exit 2: the request itself is wrong. Exit 1: it ran and failed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(String),
}

impl From<stratint::Error> for Failure {
    fn from(e: stratint::Error) -> Self {
        match e {
            stratint::Error::Numerical(_) | stratint::Error::Serialization(_) => Failure::Run(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("STRATINT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("STRATINT_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Run(format!("thread pool: {e}")))
}

fn load<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn resolve<T: DeserializeOwned + Default + Overlay + clap::Args>(flags: args::Flags<T>) -> Result<T, Failure> {
    let file: T = load(&flags.config)?;
    Ok(flags.args.overlay(file))
}

/// Writes `text` to `out`, or stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Run(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Coeffs(f) => commands::coeffs(resolve(f)?),
        Command::Validate(f) => commands::validate(resolve(f)?),
        Command::Converge(f) => commands::converge(resolve(f)?),
        Command::Catalog(f) => commands::catalog(resolve(f)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
