//! `btl`: command-line front end.
//!
//! Exit codes: 0 success, 1 a certificate failed (or a computation could not
//! reach its accuracy target), 2 usage or input error. `BTL_THREADS` caps the
//! worker count.

mod commands;
mod config;

use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;

use config::{Cli, RunConfig};

fn init_threads() -> Result<()> {
    let Ok(text) = std::env::var("BTL_THREADS") else {
        return Ok(());
    };
    let n: usize = match text.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => bail!("BTL_THREADS must be a positive integer, got `{text}`"),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain()
        .filter_map(|e| e.downcast_ref::<std::io::Error>())
        .any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use btl_core::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Accuracy { .. } | Error::CrossCheck(_) | Error::Bracket { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| {
        let cfg = RunConfig::from_cli(cli.command)?;
        if cli.dump_config {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            return Ok(None);
        }
        commands::run(&cfg).map(Some)
    });
    match result {
        Ok(Some(outcome)) if outcome.failed => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(err) if broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
