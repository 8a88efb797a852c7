use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::Parser;

mod args;
mod commands;
mod report;

use args::Cli;
use commands::InputError;
use report::{Output, RunManifest};

/// Validation failures exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|e| {
        e.downcast_ref::<InputError>().is_some() || e.downcast_ref::<relbelief::Error>().is_some_and(relbelief::Error::is_validation)
    });
    if validation {
        2
    } else {
        1
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = commands::run(&cli.command)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    out.print(&mut lock)?;
    lock.flush()?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_target(false)
        .format_timestamp(None)
        .init();

    let start = Instant::now();
    let result = execute(&cli);
    let (code, status, error) = match &result {
        Ok(_) => (0, "ok", None),
        Err(e) => {
            eprintln!("error: {e:#}");
            (exit_code(e), "error", Some(format!("{e:#}")))
        }
    };

    if let Some(dir) = &cli.output_dir {
        let mut artifacts = Vec::new();
        let (seed, warnings) = match &result {
            Ok(out) => {
                match out.write_files(dir, cli.command.name()) {
                    Ok(files) => artifacts = files.iter().map(|p| p.display().to_string()).collect(),
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        return ExitCode::from(1);
                    }
                }
                (out.seed, out.warnings.clone())
            }
            Err(_) => (None, Vec::new()),
        };
        let manifest = RunManifest {
            subcommand: cli.command.name().to_string(),
            config: serde_json::to_value(&cli).unwrap_or_default(),
            seed,
            artifacts,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: start.elapsed().as_secs_f64(),
            status: status.to_string(),
            error,
            warnings,
        };
        if let Err(e) = manifest.write(dir) {
            eprintln!("error: writing manifest: {e:#}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}
