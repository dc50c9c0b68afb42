use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use polya_stein::par::Exec;
use polya_stein_cli::{execute, exit_code, output_target, validate, Cli, RunConfig, OUTPUT_DIR_ENV};

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let cfg = RunConfig::resolve(cli)?;
    validate(&cfg)?;

    #[cfg(feature = "parallel")]
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }

    let artifact = execute(&cfg, Exec::default())?;
    match output_target(&cfg, std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(&path, &artifact.bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        None => std::io::stdout().write_all(&artifact.bytes)?,
    }
    Ok(artifact.verify_passed.unwrap_or(true))
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
