use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mkp_core::config::RunConfig;
use mkp_core::runner;
use mkp_core::tau::{TauError, TauFunction};

/// Exact verification of multicomponent KP identities on truncated tau functions.
#[derive(Parser)]
#[command(name = "mkp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured check suites and write the report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the report path from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the configured tau function and write it in the text format.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a tau function file.
    Describe { path: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify { config, out } => verify(&config, out),
        Command::Solve { config, out } => solve(&config, &out),
        Command::Describe { path } => describe(&path),
    }
}

fn verify(config: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let report = runner::run(&cfg)?;
    let summary = report.text_summary();
    print!("{summary}");
    if let Some(path) = out.or_else(|| cfg.output.clone()) {
        std::fs::write(&path, report.to_json())
            .with_context(|| format!("writing {}", path.display()))?;
        let text = path.with_extension("txt");
        std::fs::write(&text, &summary).with_context(|| format!("writing {}", text.display()))?;
    }
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn solve(config: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = RunConfig::load(config)?;
    let (tau, info) = runner::obtain_tau(&cfg)?;
    std::fs::write(out, tau.to_text()).with_context(|| format!("writing {}", out.display()))?;
    for l in info.levels.iter().flatten() {
        println!(
            "weight {}: {} unknowns, {} equations, {} free",
            l.level, l.unknowns, l.equations, l.free
        );
    }
    println!("wrote {} charges to {}", info.charges, out.display());
    Ok(ExitCode::SUCCESS)
}

fn describe(path: &Path) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match TauFunction::parse(&text) {
        Ok(tau) => {
            print!("{}", tau.describe());
            Ok(ExitCode::SUCCESS)
        }
        Err(TauError::Parse { line, col, msg }) => {
            eprintln!("{}:{line}:{col}: parse error: {msg}", path.display());
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}
