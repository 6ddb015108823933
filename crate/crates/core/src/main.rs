use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use subreg::cli_report::{run_config, write_report, Check, CheckList, Format, RunConfig};
use subreg::error::Error;

/// Estimate subregularity moduli and slopes for a configured mapping.
#[derive(Debug, Parser)]
#[command(name = "subreg", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Report destination; overrides the configured path. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed_override: Option<u64>,
    /// Run only the invariant suite.
    #[arg(long)]
    verify: bool,
}

fn usage_error(e: &Error) -> bool {
    !matches!(e, Error::P2Violated(_) | Error::EmptySample | Error::OffGraph)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed_override {
        config.schedule.seed = seed;
    }
    if cli.verify {
        config.checks = CheckList::List(vec![Check::Invariants]);
    }
    let format = cli.format.unwrap_or(config.output.format);
    let path = cli.out.clone().or_else(|| config.output.path.clone());
    let report = match run_config(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if usage_error(&e) { 2 } else { 3 });
        }
    };
    if let Err(e) = write_report(&report, format, path.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(report.exit_code() as u8)
}
