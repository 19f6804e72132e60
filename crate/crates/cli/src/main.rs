mod commands;
mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Report;
use crate::config::{SweepArgs, SweepConfig};

/// Recursive V-BLAST detector harness: equivalence, flop, memory and BER sweeps as CSV.
///
/// Pool size follows `VBLAST_WORKERS` (default: all cores); output bytes do not depend on it.
#[derive(Parser)]
#[command(name = "vblast", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compare every detector against the re-inverting oracle.
    Equiv(SweepArgs),
    /// Measured flop counts against the closed-form models.
    Flops {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Where to write the speedup ratios.
        #[arg(long)]
        ratios: Option<PathBuf>,
    },
    /// Peak working memory per detector.
    Mem(SweepArgs),
    /// Bit error rate per detector.
    Ber(SweepArgs),
}

fn workers() -> Result<usize, String> {
    match std::env::var("VBLAST_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(format!("VBLAST_WORKERS must be a positive integer, got '{v}'")),
        },
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<Vec<String>, String> {
    let (args, ratios) = match &cli.cmd {
        Cmd::Equiv(a) | Cmd::Mem(a) | Cmd::Ber(a) => (a, None),
        Cmd::Flops { sweep, ratios } => (sweep, ratios.clone()),
    };
    let cfg = SweepConfig::from_args(args)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers()?).build().map_err(|e| e.to_string())?;
    let report: Report = pool.install(|| match cli.cmd {
        Cmd::Equiv(_) => commands::equiv(&cfg),
        Cmd::Flops { .. } => commands::flops(&cfg),
        Cmd::Mem(_) => commands::mem(&cfg),
        Cmd::Ber(_) => commands::ber(&cfg),
    });
    report.table.save(cfg.out.as_deref()).map_err(|e| format!("writing CSV: {e}"))?;
    if let (Some(extra), Some(path)) = (&report.extra, ratios) {
        extra.save(Some(&path)).map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    eprintln!("{} rows, {} failures", report.table.len(), report.failures.len());
    Ok(report.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("FAIL: {}", failures[0]);
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
