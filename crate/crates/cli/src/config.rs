use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use vblast::detectors::{Algorithm, Cancellation, DetectOptions};
use vblast::sigmodel::{Constellation, ConstellationKind};

/// An SNR point; `inf` selects the noiseless frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr(pub f64);

impl FromStr for Snr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" => Ok(Snr(f64::INFINITY)),
            t => match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Snr(v)),
                _ => Err(format!("invalid SNR '{s}'")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Detectors to run, comma separated (default: all).
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
    pub algo: Vec<Algorithm>,
    /// Transmit antenna counts.
    #[arg(long, value_delimiter = ',', default_value = "4", value_parser = clap::value_parser!(u64).range(1..))]
    pub m: Vec<u64>,
    /// Receive antenna counts: one value for every M, or one per M (default: N = M).
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Vec<u64>,
    /// SNR points in dB; `inf` is noiseless.
    #[arg(long = "snr-db", value_delimiter = ',', default_value = "10", allow_hyphen_values = true)]
    pub snr_db: Vec<Snr>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Cancel with the unquantized estimate instead of the decision.
    #[arg(long = "cancel-soft")]
    pub cancel_soft: bool,
    #[arg(long, value_enum, default_value = "qpsk")]
    pub modulation: Modulation,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.trim().parse::<Algorithm>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub algorithms: Vec<Algorithm>,
    /// `(M, N)` pairs, sorted.
    pub dims: Vec<(usize, usize)>,
    /// Sorted ascending, `inf` last.
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub opts: DetectOptions,
    pub constellation: Constellation,
    pub out: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_args(a: &SweepArgs) -> Result<Self, String> {
        let mut algorithms = if a.algo.is_empty() { Algorithm::ALL.to_vec() } else { a.algo.clone() };
        algorithms.sort();
        algorithms.dedup();

        let ns: Vec<u64> = match a.n.len() {
            0 => a.m.clone(),
            1 => vec![a.n[0]; a.m.len()],
            k if k == a.m.len() => a.n.clone(),
            k => return Err(format!("--n takes one value or one per --m value ({} given, {k} found)", a.m.len())),
        };
        let mut dims = Vec::with_capacity(a.m.len());
        for (&m, &n) in a.m.iter().zip(&ns) {
            if n < m {
                return Err(format!("N={n} is smaller than M={m}"));
            }
            dims.push((m as usize, n as usize));
        }
        dims.sort();
        dims.dedup();

        let mut snr_db: Vec<f64> = a.snr_db.iter().map(|s| s.0).collect();
        snr_db.sort_by(f64::total_cmp);
        snr_db.dedup();

        let cancel = if a.cancel_soft { Cancellation::Soft } else { Cancellation::Hard };
        let kind = match a.modulation {
            Modulation::Qpsk => ConstellationKind::Qpsk,
            Modulation::Qam16 => ConstellationKind::Qam16,
        };
        Ok(Self {
            algorithms,
            dims,
            snr_db,
            trials: a.trials,
            seed: a.seed,
            opts: DetectOptions { cancel, ..DetectOptions::default() },
            constellation: Constellation::of_kind(kind),
            out: a.out.clone(),
        })
    }
}
