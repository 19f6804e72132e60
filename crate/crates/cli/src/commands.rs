use rayon::prelude::*;
use vblast::detectors::{agreement, Algorithm, DetectOptions, DetectionResult};
use vblast::metering::{compare, init_ledger, speedup, ComplexityModel, ModelKind};
use vblast::numkernel::{gram_accumulate, BlockStep, FlopLedger};
use vblast::sigmodel::{demap, seeded_trial, Trial};

use crate::config::SweepConfig;
use crate::table::{fmt_float, Table};

pub const GAP_GATE: f64 = 1e-9;
pub const COV_TOL: f64 = 1e-9;
pub const SOFT_TOL: f64 = 1e-9;
pub const MEM_RATIO_MAX: f64 = 0.55;
/// Smallest M = N at which the speedup ratios are asserted.
pub const RATIO_GATE_M: usize = 64;

/// Output of one subcommand: the CSV body plus every failed assertion.
pub struct Report {
    pub table: Table,
    pub extra: Option<Table>,
    pub failures: Vec<String>,
}

fn trial(cfg: &SweepConfig, m: usize, n: usize, snr: f64, t: u64) -> Result<Trial, String> {
    seeded_trial(cfg.seed, m, n, snr, t, &cfg.constellation).map_err(|e| format!("M={m} N={n} snr={snr} trial={t}: {e}"))
}

/// Runs `f` over trials `0..cfg.trials` on the current pool, results in trial order.
fn per_trial<T: Send>(cfg: &SweepConfig, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..cfg.trials).into_par_iter().map(f).collect()
}

struct EquivCell {
    hard_match: bool,
    min_q_gap: f64,
    max_soft_err: f64,
    failure: Option<String>,
}

fn equiv_trial(cfg: &SweepConfig, m: usize, n: usize, snr: f64, t: u64) -> Vec<EquivCell> {
    let broken = |msg: String| {
        cfg.algorithms
            .iter()
            .map(|_| EquivCell { hard_match: false, min_q_gap: f64::NAN, max_soft_err: f64::NAN, failure: Some(msg.clone()) })
            .collect()
    };
    let tr = match trial(cfg, m, n, snr, t) {
        Ok(tr) => tr,
        Err(e) => return broken(e),
    };
    let opts = DetectOptions { record: true, ..cfg.opts };
    let c = &cfg.constellation;
    let oracle = match Algorithm::Oracle.run_with(&tr.ch, &tr.rx, c, &opts) {
        Ok(r) => r,
        Err(e) => return broken(format!("oracle M={m} N={n} snr={snr} trial={t}: {e}")),
    };
    let gap = oracle.min_q_gap();
    let gated = gap > GAP_GATE;
    cfg.algorithms
        .iter()
        .map(|&alg| {
            let res = if alg == Algorithm::Oracle { Ok(oracle.clone()) } else { alg.run_with(&tr.ch, &tr.rx, c, &opts) };
            match res {
                Ok(res) => {
                    let a = agreement(&res, &oracle);
                    let cov = a.max_cov_err.unwrap_or(0.0);
                    let ok = !gated || (a.hard_match && cov <= COV_TOL && a.max_soft_err <= SOFT_TOL);
                    EquivCell {
                        hard_match: a.hard_match,
                        min_q_gap: gap,
                        max_soft_err: a.max_soft_err,
                        failure: (!ok).then(|| {
                            format!(
                                "{alg} disagrees with oracle at M={m} N={n} snr={snr} trial={t} \
                                 (hard_match={}, cov_err={cov:e}, soft_err={:e})",
                                a.hard_match, a.max_soft_err
                            )
                        }),
                    }
                }
                Err(e) => EquivCell {
                    hard_match: false,
                    min_q_gap: gap,
                    max_soft_err: f64::NAN,
                    failure: Some(format!("{alg} M={m} N={n} snr={snr} trial={t}: {e}")),
                },
            }
        })
        .collect()
}

pub fn equiv(cfg: &SweepConfig) -> Report {
    let mut table = Table::new(&["M", "N", "snr_db", "trial", "algorithm", "hard_match", "min_q_gap", "max_soft_err"]);
    let mut failures = Vec::new();
    for &(m, n) in &cfg.dims {
        for &snr in &cfg.snr_db {
            let cells = per_trial(cfg, |t| equiv_trial(cfg, m, n, snr, t));
            for (ai, alg) in cfg.algorithms.iter().enumerate() {
                for (t, row) in cells.iter().enumerate() {
                    let cell = &row[ai];
                    table.push(vec![
                        m.to_string(),
                        n.to_string(),
                        fmt_float(snr),
                        t.to_string(),
                        alg.to_string(),
                        cell.hard_match.to_string(),
                        fmt_float(cell.min_q_gap),
                        fmt_float(cell.max_soft_err),
                    ]);
                    failures.extend(cell.failure.clone());
                }
            }
        }
    }
    Report { table, extra: None, failures }
}

/// Every detector's result on trial 0 of the first SNR point.
fn all_results(cfg: &SweepConfig, m: usize, n: usize) -> Result<(Trial, Vec<(Algorithm, DetectionResult)>), String> {
    let tr = trial(cfg, m, n, cfg.snr_db[0], 0)?;
    let results = Algorithm::ALL
        .par_iter()
        .map(|&alg| {
            alg.run_with(&tr.ch, &tr.rx, &cfg.constellation, &cfg.opts)
                .map(|r| (alg, r))
                .map_err(|e| format!("{alg} M={m} N={n}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((tr, results))
}

fn ledger_of(results: &[(Algorithm, DetectionResult)], alg: Algorithm) -> &FlopLedger {
    &results.iter().find(|(a, _)| *a == alg).expect("every algorithm runs").1.ledger
}

/// `(name, numerator, denominator, reference value, tolerance)`.
const RATIOS: [(&str, Algorithm, Algorithm, f64, f64); 3] = [
    ("speed_adv/proposed", Algorithm::SpeedAdv, Algorithm::Proposed2, 1.30, 0.08),
    ("mem_saving/proposed", Algorithm::MemSaving, Algorithm::Proposed2, 1.86, 0.12),
    ("fastest_known/speed_adv", Algorithm::FastestKnown, Algorithm::SpeedAdv, 1.22, 0.08),
];
const INIT_RATIO: (f64, f64) = (1.67, 0.10);

pub fn flops(cfg: &SweepConfig) -> Report {
    let mut table = Table::new(&["M", "N", "algorithm", "cmul", "cadd", "cdiv", "predicted_mul", "gap"]);
    let mut ratios = Table::new(&["M", "N", "ratio", "measured", "reference", "tolerance", "within"]);
    let mut failures = Vec::new();
    let mut gaps: Vec<Vec<(Algorithm, f64)>> = Vec::new();
    for &(m, n) in &cfg.dims {
        let (tr, results) = match all_results(cfg, m, n) {
            Ok(r) => r,
            Err(e) => {
                failures.push(e);
                continue;
            }
        };
        let mut point_gaps = Vec::new();
        for &alg in &cfg.algorithms {
            let l = ledger_of(&results, alg);
            let (predicted, gap) = match ModelKind::for_algorithm(alg) {
                Some(kind) => {
                    let c = compare(l, &ComplexityModel::of(kind), m, n);
                    if let Some(g) = c.mul_gap {
                        point_gaps.push((alg, g));
                    }
                    (fmt_float(c.predicted.mul), c.mul_gap.map(fmt_float).unwrap_or_default())
                }
                None => (String::new(), String::new()),
            };
            table.push(vec![
                m.to_string(),
                n.to_string(),
                alg.to_string(),
                l.cmul.to_string(),
                l.cadd.to_string(),
                l.cdiv.to_string(),
                predicted,
                gap,
            ]);
        }
        gaps.push(point_gaps);

        let mut measured: Vec<(&str, f64, f64, f64)> = Vec::new();
        for (name, a, b, reference, tol) in RATIOS {
            match speedup(ledger_of(&results, a), ledger_of(&results, b)) {
                Ok(v) => measured.push((name, v, reference, tol)),
                Err(e) => failures.push(format!("{name} at M={m}: {e}")),
            }
        }
        // a 1x1 inversion is a lone reciprocal in both forms
        if m >= 2 {
            let r = gram_accumulate(tr.ch.h(), tr.rx.alpha(), &mut FlopLedger::new());
            match (init_ledger(&r, BlockStep::Classic), init_ledger(&r, BlockStep::DivisionLight)) {
                (Ok(li), Ok(lv)) => match speedup(&li, &lv) {
                    Ok(v) => measured.push(("init_i/init_v", v, INIT_RATIO.0, INIT_RATIO.1)),
                    Err(e) => failures.push(format!("init_i/init_v at M={m}: {e}")),
                },
                (Err(e), _) | (_, Err(e)) => failures.push(format!("init ledger at M={m}: {e}")),
            }
        }
        for (name, v, reference, tol) in measured {
            let within = (v - reference).abs() <= tol;
            if m == n && m >= RATIO_GATE_M && !within {
                failures.push(format!("{name} at M={m} is {v:.4}, outside {reference} +/- {tol}"));
            }
            ratios.push(vec![
                m.to_string(),
                n.to_string(),
                name.to_string(),
                fmt_float(v),
                fmt_float(reference),
                fmt_float(tol),
                within.to_string(),
            ]);
        }
    }
    if let (Some(first), Some(last)) = (gaps.first(), gaps.last()) {
        if gaps.len() > 1 {
            for ((alg, g0), (_, g1)) in first.iter().zip(last) {
                if g1 > g0 {
                    failures.push(format!("{alg} model gap grows from {g0:.4} to {g1:.4} across the M range"));
                }
            }
        }
    }
    Report { table, extra: Some(ratios), failures }
}

pub fn mem(cfg: &SweepConfig) -> Report {
    let mut table = Table::new(&["M", "N", "algorithm", "peak_words", "buffers"]);
    let mut failures = Vec::new();
    for &(m, n) in &cfg.dims {
        let (_, results) = match all_results(cfg, m, n) {
            Ok(r) => r,
            Err(e) => {
                failures.push(e);
                continue;
            }
        };
        let peak = |alg| results.iter().find(|(a, _)| *a == alg).expect("every algorithm runs").1.mem.peak_words();
        for &alg in &cfg.algorithms {
            let mem = &results.iter().find(|(a, _)| *a == alg).expect("every algorithm runs").1.mem;
            table.push(vec![m.to_string(), n.to_string(), alg.to_string(), mem.peak_words().to_string(), mem.describe()]);
        }
        let (p2, ms, sa) = (peak(Algorithm::Proposed2), peak(Algorithm::MemSaving), peak(Algorithm::SpeedAdv));
        if m == n && m >= 16 && p2 as f64 > MEM_RATIO_MAX * ms as f64 {
            failures.push(format!("proposed_2 peak {p2} exceeds {MEM_RATIO_MAX} x mem_saving peak {ms} at M={m}"));
        }
        if m >= 2 && p2 >= sa {
            failures.push(format!("proposed_2 peak {p2} is not below speed_adv peak {sa} at M={m} N={n}"));
        }
    }
    Report { table, extra: None, failures }
}

pub fn ber(cfg: &SweepConfig) -> Report {
    let mut table = Table::new(&["M", "N", "snr_db", "algorithm", "bit_errors", "bits", "ber"]);
    let mut failures = Vec::new();
    let c = &cfg.constellation;
    for &(m, n) in &cfg.dims {
        for &snr in &cfg.snr_db {
            let cells: Vec<Vec<Result<(u64, u64), String>>> = per_trial(cfg, |t| {
                let tr = match trial(cfg, m, n, snr, t) {
                    Ok(tr) => tr,
                    Err(e) => return cfg.algorithms.iter().map(|_| Err(e.clone())).collect(),
                };
                cfg.algorithms
                    .iter()
                    .map(|&alg| {
                        let res = alg
                            .run_with(&tr.ch, &tr.rx, c, &cfg.opts)
                            .map_err(|e| format!("{alg} M={m} N={n} snr={snr} trial={t}: {e}"))?;
                        let bits = demap(&res.s_hat, c).map_err(|e| e.to_string())?;
                        let errors = bits.iter().zip(tr.frame.bits()).filter(|(a, b)| a != b).count();
                        Ok((errors as u64, bits.len() as u64))
                    })
                    .collect()
            });
            for (ai, alg) in cfg.algorithms.iter().enumerate() {
                let (mut errors, mut bits) = (0u64, 0u64);
                for row in &cells {
                    match &row[ai] {
                        Ok((e, b)) => {
                            errors += e;
                            bits += b;
                        }
                        Err(e) => failures.push(e.clone()),
                    }
                }
                let rate = if bits == 0 { f64::NAN } else { errors as f64 / bits as f64 };
                table.push(vec![
                    m.to_string(),
                    n.to_string(),
                    fmt_float(snr),
                    alg.to_string(),
                    errors.to_string(),
                    bits.to_string(),
                    fmt_float(rate),
                ]);
            }
        }
    }
    Report { table, extra: None, failures }
}
