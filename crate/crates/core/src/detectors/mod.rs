//! Ordered MMSE successive-interference-cancellation detectors.
//!
//! Every detector solves the same problem and, in exact arithmetic, makes
//! the same decisions in the same order: at each recursion the stream with
//! the smallest diagonal entry of the error covariance `Q_m` is detected,
//! quantized and cancelled, and `Q_m` is deflated to `Q_{m-1}`. They differ
//! in how `Q` is initialized and deflated, in which domain cancellation
//! happens, in what is permuted physically, and therefore in the flops and
//! memory they spend.
//!
//! Conventions shared by all of them:
//! * `order[m - 1]` is the antenna detected when `m` streams remained, so
//!   `order[M - 1]` is detected first.
//! * `s_hat` and `soft` are indexed by original antenna.
//! * Argmin ties go to the lowest position.
//! * The last recursion (`m = 1`) estimates only; nothing is left to cancel.

mod classic;
mod inplace;
mod memory;
mod oracle;
mod packed;

use std::fmt;
use std::str::FromStr;

use crate::error::{contract, Error, Result};
use crate::numkernel::{real_pivot, CMat, Cplx, FlopLedger, PIVOT_TOL};
use crate::sigmodel::{quantize, ChannelRealization, Constellation, RxFrame};

pub use classic::{detect_fastest_known, detect_mem_saving, detect_original, detect_proposed_1, detect_speed_adv};
pub use inplace::{detect_proposed_2, detect_proposed_2_noperm};
pub use memory::{BufferRecord, MemLedger};
pub use oracle::detect_oracle;
pub use packed::{detect_proposed_2_tri, detect_proposed_2_tri_noperm};

/// Whether cancellation subtracts the quantized decision or the raw estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Cancellation {
    #[default]
    Hard,
    Soft,
}

/// Sign convention for the d-vector in the permutation-free detectors.
///
/// With `d` the vector `Q_m (z_M(1:m) - z_m)`, the permuting detector
/// estimates `q^H z - d(m)` and updates `d <- d_bar - (s + d(m)) q_bar / omega`.
/// The permutation-free box instead writes `q^H z + d(p_m)` and
/// `d <- d + (s - d(p_m)) w / omega`, which is the same recursion applied to
/// `-d`. The two mixed readings take one formula from each and are kept so
/// the equivalence tests can show they are wrong.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum NoPermSign {
    /// Stores `-d`: estimate adds it, update adds `(s - d) w / omega`.
    #[default]
    Negated,
    /// Stores `d`: estimate subtracts it, update subtracts `(s + d) w / omega`.
    Direct,
    /// Estimate adds `d`, update subtracts `(s + d) w / omega`.
    MixedAddSubtract,
    /// Estimate subtracts `d`, update adds `(s - d) w / omega`.
    MixedSubtractAdd,
}

impl NoPermSign {
    pub const ALL: [NoPermSign; 4] =
        [NoPermSign::Negated, NoPermSign::Direct, NoPermSign::MixedAddSubtract, NoPermSign::MixedSubtractAdd];

    /// Sign `a` in `s_est = q^H z + a d(p_m)`.
    pub(crate) fn estimate_sign(self) -> f64 {
        match self {
            NoPermSign::Negated | NoPermSign::MixedAddSubtract => 1.0,
            NoPermSign::Direct | NoPermSign::MixedSubtractAdd => -1.0,
        }
    }

    /// `(b, c)` in `d(p_j) += b (s + c d(p_m)) w_j / omega`.
    pub(crate) fn update_signs(self) -> (f64, f64) {
        match self {
            NoPermSign::Negated | NoPermSign::MixedSubtractAdd => (1.0, -1.0),
            NoPermSign::Direct | NoPermSign::MixedAddSubtract => (-1.0, 1.0),
        }
    }

    /// Whether the stored vector is `-d`.
    pub(crate) fn stores_negated(self) -> bool {
        self == NoPermSign::Negated
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct DetectOptions {
    pub cancel: Cancellation,
    /// Keep per-step covariance and d-vector snapshots in the trace.
    pub record: bool,
    pub noperm_sign: NoPermSign,
}

/// One recursion of the ordering loop.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    /// Streams still undetected when the step starts.
    pub m: usize,
    /// Position `l_m` of the minimum within the current order.
    pub position: usize,
    /// Antenna detected at this step.
    pub antenna: usize,
    pub q_min: f64,
    /// Second-smallest minus smallest diagonal entry; infinite when `m = 1`.
    pub q_gap: f64,
    /// `Q_m` at the start of the step, rows and columns in the current order.
    pub covariance: Option<CMat>,
    /// `d_m` at the start of the step in the current order, for the
    /// detectors that carry one.
    pub d: Option<Vec<Cplx>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub s_hat: Vec<Cplx>,
    pub order: Vec<usize>,
    pub soft: Vec<Cplx>,
    pub ledger: FlopLedger,
    pub mem: MemLedger,
    /// Step `M` first.
    pub trace: Vec<StepTrace>,
}

impl DetectionResult {
    /// Smallest ordering gap over all steps.
    pub fn min_q_gap(&self) -> f64 {
        self.trace.iter().map(|t| t.q_gap).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Oracle,
    Original,
    FastestKnown,
    SpeedAdv,
    MemSaving,
    Proposed1,
    Proposed2,
    Proposed2NoPerm,
    Proposed2Tri,
    Proposed2TriNoPerm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Oracle,
        Algorithm::Original,
        Algorithm::FastestKnown,
        Algorithm::SpeedAdv,
        Algorithm::MemSaving,
        Algorithm::Proposed1,
        Algorithm::Proposed2,
        Algorithm::Proposed2NoPerm,
        Algorithm::Proposed2Tri,
        Algorithm::Proposed2TriNoPerm,
    ];

    /// Every detector except the oracle.
    pub const RECURSIVE: [Algorithm; 9] = [
        Algorithm::Original,
        Algorithm::FastestKnown,
        Algorithm::SpeedAdv,
        Algorithm::MemSaving,
        Algorithm::Proposed1,
        Algorithm::Proposed2,
        Algorithm::Proposed2NoPerm,
        Algorithm::Proposed2Tri,
        Algorithm::Proposed2TriNoPerm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Oracle => "oracle",
            Algorithm::Original => "original",
            Algorithm::FastestKnown => "fastest_known",
            Algorithm::SpeedAdv => "speed_adv",
            Algorithm::MemSaving => "mem_saving",
            Algorithm::Proposed1 => "proposed_1",
            Algorithm::Proposed2 => "proposed_2",
            Algorithm::Proposed2NoPerm => "proposed_2_noperm",
            Algorithm::Proposed2Tri => "proposed_2_tri",
            Algorithm::Proposed2TriNoPerm => "proposed_2_tri_noperm",
        }
    }

    pub fn run(self, ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
        self.run_with(ch, rx, c, &DetectOptions::default())
    }

    pub fn run_with(
        self,
        ch: &ChannelRealization,
        rx: &RxFrame,
        c: &Constellation,
        opts: &DetectOptions,
    ) -> Result<DetectionResult> {
        match self {
            Algorithm::Oracle => oracle::run(ch, rx, c, opts),
            Algorithm::Original => classic::run_original(ch, rx, c, opts),
            Algorithm::FastestKnown => classic::run_z_domain(ch, rx, c, opts, classic::Variant::FastestKnown),
            Algorithm::SpeedAdv => classic::run_z_domain(ch, rx, c, opts, classic::Variant::SpeedAdv),
            Algorithm::MemSaving => classic::run_mem_saving(ch, rx, c, opts),
            Algorithm::Proposed1 => classic::run_z_domain(ch, rx, c, opts, classic::Variant::Proposed1),
            Algorithm::Proposed2 => inplace::run_permuting(ch, rx, c, opts),
            Algorithm::Proposed2NoPerm => inplace::run_noperm(ch, rx, c, opts),
            Algorithm::Proposed2Tri => packed::run_permuting(ch, rx, c, opts),
            Algorithm::Proposed2TriNoPerm => packed::run_noperm(ch, rx, c, opts),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown algorithm '{s}'")))
    }
}

/// How closely one detection result follows a reference run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub order_match: bool,
    /// Same order and same decisions.
    pub hard_match: bool,
    /// Largest `|soft - soft_ref| / max(1, |soft_ref|)`.
    pub max_soft_err: f64,
    /// Largest per-step `max|Q - Q_ref| / max|Q_ref|`; `None` unless both
    /// runs recorded covariances.
    pub max_cov_err: Option<f64>,
}

pub fn agreement(res: &DetectionResult, reference: &DetectionResult) -> Agreement {
    let order_match = res.order == reference.order;
    let max_soft_err = res
        .soft
        .iter()
        .zip(&reference.soft)
        .map(|(a, b)| (a - b).norm() / b.norm().max(1.0))
        .fold(0.0, f64::max);
    let mut max_cov_err = None;
    for (a, b) in res.trace.iter().zip(&reference.trace) {
        if let (Some(qa), Some(qb)) = (&a.covariance, &b.covariance) {
            let err = if qa.rows() == qb.rows() { qa.sub(qb).max_abs() / qb.max_abs() } else { f64::INFINITY };
            max_cov_err = Some(max_cov_err.map_or(err, |e: f64| e.max(err)));
        }
    }
    Agreement { order_match, hard_match: order_match && res.s_hat == reference.s_hat, max_soft_err, max_cov_err }
}

/// Maximum soft-output deviation of the permutation-free detector from the
/// permuting one under each sign reading. Readings that reproduce the
/// permuting detector come back at rounding level.
pub fn noperm_sign_deviation(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
) -> Result<Vec<(NoPermSign, f64)>> {
    let reference = detect_proposed_2(ch, rx, c)?;
    NoPermSign::ALL
        .into_iter()
        .map(|sign| {
            let opts = DetectOptions { noperm_sign: sign, ..DetectOptions::default() };
            let res = inplace::run_noperm(ch, rx, c, &opts)?;
            let err = res
                .soft
                .iter()
                .zip(&reference.soft)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let err = if res.order == reference.order { err } else { f64::INFINITY };
            Ok((sign, err))
        })
        .collect()
}

/// `1 / omega` for the trailing diagonal entry being deflated away.
pub(crate) fn omega_inverse(omega: Cplx, step: usize, ledger: &mut FlopLedger) -> Result<Cplx> {
    let w = real_pivot(omega, step)?;
    if w <= PIVOT_TOL {
        return Err(Error::Singular { step, pivot: w });
    }
    Ok(ledger.recip(Cplx::new(w, 0.0)))
}

/// Checks shapes and returns `(M, N, alpha)`.
pub(crate) fn validate(ch: &ChannelRealization, rx: &RxFrame) -> Result<(usize, usize, f64)> {
    if rx.x().len() != ch.n() {
        return contract(format!("received vector has {} entries, channel has {} outputs", rx.x().len(), ch.n()));
    }
    let alpha = rx.alpha();
    if !(alpha > 0.0) {
        return contract(format!("alpha must be positive, got {alpha}"));
    }
    Ok((ch.m(), ch.n(), alpha))
}

/// Order, decisions and trace bookkeeping shared by every detector.
pub(crate) struct Sic<'a> {
    c: &'a Constellation,
    opts: &'a DetectOptions,
    pub p: Vec<usize>,
    s_hat: Vec<Cplx>,
    soft: Vec<Cplx>,
    trace: Vec<StepTrace>,
}

impl<'a> Sic<'a> {
    pub fn new(m: usize, c: &'a Constellation, opts: &'a DetectOptions) -> Self {
        Self {
            c,
            opts,
            p: (0..m).collect(),
            s_hat: vec![Cplx::new(0.0, 0.0); m],
            soft: vec![Cplx::new(0.0, 0.0); m],
            trace: Vec::with_capacity(m),
        }
    }

    pub fn recording(&self) -> bool {
        self.opts.record
    }

    /// Picks the position `j < m` minimizing `diag(j, p[j])`, records the
    /// step and swaps it to the end of the order. Returns the position.
    pub fn choose(
        &mut self,
        m: usize,
        diag: impl Fn(usize, usize) -> f64,
        covariance: Option<CMat>,
        d: Option<Vec<Cplx>>,
    ) -> usize {
        let mut best = 0;
        let mut q_min = diag(0, self.p[0]);
        let mut second = f64::INFINITY;
        for j in 1..m {
            let v = diag(j, self.p[j]);
            if v < q_min {
                second = q_min;
                q_min = v;
                best = j;
            } else if v < second {
                second = v;
            }
        }
        self.trace.push(StepTrace {
            m,
            position: best,
            antenna: self.p[best],
            q_min,
            q_gap: second - q_min,
            covariance,
            d,
        });
        self.p.swap(best, m - 1);
        best
    }

    /// Stores the estimate for the stream just chosen and returns the value
    /// to cancel with.
    pub fn decide(&mut self, m: usize, est: Cplx) -> Cplx {
        let antenna = self.p[m - 1];
        let hard = quantize(est, self.c);
        self.soft[antenna] = est;
        self.s_hat[antenna] = hard;
        match self.opts.cancel {
            Cancellation::Hard => hard,
            Cancellation::Soft => est,
        }
    }

    pub fn finish(self, ledger: FlopLedger, mem: MemLedger) -> DetectionResult {
        DetectionResult { s_hat: self.s_hat, order: self.p, soft: self.soft, ledger, mem, trace: self.trace }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigmodel::{draw_channel, noise_variance_for_snr_db, rng_stream, transmit_with, TxFrame};

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    #[test]
    fn names_roundtrip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("nope".parse::<Algorithm>().is_err());
    }

    #[test]
    fn identity_channel_noiseless() {
        let q = Constellation::qpsk();
        let s = vec![q.points()[1], q.points()[2]];
        let ch = ChannelRealization::new(CMat::identity(2)).unwrap();
        let rx = RxFrame::new(s.clone(), 0.0, 1.0).unwrap();
        for a in Algorithm::ALL {
            let res = a.run(&ch, &rx, &q).unwrap();
            assert_eq!(res.s_hat, s, "{a}");
        }
    }

    #[test]
    fn scalar_mmse() {
        let q = Constellation::qpsk();
        let h = c(0.7, -1.2);
        let ch = ChannelRealization::new(CMat::from_vec(1, 1, vec![h]).unwrap()).unwrap();
        let x = c(0.3, 0.9);
        let rx = RxFrame::new(vec![x], 0.2, 1.0).unwrap();
        let expected = h.conj() * x / (h.norm_sqr() + 0.2);
        for a in Algorithm::ALL {
            let res = a.run(&ch, &rx, &q).unwrap();
            assert!((res.soft[0] - expected).norm() < 1e-13, "{a}: {} vs {expected}", res.soft[0]);
            assert_eq!(res.order, vec![0]);
            assert_eq!(res.trace.len(), 1);
            assert!(res.trace[0].q_gap.is_infinite());
        }
    }

    #[test]
    fn seeded_4x4_matches_oracle() {
        let q = Constellation::qpsk();
        let ch = draw_channel(4, 4, 12).unwrap();
        let mut rng = rng_stream(12, 1);
        let frame = TxFrame::random(4, &q, &mut rng).unwrap();
        let rx = transmit_with(&frame, &ch, noise_variance_for_snr_db(20.0, 1.0), &mut rng).unwrap();
        let oracle = detect_oracle(&ch, &rx, &q).unwrap();
        assert!(oracle.min_q_gap() > 1e-9);
        for a in Algorithm::RECURSIVE {
            let res = a.run(&ch, &rx, &q).unwrap();
            assert_eq!(res.order, oracle.order, "{a}");
            assert_eq!(res.s_hat, oracle.s_hat, "{a}");
            for (x, y) in res.soft.iter().zip(&oracle.soft) {
                assert!((x - y).norm() < 1e-9, "{a}");
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let q = Constellation::qpsk();
        let ch = draw_channel(2, 3, 1).unwrap();
        let rx = RxFrame::new(vec![c(1.0, 0.0); 2], 0.1, 1.0).unwrap();
        for a in Algorithm::ALL {
            assert!(matches!(a.run(&ch, &rx, &q), Err(Error::Contract(_))), "{a}");
        }
    }

    #[test]
    fn tie_goes_to_lowest_position() {
        let q = Constellation::qpsk();
        let opts = DetectOptions::default();
        let mut sic = Sic::new(3, &q, &opts);
        let l = sic.choose(3, |_, _| 1.0, None, None);
        assert_eq!(l, 0);
        assert_eq!(sic.p, vec![2, 1, 0]);
        assert_eq!(sic.trace[0].q_gap, 0.0);
    }
}
