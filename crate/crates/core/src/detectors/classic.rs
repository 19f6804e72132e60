//! Detectors that keep `Q` as a full matrix in its own buffer: the original
//! recursion, the memory-saving one that works on `H` and `x` directly, and
//! the three that cancel in the matched-filter domain `z = H^H x`.

use super::{validate, DetectOptions, DetectionResult, MemLedger, Sic};
use crate::error::Result;
use crate::numkernel::{
    conj_transpose_matvec, deflate_in_place, deflate_sm_in_place, gram_accumulate, init_q_block,
    init_q_sherman_morrison, BlockStep, CMat, Cplx, FlopLedger, Symmetry,
};
use crate::sigmodel::{ChannelRealization, Constellation, RxFrame};

const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };

pub fn detect_original(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_original(ch, rx, c, &DetectOptions::default())
}

pub fn detect_mem_saving(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_mem_saving(ch, rx, c, &DetectOptions::default())
}

pub fn detect_fastest_known(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_z_domain(ch, rx, c, &DetectOptions::default(), Variant::FastestKnown)
}

pub fn detect_speed_adv(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_z_domain(ch, rx, c, &DetectOptions::default(), Variant::SpeedAdv)
}

pub fn detect_proposed_1(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_z_domain(ch, rx, c, &DetectOptions::default(), Variant::Proposed1)
}

/// `t = H_m q_m` over the leading `m` columns, `q_m` being column `m - 1` of `q`.
fn filter_column(h: &CMat, q: &CMat, m: usize, t: &mut [Cplx], ledger: &mut FlopLedger) {
    let k = m - 1;
    for (i, ti) in t.iter_mut().enumerate() {
        let row = h.row(i);
        let mut acc = row[0] * q[(0, k)];
        for j in 1..m {
            acc += row[j] * q[(j, k)];
        }
        *ti = acc;
    }
    ledger.charge((t.len() * m) as u64, (t.len() * (m - 1)) as u64, 0);
}

/// `x -= s h_{:k}`.
fn cancel_column(x: &mut [Cplx], h: &CMat, k: usize, s: Cplx, ledger: &mut FlopLedger) {
    for (i, xi) in x.iter_mut().enumerate() {
        *xi -= s * h[(i, k)];
    }
    ledger.charge(x.len() as u64, x.len() as u64, 0);
}

pub(super) fn run_original(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
    opts: &DetectOptions,
) -> Result<DetectionResult> {
    let (big_m, n, alpha) = validate(ch, rx)?;
    let mut ledger = FlopLedger::new();
    let mut mem = MemLedger::new();
    mem.alloc("H", n * big_m);
    mem.alloc("x", n);
    let mut h = ch.h().clone();
    let mut x = rx.x().to_vec();

    mem.alloc("R", big_m * big_m);
    let mut r = gram_accumulate(&h, alpha, &mut ledger);
    mem.alloc("Q", big_m * big_m);
    mem.alloc("init_scratch", 2 * big_m);
    let mut q = init_q_sherman_morrison(&h, alpha, Symmetry::General, &mut ledger)?;
    mem.free("init_scratch");

    mem.alloc("t", n);
    mem.alloc("scratch", 3 * big_m);
    let mut t = vec![ZERO; n];
    let mut r_bar = vec![ZERO; big_m];
    let mut g = vec![ZERO; big_m];
    let mut v = vec![ZERO; big_m];
    let mut sic = Sic::new(big_m, c, opts);

    for m in (1..=big_m).rev() {
        let k = m - 1;
        let cov = sic.recording().then(|| q.leading(m, m));
        let l = sic.choose(m, |j, _| q[(j, j)].re, cov, None);
        h.swap_cols(l, k, n);
        r.swap_rows_cols(l, k, m);
        q.swap_rows_cols(l, k, m);

        filter_column(&h, &q, m, &mut t, &mut ledger);
        let est = ledger.dot_h(&t, &x);
        let s = sic.decide(m, est);
        if m == 1 {
            break;
        }
        cancel_column(&mut x, &h, k, s, &mut ledger);
        for (j, rb) in r_bar.iter_mut().enumerate().take(k) {
            *rb = r[(j, k)];
        }
        let gamma = r[(k, k)].re;
        deflate_sm_in_place(&mut q, m, &r_bar, gamma, Symmetry::General, &mut g, &mut v, &mut ledger, m)?;
    }
    Ok(sic.finish(ledger, mem))
}

pub(super) fn run_mem_saving(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
    opts: &DetectOptions,
) -> Result<DetectionResult> {
    let (big_m, n, alpha) = validate(ch, rx)?;
    let mut ledger = FlopLedger::new();
    let mut mem = MemLedger::new();
    mem.alloc("H", n * big_m);
    mem.alloc("x", n);
    let mut h = ch.h().clone();
    let mut x = rx.x().to_vec();

    mem.alloc("Q", big_m * big_m);
    mem.alloc("init_scratch", 2 * big_m);
    let mut q = init_q_sherman_morrison(&h, alpha, Symmetry::Hermitian, &mut ledger)?;
    mem.free("init_scratch");

    mem.alloc("t", n);
    let mut t = vec![ZERO; n];
    let mut sic = Sic::new(big_m, c, opts);

    for m in (1..=big_m).rev() {
        let k = m - 1;
        let cov = sic.recording().then(|| q.leading(m, m));
        let l = sic.choose(m, |j, _| q[(j, j)].re, cov, None);
        h.swap_cols(l, k, n);
        q.swap_rows_cols(l, k, m);

        filter_column(&h, &q, m, &mut t, &mut ledger);
        let est = ledger.dot_h(&t, &x);
        let s = sic.decide(m, est);
        if m == 1 {
            break;
        }
        cancel_column(&mut x, &h, k, s, &mut ledger);
        deflate_in_place(&mut q, m, &mut ledger, m)?;
    }
    Ok(sic.finish(ledger, mem))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Variant {
    /// Classic block init, Sherman-Morrison deflation.
    FastestKnown,
    /// Classic block init, direct deflation.
    SpeedAdv,
    /// Division-light block init, direct deflation.
    Proposed1,
}

pub(super) fn run_z_domain(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
    opts: &DetectOptions,
    variant: Variant,
) -> Result<DetectionResult> {
    let (big_m, n, alpha) = validate(ch, rx)?;
    let mut ledger = FlopLedger::new();
    let mut mem = MemLedger::new();
    mem.alloc("H", n * big_m);
    mem.alloc("R", big_m * big_m);
    let mut r = gram_accumulate(ch.h(), alpha, &mut ledger);
    mem.alloc("z", big_m);
    let mut z = conj_transpose_matvec(ch.h(), rx.x(), &mut ledger);
    mem.free("H");

    let step = match variant {
        Variant::FastestKnown | Variant::SpeedAdv => BlockStep::Classic,
        Variant::Proposed1 => BlockStep::DivisionLight,
    };
    mem.alloc("Q", big_m * big_m);
    mem.alloc("init_scratch", 2 * big_m);
    let mut q = init_q_block(&r, step, &mut ledger)?;
    mem.free("init_scratch");

    let sm_deflation = variant == Variant::FastestKnown;
    let mut r_bar = vec![ZERO; big_m];
    let mut g = Vec::new();
    let mut v = Vec::new();
    if sm_deflation {
        mem.alloc("scratch", 3 * big_m);
        g = vec![ZERO; big_m];
        v = vec![ZERO; big_m];
    }
    let mut sic = Sic::new(big_m, c, opts);

    for m in (1..=big_m).rev() {
        let k = m - 1;
        let cov = sic.recording().then(|| q.leading(m, m));
        let l = sic.choose(m, |j, _| q[(j, j)].re, cov, None);
        r.swap_rows_cols(l, k, m);
        q.swap_rows_cols(l, k, m);
        z.swap(l, k);

        let mut est = q[(0, k)].conj() * z[0];
        for j in 1..m {
            est += q[(j, k)].conj() * z[j];
        }
        ledger.charge(m as u64, k as u64, 0);
        let s = sic.decide(m, est);
        if m == 1 {
            break;
        }
        // z_{m-1} = z_bar - s r_bar
        for (j, zj) in z.iter_mut().enumerate().take(k) {
            *zj -= s * r[(j, k)];
        }
        ledger.charge(k as u64, k as u64, 0);
        if sm_deflation {
            for (j, rb) in r_bar.iter_mut().enumerate().take(k) {
                *rb = r[(j, k)];
            }
            let gamma = r[(k, k)].re;
            deflate_sm_in_place(&mut q, m, &r_bar, gamma, Symmetry::Hermitian, &mut g, &mut v, &mut ledger, m)?;
        } else {
            deflate_in_place(&mut q, m, &mut ledger, m)?;
        }
    }
    Ok(sic.finish(ledger, mem))
}
