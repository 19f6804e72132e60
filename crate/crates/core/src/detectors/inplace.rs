//! Detectors whose only matrix-sized buffer starts as `H^H` and is covered
//! first by `R` and then by `Q`. Cancellation runs on a d-vector so `R` is
//! never needed after inversion.

use super::{omega_inverse, validate, DetectOptions, DetectionResult, MemLedger, Sic};
use crate::error::Result;
use crate::numkernel::{
    cover_gram_with_inverse, cover_gram_with_inverse_upper, cover_with_gram, CMat, Cplx, FlopLedger,
};
use crate::sigmodel::{ChannelRealization, Constellation, RxFrame};

const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };

pub fn detect_proposed_2(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_permuting(ch, rx, c, &DetectOptions::default())
}

pub fn detect_proposed_2_noperm(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_noperm(ch, rx, c, &DetectOptions::default())
}

/// Covered buffer, `z = H^H x` and an `M`-word scratch vector.
pub(super) struct Covered {
    pub buf: CMat,
    pub z: Vec<Cplx>,
    pub scratch: Vec<Cplx>,
}

/// Loads `H^H`, forms `z`, then covers the leading block with `R` and `R`
/// with `Q` (full, or upper triangle only).
pub(super) fn cover(
    ch: &ChannelRealization,
    rx: &RxFrame,
    alpha: f64,
    upper_only: bool,
    ledger: &mut FlopLedger,
    mem: &mut MemLedger,
) -> Result<Covered> {
    let (m, n) = (ch.m(), ch.n());
    mem.alloc("Ht", m * n);
    let mut buf = ch.h().conj_transpose();
    mem.alloc("z", m);
    let z: Vec<Cplx> = (0..m).map(|i| ledger.dot_u(buf.row(i), rx.x())).collect();
    mem.alloc("scratch", m);
    let mut scratch = vec![ZERO; m];
    cover_with_gram(&mut buf, alpha, &mut scratch, ledger)?;
    if upper_only {
        cover_gram_with_inverse_upper(&mut buf, &mut scratch, ledger)?;
    } else {
        cover_gram_with_inverse(&mut buf, &mut scratch, ledger)?;
    }
    Ok(Covered { buf, z, scratch })
}

pub(super) fn run_permuting(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
    opts: &DetectOptions,
) -> Result<DetectionResult> {
    let (big_m, _, alpha) = validate(ch, rx)?;
    let mut ledger = FlopLedger::new();
    let mut mem = MemLedger::new();
    let Covered { buf: mut q, mut z, scratch: mut d } = cover(ch, rx, alpha, false, &mut ledger, &mut mem)?;
    d.fill(ZERO);
    let mut sic = Sic::new(big_m, c, opts);

    for m in (1..=big_m).rev() {
        let k = m - 1;
        let (cov, snap) = if sic.recording() { (Some(q.leading(m, m)), Some(d[..m].to_vec())) } else { (None, None) };
        let l = sic.choose(m, |j, _| q[(j, j)].re, cov, snap);
        q.swap_rows_cols(l, k, m);
        z.swap(l, k);
        d.swap(l, k);

        let mut qz = q[(0, k)].conj() * z[0];
        for j in 1..m {
            qz += q[(j, k)].conj() * z[j];
        }
        ledger.charge(m as u64, k as u64, 0);
        let est = ledger.sub(qz, d[k]);
        let s = sic.decide(m, est);
        if m == 1 {
            break;
        }
        let winv = omega_inverse(q[(k, k)], m, &mut ledger)?;
        let sd = ledger.add(s, d[k]);
        let coef = ledger.mul(sd, winv);
        for (j, dj) in d.iter_mut().enumerate().take(k) {
            *dj -= coef * q[(j, k)];
        }
        ledger.charge(k as u64, k as u64, 0);
        deflate_with(&mut q, k, winv, &mut ledger);
    }
    Ok(sic.finish(ledger, mem))
}

/// `Q_bar -= q_bar t^H`, `t = q_bar / omega`, on the upper triangle of the
/// leading `k x k` block, then mirrored.
fn deflate_with(q: &mut CMat, k: usize, winv: Cplx, ledger: &mut FlopLedger) {
    for b in 0..k {
        let t = q[(b, k)].conj() * winv;
        for a in 0..=b {
            let u = q[(a, k)] * t;
            q[(a, b)] -= u;
        }
        q[(b, b)].im = 0.0;
    }
    ledger.charge((k + k * (k + 1) / 2) as u64, (k * (k + 1) / 2) as u64, 0);
    q.mirror_upper(k);
}

pub(super) fn run_noperm(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
    opts: &DetectOptions,
) -> Result<DetectionResult> {
    let (big_m, _, alpha) = validate(ch, rx)?;
    let mut ledger = FlopLedger::new();
    let mut mem = MemLedger::new();
    let Covered { buf: mut q, z, scratch: mut d } = cover(ch, rx, alpha, false, &mut ledger, &mut mem)?;
    d.fill(ZERO);
    let sign = opts.noperm_sign;
    let a_sign = sign.estimate_sign();
    let (b_sign, c_sign) = sign.update_signs();
    let d_view = if sign.stores_negated() { -1.0 } else { 1.0 };
    let mut sic = Sic::new(big_m, c, opts);

    for m in (1..=big_m).rev() {
        let k = m - 1;
        let (cov, snap) = if sic.recording() {
            let p = &sic.p;
            (
                Some(CMat::from_fn(m, m, |i, j| q[(p[i], p[j])])),
                Some((0..m).map(|j| d[p[j]] * d_view).collect()),
            )
        } else {
            (None, None)
        };
        sic.choose(m, |_, a| q[(a, a)].re, cov, snap);
        let p = &sic.p;
        let pm = p[k];

        let mut qz = q[(p[0], pm)].conj() * z[p[0]];
        for &pj in &p[1..m] {
            qz += q[(pj, pm)].conj() * z[pj];
        }
        ledger.charge(m as u64, k as u64, 0);
        let est = ledger.add(qz, d[pm] * a_sign);
        let s = sic.decide(m, est);
        if m == 1 {
            break;
        }
        let p = &sic.p;
        let winv = omega_inverse(q[(pm, pm)], m, &mut ledger)?;
        let inner = ledger.add(s, d[pm] * c_sign);
        let coef = ledger.mul(inner, winv) * b_sign;
        for &pj in &p[..k] {
            d[pj] += coef * q[(pj, pm)];
        }
        ledger.charge(k as u64, k as u64, 0);

        for bi in 0..k {
            let pb = p[bi];
            let t = q[(pb, pm)].conj() * winv;
            for &pa in &p[..=bi] {
                let u = q[(pa, pm)] * t;
                q[(pa, pb)] -= u;
                if pa != pb {
                    q[(pb, pa)] = q[(pa, pb)].conj();
                }
            }
            q[(pb, pb)].im = 0.0;
        }
        ledger.charge((k + k * (k + 1) / 2) as u64, (k * (k + 1) / 2) as u64, 0);
    }
    Ok(sic.finish(ledger, mem))
}
