//! The in-place detectors with `Q` kept as a packed upper triangle.
//!
//! Initialization covers only the upper triangle of the `H^H` buffer, which
//! is then packed; the recursion touches `M (M + 1) / 2` words of `Q`.

use super::inplace::{cover, Covered};
use super::{omega_inverse, validate, DetectOptions, DetectionResult, MemLedger, Sic};
use crate::error::Result;
use crate::numkernel::{CMat, Cplx, FlopLedger, HermPacked};
use crate::sigmodel::{ChannelRealization, Constellation, RxFrame};

const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };

pub fn detect_proposed_2_tri(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run_permuting(ch, rx, c, &DetectOptions::default())
}

pub fn detect_proposed_2_tri_noperm(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
) -> Result<DetectionResult> {
    run_noperm(ch, rx, c, &DetectOptions::default())
}

fn packed_init(
    ch: &ChannelRealization,
    rx: &RxFrame,
    alpha: f64,
    ledger: &mut FlopLedger,
    mem: &mut MemLedger,
) -> Result<(HermPacked, Vec<Cplx>, Vec<Cplx>)> {
    let Covered { buf, z, scratch: mut d } = cover(ch, rx, alpha, true, ledger, mem)?;
    let q = HermPacked::from_upper(&buf, ch.m());
    mem.alloc("Q_packed", q.words());
    drop(buf);
    mem.free("Ht");
    d.fill(ZERO);
    Ok((q, z, d))
}

/// Symmetric exchange of indices `l < k` using only upper-triangle entries
/// of rows and columns `0..=k`.
pub(crate) fn exchange(q: &mut HermPacked, l: usize, k: usize) {
    if l == k {
        return;
    }
    let (l, k) = (l.min(k), l.max(k));
    for i in 0..l {
        let a = q.upper(i, l);
        let b = q.upper(i, k);
        *q.upper_mut(i, l) = b;
        *q.upper_mut(i, k) = a;
    }
    for j in l + 1..k {
        let a = q.upper(l, j);
        let b = q.upper(j, k);
        *q.upper_mut(l, j) = b.conj();
        *q.upper_mut(j, k) = a.conj();
    }
    let a = q.upper(l, l);
    let b = q.upper(k, k);
    *q.upper_mut(l, l) = b;
    *q.upper_mut(k, k) = a;
    let lk = q.upper(l, k);
    *q.upper_mut(l, k) = lk.conj();
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
    let (mut q, mut z, mut d) = packed_init(ch, rx, alpha, &mut ledger, &mut mem)?;
    let mut sic = Sic::new(big_m, c, opts);

    for m in (1..=big_m).rev() {
        let k = m - 1;
        let (cov, snap) = if sic.recording() {
            (Some(CMat::from_fn(m, m, |i, j| q.get(i, j))), Some(d[..m].to_vec()))
        } else {
            (None, None)
        };
        let l = sic.choose(m, |j, _| q.upper(j, j).re, cov, snap);
        exchange(&mut q, l, k);
        z.swap(l, k);
        d.swap(l, k);

        let mut qz = q.upper(0, k).conj() * z[0];
        for j in 1..m {
            qz += q.upper(j, k).conj() * z[j];
        }
        ledger.charge(m as u64, k as u64, 0);
        let est = ledger.sub(qz, d[k]);
        let s = sic.decide(m, est);
        if m == 1 {
            break;
        }
        let winv = omega_inverse(q.upper(k, k), m, &mut ledger)?;
        let sd = ledger.add(s, d[k]);
        let coef = ledger.mul(sd, winv);
        for (j, dj) in d.iter_mut().enumerate().take(k) {
            *dj -= coef * q.upper(j, k);
        }
        ledger.charge(k as u64, k as u64, 0);

        for b in 0..k {
            let t = q.upper(b, k).conj() * winv;
            for a in 0..=b {
                let u = q.upper(a, k) * t;
                *q.upper_mut(a, b) -= u;
            }
            q.upper_mut(b, b).im = 0.0;
        }
        ledger.charge((k + k * (k + 1) / 2) as u64, (k * (k + 1) / 2) as u64, 0);
    }
    Ok(sic.finish(ledger, mem))
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
    let (mut q, z, mut d) = packed_init(ch, rx, alpha, &mut ledger, &mut mem)?;
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
                Some(CMat::from_fn(m, m, |i, j| q.get(p[i], p[j]))),
                Some((0..m).map(|j| d[p[j]] * d_view).collect()),
            )
        } else {
            (None, None)
        };
        sic.choose(m, |_, a| q.upper(a, a).re, cov, snap);
        let p = &sic.p;
        let pm = p[k];

        let mut qz = q.get(p[0], pm).conj() * z[p[0]];
        for &pj in &p[1..m] {
            qz += q.get(pj, pm).conj() * z[pj];
        }
        ledger.charge(m as u64, k as u64, 0);
        let est = ledger.add(qz, d[pm] * a_sign);
        let s = sic.decide(m, est);
        if m == 1 {
            break;
        }
        let p = &sic.p;
        let winv = omega_inverse(q.upper(pm, pm), m, &mut ledger)?;
        let inner = ledger.add(s, d[pm] * c_sign);
        let coef = ledger.mul(inner, winv) * b_sign;
        for &pj in &p[..k] {
            d[pj] += coef * q.get(pj, pm);
        }
        ledger.charge(k as u64, k as u64, 0);

        for bi in 0..k {
            let pb = p[bi];
            let t = q.get(pb, pm).conj() * winv;
            for &pa in &p[..=bi] {
                let v = q.get(pa, pb) - q.get(pa, pm) * t;
                q.set(pa, pb, v);
            }
            q.upper_mut(pb, pb).im = 0.0;
        }
        ledger.charge((k + k * (k + 1) / 2) as u64, (k * (k + 1) / 2) as u64, 0);
    }
    Ok(sic.finish(ledger, mem))
}
