//! Brute-force reference: re-inverts `H_m^H H_m + alpha I` from scratch at
//! every step. Nothing here is ledger-routed.

use super::{validate, DetectOptions, DetectionResult, MemLedger, Sic};
use crate::error::Result;
use crate::numkernel::{gauss_jordan_inverse, CMat, Cplx, FlopLedger};
use crate::sigmodel::{ChannelRealization, Constellation, RxFrame};

pub fn detect_oracle(ch: &ChannelRealization, rx: &RxFrame, c: &Constellation) -> Result<DetectionResult> {
    run(ch, rx, c, &DetectOptions::default())
}

pub(super) fn run(
    ch: &ChannelRealization,
    rx: &RxFrame,
    c: &Constellation,
    opts: &DetectOptions,
) -> Result<DetectionResult> {
    let (big_m, n, alpha) = validate(ch, rx)?;
    let mut mem = MemLedger::new();
    mem.alloc("H", n * big_m);
    mem.alloc("x", n);
    let mut h = ch.h().clone();
    let mut x = rx.x().to_vec();
    let mut sic = Sic::new(big_m, c, opts);

    for m in (1..=big_m).rev() {
        let hm = CMat::from_fn(n, m, |i, j| h[(i, j)]);
        let mut r = hm.conj_transpose().matmul(&hm);
        for j in 0..m {
            r[(j, j)] += Cplx::new(alpha, 0.0);
        }
        let mut q = gauss_jordan_inverse(&r)?;
        let cov = sic.recording().then(|| q.clone());
        let l = sic.choose(m, |j, _| q[(j, j)].re, cov, None);
        h.swap_cols(l, m - 1, n);
        q.swap_rows_cols(l, m - 1, m);

        // row m-1 of Q H_m^H x, on the permuted columns
        let mut est = Cplx::new(0.0, 0.0);
        for j in 0..m {
            let mut hx = Cplx::new(0.0, 0.0);
            for i in 0..n {
                hx += h[(i, j)].conj() * x[i];
            }
            est += q[(m - 1, j)] * hx;
        }
        let s = sic.decide(m, est);
        for i in 0..n {
            let hi = h[(i, m - 1)];
            x[i] -= s * hi;
        }
    }
    Ok(sic.finish(FlopLedger::new(), mem))
}
