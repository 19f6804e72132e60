//! Overwriting schedules that let a single `M x N` buffer hold `H^H`, then
//! the Gram matrix `R`, then its inverse `Q`.
//!
//! The buffer is row-major with `M` rows; its leading `M x M` block is the
//! square part that `R` and `Q` cover.

use super::kernels::{real_pivot, real_pivot_scaled, PIVOT_TOL};
use super::{CMat, Cplx, FlopLedger};
use crate::error::{contract, Error, Result};

fn check(pivot: f64, reference: f64, step: usize) -> Result<()> {
    if pivot == 0.0 || pivot.abs() < PIVOT_TOL * reference.abs() {
        return Err(Error::Singular { step, pivot });
    }
    Ok(())
}

/// Covers the upper triangle of `ht[.., 0..M]` with that of
/// `R = ht ht^H + alpha I`, one row at a time: row `i` of `R` needs rows
/// `i..M` of `ht` only, so earlier rows can be overwritten. The lower
/// triangle keeps whatever `ht` held. `row` is scratch of length `M`.
pub fn cover_with_gram(ht: &mut CMat, alpha: f64, row: &mut [Cplx], ledger: &mut FlopLedger) -> Result<()> {
    let (m, n) = (ht.rows(), ht.cols());
    if n < m {
        return contract(format!("H^H buffer is {m}x{n}; need at least as many columns as rows"));
    }
    for i in 0..m {
        for j in i..m {
            row[j - i] = ledger.dot_h(ht.row(j), ht.row(i));
        }
        row[0] = ledger.add(row[0], Cplx::new(alpha, 0.0));
        row[0].im = 0.0;
        ht.row_mut(i)[i..m].copy_from_slice(&row[..m - i]);
    }
    Ok(())
}

/// Covers `R`, held in the upper triangle of the leading `M x M` block of
/// `buf`, with the full Hermitian `Q = R^-1`.
///
/// Starts from `Q_1 = 1 / R_11` and for `i = 2..M`:
/// `q~ = Q_{i-1} R(1:i-1, i)`, `R(i,i) = 1 / (R(i,i) - R(1:i-1,i)^H q~)`,
/// `R(1:i-1, i) = -R(i,i) q~`, row `i` mirrors column `i`, and
/// `Q_{i-1} -= q~ R(i, 1:i-1)` on the upper triangle, then mirrored.
/// `qt` is scratch of length `M`.
/// `|r|^T |Q| |r|` with `Q` the leading `i x i` block (upper triangle read)
/// and `r = buf(0..i, i)`; uncounted, sizes the pivot tolerance.
fn abs_quad_upper(buf: &CMat, i: usize) -> f64 {
    let mut total = 0.0;
    for a in 0..i {
        let mut row = 0.0;
        for b in 0..i {
            let q = if a <= b { buf[(a, b)] } else { buf[(b, a)] };
            row += q.norm() * buf[(b, i)].norm();
        }
        total += buf[(a, i)].norm() * row;
    }
    total
}

pub fn cover_gram_with_inverse(buf: &mut CMat, qt: &mut [Cplx], ledger: &mut FlopLedger) -> Result<()> {
    let m = buf.rows();
    if m == 0 || buf.cols() < m {
        return contract("buffer must hold a non-empty square block");
    }
    let r11 = real_pivot(buf[(0, 0)], 1)?;
    check(r11, 1.0, 1)?;
    buf[(0, 0)] = ledger.recip(Cplx::new(r11, 0.0));
    for i in 1..m {
        for a in 0..i {
            let mut acc = buf[(a, 0)] * buf[(0, i)];
            for j in 1..i {
                acc += buf[(a, j)] * buf[(j, i)];
            }
            qt[a] = acc;
        }
        ledger.charge((i * i) as u64, (i * (i - 1)) as u64, 0);

        let mut s = buf[(0, i)].conj() * qt[0];
        for a in 1..i {
            s += buf[(a, i)].conj() * qt[a];
        }
        let scale = buf[(i, i)].re.abs() + abs_quad_upper(buf, i);
        ledger.charge(i as u64, (i - 1) as u64, 0);
        let gamma = buf[(i, i)].re;
        let pivot = real_pivot_scaled(ledger.sub(buf[(i, i)], s), scale, i + 1)?;
        check(pivot, gamma, i + 1)?;
        let omega = ledger.recip(Cplx::new(pivot, 0.0));
        buf[(i, i)] = omega;

        let neg = -omega;
        for a in 0..i {
            let v = ledger.mul(neg, qt[a]);
            buf[(a, i)] = v;
            buf[(i, a)] = v.conj();
        }
        for a in 0..i {
            for b in a..i {
                let t = ledger.mul(qt[a], buf[(i, b)]);
                buf[(a, b)] = ledger.sub(buf[(a, b)], t);
            }
            buf[(a, a)].im = 0.0;
        }
        buf.mirror_upper(i);
    }
    Ok(())
}

/// Same covering as [`cover_gram_with_inverse`] but reading and writing the
/// upper triangle only. Row `j` of `Q_{i-1}` is assembled as
/// `[R(1:j-1, j)^H, R(j, j:i-1)]`. The strict lower triangle is never touched.
pub fn cover_gram_with_inverse_upper(buf: &mut CMat, qt: &mut [Cplx], ledger: &mut FlopLedger) -> Result<()> {
    let m = buf.rows();
    if m == 0 || buf.cols() < m {
        return contract("buffer must hold a non-empty square block");
    }
    let r11 = real_pivot(buf[(0, 0)], 1)?;
    check(r11, 1.0, 1)?;
    buf[(0, 0)] = ledger.recip(Cplx::new(r11, 0.0));
    for i in 1..m {
        for j in 0..i {
            let mut acc = Cplx::new(0.0, 0.0);
            for k in 0..j {
                acc += buf[(k, j)].conj() * buf[(k, i)];
            }
            for k in j..i {
                acc += buf[(j, k)] * buf[(k, i)];
            }
            qt[j] = acc;
        }
        ledger.charge((i * i) as u64, (i * (i - 1)) as u64, 0);

        let mut s = buf[(0, i)].conj() * qt[0];
        for a in 1..i {
            s += buf[(a, i)].conj() * qt[a];
        }
        let scale = buf[(i, i)].re.abs() + abs_quad_upper(buf, i);
        ledger.charge(i as u64, (i - 1) as u64, 0);
        let gamma = buf[(i, i)].re;
        let pivot = real_pivot_scaled(ledger.sub(buf[(i, i)], s), scale, i + 1)?;
        check(pivot, gamma, i + 1)?;
        let omega = ledger.recip(Cplx::new(pivot, 0.0));
        buf[(i, i)] = omega;

        let neg = -omega;
        for a in 0..i {
            buf[(a, i)] = ledger.mul(neg, qt[a]);
        }
        for b in 0..i {
            let qb = buf[(b, i)].conj();
            for a in 0..=b {
                let t = ledger.mul(qt[a], qb);
                buf[(a, b)] = ledger.sub(buf[(a, b)], t);
            }
            buf[(b, b)].im = 0.0;
        }
    }
    Ok(())
}
