use super::{CMat, Cplx};
use crate::error::{contract, Error, Result};

/// Inverse by Gauss-Jordan elimination with partial pivoting.
///
/// This is the reference every recursive kernel is checked against, so it
/// shares no code with them and is not ledger-routed.
pub fn gauss_jordan_inverse(a: &CMat) -> Result<CMat> {
    if !a.is_square() {
        return contract(format!("cannot invert a {}x{} matrix", a.rows(), a.cols()));
    }
    a.require_finite("gauss_jordan_inverse input")?;
    let n = a.rows();
    let scale = a.norm_inf();
    let mut work = a.clone();
    let mut inv = CMat::identity(n);

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, work[(r, col)].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs < 1e-14 * scale || pivot_abs == 0.0 {
            return Err(Error::SingularMatrix { column: col, pivot: pivot_abs });
        }
        work.swap_rows(col, pivot_row, n);
        inv.swap_rows(col, pivot_row, n);

        let p = work[(col, col)].inv();
        for j in 0..n {
            work[(col, j)] *= p;
            inv[(col, j)] *= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work[(r, col)];
            if f == Cplx::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let wv = work[(col, j)];
                let iv = inv[(col, j)];
                work[(r, j)] -= f * wv;
                inv[(r, j)] -= f * iv;
            }
        }
    }
    Ok(inv)
}
