//! Inversion, rank-one update and deflation kernels shared by the detectors.
//!
//! The `*_in_place` routines work on the leading block of a caller-owned
//! buffer and are what the detectors call; the free functions with owned
//! inputs and outputs wrap them with validation.

use super::{CMat, Cplx, FlopLedger};
use crate::error::{contract, Error, Result};

/// Relative threshold under which a scalar pivot is treated as singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// Largest `|im| / |re|` accepted on a pivot that is real in exact arithmetic.
pub const REAL_PIVOT_TOL: f64 = 1e-10;

/// Whether a kernel exploits Hermitian structure (touching one triangle and
/// mirroring) or works on the full matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    General,
    Hermitian,
}

const ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };

#[inline]
fn real(v: f64) -> Cplx {
    Cplx::new(v, 0.0)
}

/// Drops the imaginary part of a pivot after checking it is numerical noise.
pub(crate) fn real_pivot(z: Cplx, step: usize) -> Result<f64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("pivot"));
    }
    if z.im.abs() > REAL_PIVOT_TOL * z.re.abs() {
        return Err(Error::NonRealPivot { step, re: z.re, im: z.im });
    }
    Ok(z.re)
}

/// [`real_pivot`] with the imaginary part judged against `scale`, the
/// magnitude of the terms that were summed, instead of the result alone.
/// A pivot that is a small difference of large terms carries rounding noise
/// proportional to the terms.
pub(crate) fn real_pivot_scaled(z: Cplx, scale: f64, step: usize) -> Result<f64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("pivot"));
    }
    if z.im.abs() > REAL_PIVOT_TOL * z.re.abs().max(scale) {
        return Err(Error::NonRealPivot { step, re: z.re, im: z.im });
    }
    Ok(z.re)
}

/// `|x|^T |Q| |x|` over the leading `m` block; uncounted. Bounds the terms
/// behind `x^H Q x` even when `Q x` itself has cancelled.
pub(crate) fn abs_quad(q: &CMat, m: usize, x: &[Cplx]) -> f64 {
    (0..m).map(|a| x[a].norm() * (0..m).map(|b| q[(a, b)].norm() * x[b].norm()).sum::<f64>()).sum()
}

/// Pivot scale for `x^H Q x`. A general (unsymmetrized) `Q` carries an
/// anti-Hermitian residue from earlier updates, which shows up directly as
/// an imaginary part of the form; its bound `max|Q - Q^H| (sum |x|)^2` is
/// added so that residue is not mistaken for a broken input.
fn quad_scale(q: &CMat, m: usize, x: &[Cplx], sym: Symmetry) -> f64 {
    let base = abs_quad(q, m, x);
    match sym {
        Symmetry::Hermitian => base,
        Symmetry::General => {
            let mut defect: f64 = 0.0;
            for a in 0..m {
                for b in a..m {
                    defect = defect.max((q[(a, b)] - q[(b, a)].conj()).norm());
                }
            }
            let l1: f64 = x[..m].iter().map(|v| v.norm()).sum();
            base + defect * l1 * l1 / REAL_PIVOT_TOL
        }
    }
}

fn check_pivot(pivot: f64, reference: f64, step: usize) -> Result<()> {
    if pivot == 0.0 || pivot.abs() < PIVOT_TOL * reference.abs() {
        return Err(Error::Singular { step, pivot });
    }
    Ok(())
}

fn zero_diag_imag(a: &mut CMat, m: usize) {
    for i in 0..m {
        a[(i, i)].im = 0.0;
    }
}

/// `y = A[0..k, 0..k] * x`. Charges `k^2` cmul, `k (k - 1)` cadd.
pub(crate) fn leading_matvec(a: &CMat, k: usize, x: &[Cplx], y: &mut [Cplx], ledger: &mut FlopLedger) {
    for (i, yi) in y.iter_mut().enumerate().take(k) {
        *yi = ledger.dot_u(&a.row(i)[..k], &x[..k]);
    }
}

/// `z = H^H x` for an `N x M` matrix `h`. Charges `M N` cmul, `M (N - 1)` cadd.
pub fn conj_transpose_matvec(h: &CMat, x: &[Cplx], ledger: &mut FlopLedger) -> Vec<Cplx> {
    let (n, m) = (h.rows(), h.cols());
    assert_eq!(x.len(), n);
    let mut z = vec![ZERO; m];
    if n == 0 {
        return z;
    }
    for (r, xr) in x.iter().enumerate() {
        for (zj, hj) in z.iter_mut().zip(h.row(r)) {
            *zj += hj.conj() * xr;
        }
    }
    ledger.charge((m * n) as u64, (m * (n - 1)) as u64, 0);
    z
}

/// Adds `h h^H` to the leading `m x m` block of `r`, upper triangle only,
/// then mirrors. Charges `m (m + 1) / 2` cmul and cadd.
pub(crate) fn gram_row_update(r: &mut CMat, h: &[Cplx], ledger: &mut FlopLedger) {
    let m = h.len();
    for a in 0..m {
        for b in a..m {
            let t = ledger.mul(h[a], h[b].conj());
            r[(a, b)] = ledger.add(r[(a, b)], t);
        }
    }
    r.mirror_upper(m);
    zero_diag_imag(r, m);
}

/// `R = sum_n h_n h_n^H + alpha I` accumulated row by row of `H`, where
/// `h_n^H` is row `n`.
pub fn gram_accumulate(h: &CMat, alpha: f64, ledger: &mut FlopLedger) -> CMat {
    let m = h.cols();
    let mut r = CMat::diag(&vec![alpha; m]);
    let mut hn = vec![ZERO; m];
    for n in 0..h.rows() {
        for (dst, src) in hn.iter_mut().zip(h.row(n)) {
            *dst = src.conj();
        }
        gram_row_update(&mut r, &hn, ledger);
    }
    r
}

/// One Sherman-Morrison step on the leading `m x m` block of `q`:
/// `Q <- Q - Q h h^H Q / (1 + h^H Q h)`. `u` and `v` are scratch of length
/// at least `m`.
pub(crate) fn sm_update_in_place(
    q: &mut CMat,
    h: &[Cplx],
    sym: Symmetry,
    u: &mut [Cplx],
    v: &mut [Cplx],
    ledger: &mut FlopLedger,
    step: usize,
) -> Result<()> {
    let m = h.len();
    leading_matvec(q, m, h, u, ledger);
    let hqh = ledger.dot_h(h, &u[..m]);
    let den = real_pivot_scaled(ledger.add(real(1.0), hqh), 1.0 + quad_scale(q, m, h, sym), step)?;
    check_pivot(den, 1.0, step)?;
    let inv = ledger.recip(real(den));
    ledger.scale_into(inv, &u[..m], &mut v[..m]);
    match sym {
        Symmetry::General => {
            for a in 0..m {
                for b in 0..m {
                    let t = ledger.mul(v[a], u[b].conj());
                    q[(a, b)] = ledger.sub(q[(a, b)], t);
                }
            }
        }
        Symmetry::Hermitian => {
            for a in 0..m {
                for b in a..m {
                    let t = ledger.mul(v[a], u[b].conj());
                    q[(a, b)] = ledger.sub(q[(a, b)], t);
                }
            }
            q.mirror_upper(m);
        }
    }
    zero_diag_imag(q, m);
    Ok(())
}

/// `Q_[N]` from `Q_[0] = I / alpha` by one Sherman-Morrison step per row of
/// `H`. The result is `(H^H H + alpha I)^-1`.
pub fn init_q_sherman_morrison(h: &CMat, alpha: f64, sym: Symmetry, ledger: &mut FlopLedger) -> Result<CMat> {
    if alpha <= 0.0 {
        return contract(format!("alpha must be positive, got {alpha}"));
    }
    let m = h.cols();
    let inv_alpha = ledger.recip(real(alpha));
    let mut q = CMat::diag(&vec![inv_alpha.re; m]);
    let mut hn = vec![ZERO; m];
    let mut u = vec![ZERO; m];
    let mut v = vec![ZERO; m];
    for n in 0..h.rows() {
        for (dst, src) in hn.iter_mut().zip(h.row(n)) {
            *dst = src.conj();
        }
        sm_update_in_place(&mut q, &hn, sym, &mut u, &mut v, ledger, n + 1)?;
    }
    Ok(q)
}

/// Block-inversion step with the classical partitioned-matrix lemma.
///
/// On entry the leading `k x k` block of `q` holds `Q_k = R_k^-1`; on exit the
/// leading `(k + 1) x (k + 1)` block holds `Q_{k+1}`, the inverse of `R_k`
/// bordered by `r_bar` and `gamma`. Needs two scratch vectors of length `k`.
///
/// Three divisions per call: the Schur pivot, `1/gamma`, and `1/gamma^2`
/// taken as a second division.
#[allow(clippy::too_many_arguments)]
pub(crate) fn block_step_i_in_place(
    q: &mut CMat,
    k: usize,
    r_bar: &[Cplx],
    gamma: f64,
    g: &mut [Cplx],
    w: &mut [Cplx],
    ledger: &mut FlopLedger,
    step: usize,
) -> Result<()> {
    check_pivot(gamma, 1.0, step)?;
    // g = Q r
    leading_matvec(q, k, r_bar, g, ledger);
    let rg = ledger.dot_h(&r_bar[..k], &g[..k]);
    let pivot = real_pivot_scaled(ledger.sub(real(gamma), rg), gamma.abs() + abs_quad(q, k, r_bar), step)?;
    check_pivot(pivot, gamma, step)?;
    let inv_pivot = ledger.recip(real(pivot));
    ledger.scale_into(inv_pivot, &g[..k], &mut w[..k]);
    // Q_bar = Q + g g^H / pivot
    for a in 0..k {
        for b in a..k {
            let t = ledger.mul(w[a], g[b].conj());
            q[(a, b)] = ledger.add(q[(a, b)], t);
        }
    }
    q.mirror_upper(k);
    zero_diag_imag(q, k);
    // t = Q_bar r, reusing g
    leading_matvec(q, k, r_bar, g, ledger);
    let gamma_inv = ledger.recip(real(gamma));
    let gamma_inv2 = ledger.div(gamma_inv, real(gamma));
    let neg = -gamma_inv;
    for a in 0..k {
        let qa = ledger.mul(neg, g[a]);
        q[(a, k)] = qa;
        q[(k, a)] = qa.conj();
    }
    let rt = ledger.dot_h(&r_bar[..k], &g[..k]);
    let tail = ledger.mul(gamma_inv2, rt);
    let omega = ledger.add(gamma_inv, tail);
    let scale = gamma_inv.re.abs() + gamma_inv2.re.abs() * abs_quad(q, k, r_bar);
    q[(k, k)] = real(real_pivot_scaled(omega, scale, step)?);
    Ok(())
}

/// Block-inversion step in the division-light form:
/// `q~ = Q r`, `omega = 1 / (gamma - r^H q~)`, `q_bar = -omega q~`,
/// `Q_bar = Q - q~ q_bar^H`. One division per call. `qt` receives `q~`.
pub(crate) fn block_step_v_in_place(
    q: &mut CMat,
    k: usize,
    r_bar: &[Cplx],
    gamma: f64,
    qt: &mut [Cplx],
    ledger: &mut FlopLedger,
    step: usize,
) -> Result<()> {
    leading_matvec(q, k, r_bar, qt, ledger);
    let rq = ledger.dot_h(&r_bar[..k], &qt[..k]);
    let pivot = real_pivot_scaled(ledger.sub(real(gamma), rq), gamma.abs() + abs_quad(q, k, r_bar), step)?;
    check_pivot(pivot, gamma, step)?;
    let omega = ledger.recip(real(pivot));
    let neg = -omega;
    for a in 0..k {
        let qa = ledger.mul(neg, qt[a]);
        q[(a, k)] = qa;
        q[(k, a)] = qa.conj();
    }
    q[(k, k)] = omega;
    for a in 0..k {
        for b in a..k {
            // q[(k, b)] holds conj(q_bar[b])
            let t = ledger.mul(qt[a], q[(k, b)]);
            q[(a, b)] = ledger.sub(q[(a, b)], t);
        }
    }
    q.mirror_upper(k);
    zero_diag_imag(q, k);
    Ok(())
}

/// Which block-inversion step an initializer chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockStep {
    /// Classical partitioned-matrix lemma, three divisions per step.
    Classic,
    /// `q~ = Q r` form, one division per step.
    DivisionLight,
}

/// Inverts a Hermitian positive-definite `R` by growing `Q_1 = 1 / R_11`
/// one bordered step at a time.
pub fn init_q_block(r: &CMat, step_kind: BlockStep, ledger: &mut FlopLedger) -> Result<CMat> {
    if !r.is_square() || r.rows() == 0 {
        return contract(format!("block init needs a non-empty square matrix, got {}x{}", r.rows(), r.cols()));
    }
    r.require_finite("init_q_block input")?;
    let m = r.rows();
    let mut q = CMat::zeros(m, m);
    let r11 = real_pivot(r[(0, 0)], 1)?;
    check_pivot(r11, 1.0, 1)?;
    q[(0, 0)] = ledger.recip(real(r11));
    let mut r_bar = vec![ZERO; m];
    let mut s1 = vec![ZERO; m];
    let mut s2 = vec![ZERO; m];
    for k in 1..m {
        for (j, dst) in r_bar.iter_mut().enumerate().take(k) {
            *dst = r[(j, k)];
        }
        let gamma = real_pivot(r[(k, k)], k + 1)?;
        match step_kind {
            BlockStep::Classic => block_step_i_in_place(&mut q, k, &r_bar, gamma, &mut s1, &mut s2, ledger, k + 1)?,
            BlockStep::DivisionLight => block_step_v_in_place(&mut q, k, &r_bar, gamma, &mut s1, ledger, k + 1)?,
        }
    }
    Ok(q)
}

/// Deflates the leading `m x m` block of `q` to `Q_{m-1} = Q_bar - q_bar q_bar^H / omega`,
/// upper triangle then mirror. Column `m - 1` is left as is. Returns `1 / omega`.
pub(crate) fn deflate_in_place(q: &mut CMat, m: usize, ledger: &mut FlopLedger, step: usize) -> Result<Cplx> {
    let k = m - 1;
    let omega = real_pivot(q[(k, k)], step)?;
    if omega <= PIVOT_TOL {
        return Err(Error::Singular { step, pivot: omega });
    }
    let inv = ledger.recip(real(omega));
    for b in 0..k {
        let t = ledger.mul(q[(b, k)].conj(), inv);
        for a in 0..=b {
            let u = ledger.mul(q[(a, k)], t);
            q[(a, b)] = ledger.sub(q[(a, b)], u);
        }
    }
    q.mirror_upper(k);
    zero_diag_imag(q, k);
    Ok(inv)
}

/// Deflates the leading `m x m` block of `q` with the Sherman-Morrison form
/// `Q_{m-1} = Q_bar - Q_bar r r^H Q_bar / (gamma + r^H Q_bar r)`, where `r_bar`
/// and `gamma` are the last column of the matching `R_m`. `g`, `v`: scratch.
#[allow(clippy::too_many_arguments)]
pub(crate) fn deflate_sm_in_place(
    q: &mut CMat,
    m: usize,
    r_bar: &[Cplx],
    gamma: f64,
    sym: Symmetry,
    g: &mut [Cplx],
    v: &mut [Cplx],
    ledger: &mut FlopLedger,
    step: usize,
) -> Result<()> {
    let k = m - 1;
    leading_matvec(q, k, r_bar, g, ledger);
    let rg = ledger.dot_h(&r_bar[..k], &g[..k]);
    let den = real_pivot_scaled(ledger.add(real(gamma), rg), gamma.abs() + quad_scale(q, k, r_bar, sym), step)?;
    check_pivot(den, gamma, step)?;
    let inv = ledger.recip(real(den));
    ledger.scale_into(inv, &g[..k], &mut v[..k]);
    match sym {
        Symmetry::General => {
            for a in 0..k {
                for b in 0..k {
                    let t = ledger.mul(v[a], g[b].conj());
                    q[(a, b)] = ledger.sub(q[(a, b)], t);
                }
            }
        }
        Symmetry::Hermitian => {
            for a in 0..k {
                for b in a..k {
                    let t = ledger.mul(v[a], g[b].conj());
                    q[(a, b)] = ledger.sub(q[(a, b)], t);
                }
            }
            q.mirror_upper(k);
        }
    }
    zero_diag_imag(q, k);
    Ok(())
}

fn require_square(a: &CMat, what: &str) -> Result<usize> {
    if !a.is_square() {
        return contract(format!("{what} must be square, got {}x{}", a.rows(), a.cols()));
    }
    Ok(a.rows())
}

fn require_len(v: &[Cplx], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return contract(format!("{what} has length {}, expected {n}", v.len()));
    }
    if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("vector input"));
    }
    Ok(())
}

/// `A + alpha v v^H` for Hermitian `A` and real `alpha`.
///
/// With `triangle_only` the outer product is formed on the upper triangle
/// (`m (m + 1) / 2` cmul) and mirrored; otherwise all `m^2` entries are formed.
pub fn herm_rank1_update(
    a: &CMat,
    v: &[Cplx],
    alpha: f64,
    triangle_only: bool,
    ledger: &mut FlopLedger,
) -> Result<CMat> {
    let m = require_square(a, "A")?;
    require_len(v, m, "v")?;
    a.require_finite("herm_rank1_update input")?;
    let mut out = a.clone();
    let mut w = vec![ZERO; m];
    ledger.scale_into(real(alpha), v, &mut w);
    for i in 0..m {
        let start = if triangle_only { i } else { 0 };
        for j in start..m {
            let t = ledger.mul(w[i], v[j].conj());
            out[(i, j)] = ledger.add(out[(i, j)], t);
        }
    }
    if triangle_only {
        out.mirror_upper(m);
    }
    zero_diag_imag(&mut out, m);
    Ok(out)
}

/// Output of one bordered block-inversion step: the blocks of
/// `Q_m = [[q_bar_block, q_col], [q_col^H, omega]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInverse {
    pub q_bar: CMat,
    pub q_col: Vec<Cplx>,
    pub omega: f64,
    /// `Q_{m-1} r_bar`; only produced by the division-light step.
    pub q_tilde: Option<Vec<Cplx>>,
}

impl BlockInverse {
    /// Assembles the full `m x m` inverse.
    pub fn assemble(&self) -> CMat {
        let k = self.q_col.len();
        let mut out = CMat::zeros(k + 1, k + 1);
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] = self.q_bar[(i, j)];
            }
            out[(i, k)] = self.q_col[i];
            out[(k, i)] = self.q_col[i].conj();
        }
        out[(k, k)] = real(self.omega);
        out
    }
}

fn split_block(q: CMat, k: usize, q_tilde: Option<Vec<Cplx>>) -> BlockInverse {
    BlockInverse {
        q_bar: q.leading(k, k),
        q_col: (0..k).map(|i| q[(i, k)]).collect(),
        omega: q[(k, k)].re,
        q_tilde,
    }
}

fn bordered(q_prev: &CMat, r_bar: &[Cplx], gamma: f64) -> Result<(usize, CMat)> {
    let k = require_square(q_prev, "Q_prev")?;
    require_len(r_bar, k, "r_bar")?;
    q_prev.require_finite("Q_prev")?;
    if !gamma.is_finite() {
        return Err(Error::NonFinite("gamma"));
    }
    let mut q = CMat::zeros(k + 1, k + 1);
    for i in 0..k {
        q.row_mut(i)[..k].copy_from_slice(&q_prev.row(i)[..k]);
    }
    Ok((k, q))
}

/// Inverse of `[[Q_prev^-1, r_bar], [r_bar^H, gamma]]` with the classical
/// partitioned-matrix lemma.
pub fn block_inv_step_i(q_prev: &CMat, r_bar: &[Cplx], gamma: f64, ledger: &mut FlopLedger) -> Result<BlockInverse> {
    let (k, mut q) = bordered(q_prev, r_bar, gamma)?;
    let mut g = vec![ZERO; k];
    let mut w = vec![ZERO; k];
    block_step_i_in_place(&mut q, k, r_bar, gamma, &mut g, &mut w, ledger, k + 1)?;
    Ok(split_block(q, k, None))
}

/// Inverse of `[[Q_prev^-1, r_bar], [r_bar^H, gamma]]` with one division.
pub fn block_inv_step_v(q_prev: &CMat, r_bar: &[Cplx], gamma: f64, ledger: &mut FlopLedger) -> Result<BlockInverse> {
    let (k, mut q) = bordered(q_prev, r_bar, gamma)?;
    let mut qt = vec![ZERO; k];
    block_step_v_in_place(&mut q, k, r_bar, gamma, &mut qt, ledger, k + 1)?;
    Ok(split_block(q, k, Some(qt)))
}

/// `(Q^-1 + h h^H)^-1` by the Sherman-Morrison formula.
pub fn sm_rank1_inverse_update(q: &CMat, h: &[Cplx], sym: Symmetry, ledger: &mut FlopLedger) -> Result<CMat> {
    let m = require_square(q, "Q")?;
    require_len(h, m, "h")?;
    q.require_finite("Q")?;
    let mut out = q.clone();
    let mut u = vec![ZERO; m];
    let mut v = vec![ZERO; m];
    sm_update_in_place(&mut out, h, sym, &mut u, &mut v, ledger, 1)?;
    Ok(out)
}

/// `Q_{m-1} = Q_bar - omega^-1 q_bar q_bar^H`, read entirely from `Q_m`.
pub fn deflate_q(q_m: &CMat, ledger: &mut FlopLedger) -> Result<CMat> {
    let m = require_square(q_m, "Q_m")?;
    if m < 2 {
        return contract("deflation needs at least a 2x2 matrix");
    }
    q_m.require_finite("Q_m")?;
    let mut q = q_m.clone();
    deflate_in_place(&mut q, m, ledger, m)?;
    Ok(q.leading(m - 1, m - 1))
}

/// `Q_{m-1} = Q_bar - Q_bar r r^H Q_bar / (gamma + r^H Q_bar r)` using the last
/// column `(r_bar, gamma)` of `R_m`.
pub fn deflate_q_sm(
    q_m: &CMat,
    r_bar: &[Cplx],
    gamma: f64,
    sym: Symmetry,
    ledger: &mut FlopLedger,
) -> Result<CMat> {
    let m = require_square(q_m, "Q_m")?;
    if m < 2 {
        return contract("deflation needs at least a 2x2 matrix");
    }
    require_len(r_bar, m - 1, "r_bar")?;
    q_m.require_finite("Q_m")?;
    let mut q = q_m.clone();
    let mut g = vec![ZERO; m];
    let mut v = vec![ZERO; m];
    deflate_sm_in_place(&mut q, m, r_bar, gamma, sym, &mut g, &mut v, ledger, m)?;
    Ok(q.leading(m - 1, m - 1))
}
