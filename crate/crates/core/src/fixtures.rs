//! Seeded random matrices and vectors for tests and sweeps.

use crate::numkernel::{CMat, Cplx};
use crate::sigmodel::{complex_gaussian, rng_stream};

const FIXTURE_STREAM: u64 = 0xF1;

/// `rows x cols` matrix of unit-variance circular Gaussian entries.
pub fn random_cmat(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = rng_stream(seed, FIXTURE_STREAM);
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, 1.0))
}

pub fn random_cvec(n: usize, seed: u64) -> Vec<Cplx> {
    let mut rng = rng_stream(seed, FIXTURE_STREAM + 1);
    (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect()
}

/// `(B + B^H) / 2` with an exactly real diagonal.
pub fn random_hermitian(n: usize, seed: u64) -> CMat {
    let b = random_cmat(n, n, seed);
    let mut a = CMat::from_fn(n, n, |i, j| (b[(i, j)] + b[(j, i)].conj()) * 0.5);
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    a
}

/// `B^H B + alpha I` for a square Gaussian `B`.
pub fn random_hpd(n: usize, alpha: f64, seed: u64) -> CMat {
    let b = random_cmat(n, n, seed);
    let mut a = b.conj_transpose().matmul(&b);
    for i in 0..n {
        a[(i, i)] = Cplx::new(a[(i, i)].re + alpha, 0.0);
    }
    a.mirror_upper(n);
    a
}
