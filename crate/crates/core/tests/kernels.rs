use proptest::prelude::*;
use vblast::fixtures::{random_cmat, random_hpd};
use vblast::numkernel::{
    block_inv_step_i, block_inv_step_v, cover_gram_with_inverse, cover_gram_with_inverse_upper, cover_with_gram,
    deflate_q, deflate_q_sm, gauss_jordan_inverse, gram_accumulate, herm_rank1_update, init_q_block,
    init_q_sherman_morrison, BlockStep, CMat, Cplx, FlopLedger, Symmetry,
};

/// `R = H^H H + alpha I` computed densely, outside any ledger.
fn dense_gram(h: &CMat, alpha: f64) -> CMat {
    let mut r = h.conj_transpose().matmul(h);
    for i in 0..r.rows() {
        r[(i, i)] += Cplx::new(alpha, 0.0);
    }
    r
}

fn inverse_residual(q: &CMat, r: &CMat) -> f64 {
    q.matmul(r).sub(&CMat::identity(r.rows())).norm_inf()
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    a.sub(b).max_abs() / b.max_abs()
}

fn in_place_chain(h: &CMat, alpha: f64, upper_only: bool) -> CMat {
    let m = h.cols();
    let mut buf = h.conj_transpose();
    let mut scratch = vec![Cplx::new(0.0, 0.0); m];
    let mut l = FlopLedger::new();
    cover_with_gram(&mut buf, alpha, &mut scratch, &mut l).unwrap();
    if upper_only {
        cover_gram_with_inverse_upper(&mut buf, &mut scratch, &mut l).unwrap();
        let mut q = buf.leading(m, m);
        q.mirror_upper(m);
        q
    } else {
        cover_gram_with_inverse(&mut buf, &mut scratch, &mut l).unwrap();
        buf.leading(m, m)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn every_initializer_inverts(m in 1usize..=32, extra in 0usize..=8, a in 0usize..3, seed in any::<u64>()) {
        let n = (m + extra).min(32);
        let alpha = [1e-3, 1e-1, 1.0][a];
        let h = random_cmat(n, m, seed);
        let r = dense_gram(&h, alpha);
        let tol = 1e-10 * m as f64;
        let mut l = FlopLedger::new();
        let r_counted = gram_accumulate(&h, alpha, &mut l);
        let paths = [
            init_q_sherman_morrison(&h, alpha, Symmetry::General, &mut l).unwrap(),
            init_q_sherman_morrison(&h, alpha, Symmetry::Hermitian, &mut l).unwrap(),
            init_q_block(&r_counted, BlockStep::Classic, &mut l).unwrap(),
            init_q_block(&r_counted, BlockStep::DivisionLight, &mut l).unwrap(),
            in_place_chain(&h, alpha, false),
            in_place_chain(&h, alpha, true),
        ];
        for (i, q) in paths.iter().enumerate() {
            let res = inverse_residual(q, &r);
            prop_assert!(res <= tol, "path {} residual {:e}", i, res);
            // the general Sherman-Morrison path never mirrors, so it is only Hermitian to rounding
            let herm_tol = if i == 0 { 1e-10 } else { 1e-12 };
            prop_assert!(q.hermitian_defect() <= herm_tol * q.norm_inf(), "path {} defect", i);
        }
    }
}

#[test]
fn block_steps_agree_on_many_inputs() {
    let mut worst: f64 = 0.0;
    for seed in 0..1000u64 {
        let m = 2 + (seed % 15) as usize;
        let r = random_hpd(m, 0.2 + (seed % 5) as f64 * 0.2, seed);
        let k = m - 1;
        let q_prev = gauss_jordan_inverse(&r.leading(k, k)).unwrap();
        let r_bar = r.column(k)[..k].to_vec();
        let mut l = FlopLedger::new();
        let a = block_inv_step_i(&q_prev, &r_bar, r[(k, k)].re, &mut l).unwrap().assemble();
        let b = block_inv_step_v(&q_prev, &r_bar, r[(k, k)].re, &mut l).unwrap().assemble();
        worst = worst.max(rel(&a, &b));
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn deflations_agree_given_consistent_inputs() {
    for seed in 0..200u64 {
        let m = 2 + (seed % 12) as usize;
        let r = random_hpd(m, 0.3, seed);
        let q = gauss_jordan_inverse(&r).unwrap();
        let k = m - 1;
        let r_bar = r.column(k)[..k].to_vec();
        let mut l = FlopLedger::new();
        let a = deflate_q(&q, &mut l).unwrap();
        let b = deflate_q_sm(&q, &r_bar, r[(k, k)].re, Symmetry::Hermitian, &mut l).unwrap();
        assert!(rel(&a, &b) <= 1e-11, "seed {seed}: {:e}", rel(&a, &b));
        for x in [&a, &b] {
            assert!(x.hermitian_defect() <= 1e-12 * x.norm_inf());
        }
    }
}

#[test]
fn in_place_covering_matches_out_of_place() {
    for seed in 0..1000u64 {
        let m = 1 + (seed % 16) as usize;
        let n = m + (seed % 3) as usize;
        let alpha = 0.05 + (seed % 7) as f64 * 0.1;
        let h = random_cmat(n, m, seed);
        let mut l = FlopLedger::new();
        let r = gram_accumulate(&h, alpha, &mut l);
        let expected_q = init_q_block(&r, BlockStep::DivisionLight, &mut l).unwrap();

        let mut buf = h.conj_transpose();
        let mut scratch = vec![Cplx::new(0.0, 0.0); m];
        cover_with_gram(&mut buf, alpha, &mut scratch, &mut l).unwrap();
        for i in 0..m {
            for j in i..m {
                assert!((buf[(i, j)] - r[(i, j)]).norm() <= 1e-12 * r.max_abs(), "seed {seed} R({i},{j})");
            }
        }
        cover_gram_with_inverse(&mut buf, &mut scratch, &mut l).unwrap();
        assert!(rel(&buf.leading(m, m), &expected_q) <= 1e-10, "seed {seed}");
    }
}

#[test]
fn ledgers_are_deterministic() {
    let run = || {
        let h = random_cmat(9, 7, 5);
        let mut l = FlopLedger::new();
        let r = gram_accumulate(&h, 0.1, &mut l);
        let q = init_q_block(&r, BlockStep::Classic, &mut l).unwrap();
        deflate_q(&q, &mut l).unwrap();
        herm_rank1_update(&q, &r.column(0), -0.5, true, &mut l).unwrap();
        l
    };
    assert_eq!(run(), run());
}

#[test]
fn sherman_morrison_per_row_charge_is_three_halves_m_squared() {
    let (m, n) = (32usize, 32usize);
    let h = random_cmat(n, m, 1);
    let mut l = FlopLedger::new();
    init_q_sherman_morrison(&h, 0.1, Symmetry::Hermitian, &mut l).unwrap();
    let model = 1.5 * (m * m * n) as f64;
    assert!((l.cmul as f64 - model).abs() / model < 0.1, "{} vs {model}", l.cmul);
}

#[test]
fn block_step_i_cumulative_charge_is_five_sixths_m_cubed() {
    let m = 48usize;
    let r = random_hpd(m, 0.5, 3);
    let mut l = FlopLedger::new();
    init_q_block(&r, BlockStep::Classic, &mut l).unwrap();
    let model = 5.0 / 6.0 * (m * m * m) as f64;
    assert!((l.cmul as f64 - model).abs() / model < 0.1);
}
