use proptest::prelude::*;
use vblast::sigmodel::{
    demap, draw_channel_with, noise_variance_for_snr_db, rng_stream, transmit_with, Constellation, TxFrame,
};

#[test]
fn channel_entries_have_unit_variance() {
    let mut rng = rng_stream(5, 0);
    let mut sum = 0.0;
    let mut count = 0.0;
    for _ in 0..100_000 {
        let ch = draw_channel_with(2, 2, &mut rng).unwrap();
        for z in ch.h().data() {
            sum += z.norm_sqr();
            count += 1.0;
        }
    }
    let var = sum / count;
    assert!((var - 1.0).abs() <= 0.02, "{var}");
}

#[test]
fn noise_power_matches_request() {
    let c = Constellation::qpsk();
    let mut rng = rng_stream(6, 0);
    let sigma_n2 = noise_variance_for_snr_db(7.0, 1.0);
    let ch = draw_channel_with(2, 3, &mut rng).unwrap();
    let frame = TxFrame::random(2, &c, &mut rng).unwrap();
    let clean = ch.h().matvec(frame.symbols());
    let mut acc = 0.0;
    let frames = 100_000;
    for _ in 0..frames {
        let rx = transmit_with(&frame, &ch, sigma_n2, &mut rng).unwrap();
        acc += rx.x().iter().zip(&clean).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / 3.0;
    }
    let measured = acc / frames as f64;
    assert!((measured / sigma_n2 - 1.0).abs() <= 0.02, "{measured} vs {sigma_n2}");
}

proptest! {
    #[test]
    fn bits_roundtrip(seed in any::<u64>(), qam in any::<bool>()) {
        use rand::Rng;
        let c = if qam { Constellation::qam16() } else { Constellation::qpsk() };
        let mut rng = rng_stream(seed, 0);
        let bits: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2u8)).collect();
        let frame = TxFrame::from_bits(&bits, &c).unwrap();
        prop_assert!(frame.symbols().iter().all(|s| c.contains(*s)));
        prop_assert_eq!(demap(frame.symbols(), &c).unwrap(), bits);
    }
}
