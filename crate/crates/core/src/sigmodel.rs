//! Transmit constellations, flat Rayleigh channel and AWGN.
//!
//! Randomness comes from ChaCha8 streams: a `(seed, stream)` pair always
//! yields the same sequence on every platform, so any frame can be
//! regenerated from its trial index alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{contract, Result};
use crate::numkernel::{CMat, Cplx};

/// Smallest regularization handed to detectors. Noiseless frames would
/// otherwise carry `alpha = 0`, which the recursions cannot invert.
pub const MIN_ALPHA: f64 = 1e-6;

/// Deterministic generator for one `(seed, stream)` pair.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric complex Gaussian with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Cplx {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cplx::new(s * re, s * im)
}

/// Noise variance giving the requested per-symbol SNR, `Es / sigma_n^2`.
pub fn noise_variance_for_snr_db(snr_db: f64, symbol_energy: f64) -> f64 {
    symbol_energy * 10f64.powf(-snr_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Qpsk,
    Qam16,
}

/// A unit-energy constellation whose point index is its Gray label.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<Cplx>,
    bits_per_symbol: usize,
    symbol_energy: f64,
}

impl Constellation {
    /// `((1 - 2 b0) + i (1 - 2 b1)) / sqrt(2)`; index 0 is `(1 + i) / sqrt(2)`.
    pub fn qpsk() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let points = (0..4)
            .map(|idx| {
                let b0 = (idx >> 1) & 1;
                let b1 = idx & 1;
                Cplx::new(s * (1.0 - 2.0 * b0 as f64), s * (1.0 - 2.0 * b1 as f64))
            })
            .collect();
        Self::build(ConstellationKind::Qpsk, points, 2)
    }

    /// Square 16-QAM, two Gray-coded bits per axis.
    pub fn qam16() -> Self {
        // Gray label -> amplitude level on one axis
        const LEVEL: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];
        let s = 1.0 / 10f64.sqrt();
        let points = (0..16).map(|idx| Cplx::new(s * LEVEL[idx >> 2], s * LEVEL[idx & 3])).collect();
        Self::build(ConstellationKind::Qam16, points, 4)
    }

    pub fn of_kind(kind: ConstellationKind) -> Self {
        match kind {
            ConstellationKind::Qpsk => Self::qpsk(),
            ConstellationKind::Qam16 => Self::qam16(),
        }
    }

    fn build(kind: ConstellationKind, points: Vec<Cplx>, bits_per_symbol: usize) -> Self {
        let symbol_energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        Self { kind, points, bits_per_symbol, symbol_energy }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Cplx] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn symbol_energy(&self) -> f64 {
        self.symbol_energy
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn nearest_index(&self, est: Cplx) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (est - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn contains(&self, s: Cplx) -> bool {
        self.points.contains(&s)
    }
}

/// Nearest constellation point to `est`, lowest index on ties.
pub fn quantize(est: Cplx, c: &Constellation) -> Cplx {
    c.points[c.nearest_index(est)]
}

/// One draw of the `N x M` channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: CMat,
}

impl ChannelRealization {
    pub fn new(h: CMat) -> Result<Self> {
        let (n, m) = (h.rows(), h.cols());
        if m == 0 || n < m {
            return contract(format!("channel must satisfy N >= M >= 1, got N={n}, M={m}"));
        }
        h.require_finite("channel")?;
        Ok(Self { h })
    }

    pub fn h(&self) -> &CMat {
        &self.h
    }

    /// Transmit antennas.
    pub fn m(&self) -> usize {
        self.h.cols()
    }

    /// Receive antennas.
    pub fn n(&self) -> usize {
        self.h.rows()
    }
}

/// I.i.d. unit-variance circular Gaussian channel.
pub fn draw_channel(m: usize, n: usize, rng_seed: u64) -> Result<ChannelRealization> {
    draw_channel_with(m, n, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

pub fn draw_channel_with<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<ChannelRealization> {
    if m == 0 || n < m {
        return contract(format!("channel must satisfy N >= M >= 1, got N={n}, M={m}"));
    }
    let h = CMat::from_fn(n, m, |_, _| complex_gaussian(rng, 1.0));
    ChannelRealization::new(h)
}

/// Transmit vector and the bits it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    s: Vec<Cplx>,
    bits: Vec<u8>,
    symbol_energy: f64,
}

impl TxFrame {
    /// Gray-maps `bits` (each 0 or 1, most significant first per symbol).
    pub fn from_bits(bits: &[u8], c: &Constellation) -> Result<Self> {
        let k = c.bits_per_symbol();
        if bits.is_empty() || bits.len() % k != 0 {
            return contract(format!("{} bits do not fill whole {k}-bit symbols", bits.len()));
        }
        if bits.iter().any(|b| *b > 1) {
            return contract("bits must be 0 or 1");
        }
        let s = bits
            .chunks(k)
            .map(|chunk| c.points()[chunk.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize)])
            .collect();
        Ok(Self { s, bits: bits.to_vec(), symbol_energy: c.symbol_energy() })
    }

    /// `m` uniformly random symbols.
    pub fn random<R: Rng + ?Sized>(m: usize, c: &Constellation, rng: &mut R) -> Result<Self> {
        let bits: Vec<u8> = (0..m * c.bits_per_symbol()).map(|_| rng.random_range(0..2u8)).collect();
        Self::from_bits(&bits, c)
    }

    /// Frame from symbols that must already be constellation points.
    pub fn from_symbols(s: &[Cplx], c: &Constellation) -> Result<Self> {
        if s.is_empty() {
            return contract("empty frame");
        }
        if let Some(bad) = s.iter().find(|z| !c.contains(**z)) {
            return contract(format!("{bad} is not a constellation point"));
        }
        let bits = demap(s, c)?;
        Ok(Self { s: s.to_vec(), bits, symbol_energy: c.symbol_energy() })
    }

    pub fn symbols(&self) -> &[Cplx] {
        &self.s
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn symbol_energy(&self) -> f64 {
        self.symbol_energy
    }
}

/// Bits carried by the nearest point to each symbol.
pub fn demap(symbols: &[Cplx], c: &Constellation) -> Result<Vec<u8>> {
    if symbols.is_empty() {
        return contract("no symbols to demap");
    }
    let k = c.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * k);
    for s in symbols {
        let idx = c.nearest_index(*s);
        bits.extend((0..k).rev().map(|shift| ((idx >> shift) & 1) as u8));
    }
    Ok(bits)
}

/// Received vector plus the noise level detectors regularize with.
#[derive(Debug, Clone, PartialEq)]
pub struct RxFrame {
    x: Vec<Cplx>,
    sigma_n2: f64,
    alpha: f64,
}

impl RxFrame {
    /// `alpha = sigma_n2 / symbol_energy`, floored at [`MIN_ALPHA`].
    pub fn new(x: Vec<Cplx>, sigma_n2: f64, symbol_energy: f64) -> Result<Self> {
        if !(sigma_n2 >= 0.0) {
            return contract(format!("noise variance must be non-negative, got {sigma_n2}"));
        }
        if !(symbol_energy > 0.0) {
            return contract("symbol energy must be positive");
        }
        if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(crate::Error::NonFinite("received vector"));
        }
        let alpha = (sigma_n2 / symbol_energy).max(MIN_ALPHA);
        Ok(Self { x, sigma_n2, alpha })
    }

    pub fn x(&self) -> &[Cplx] {
        &self.x
    }

    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `x = H s + n`, with `n` circular Gaussian of variance `sigma_n2` per entry.
pub fn transmit(frame: &TxFrame, ch: &ChannelRealization, sigma_n2: f64, rng_seed: u64) -> Result<RxFrame> {
    transmit_with(frame, ch, sigma_n2, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

pub fn transmit_with<R: Rng + ?Sized>(
    frame: &TxFrame,
    ch: &ChannelRealization,
    sigma_n2: f64,
    rng: &mut R,
) -> Result<RxFrame> {
    transmit_symbols_with(frame.symbols(), ch, sigma_n2, frame.symbol_energy(), rng)
}

/// [`transmit`] for an arbitrary symbol vector, not necessarily drawn from
/// a constellation.
pub fn transmit_symbols_with<R: Rng + ?Sized>(
    s: &[Cplx],
    ch: &ChannelRealization,
    sigma_n2: f64,
    symbol_energy: f64,
    rng: &mut R,
) -> Result<RxFrame> {
    if s.len() != ch.m() {
        return contract(format!("frame has {} symbols, channel has {} inputs", s.len(), ch.m()));
    }
    if !(sigma_n2 >= 0.0) {
        return contract(format!("noise variance must be non-negative, got {sigma_n2}"));
    }
    let mut x = ch.h().matvec(s);
    if sigma_n2 > 0.0 {
        for xi in &mut x {
            *xi += complex_gaussian(rng, sigma_n2);
        }
    }
    RxFrame::new(x, sigma_n2, symbol_energy)
}

/// Seed for one sweep point, so different `(M, N, SNR)` points never share
/// a channel sequence. Trial `t` then uses stream `t` of this seed.
pub fn scenario_seed(seed: u64, m: usize, n: usize, snr_db: f64) -> u64 {
    let mut h = seed;
    for word in [m as u64, n as u64, snr_db.to_bits()] {
        h = splitmix64(h ^ word);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Channel, transmitted frame and received frame for one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub ch: ChannelRealization,
    pub frame: TxFrame,
    pub rx: RxFrame,
}

/// Draws channel, symbols and noise, in that order, from one generator.
/// An infinite `snr_db` gives a noiseless frame.
pub fn draw_trial<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    snr_db: f64,
    c: &Constellation,
    rng: &mut R,
) -> Result<Trial> {
    let ch = draw_channel_with(m, n, rng)?;
    let frame = TxFrame::random(m, c, rng)?;
    let rx = transmit_with(&frame, &ch, noise_variance_for_snr_db(snr_db, c.symbol_energy()), rng)?;
    Ok(Trial { ch, frame, rx })
}

/// Trial `trial` of the sweep point `(m, n, snr_db)` under `seed`.
pub fn seeded_trial(seed: u64, m: usize, n: usize, snr_db: f64, trial: u64, c: &Constellation) -> Result<Trial> {
    draw_trial(m, n, snr_db, c, &mut rng_stream(scenario_seed(seed, m, n, snr_db), trial))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    #[test]
    fn constellations_are_unit_energy_and_distinct() {
        for con in [Constellation::qpsk(), Constellation::qam16()] {
            assert!((con.symbol_energy() - 1.0).abs() < 1e-12);
            let pts = con.points();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    assert!((pts[i] - pts[j]).norm() > 0.1);
                }
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for con in [Constellation::qpsk(), Constellation::qam16()] {
            let pts = con.points();
            let dmin = (0..pts.len())
                .flat_map(|i| (0..pts.len()).filter(move |j| *j != i).map(move |j| (i, j)))
                .map(|(i, j)| (pts[i] - pts[j]).norm())
                .fold(f64::INFINITY, f64::min);
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    if i != j && (pts[i] - pts[j]).norm() < dmin * 1.0001 {
                        assert_eq!((i ^ j).count_ones(), 1, "{:?} {i} {j}", con.kind());
                    }
                }
            }
        }
    }

    #[test]
    fn quantize_examples() {
        let q = Constellation::qpsk();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(quantize(c(0.9, 0.8), &q), c(s, s));
        for p in q.points() {
            assert_eq!(quantize(*p, &q), *p);
        }
        assert_eq!(q.nearest_index(c(0.0, 0.0)), 0);
    }

    #[test]
    fn channel_is_deterministic() {
        let a = draw_channel(1, 1, 7).unwrap();
        let b = draw_channel(1, 1, 7).unwrap();
        assert_eq!(a.h()[(0, 0)].re.to_bits(), b.h()[(0, 0)].re.to_bits());
        assert_eq!(draw_channel(4, 4, 1).unwrap(), draw_channel(4, 4, 1).unwrap());
        assert_ne!(draw_channel(4, 4, 1).unwrap(), draw_channel(4, 4, 2).unwrap());
        assert!(draw_channel(3, 2, 1).is_err());
        assert!(draw_channel(0, 2, 1).is_err());
    }

    #[test]
    fn noiseless_transmit() {
        let qpsk = Constellation::qpsk();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let frame = TxFrame::from_symbols(&[c(s, s), c(-s, -s)], &qpsk).unwrap();
        let ch = ChannelRealization::new(CMat::identity(2)).unwrap();
        let rx = transmit(&frame, &ch, 0.0, 3).unwrap();
        assert_eq!(rx.x(), frame.symbols());
        assert_eq!(rx.alpha(), MIN_ALPHA);
        assert!(transmit(&frame, &ch, -1.0, 3).is_err());

        let mut rng = rng_stream(3, 0);
        let bpsk = [c(1.0, 0.0), c(-1.0, 0.0)];
        let rx = transmit_symbols_with(&bpsk, &ch, 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(rx.x(), &bpsk);

        let ch = draw_channel(2, 3, 5).unwrap();
        let zero = transmit_symbols_with(&[c(0.0, 0.0); 2], &ch, 0.0, 1.0, &mut rng).unwrap();
        assert!(zero.x().iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn alpha_tracks_noise() {
        let rx = RxFrame::new(vec![c(1.0, 0.0)], 0.1, 1.0).unwrap();
        assert!((rx.alpha() - 0.1).abs() < 1e-12);
        assert_eq!(noise_variance_for_snr_db(10.0, 1.0), 0.1);
    }

    #[test]
    fn trials_are_reproducible_and_distinct() {
        let q = Constellation::qpsk();
        let a = seeded_trial(1, 4, 4, 10.0, 3, &q).unwrap();
        assert_eq!(a, seeded_trial(1, 4, 4, 10.0, 3, &q).unwrap());
        assert_ne!(a.ch, seeded_trial(1, 4, 4, 10.0, 4, &q).unwrap().ch);
        assert_ne!(a.ch, seeded_trial(1, 4, 4, 20.0, 3, &q).unwrap().ch);
        let quiet = seeded_trial(1, 4, 4, f64::INFINITY, 0, &q).unwrap();
        assert_eq!(quiet.rx.sigma_n2(), 0.0);
        assert_eq!(quiet.rx.x(), &quiet.ch.h().matvec(quiet.frame.symbols())[..]);
    }

    #[test]
    fn bit_mapping_edges() {
        let q = Constellation::qpsk();
        assert!(TxFrame::from_bits(&[], &q).is_err());
        assert!(TxFrame::from_bits(&[0, 1, 1], &q).is_err());
        let f = TxFrame::from_bits(&[0; 8], &q).unwrap();
        assert!(f.symbols().iter().all(|z| *z == q.points()[0]));
        assert_eq!(demap(f.symbols(), &q).unwrap(), vec![0; 8]);
    }
}
