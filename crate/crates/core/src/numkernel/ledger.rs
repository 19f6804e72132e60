use std::ops::{Add, AddAssign};

use super::Cplx;

/// Complex-operation counters.
///
/// One complex multiply is one `cmul`, one complex add or subtract is one
/// `cadd`, one complex (or real-by-complex) division or reciprocal is one
/// `cdiv`. Negation and conjugation are free. Multiplying a complex value by
/// a real scalar is still charged as a `cmul`.
///
/// Every arithmetic operation the detectors perform on complex data goes
/// through one of the counting helpers below, so a ledger is an exact trace
/// of the work done rather than an estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FlopLedger {
    pub cmul: u64,
    pub cadd: u64,
    pub cdiv: u64,
}

impl FlopLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Multiplications plus additions, the figure speedups are taken over.
    pub fn total(&self) -> u64 {
        self.cmul + self.cadd
    }

    pub fn is_zero(&self) -> bool {
        self.cmul == 0 && self.cadd == 0 && self.cdiv == 0
    }

    pub fn merge(&mut self, other: &FlopLedger) {
        *self += *other;
    }

    #[inline]
    pub fn charge(&mut self, cmul: u64, cadd: u64, cdiv: u64) {
        self.cmul += cmul;
        self.cadd += cadd;
        self.cdiv += cdiv;
    }

    #[inline]
    pub fn mul(&mut self, a: Cplx, b: Cplx) -> Cplx {
        self.cmul += 1;
        a * b
    }

    #[inline]
    pub fn add(&mut self, a: Cplx, b: Cplx) -> Cplx {
        self.cadd += 1;
        a + b
    }

    #[inline]
    pub fn sub(&mut self, a: Cplx, b: Cplx) -> Cplx {
        self.cadd += 1;
        a - b
    }

    #[inline]
    pub fn div(&mut self, a: Cplx, b: Cplx) -> Cplx {
        self.cdiv += 1;
        a / b
    }

    /// `1 / a`, charged as one division.
    #[inline]
    pub fn recip(&mut self, a: Cplx) -> Cplx {
        self.cdiv += 1;
        a.inv()
    }

    /// `a^H b`. Charges `n` cmul and `n - 1` cadd.
    pub fn dot_h(&mut self, a: &[Cplx], b: &[Cplx]) -> Cplx {
        debug_assert_eq!(a.len(), b.len());
        let n = a.len() as u64;
        if n == 0 {
            return Cplx::new(0.0, 0.0);
        }
        self.charge(n, n - 1, 0);
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    /// `a^T b` (no conjugation). Charges `n` cmul and `n - 1` cadd.
    pub fn dot_u(&mut self, a: &[Cplx], b: &[Cplx]) -> Cplx {
        debug_assert_eq!(a.len(), b.len());
        let n = a.len() as u64;
        if n == 0 {
            return Cplx::new(0.0, 0.0);
        }
        self.charge(n, n - 1, 0);
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// `y[i] = s * x[i]`. Charges `n` cmul.
    pub fn scale_into(&mut self, s: Cplx, x: &[Cplx], y: &mut [Cplx]) {
        debug_assert_eq!(x.len(), y.len());
        self.cmul += x.len() as u64;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = s * xi;
        }
    }

    /// `y[i] += s * x[i]`. Charges `n` cmul and `n` cadd.
    pub fn axpy(&mut self, s: Cplx, x: &[Cplx], y: &mut [Cplx]) {
        debug_assert_eq!(x.len(), y.len());
        let n = x.len() as u64;
        self.charge(n, n, 0);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += s * xi;
        }
    }
}

impl AddAssign for FlopLedger {
    fn add_assign(&mut self, rhs: Self) {
        self.cmul += rhs.cmul;
        self.cadd += rhs.cadd;
        self.cdiv += rhs.cdiv;
    }
}

impl Add for FlopLedger {
    type Output = FlopLedger;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    #[test]
    fn dot_charges_n_mul_n_minus_one_add() {
        let mut l = FlopLedger::new();
        let a = [c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0)];
        let b = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, -1.0)];
        let v = l.dot_h(&a, &b);
        assert_eq!(v, c(1.0, -1.0) + c(0.0, -2.0) + c(3.0, -3.0));
        assert_eq!(l, FlopLedger { cmul: 3, cadd: 2, cdiv: 0 });
        assert_eq!(l.dot_h(&[], &[]), c(0.0, 0.0));
        assert_eq!(l.cmul, 3);
    }

    #[test]
    fn merge_is_componentwise() {
        let a = FlopLedger { cmul: 1, cadd: 2, cdiv: 3 };
        let b = FlopLedger { cmul: 10, cadd: 20, cdiv: 30 };
        let mut m = a;
        m.merge(&b);
        assert_eq!(m, FlopLedger { cmul: 11, cadd: 22, cdiv: 33 });
        assert_eq!(a + b, m);
        assert_eq!(m.total(), 33);
    }
}
