//! Dominant-term complexity models and comparison against measured ledgers.
//!
//! Each model is a polynomial in `(M, N)` with rational coefficients. Only
//! the original algorithm has separate multiply and add models; for the
//! others a term counts one multiplication and one addition, so the add
//! model equals the multiply model.

use crate::detectors::Algorithm;
use crate::error::{contract, Result};
use crate::numkernel::{init_q_block, BlockStep, CMat, FlopLedger};

/// `num / den * M^m_pow * N^n_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub num: u64,
    pub den: u64,
    pub m_pow: u32,
    pub n_pow: u32,
}

const fn t(num: u64, den: u64, m_pow: u32, n_pow: u32) -> Term {
    Term { num, den, m_pow, n_pow }
}

const ORIGINAL_MUL: &[Term] = &[t(3, 1, 2, 1), t(2, 3, 3, 0)];
const ORIGINAL_ADD: &[Term] = &[t(5, 2, 2, 1), t(1, 2, 3, 0)];
const MEM_SAVING: &[Term] = &[t(2, 1, 2, 1), t(1, 6, 3, 0)];
const FASTEST_KNOWN: &[Term] = &[t(1, 2, 2, 1), t(4, 3, 3, 0)];
const SPEED_ADV: &[Term] = &[t(1, 2, 2, 1), t(1, 1, 3, 0)];
const PROPOSED: &[Term] = &[t(1, 2, 2, 1), t(2, 3, 3, 0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Original,
    MemSaving,
    FastestKnown,
    SpeedAdv,
    Proposed,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::Original, ModelKind::MemSaving, ModelKind::FastestKnown, ModelKind::SpeedAdv, ModelKind::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Original => "original",
            ModelKind::MemSaving => "mem_saving",
            ModelKind::FastestKnown => "fastest_known",
            ModelKind::SpeedAdv => "speed_adv",
            ModelKind::Proposed => "proposed",
        }
    }

    /// The model a detector is measured against; the oracle has none.
    pub fn for_algorithm(a: Algorithm) -> Option<ModelKind> {
        match a {
            Algorithm::Oracle => None,
            Algorithm::Original => Some(ModelKind::Original),
            Algorithm::MemSaving => Some(ModelKind::MemSaving),
            Algorithm::FastestKnown => Some(ModelKind::FastestKnown),
            Algorithm::SpeedAdv => Some(ModelKind::SpeedAdv),
            Algorithm::Proposed1
            | Algorithm::Proposed2
            | Algorithm::Proposed2NoPerm
            | Algorithm::Proposed2Tri
            | Algorithm::Proposed2TriNoPerm => Some(ModelKind::Proposed),
        }
    }

    /// The detector that stands for this model in ratio comparisons.
    pub fn representative(self) -> Algorithm {
        match self {
            ModelKind::Original => Algorithm::Original,
            ModelKind::MemSaving => Algorithm::MemSaving,
            ModelKind::FastestKnown => Algorithm::FastestKnown,
            ModelKind::SpeedAdv => Algorithm::SpeedAdv,
            ModelKind::Proposed => Algorithm::Proposed2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityModel {
    pub algorithm: ModelKind,
    pub mul_terms: &'static [Term],
    pub add_terms: &'static [Term],
}

impl ComplexityModel {
    pub fn of(kind: ModelKind) -> Self {
        let (mul_terms, add_terms) = match kind {
            ModelKind::Original => (ORIGINAL_MUL, ORIGINAL_ADD),
            ModelKind::MemSaving => (MEM_SAVING, MEM_SAVING),
            ModelKind::FastestKnown => (FASTEST_KNOWN, FASTEST_KNOWN),
            ModelKind::SpeedAdv => (SPEED_ADV, SPEED_ADV),
            ModelKind::Proposed => (PROPOSED, PROPOSED),
        };
        Self { algorithm: kind, mul_terms, add_terms }
    }
}

fn eval(terms: &[Term], m: usize, n: usize) -> f64 {
    terms
        .iter()
        .map(|t| t.num as f64 / t.den as f64 * (m as f64).powi(t.m_pow as i32) * (n as f64).powi(t.n_pow as i32))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mul: f64,
    pub add: f64,
}

pub fn predict(model: &ComplexityModel, m: usize, n: usize) -> Prediction {
    Prediction { mul: eval(model.mul_terms, m, n), add: eval(model.add_terms, m, n) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub measured_mul: u64,
    pub measured_add: u64,
    pub predicted: Prediction,
    /// `|measured - predicted| / predicted` on cmul; `None` when degenerate.
    pub mul_gap: Option<f64>,
    pub add_gap: Option<f64>,
    /// The prediction is zero, so no relative gap exists.
    pub degenerate: bool,
}

pub fn compare(ledger: &FlopLedger, model: &ComplexityModel, m: usize, n: usize) -> Comparison {
    let predicted = predict(model, m, n);
    let gap = |measured: u64, p: f64| (p > 0.0).then(|| (measured as f64 - p).abs() / p);
    Comparison {
        measured_mul: ledger.cmul,
        measured_add: ledger.cadd,
        predicted,
        mul_gap: gap(ledger.cmul, predicted.mul),
        add_gap: gap(ledger.cadd, predicted.add),
        degenerate: predicted.mul == 0.0 || predicted.add == 0.0,
    }
}

/// `(cmul + cadd)` of `a` over that of `b`.
pub fn speedup(a: &FlopLedger, b: &FlopLedger) -> Result<f64> {
    if a.total() == 0 || b.total() == 0 {
        return contract("speedup needs two non-empty ledgers");
    }
    Ok(a.total() as f64 / b.total() as f64)
}

/// Ledger of inverting `r` alone with the given block step.
pub fn init_ledger(r: &CMat, step: BlockStep) -> Result<FlopLedger> {
    let mut ledger = FlopLedger::new();
    init_q_block(r, step, &mut ledger)?;
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn table_values() {
        let p = predict(&ComplexityModel::of(ModelKind::Proposed), 6, 6);
        assert!((p.mul - 252.0).abs() < 1e-9);
        let p = predict(&ComplexityModel::of(ModelKind::SpeedAdv), 6, 6);
        assert!((p.mul - 324.0).abs() < 1e-9);
        for kind in ModelKind::ALL {
            let p = predict(&ComplexityModel::of(kind), 0, 0);
            assert_eq!((p.mul, p.add), (0.0, 0.0));
        }
        let o = predict(&ComplexityModel::of(ModelKind::Original), 2, 4);
        assert!((o.mul - (3.0 * 16.0 + 2.0 / 3.0 * 8.0)).abs() < 1e-9);
        assert!((o.add - (2.5 * 16.0 + 4.0)).abs() < 1e-9);
    }

    #[test]
    fn compare_and_degenerate() {
        let model = ComplexityModel::of(ModelKind::Proposed);
        let l = FlopLedger { cmul: 277, cadd: 252, cdiv: 0 };
        let c = compare(&l, &model, 6, 6);
        assert!((c.mul_gap.unwrap() - 25.0 / 252.0).abs() < 1e-12);
        assert_eq!(c.add_gap, Some(0.0));
        let c = compare(&l, &model, 0, 0);
        assert!(c.degenerate && c.mul_gap.is_none());
    }

    #[test]
    fn speedup_rules() {
        let a = FlopLedger { cmul: 30, cadd: 30, cdiv: 1 };
        let b = FlopLedger { cmul: 20, cadd: 20, cdiv: 1 };
        assert_eq!(speedup(&a, &b).unwrap(), 1.5);
        assert!(speedup(&a, &FlopLedger::new()).is_err());
    }

    #[test]
    fn init_ledgers_differ_in_divisions() {
        let r = fixtures::random_hpd(6, 0.1, 2);
        let i = init_ledger(&r, BlockStep::Classic).unwrap();
        let v = init_ledger(&r, BlockStep::DivisionLight).unwrap();
        assert_eq!(v.cdiv, 6);
        assert_eq!(i.cdiv, 16);
        assert!(speedup(&i, &v).unwrap() > 1.0);
    }
}
