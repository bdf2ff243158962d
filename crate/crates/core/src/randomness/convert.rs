//! Converters between test kinds.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use super::{
    check_block_bounds, failure_class, IntervalBlock, KindData, TestFamily, TestKind, Violation,
};
use crate::limit::{LimitError, LimitOracle};
use crate::numeric::{coverage_at_least, Rational, RationalInterval};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConvertError {
    #[error("expected a {expected} test, got {found}")]
    WrongKind { expected: TestKind, found: TestKind },
    #[error("source test is invalid: {0}")]
    InvariantViolation(Violation),
    #[error("converted component {m} has measure {measure} > {bound}")]
    MeasureBound {
        m: u32,
        measure: Rational,
        bound: Rational,
    },
    #[error("threshold for component {0} does not fit in memory")]
    ThresholdOverflow(u32),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Component `k = 1..=depth` is the set of points lying in at least
/// `max(⌈c⌉,1)·2^k` components of the Solovay test.
pub fn solovay_to_ml(t: &TestFamily, depth: u32) -> Result<TestFamily, ConvertError> {
    let bound = match (&t.kind, &t.data) {
        (TestKind::Solovay, KindData::Solovay { bound }) => bound,
        _ => {
            return Err(ConvertError::WrongKind {
                expected: TestKind::Solovay,
                found: t.kind,
            })
        }
    };
    super::validate(t).map_err(ConvertError::InvariantViolation)?;
    let scale = bound.ceil().to_usize().unwrap_or(usize::MAX).max(1);
    let finals = t.finals();
    let mut components = Vec::with_capacity(depth as usize);
    for k in 1..=depth {
        let threshold = 1usize
            .checked_shl(k)
            .and_then(|p| p.checked_mul(scale))
            .ok_or(ConvertError::ThresholdOverflow(k))?;
        let g = coverage_at_least(&finals, threshold);
        let measure = g.measure();
        let limit = Rational::pow2(-(k as i64));
        if measure > limit {
            return Err(ConvertError::MeasureBound {
                m: k,
                measure,
                bound: limit,
            });
        }
        components.push(g);
    }
    let mut ml = TestFamily::plain(TestKind::Ml, 1, components);
    ml.label = format!("ML from Solovay {}", t.label);
    Ok(ml)
}

/// The forward direction of the interval-sequence / Schnorr bridge:
/// `G_m = ∪_{r≤depth} ∪_{k∉E^m_r} Q^m_r(k)` for `m = 1..=depth`, declared
/// measures exact at this stage, tagged relativized.
pub fn interval_sequence_to_schnorr(
    t: &TestFamily,
    depth: u32,
) -> Result<TestFamily, ConvertError> {
    let blocks = match (&t.kind, &t.data) {
        (TestKind::IntervalSequence, KindData::IntervalSequence { blocks }) => blocks,
        _ => {
            return Err(ConvertError::WrongKind {
                expected: TestKind::IntervalSequence,
                found: t.kind,
            })
        }
    };
    check_block_bounds(blocks).map_err(ConvertError::InvariantViolation)?;
    let components: Vec<_> = (1..=depth)
        .map(|m| failure_class(blocks, m, depth))
        .collect();
    for (i, g) in components.iter().enumerate() {
        let (m, measure) = (i as u32 + 1, g.measure());
        let bound = Rational::pow2(-(m as i64));
        if measure > bound {
            return Err(ConvertError::MeasureBound { m, measure, bound });
        }
    }
    let declared = components.iter().map(|g| g.measure()).collect();
    let mut s = TestFamily::schnorr(1, components, declared);
    s.relativized = true;
    s.label = format!("Schnorr relative to ∅′ from {}", t.label);
    Ok(s)
}

/// The reverse direction. `oracles[m-1]` approximates the pieces of `G_m`:
/// query `r-1` at stage `t` is the current guess at `(P^m_r(i))_i`.
///
/// Every interval ever guessed for `(m, r)` becomes some `Q^m_r(k)`, in
/// order of first appearance; those missing from the final guess go into
/// `E^m_r`. Change budgets are enforced before anything is built.
pub fn schnorr_to_interval_sequence(
    oracles: &[LimitOracle<Vec<RationalInterval>>],
) -> Result<TestFamily, ConvertError> {
    let mut blocks = Vec::new();
    for (i, oracle) in oracles.iter().enumerate() {
        oracle.check_budget()?;
        for x in 0..oracle.queries() {
            let mut intervals: Vec<RationalInterval> = Vec::new();
            for stage in 0..oracle.stages(x) {
                for piece in oracle.approx(x, stage).into_iter().flatten() {
                    if !intervals.contains(piece) {
                        intervals.push(piece.clone());
                    }
                }
            }
            let last = oracle.limit(x).cloned().unwrap_or_default();
            let excised: BTreeSet<usize> = intervals
                .iter()
                .enumerate()
                .filter(|(_, q)| !last.contains(q))
                .map(|(k, _)| k)
                .collect();
            blocks.push(IntervalBlock {
                m: i as u32 + 1,
                r: x as u32 + 1,
                intervals,
                excised,
            });
        }
    }
    check_block_bounds(&blocks).map_err(ConvertError::InvariantViolation)?;
    let mut t = TestFamily::interval_sequence(blocks);
    t.label = "interval sequence from limit approximations".into();
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{normalize_union, IntervalUnion};
    use crate::randomness::{evaluate, validate, Membership};
    use crate::real::CauchyName;
    use alloc::vec;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn solovay_fixture() -> TestFamily {
        let comps = (1..=8)
            .map(|m| {
                IntervalUnion::single(RationalInterval::open(Rational::zero(), Rational::pow2(-m)))
            })
            .collect();
        TestFamily::solovay(1, comps, Rational::one())
    }

    #[test]
    fn solovay_threshold_example() {
        let ml = solovay_to_ml(&solovay_fixture(), 4).unwrap();
        assert_eq!(
            ml.final_component(1),
            IntervalUnion::single(RationalInterval::open(q("0"), q("1/4")))
        );
        assert_eq!(validate(&ml), Ok(()));
        let third = CauchyName::constant(q("1/3"));
        let e = evaluate(&ml, &third, 4);
        assert_eq!(e.components[0].result, Membership::Escaped);

        let empty = TestFamily::solovay(1, vec![], Rational::zero());
        let ml = solovay_to_ml(&empty, 3).unwrap();
        assert!(ml.finals().iter().all(IntervalUnion::is_empty));
    }

    fn single_block() -> TestFamily {
        TestFamily::interval_sequence(vec![IntervalBlock {
            m: 1,
            r: 1,
            intervals: vec![RationalInterval::open(q("0"), q("1/8"))],
            excised: BTreeSet::new(),
        }])
    }

    #[test]
    fn forward_bridge() {
        let s = interval_sequence_to_schnorr(&single_block(), 1).unwrap();
        assert_eq!(s.final_component(1).measure(), q("1/8"));
        assert!(s.relativized);
        assert_eq!(validate(&s), Ok(()));

        let mut t = single_block();
        if let KindData::IntervalSequence { blocks } = &mut t.data {
            blocks[0].excised.insert(0);
        }
        let s = interval_sequence_to_schnorr(&t, 3).unwrap();
        assert!(s.finals().iter().all(IntervalUnion::is_empty));
    }

    #[test]
    fn reverse_bridge_excises_retractions() {
        let a = RationalInterval::open(q("0"), q("1/8"));
        let b = RationalInterval::open(q("1/2"), q("9/16"));
        let c = RationalInterval::open(q("3/4"), q("13/16"));
        // m = 1, r = 1 guesses a, then b, then settles on b and c.
        let oracle = LimitOracle::new(
            vec![vec![
                vec![a.clone()],
                vec![b.clone()],
                vec![b.clone(), c.clone()],
            ]],
            Some(vec![2]),
        )
        .unwrap();
        let t = schnorr_to_interval_sequence(&[oracle]).unwrap();
        assert_eq!(validate(&t), Ok(()));
        assert_eq!(t.final_component(1), normalize_union(vec![b, c]));
        let over =
            LimitOracle::new(vec![vec![vec![a.clone()], vec![], vec![a]]], Some(vec![1])).unwrap();
        assert!(matches!(
            schnorr_to_interval_sequence(&[over]),
            Err(ConvertError::Limit(_))
        ));
    }
}
