//! Slopes, finite-scale pseudo-derivatives and the Denjoy alternative.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::markov::MarkovFunction;
use crate::numeric::Rational;
use crate::real::CauchyName;

pub const MAX_GRID: u32 = 14;
/// Slopes beyond `±2^16` count as infinite.
pub const BLOWUP_EXPONENT: i64 = 16;
pub const MAX_PAIRS: u64 = 1 << 22;
pub const REFINEMENT_BUDGET: u32 = 14;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DerivativeError {
    #[error("slope needs a ≠ b, got a = b = {0}")]
    DegeneratePair(Rational),
    #[error("grid exponent {0} exceeds {MAX_GRID}")]
    GridTooFine(u32),
    #[error("scale must be positive, got {0}")]
    BadScale(Rational),
    #[error("{0} slope pairs exceed the budget {MAX_PAIRS}")]
    TooManyPairs(u64),
}

/// `S_f(a,b) = (f(a) - f(b)) / (a - b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeSample {
    pub a: Rational,
    pub b: Rational,
    pub value: Rational,
}

pub fn slope(
    f: &MarkovFunction,
    a: &Rational,
    b: &Rational,
) -> Result<SlopeSample, DerivativeError> {
    if a == b {
        return Err(DerivativeError::DegeneratePair(a.clone()));
    }
    let value = (f.eval(a) - f.eval(b)) / (a - b);
    Ok(SlopeSample {
        a: a.clone(),
        b: b.clone(),
        value,
    })
}

/// A rational or a signed infinity flag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Extended {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl Extended {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extended::Finite(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self, Extended::Finite(_))
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => f.write_str("-inf"),
            Extended::Finite(q) => write!(f, "{}", q),
            Extended::PosInf => f.write_str("+inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoDerivativeEstimate {
    pub upper: Extended,
    pub lower: Extended,
    /// The scale actually used: `max(h, 2^-grid)`.
    pub scale: Rational,
    pub grid: u32,
    pub pairs: u64,
    /// Range of chords ending at the grid point at or below the window.
    pub left_chords: Option<(Rational, Rational)>,
    /// Range of chords starting at the grid point at or above the window.
    pub right_chords: Option<(Rational, Rational)>,
}

impl PseudoDerivativeEstimate {
    /// An estimate with no chord data, e.g. read back from a report.
    pub fn from_bounds(upper: Extended, lower: Extended, scale: Rational, grid: u32) -> Self {
        PseudoDerivativeEstimate {
            upper,
            lower,
            scale,
            grid,
            pairs: 0,
            left_chords: None,
            right_chords: None,
        }
    }
}

#[derive(Default)]
struct Range(Option<(Rational, Rational)>);

impl Range {
    fn add(&mut self, q: &Rational) {
        match &mut self.0 {
            None => self.0 = Some((q.clone(), q.clone())),
            Some((lo, hi)) => {
                if q < lo {
                    *lo = q.clone();
                }
                if q > hi {
                    *hi = q.clone();
                }
            }
        }
    }
}

/// Max and min of `S_f(a,b)` over grid points `a = i/2^grid`, `b = j/2^grid`
/// in `[0,1]` with `a ≤ ẑ ≤ b` and `0 < b - a ≤ h`, where `ẑ` ranges over
/// the certified window of `z` at precision `grid + 2`.
pub fn pseudo_derivative(
    f: &MarkovFunction,
    z: &CauchyName,
    h: &Rational,
    grid: u32,
) -> Result<PseudoDerivativeEstimate, DerivativeError> {
    if grid > MAX_GRID {
        return Err(DerivativeError::GridTooFine(grid));
    }
    if !h.is_positive() {
        return Err(DerivativeError::BadScale(h.clone()));
    }
    let top = 1i64 << grid;
    let step = Rational::pow2(-(grid as i64));
    let scale = h.clone().max(step.clone());
    let span = (&scale / &step).floor();
    let span: i64 = i64::try_from(span).unwrap_or(top).min(top);

    let w = z.certified_window(grid + 2);
    let (zlo, zhi) = (w.lo().clamp_unit(), w.hi().clamp_unit());
    let scaled = |q: &Rational| q * Rational::from_integer(top);
    // a ≤ z_hi and b ≥ z_lo, as grid indices.
    let a_max = i64::try_from(scaled(&zhi).floor()).unwrap_or(top).min(top);
    let b_min = i64::try_from(scaled(&zlo).ceil()).unwrap_or(0).max(0);
    let a_min = (b_min - span).max(0);
    let b_max = (a_max + span).min(top);

    let pairs: u64 = (a_min..=a_max)
        .map(|i| {
            let lo = (i + 1).max(b_min);
            let hi = (i + span).min(b_max);
            (hi - lo + 1).max(0) as u64
        })
        .sum();
    if pairs > MAX_PAIRS {
        return Err(DerivativeError::TooManyPairs(pairs));
    }

    // Common-denominator integer values make each chord one subtraction;
    // per chord width only the extreme rises matter.
    let values: Vec<Rational> = (a_min..=b_max)
        .map(|j| f.eval(&Rational::dyadic(j as u64, grid)))
        .collect();
    let common = values
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = values
        .iter()
        .map(|v| v.numer() * (&common / v.denom()))
        .collect();
    let rise = |i: i64, j: i64| &ints[(j - a_min) as usize] - &ints[(i - a_min) as usize];
    let per_unit = Rational::from_bigint(BigInt::from(top)) / Rational::from_bigint(common.clone());
    let chord = |i: i64, j: i64| {
        Rational::from_bigint(rise(i, j)) * &per_unit / Rational::from_integer(j - i)
    };

    let mut by_width: Vec<Option<(BigInt, BigInt)>> = vec![None; span as usize + 1];
    for i in a_min..=a_max {
        for j in (i + 1).max(b_min)..=(i + span).min(b_max) {
            let r = rise(i, j);
            match &mut by_width[(j - i) as usize] {
                slot @ None => *slot = Some((r.clone(), r)),
                Some((lo, hi)) => {
                    if r < *lo {
                        *lo = r;
                    } else if r > *hi {
                        *hi = r;
                    }
                }
            }
        }
    }
    let blowup = Rational::pow2(BLOWUP_EXPONENT);
    let neg_blowup = -&blowup;
    let mut all = Range::default();
    for (d, slot) in by_width.into_iter().enumerate() {
        if let Some((lo, hi)) = slot {
            let scale = &per_unit / Rational::from_integer(d as i64);
            all.add(&(Rational::from_bigint(lo) * &scale));
            all.add(&(Rational::from_bigint(hi) * &scale));
        }
    }
    let pos_inf = all.0.as_ref().is_some_and(|(_, hi)| *hi > blowup);
    let neg_inf = all.0.as_ref().is_some_and(|(lo, _)| *lo < neg_blowup);

    let left_anchor = i64::try_from(scaled(&zlo).floor())
        .unwrap_or(0)
        .clamp(0, top);
    let right_anchor = b_min.min(top);
    let mut left = Range::default();
    for i in (left_anchor - span).max(a_min)..left_anchor {
        left.add(&chord(i, left_anchor));
    }
    let mut right = Range::default();
    for j in right_anchor + 1..=(right_anchor + span).min(b_max) {
        right.add(&chord(right_anchor, j));
    }

    let (lower, upper) = match all.0 {
        Some((lo, hi)) => (
            if neg_inf {
                Extended::NegInf
            } else {
                Extended::Finite(lo)
            },
            if pos_inf {
                Extended::PosInf
            } else {
                Extended::Finite(hi)
            },
        ),
        // Unreachable for windows inside [0,1]; kept total.
        None => (
            Extended::Finite(Rational::zero()),
            Extended::Finite(Rational::zero()),
        ),
    };
    Ok(PseudoDerivativeEstimate {
        upper,
        lower,
        scale,
        grid,
        pairs,
        left_chords: left.0,
        right_chords: right.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DenjoyVerdict {
    Differentiable,
    FullOscillation,
    Neither,
    Unresolved,
}

impl DenjoyVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            DenjoyVerdict::Differentiable => "DIFFERENTIABLE",
            DenjoyVerdict::FullOscillation => "FULL_OSCILLATION",
            DenjoyVerdict::Neither => "NEITHER",
            DenjoyVerdict::Unresolved => "UNRESOLVED",
        }
    }
}

impl fmt::Display for DenjoyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which branch of the Denjoy alternative the estimate shows at its scale.
///
/// A corner (both one-sided chord sets tight but separated by more than
/// `tol`) counts as `Neither`.
pub fn classify_denjoy(e: &PseudoDerivativeEstimate, tol: &Rational) -> DenjoyVerdict {
    match (&e.upper, &e.lower) {
        (Extended::Finite(u), Extended::Finite(l)) => {
            if u - l <= *tol {
                return DenjoyVerdict::Differentiable;
            }
            if let (Some((l0, l1)), Some((r0, r1))) = (&e.left_chords, &e.right_chords) {
                let tight = l1 - l0 <= *tol && r1 - r0 <= *tol;
                let apart = r0 - l1 > *tol || l0 - r1 > *tol;
                if tight && apart {
                    return DenjoyVerdict::Neither;
                }
            }
            DenjoyVerdict::Unresolved
        }
        (Extended::PosInf, Extended::NegInf) => DenjoyVerdict::FullOscillation,
        _ => DenjoyVerdict::Neither,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub steps: Vec<(Rational, DenjoyVerdict)>,
    pub verdict: DenjoyVerdict,
    pub stabilized: bool,
}

/// Halves `h` until two consecutive resolved verdicts agree, the scale reaches the
/// grid spacing, or the budget of halvings runs out.
pub fn refine_denjoy(
    f: &MarkovFunction,
    z: &CauchyName,
    h: &Rational,
    grid: u32,
    tol: &Rational,
) -> Result<Refinement, DerivativeError> {
    let floor = Rational::pow2(-(grid as i64));
    let mut h = h.clone();
    let mut steps: Vec<(Rational, DenjoyVerdict)> = Vec::new();
    for _ in 0..=REFINEMENT_BUDGET {
        let e = pseudo_derivative(f, z, &h, grid)?;
        let v = classify_denjoy(&e, tol);
        let repeat =
            v != DenjoyVerdict::Unresolved && steps.last().is_some_and(|(_, prev)| *prev == v);
        steps.push((e.scale.clone(), v));
        if repeat {
            return Ok(Refinement {
                steps,
                verdict: v,
                stabilized: true,
            });
        }
        if e.scale <= floor {
            break;
        }
        h = h.half();
    }
    let verdict = steps
        .last()
        .map(|s| s.1)
        .unwrap_or(DenjoyVerdict::Unresolved);
    Ok(Refinement {
        steps,
        verdict,
        stabilized: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::canonical_interval;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn slope_examples() {
        let id = MarkovFunction::identity();
        assert_eq!(slope(&id, &q("0"), &q("1")).unwrap().value, q("1"));
        let sq = MarkovFunction::square();
        assert_eq!(slope(&sq, &q("1/4"), &q("1/2")).unwrap().value, q("3/4"));
        let f = MarkovFunction::canonical_nonuc(20).unwrap();
        let i3 = canonical_interval(3);
        assert_eq!(slope(&f, i3.lo(), i3.hi()).unwrap().value, Rational::zero());
        assert!(matches!(
            slope(&id, &q("1/2"), &q("1/2")),
            Err(DerivativeError::DegeneratePair(_))
        ));
    }

    #[test]
    fn square_at_third() {
        let e = pseudo_derivative(
            &MarkovFunction::square(),
            &CauchyName::constant(q("1/3")),
            &Rational::pow2(-10),
            14,
        )
        .unwrap();
        let d = q("2/3");
        let tol = Rational::pow2(-6);
        // Oracle: every admissible chord of x² is a + b with a ≤ 1/3 ≤ b.
        for bound in [&e.upper, &e.lower] {
            let v = bound.finite().unwrap();
            assert!((v - &d).abs() <= tol);
        }
        assert_eq!(
            classify_denjoy(&e, &Rational::pow2(-4)),
            DenjoyVerdict::Differentiable
        );
    }

    #[test]
    fn identity_is_flat() {
        let x = CauchyName::newton_sqrt2().sub(&CauchyName::constant(Rational::one()));
        for h in [q("1/2"), Rational::pow2(-7)] {
            let e = pseudo_derivative(&MarkovFunction::identity(), &x, &h, 10).unwrap();
            assert_eq!(e.upper, Extended::Finite(Rational::one()));
            assert_eq!(e.lower, Extended::Finite(Rational::one()));
        }
    }

    #[test]
    fn corner() {
        let f = MarkovFunction::abs_offset(q("1/2"));
        let e = pseudo_derivative(&f, &CauchyName::constant(q("1/2")), &Rational::pow2(-6), 10)
            .unwrap();
        assert_eq!(e.upper, Extended::Finite(q("1")));
        assert_eq!(e.lower, Extended::Finite(q("-1")));
        assert_eq!(
            classify_denjoy(&e, &Rational::pow2(-4)),
            DenjoyVerdict::Neither
        );
    }

    #[test]
    fn classification_by_flags() {
        let e =
            PseudoDerivativeEstimate::from_bounds(Extended::PosInf, Extended::NegInf, q("1/4"), 8);
        assert_eq!(
            classify_denjoy(&e, &q("1/16")),
            DenjoyVerdict::FullOscillation
        );
        let e = PseudoDerivativeEstimate::from_bounds(
            Extended::Finite(q("1")),
            Extended::NegInf,
            q("1/4"),
            8,
        );
        assert_eq!(classify_denjoy(&e, &q("1/16")), DenjoyVerdict::Neither);
        let e = PseudoDerivativeEstimate::from_bounds(
            Extended::Finite(q("1")),
            Extended::Finite(q("0")),
            q("1/4"),
            8,
        );
        assert_eq!(classify_denjoy(&e, &q("1/16")), DenjoyVerdict::Unresolved);
    }

    #[test]
    fn canonical_blows_up_near_one() {
        let f = MarkovFunction::canonical_nonuc(20).unwrap();
        // At 1 only chords ending at 1 qualify: they fall from the tents to 0.
        let e =
            pseudo_derivative(&f, &CauchyName::constant(q("1")), &Rational::pow2(-8), 14).unwrap();
        // Steepest grid chord: from the peak of I_12 (height 12, distance
        // 3·2^-14 from 1), slope -2^16, right at the threshold.
        assert_eq!(e.upper, Extended::Finite(Rational::zero()));
        assert_eq!(e.lower, Extended::Finite(-Rational::pow2(16)));
        // On the steep side of the tent on I_12 both directions blow up.
        let i = canonical_interval(12);
        let z = CauchyName::constant(i.lo() + Rational::pow2(-16));
        let e = pseudo_derivative(&f, &z, &Rational::pow2(-12), 14).unwrap();
        assert_eq!(e.upper, Extended::PosInf);
    }

    #[test]
    fn refinement_settles() {
        let r = refine_denjoy(
            &MarkovFunction::square(),
            &CauchyName::constant(q("1/3")),
            &q("1/4"),
            12,
            &Rational::pow2(-4),
        )
        .unwrap();
        assert!(r.stabilized);
        assert_eq!(r.verdict, DenjoyVerdict::Differentiable);
    }

    #[test]
    fn rejects_bad_inputs() {
        let id = MarkovFunction::identity();
        let z = CauchyName::constant(q("1/2"));
        assert!(pseudo_derivative(&id, &z, &q("1/4"), 15).is_err());
        assert!(pseudo_derivative(&id, &z, &q("0"), 8).is_err());
        assert!(matches!(
            pseudo_derivative(&id, &z, &q("1"), 14),
            Err(DerivativeError::TooManyPairs(_))
        ));
    }
}
