//! Exact rationals, rational intervals and finite unions of intervals.
//!
//! Everything here is exact: no operation rounds, so measure bounds such as
//! `λ(G_m) ≤ 2^-m` are decided by comparing rationals.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Errors raised while building or parsing numeric values.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumericError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse rational from {0:?}")]
    BadRational(String),
    #[error("cannot parse interval from {0:?}")]
    BadInterval(String),
    #[error("interval endpoints out of order: {lo} > {hi}")]
    Inverted { lo: Rational, hi: Rational },
    #[error("degenerate interval at {0} must have both endpoints closed")]
    OpenPoint(Rational),
}

/// An exact rational number, always in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// `numer / denom`. Panics when `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        Self::try_new(BigInt::from(numer), BigInt::from(denom)).expect("zero denominator")
    }

    pub fn try_new(numer: BigInt, denom: BigInt) -> Result<Self, NumericError> {
        if denom.is_zero() {
            return Err(NumericError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i64) -> Self {
        let magnitude = BigInt::one() << (k.unsigned_abs() as usize);
        if k >= 0 {
            Rational::from_bigint(magnitude)
        } else {
            Rational(BigRational::new(BigInt::one(), magnitude))
        }
    }

    /// The dyadic rational `j / 2^k`.
    pub fn dyadic(j: u64, k: u32) -> Self {
        Rational(BigRational::new(
            BigInt::from(j),
            BigInt::one() << (k as usize),
        ))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn half(&self) -> Self {
        Rational(&self.0 / BigInt::from(2))
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn clamp_unit(&self) -> Self {
        if self.is_negative() {
            Rational::zero()
        } else if *self > Rational::one() {
            Rational::one()
        } else {
            self.clone()
        }
    }

    /// Whether the denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        let d = self.denom();
        (d & (d - BigInt::one())).is_zero()
    }

    /// Exponent `k` of the denominator `2^k` when the value is dyadic.
    pub fn dyadic_exponent(&self) -> Option<u32> {
        if self.is_dyadic() {
            Some(self.denom().bits().saturating_sub(1) as u32)
        } else {
            None
        }
    }

    /// Least `k ≥ 0` with `|self| ≤ 2^k`.
    pub fn ceil_log2_abs(&self) -> u32 {
        let a = self.abs();
        let mut k = 0u32;
        let mut bound = Rational::one();
        while a > bound {
            k += 1;
            bound = &bound + &bound;
        }
        k
    }

    /// `floor(log2(self))` for a positive value.
    pub fn floor_log2(&self) -> Option<i64> {
        if !self.is_positive() {
            return None;
        }
        // bits(n) - bits(d) is within one of the answer.
        let guess = self.numer().bits() as i64 - self.denom().bits() as i64;
        let mut k = guess - 1;
        while Rational::pow2(k + 1) <= *self {
            k += 1;
        }
        while Rational::pow2(k) > *self {
            k -= 1;
        }
        Some(k)
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = NumericError;

    /// Accepts `"p/q"` or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericError::BadRational(s.to_string());
        let t = s.trim();
        match t.split_once('/') {
            Some((p, q)) => {
                let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
                let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
                Rational::try_new(p, q).map_err(|_| bad())
            }
            None => Ok(Rational::from_bigint(
                BigInt::from_str(t).map_err(|_| bad())?,
            )),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl core::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> core::iter::Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// A rational interval with explicit endpoint openness.
///
/// `lo == hi` is only allowed for the closed point interval `[q,q]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalInterval {
    lo: Rational,
    hi: Rational,
    lo_open: bool,
    hi_open: bool,
}

impl RationalInterval {
    pub fn new(
        lo: Rational,
        hi: Rational,
        lo_open: bool,
        hi_open: bool,
    ) -> Result<Self, NumericError> {
        match lo.cmp(&hi) {
            Ordering::Greater => Err(NumericError::Inverted { lo, hi }),
            Ordering::Equal if lo_open || hi_open => Err(NumericError::OpenPoint(lo)),
            _ => Ok(RationalInterval {
                lo,
                hi,
                lo_open,
                hi_open,
            }),
        }
    }

    /// `[lo, hi]`. Panics if `lo > hi`.
    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, hi, false, false).expect("closed interval")
    }

    /// `(lo, hi)`. Panics if `lo >= hi`.
    pub fn open(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, hi, true, true).expect("open interval")
    }

    /// `[lo, hi)`. Panics if `lo >= hi`.
    pub fn half_open(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, hi, false, true).expect("half-open interval")
    }

    pub fn point(q: Rational) -> Self {
        RationalInterval {
            lo: q.clone(),
            hi: q,
            lo_open: false,
            hi_open: false,
        }
    }

    /// The closed ball `[center - radius, center + radius]`.
    pub fn ball(center: &Rational, radius: &Rational) -> Self {
        Self::closed(center - radius, center + radius)
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn lo_open(&self) -> bool {
        self.lo_open
    }

    pub fn hi_open(&self) -> bool {
        self.hi_open
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi).half()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, q: &Rational) -> bool {
        let above = if self.lo_open {
            *q > self.lo
        } else {
            *q >= self.lo
        };
        let below = if self.hi_open {
            *q < self.hi
        } else {
            *q <= self.hi
        };
        above && below
    }

    /// Whether `other ⊆ self` as point sets.
    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        let lo_ok = self.lo < other.lo || (self.lo == other.lo && (!self.lo_open || other.lo_open));
        let hi_ok = self.hi > other.hi || (self.hi == other.hi && (!self.hi_open || other.hi_open));
        lo_ok && hi_ok
    }

    pub fn intersection(&self, other: &RationalInterval) -> Option<RationalInterval> {
        let (lo, lo_open) = match self.lo.cmp(&other.lo) {
            Ordering::Less => (other.lo.clone(), other.lo_open),
            Ordering::Greater => (self.lo.clone(), self.lo_open),
            Ordering::Equal => (self.lo.clone(), self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.cmp(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_open),
            Ordering::Greater => (other.hi.clone(), other.hi_open),
            Ordering::Equal => (self.hi.clone(), self.hi_open || other.hi_open),
        };
        RationalInterval::new(lo, hi, lo_open, hi_open).ok()
    }

    pub fn intersects(&self, other: &RationalInterval) -> bool {
        self.intersection(other).is_some()
    }

    /// The interiors overlap (sharing only an endpoint does not count).
    pub fn overlaps_interior(&self, other: &RationalInterval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    pub fn to_closed(&self) -> RationalInterval {
        RationalInterval::closed(self.lo.clone(), self.hi.clone())
    }

    fn sort_key(&self) -> (&Rational, bool) {
        (&self.lo, self.lo_open)
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_open { '(' } else { '[' };
        let close = if self.hi_open { ')' } else { ']' };
        write!(f, "{}{},{}{}", open, self.lo, self.hi, close)
    }
}

impl fmt::Debug for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for RationalInterval {
    type Err = NumericError;

    /// Parses `"[lo,hi)"`, `"(lo,hi]"` and so on.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericError::BadInterval(s.to_string());
        let t = s.trim();
        let mut chars = t.chars();
        let lo_open = match chars.next() {
            Some('[') => false,
            Some('(') => true,
            _ => return Err(bad()),
        };
        let hi_open = match chars.next_back() {
            Some(']') => false,
            Some(')') => true,
            _ => return Err(bad()),
        };
        let body = chars.as_str();
        let (lo, hi) = body.split_once(',').ok_or_else(bad)?;
        let lo: Rational = lo.parse().map_err(|_| bad())?;
        let hi: Rational = hi.parse().map_err(|_| bad())?;
        RationalInterval::new(lo, hi, lo_open, hi_open)
    }
}

/// A finite union of pairwise disjoint, non-touching rational intervals
/// sorted by left endpoint.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalUnion {
    parts: Vec<RationalInterval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { parts: Vec::new() }
    }

    pub fn single(interval: RationalInterval) -> Self {
        IntervalUnion {
            parts: alloc::vec![interval],
        }
    }

    pub fn parts(&self) -> &[RationalInterval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> Rational {
        measure(self)
    }

    pub fn contains(&self, q: &Rational) -> bool {
        self.part_containing(q).is_some()
    }

    pub fn part_containing(&self, q: &Rational) -> Option<&RationalInterval> {
        // First part whose right end is not left of q.
        let idx = self.parts.partition_point(|p| p.hi < *q);
        self.parts[idx..].iter().take(2).find(|p| p.contains(q))
    }

    /// The part that contains all of `window`, if any.
    pub fn part_covering(&self, window: &RationalInterval) -> Option<&RationalInterval> {
        self.parts.iter().find(|p| p.contains_interval(window))
    }

    pub fn intersects(&self, window: &RationalInterval) -> bool {
        self.parts.iter().any(|p| p.intersects(window))
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut all = self.parts.clone();
        all.extend(other.parts.iter().cloned());
        normalize_union(all)
    }

    pub fn intersect_interval(&self, window: &RationalInterval) -> IntervalUnion {
        let parts = self
            .parts
            .iter()
            .filter_map(|p| p.intersection(window))
            .collect();
        normalize_union(parts)
    }
}

impl fmt::Debug for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.parts.iter()).finish()
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("∅");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{}", p)?;
        }
        Ok(())
    }
}

/// Canonical disjoint sorted form of a list of intervals.
///
/// Two parts are merged when their union is connected, so `(0,1/2)` and
/// `(1/2,1)` stay apart (the point `1/2` is in neither).
pub fn normalize_union(mut intervals: Vec<RationalInterval>) -> IntervalUnion {
    intervals.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut parts: Vec<RationalInterval> = Vec::with_capacity(intervals.len());
    for next in intervals {
        if let Some(cur) = parts.last_mut() {
            let connected =
                next.lo < cur.hi || (next.lo == cur.hi && (!next.lo_open || !cur.hi_open));
            if connected {
                match next.hi.cmp(&cur.hi) {
                    Ordering::Greater => {
                        cur.hi = next.hi;
                        cur.hi_open = next.hi_open;
                    }
                    Ordering::Equal => cur.hi_open = cur.hi_open && next.hi_open,
                    Ordering::Less => {}
                }
                continue;
            }
        }
        parts.push(next);
    }
    IntervalUnion { parts }
}

/// Exact Lebesgue measure of a normalized union.
pub fn measure(u: &IntervalUnion) -> Rational {
    u.parts.iter().map(|p| p.length()).sum()
}

/// Points lying in at least `threshold` of the given unions.
///
/// The line is cut at every endpoint into points and open gaps; each piece
/// has constant coverage, which is counted exactly.
pub fn coverage_at_least(unions: &[IntervalUnion], threshold: usize) -> IntervalUnion {
    let threshold = threshold.max(1);
    let mut cuts: Vec<Rational> = unions
        .iter()
        .flat_map(|u| u.parts.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]))
        .collect();
    cuts.sort();
    cuts.dedup();
    let count = |q: &Rational| unions.iter().filter(|u| u.contains(q)).count();
    let mut pieces = Vec::new();
    for (i, c) in cuts.iter().enumerate() {
        if count(c) >= threshold {
            pieces.push(RationalInterval::point(c.clone()));
        }
        if let Some(next) = cuts.get(i + 1) {
            if count(&(c + next).half()) >= threshold {
                pieces.push(RationalInterval::open(c.clone(), next.clone()));
            }
        }
    }
    normalize_union(pieces)
}

/// The closed unit interval `[0,1]`.
pub fn unit_interval() -> RationalInterval {
    RationalInterval::closed(Rational::zero(), Rational::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn iv(s: &str) -> RationalInterval {
        s.parse().unwrap()
    }

    #[test]
    fn rational_display_is_lowest_terms() {
        assert_eq!(Rational::new(6, -8).to_string(), "-3/4");
        assert_eq!(Rational::zero().to_string(), "0/1");
        assert_eq!(q("4"), Rational::from_integer(4));
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn pow2_and_logs() {
        assert_eq!(Rational::pow2(-3), q("1/8"));
        assert_eq!(Rational::pow2(4), q("16"));
        assert_eq!(q("3/8").floor_log2(), Some(-2));
        assert_eq!(q("1/4").floor_log2(), Some(-2));
        assert_eq!(q("5").floor_log2(), Some(2));
        assert_eq!(q("5/2").ceil_log2_abs(), 2);
        assert_eq!(q("3/8").dyadic_exponent(), Some(3));
        assert_eq!(q("1/3").dyadic_exponent(), None);
    }

    #[test]
    fn interval_parse_and_flags() {
        let i = iv("(0,1/2]");
        assert!(i.lo_open() && !i.hi_open());
        assert!(!i.contains(&Rational::zero()));
        assert!(i.contains(&q("1/2")));
        assert_eq!(i.to_string(), "(0/1,1/2]");
        assert!("(1/2,1/2)".parse::<RationalInterval>().is_err());
        assert!("[1,0]".parse::<RationalInterval>().is_err());
        assert!(iv("[1/2,1/2]").is_point());
    }

    #[test]
    fn normalize_examples() {
        let u = normalize_union(vec![]);
        assert!(u.is_empty());
        assert_eq!(measure(&u), Rational::zero());

        let u = normalize_union(vec![iv("[0,1/2]"), iv("[1/4,3/4]")]);
        assert_eq!(u.parts(), &[iv("[0,3/4]")]);
        assert_eq!(measure(&u), q("3/4"));

        let u = normalize_union(vec![iv("[0,1/4]"), iv("[1/2,5/8]"), iv("[1/8,3/8]")]);
        assert_eq!(u.parts(), &[iv("[0,3/8]"), iv("[1/2,5/8]")]);
        assert_eq!(measure(&u), q("1/2"));
    }

    #[test]
    fn touching_open_parts_stay_separate() {
        let u = normalize_union(vec![iv("(0,1/2)"), iv("(1/2,1)")]);
        assert_eq!(u.parts().len(), 2);
        assert!(!u.contains(&q("1/2")));
        let u = normalize_union(vec![iv("(0,1/2)"), iv("[1/2,1)")]);
        assert_eq!(u.parts(), &[iv("(0,1)")]);
    }

    #[test]
    fn measure_examples() {
        assert_eq!(
            measure(&normalize_union(vec![iv("[0,1]")])),
            Rational::one()
        );
        let u = normalize_union(vec![iv("[0,1/3]"), iv("[1/2,2/3]")]);
        assert_eq!(measure(&u), q("1/2"));
    }

    #[test]
    fn coverage_counts_overlaps() {
        let unions: Vec<IntervalUnion> = (1..=8)
            .map(|m| {
                IntervalUnion::single(RationalInterval::open(Rational::zero(), Rational::pow2(-m)))
            })
            .collect();
        let twice = coverage_at_least(&unions, 2);
        assert_eq!(twice.parts(), &[iv("(0,1/4)")]);
        let once = coverage_at_least(&unions, 1);
        assert_eq!(once.parts(), &[iv("(0,1/2)")]);
    }

    #[test]
    fn coverage_respects_closed_points() {
        let a = IntervalUnion::single(iv("[0,1/2]"));
        let b = IntervalUnion::single(iv("[1/2,1]"));
        let both = coverage_at_least(&[a, b], 2);
        assert_eq!(both.parts(), &[iv("[1/2,1/2]")]);
        assert_eq!(both.measure(), Rational::zero());
    }
}
