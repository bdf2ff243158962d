//! Computable reals as Cauchy-name oracles.
//!
//! A [`CauchyName`] answers a precision query `n` with a rational `q_n`
//! such that `|q_k - q_n| ≤ 2^-n` for every `k ≥ n`. The value named is the
//! limit, which is then within `2^-n` of every `q_n`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::numeric::{Rational, RationalInterval};

type ApproxFn = dyn Fn(u32) -> Rational + Send + Sync;

/// A query-able approximation oracle for a real number.
#[derive(Clone)]
pub struct CauchyName {
    approx: Arc<ApproxFn>,
    label: String,
    // Known limit for eventually constant names (constants, scripts).
    limit: Option<Rational>,
}

/// Outcome of comparing two names at a fixed precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comparison {
    Less,
    Greater,
    Indistinguishable,
}

/// A sampled pair `(n, k)` at which the Cauchy contract fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractViolation {
    pub n: u32,
    pub k: u32,
    pub approx_n: Rational,
    pub approx_k: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RealError {
    #[error("scripted name needs at least one value")]
    EmptyScript,
    #[error("declared bound {bound} is past the last scripted index {last}")]
    BoundPastScript { bound: usize, last: usize },
}

impl CauchyName {
    /// Wraps an arbitrary approximation map. The caller vouches for purity
    /// and for the Cauchy contract; [`CauchyName::check_contract`] samples it.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(u32) -> Rational + Send + Sync + 'static,
    {
        CauchyName {
            approx: Arc::new(f),
            label: label.into(),
            limit: None,
        }
    }

    /// The constant name `q, q, q, …`.
    pub fn constant(q: Rational) -> Self {
        let value = q.clone();
        CauchyName {
            approx: Arc::new(move |_| value.clone()),
            label: format!("const({})", q),
            limit: Some(q),
        }
    }

    /// A scripted name: `approx(n) = values[min(n, bound)]`.
    ///
    /// Scripts may deliberately break the contract (non-computable fixtures);
    /// nothing is checked here.
    pub fn scripted(values: Vec<Rational>, bound: usize) -> Result<Self, RealError> {
        if values.is_empty() {
            return Err(RealError::EmptyScript);
        }
        if bound >= values.len() {
            return Err(RealError::BoundPastScript {
                bound,
                last: values.len() - 1,
            });
        }
        let limit = values[bound].clone();
        let values: Arc<[Rational]> = values.into();
        Ok(CauchyName {
            approx: Arc::new(move |n| values[(n as usize).min(bound)].clone()),
            label: format!("script(→{})", limit),
            limit: Some(limit),
        })
    }

    /// `√2` by rational Newton iteration from above, stopped once the
    /// bracket `[2/x, x]` is narrower than `2^-(n+1)`.
    pub fn newton_sqrt2() -> Self {
        CauchyName::from_fn("newton_sqrt2", |n| {
            let two = Rational::from_integer(2);
            let tol = Rational::pow2(-(n as i64) - 1);
            let mut x = Rational::new(3, 2);
            loop {
                let lower = &two / &x;
                if &x - &lower <= tol {
                    return x;
                }
                x = (&x + &lower).half();
            }
        })
    }

    pub fn approx(&self, n: u32) -> Rational {
        (self.approx)(n)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The exact limit, known only for eventually constant names.
    pub fn exact_value(&self) -> Option<&Rational> {
        self.limit.as_ref()
    }

    /// The closed window `[q_n - 2^-n, q_n + 2^-n]`, which contains the limit.
    pub fn window(&self, n: u32) -> RationalInterval {
        RationalInterval::ball(&self.approx(n), &Rational::pow2(-(n as i64)))
    }

    /// Window at precision `n`, collapsed to a point when the limit is known.
    pub fn certified_window(&self, n: u32) -> RationalInterval {
        match &self.limit {
            Some(q) => RationalInterval::point(q.clone()),
            None => self.window(n),
        }
    }

    pub fn add(&self, other: &CauchyName) -> CauchyName {
        let (x, y) = (self.clone(), other.clone());
        let limit = match (&self.limit, &other.limit) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        CauchyName {
            approx: Arc::new(move |n| x.approx(n + 1) + y.approx(n + 1)),
            label: format!("({} + {})", self.label, other.label),
            limit,
        }
    }

    pub fn neg(&self) -> CauchyName {
        let x = self.clone();
        CauchyName {
            approx: Arc::new(move |n| -x.approx(n)),
            label: format!("-{}", self.label),
            limit: self.limit.as_ref().map(|q| -q),
        }
    }

    pub fn sub(&self, other: &CauchyName) -> CauchyName {
        self.add(&other.neg())
            .with_label(format!("({} - {})", self.label, other.label))
    }

    /// Product, queried at `n + 2 + ⌈log2(1 + |x_0| + |y_0|)⌉`.
    ///
    /// Every `|x_k| ≤ |x_0| + 1`, so the product of approximations moves by
    /// at most `(|x_0| + |y_0| + 2)·2^-j` past index `j`, which is at most
    /// `2^-(n+1)` at the chosen shift.
    pub fn mul(&self, other: &CauchyName) -> CauchyName {
        let (x, y) = (self.clone(), other.clone());
        let magnitude = Rational::one() + x.approx(0).abs() + y.approx(0).abs();
        let shift = 2 + magnitude.ceil_log2_abs();
        let limit = match (&self.limit, &other.limit) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        CauchyName {
            approx: Arc::new(move |n| x.approx(n + shift) * y.approx(n + shift)),
            label: format!("({} * {})", self.label, other.label),
            limit,
        }
    }

    /// Samples `|q_k - q_n| ≤ 2^-n` for all `n ≤ k ≤ max_n`.
    pub fn check_contract(&self, max_n: u32) -> Result<(), ContractViolation> {
        let values: Vec<Rational> = (0..=max_n).map(|n| self.approx(n)).collect();
        for n in 0..=max_n {
            let tol = Rational::pow2(-(n as i64));
            for k in n..=max_n {
                if (&values[k as usize] - &values[n as usize]).abs() > tol {
                    return Err(ContractViolation {
                        n,
                        k,
                        approx_n: values[n as usize].clone(),
                        approx_k: values[k as usize].clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CauchyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CauchyName")
            .field("label", &self.label)
            .field("limit", &self.limit)
            .finish()
    }
}

/// Compares two names using only their `n`-th approximations.
///
/// `Less` iff `x_n + 2^-n < y_n - 2^-n`; `Indistinguishable` whenever the
/// two windows overlap. Equal reals are never separated.
///
/// When both approximations are already the exact limits the windows may
/// touch: the values are the centres, which then differ by `2^-n+1`.
pub fn compare_at(x: &CauchyName, y: &CauchyName, n: u32) -> Comparison {
    let eps = Rational::pow2(-(n as i64));
    let (a, b) = (x.approx(n), y.approx(n));
    let touching_ok = x.limit.as_ref() == Some(&a) && y.limit.as_ref() == Some(&b);
    let separated = |lo: &Rational, hi: &Rational| {
        let (l, h) = (lo + &eps, hi - &eps);
        l < h || (touching_ok && l == h)
    };
    if separated(&a, &b) {
        Comparison::Less
    } else if separated(&b, &a) {
        Comparison::Greater
    } else {
        Comparison::Indistinguishable
    }
}

type ThetaFn = dyn Fn(&Rational) -> Rational + Send + Sync;

/// A modulus of uniform continuity `θ`: `|x - y| ≤ θ(ε)` implies
/// `|f(x) - f(y)| ≤ ε`.
#[derive(Clone)]
pub struct ModulusFunction {
    theta: Arc<ThetaFn>,
    label: String,
}

impl ModulusFunction {
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Rational) -> Rational + Send + Sync + 'static,
    {
        ModulusFunction {
            theta: Arc::new(f),
            label: label.into(),
        }
    }

    /// `θ(ε) = c·ε` for a positive constant `c`.
    pub fn linear(c: Rational) -> Self {
        let label = format!("{}·ε", c);
        ModulusFunction::from_fn(label, move |eps| &c * eps)
    }

    /// The modulus of a Lipschitz function with constant `lip`.
    pub fn lipschitz(lip: &Rational) -> Self {
        if lip.is_zero() {
            ModulusFunction::from_fn("∞ (constant)", |_| Rational::one())
        } else {
            ModulusFunction::linear(Rational::one() / lip)
        }
    }

    pub fn apply(&self, eps: &Rational) -> Rational {
        (self.theta)(eps)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Least `m` with `2^-m ≤ θ(2^-n)`.
    pub fn precision_for(&self, n: u32) -> u32 {
        let delta = self.apply(&Rational::pow2(-(n as i64)));
        let mut m = 0u32;
        while Rational::pow2(-(m as i64)) > delta {
            m += 1;
        }
        m
    }
}

impl fmt::Debug for ModulusFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModulusFunction({})", self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn constant_names() {
        assert_eq!(CauchyName::constant(q("1/3")).approx(10), q("1/3"));
        assert_eq!(
            CauchyName::constant(Rational::zero()).approx(3),
            Rational::zero()
        );
        assert_eq!(CauchyName::constant(q("7/8")).approx(0), q("7/8"));
    }

    #[test]
    fn add_constants() {
        let s = CauchyName::constant(q("1/3")).add(&CauchyName::constant(q("1/6")));
        assert_eq!(s.approx(5), q("1/2"));
        assert_eq!(s.exact_value(), Some(&q("1/2")));
    }

    #[test]
    fn add_zero_tracks_input() {
        let x = CauchyName::newton_sqrt2();
        let s = x.add(&CauchyName::constant(Rational::zero()));
        for n in 0..16 {
            assert!((s.approx(n) - x.approx(n)).abs() <= Rational::pow2(-(n as i64)));
        }
    }

    #[test]
    fn sqrt2_doubled() {
        let x = CauchyName::newton_sqrt2();
        let v = x.add(&x).approx(10);
        // Oracle: (v/2)^2 must land in [2 - 2^-7, 2 + 2^-7].
        let half = v.half();
        let sq = &half * &half;
        let two = Rational::from_integer(2);
        assert!(sq >= &two - Rational::pow2(-7) && sq <= &two + Rational::pow2(-7));
    }

    #[test]
    fn compare_examples() {
        let zero = CauchyName::constant(Rational::zero());
        let one = CauchyName::constant(Rational::one());
        assert_eq!(compare_at(&zero, &one, 1), Comparison::Less);
        let third = CauchyName::constant(q("1/3"));
        for n in [0, 5, 30] {
            assert_eq!(compare_at(&third, &third, n), Comparison::Indistinguishable);
        }
        let nudged = CauchyName::constant(q("1/3") + Rational::pow2(-8));
        assert_eq!(
            compare_at(&third, &nudged, 4),
            Comparison::Indistinguishable
        );
        assert_eq!(compare_at(&third, &nudged, 12), Comparison::Less);
        assert_eq!(compare_at(&nudged, &third, 12), Comparison::Greater);
    }

    #[test]
    fn scripted_names_repeat_past_bound() {
        let name = CauchyName::scripted(alloc::vec![q("0"), q("1/2"), q("3/4")], 1).unwrap();
        assert_eq!(name.approx(0), q("0"));
        assert_eq!(name.approx(7), q("1/2"));
        assert_eq!(name.exact_value(), Some(&q("1/2")));
        assert!(CauchyName::scripted(alloc::vec![], 0).is_err());
        assert!(CauchyName::scripted(alloc::vec![q("1")], 1).is_err());
    }

    #[test]
    fn broken_script_is_caught() {
        let name = CauchyName::scripted(alloc::vec![q("0"), q("1"), q("0")], 2).unwrap();
        let v = name.check_contract(4).unwrap_err();
        assert_eq!((v.n, v.k), (1, 2));
    }

    #[test]
    fn modulus_precision() {
        let theta = ModulusFunction::linear(q("1/2"));
        assert_eq!(theta.apply(&q("1/4")), q("1/8"));
        assert_eq!(theta.precision_for(3), 4);
        assert_eq!(ModulusFunction::lipschitz(&q("2")).precision_for(0), 1);
    }
}
