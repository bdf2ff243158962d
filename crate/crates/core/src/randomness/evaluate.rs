//! Membership of a named real in test components, by window refinement.

use alloc::vec::Vec;
use core::fmt;

use super::{TestFamily, TestKind};
use crate::numeric::{IntervalUnion, RationalInterval};
use crate::real::CauchyName;

/// Finest precision queried before a component is left undecided.
pub const DEFAULT_PRECISION: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    Captured,
    Escaped,
    UndecidedAtDepth,
}

impl Membership {
    pub fn as_str(&self) -> &'static str {
        match self {
            Membership::Captured => "CAPTURED",
            Membership::Escaped => "ESCAPED",
            Membership::UndecidedAtDepth => "UNDECIDED_AT_DEPTH",
        }
    }
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentVerdict {
    pub m: u32,
    pub result: Membership,
    /// The part of the component that contains the whole window.
    pub witness: Option<RationalInterval>,
    /// The window that decided the verdict (the last one tried if undecided).
    pub window: RationalInterval,
}

/// How hits are read for each kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Fails iff captured by every component.
    Intersection,
    /// Passes iff in only finitely many components.
    FinitelyMany,
    /// Passes iff escaping almost every final component.
    AlmostEvery,
    /// Passes iff escaping some final component.
    SomeEscape,
}

impl Convention {
    pub fn of(kind: TestKind) -> Self {
        match kind {
            TestKind::Solovay => Convention::FinitelyMany,
            TestKind::Demuth => Convention::AlmostEvery,
            TestKind::WeakDemuth => Convention::SomeEscape,
            _ => Convention::Intersection,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::Intersection => "intersection",
            Convention::FinitelyMany => "finitely-many",
            Convention::AlmostEvery => "almost-every",
            Convention::SomeEscape => "some-escape",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    FailsToDepth,
    PassesToDepth,
    Undecided,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::FailsToDepth => "FAILS_TO_DEPTH",
            Outcome::PassesToDepth => "PASSES_TO_DEPTH",
            Outcome::Undecided => "UNDECIDED",
        }
    }
}

/// Finite-depth surrogate for the kind's passing convention.
///
/// For the intersection and some-escape conventions a single escape decides
/// a pass. For the tail conventions only the deepest component considered
/// is read: a hit there counts as failing to depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub convention: Convention,
    pub considered: usize,
    pub hits: usize,
    pub escapes: usize,
    pub undecided: usize,
    pub first_escape: Option<u32>,
    pub last_hit: Option<u32>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub kind: TestKind,
    pub components: Vec<ComponentVerdict>,
    pub summary: Summary,
}

pub fn evaluate(t: &TestFamily, z: &CauchyName, depth: usize) -> Evaluation {
    evaluate_with_precision(t, z, depth, DEFAULT_PRECISION)
}

/// Evaluates the final versions of the first `depth` components.
pub fn evaluate_with_precision(
    t: &TestFamily,
    z: &CauchyName,
    depth: usize,
    precision: u32,
) -> Evaluation {
    let components: Vec<ComponentVerdict> = t
        .finals()
        .iter()
        .take(depth)
        .enumerate()
        .map(|(i, u)| member(u, t.index_of(i), z, precision))
        .collect();
    let summary = summarize(Convention::of(t.kind), &components);
    Evaluation {
        kind: t.kind,
        components,
        summary,
    }
}

fn member(u: &IntervalUnion, m: u32, z: &CauchyName, precision: u32) -> ComponentVerdict {
    if let Some(x) = z.exact_value() {
        let window = RationalInterval::point(x.clone());
        return match u.part_containing(x) {
            Some(part) => ComponentVerdict {
                m,
                result: Membership::Captured,
                witness: Some(part.clone()),
                window,
            },
            None => ComponentVerdict {
                m,
                result: Membership::Escaped,
                witness: None,
                window,
            },
        };
    }
    let mut window = z.window(0);
    for p in 0..=precision {
        window = z.window(p);
        if let Some(part) = u.part_covering(&window) {
            return ComponentVerdict {
                m,
                result: Membership::Captured,
                witness: Some(part.clone()),
                window,
            };
        }
        if !u.intersects(&window) {
            return ComponentVerdict {
                m,
                result: Membership::Escaped,
                witness: None,
                window,
            };
        }
    }
    ComponentVerdict {
        m,
        result: Membership::UndecidedAtDepth,
        witness: None,
        window,
    }
}

fn summarize(convention: Convention, verdicts: &[ComponentVerdict]) -> Summary {
    let count = |r: Membership| verdicts.iter().filter(|v| v.result == r).count();
    let (hits, escapes, undecided) = (
        count(Membership::Captured),
        count(Membership::Escaped),
        count(Membership::UndecidedAtDepth),
    );
    let first_escape = verdicts
        .iter()
        .find(|v| v.result == Membership::Escaped)
        .map(|v| v.m);
    let last_hit = verdicts
        .iter()
        .rev()
        .find(|v| v.result == Membership::Captured)
        .map(|v| v.m);
    let outcome = match convention {
        Convention::Intersection | Convention::SomeEscape => {
            if escapes > 0 {
                Outcome::PassesToDepth
            } else if undecided == 0 && hits > 0 {
                Outcome::FailsToDepth
            } else {
                Outcome::Undecided
            }
        }
        Convention::FinitelyMany | Convention::AlmostEvery => {
            match verdicts.last().map(|v| v.result) {
                Some(Membership::Captured) => Outcome::FailsToDepth,
                Some(Membership::Escaped) => Outcome::PassesToDepth,
                _ => Outcome::Undecided,
            }
        }
    };
    Summary {
        convention,
        considered: verdicts.len(),
        hits,
        escapes,
        undecided,
        first_escape,
        last_hit,
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::ml_fixture;
    use super::*;
    use crate::numeric::Rational;

    #[test]
    fn third_in_ml_fixture() {
        let t = ml_fixture(6);
        let e = evaluate(&t, &CauchyName::constant(Rational::new(1, 3)), 6);
        let results: Vec<Membership> = e.components.iter().map(|v| v.result).collect();
        assert_eq!(results[0], Membership::Captured);
        assert!(results[1..].iter().all(|r| *r == Membership::Escaped));
        assert_eq!(e.summary.outcome, Outcome::PassesToDepth);
        assert_eq!(e.summary.first_escape, Some(2));
    }

    #[test]
    fn zero_sits_on_open_endpoint() {
        let e = evaluate(&ml_fixture(6), &CauchyName::constant(Rational::zero()), 6);
        assert!(e.components.iter().all(|v| v.result == Membership::Escaped));
    }

    #[test]
    fn windows_refine_for_irrationals() {
        let x = CauchyName::newton_sqrt2().sub(&CauchyName::constant(Rational::one()));
        let e = evaluate(&ml_fixture(3), &x, 3);
        // √2 - 1 ≈ 0.414 lies in (0,1/2) only.
        let results: Vec<Membership> = e.components.iter().map(|v| v.result).collect();
        assert_eq!(
            results,
            [
                Membership::Captured,
                Membership::Escaped,
                Membership::Escaped
            ]
        );
        let w = e.components[0].witness.as_ref().unwrap();
        assert!(w.contains_interval(&e.components[0].window));
    }

    #[test]
    fn undecided_on_boundary() {
        // A name converging to 1/2 from below by exactly 2^-n never settles
        // against the open interval (0,1/2) within a small budget.
        let x = CauchyName::from_fn("below half", |n| {
            Rational::new(1, 2) - Rational::pow2(-(n as i64) - 1)
        });
        let e = evaluate_with_precision(&ml_fixture(1), &x, 1, 10);
        assert_eq!(e.components[0].result, Membership::UndecidedAtDepth);
        assert_eq!(e.summary.outcome, Outcome::Undecided);
    }
}
