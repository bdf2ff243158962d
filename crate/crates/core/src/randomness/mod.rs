//! Finite-stage randomness tests of eight kinds, exact bound checking,
//! membership evaluation and the converters between kinds.
//!
//! Component `m` of a family lives at `components[m - offset]` and is a list
//! of versions; only Demuth-style tests have more than one. Every verdict is
//! a finite-depth surrogate for the infinite passing conventions.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::numeric::{normalize_union, IntervalUnion, Rational, RationalInterval};

mod convert;
mod evaluate;
mod pi1;

pub use convert::{
    interval_sequence_to_schnorr, schnorr_to_interval_sequence, solovay_to_ml, ConvertError,
};
pub use evaluate::{
    evaluate, evaluate_with_precision, ComponentVerdict, Convention, Evaluation, Membership,
    Outcome, Summary, DEFAULT_PRECISION,
};
pub use pi1::{build_hop_sets, build_pi1_ml_test, pi1_residual, HopError, Pi1Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TestKind {
    Ml,
    Schnorr,
    Solovay,
    FinitelyBounded,
    IntervalSequence,
    Pi1,
    Demuth,
    WeakDemuth,
}

impl TestKind {
    pub const ALL: [TestKind; 8] = [
        TestKind::Ml,
        TestKind::Schnorr,
        TestKind::Solovay,
        TestKind::FinitelyBounded,
        TestKind::IntervalSequence,
        TestKind::Pi1,
        TestKind::Demuth,
        TestKind::WeakDemuth,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::Ml => "ML",
            TestKind::Schnorr => "SCHNORR",
            TestKind::Solovay => "SOLOVAY",
            TestKind::FinitelyBounded => "FINITELY_BOUNDED",
            TestKind::IntervalSequence => "INTERVAL_SEQUENCE",
            TestKind::Pi1 => "PI1",
            TestKind::Demuth => "DEMUTH",
            TestKind::WeakDemuth => "WEAK_DEMUTH",
        }
    }

    /// Kinds this one may be validated as, itself included.
    pub fn weakenings(&self) -> &'static [TestKind] {
        match self {
            TestKind::Schnorr => &[TestKind::Schnorr, TestKind::Ml],
            TestKind::FinitelyBounded => &[TestKind::FinitelyBounded, TestKind::Ml],
            TestKind::Pi1 => &[TestKind::Pi1, TestKind::Ml],
            TestKind::Ml => &[TestKind::Ml],
            TestKind::Solovay => &[TestKind::Solovay],
            TestKind::IntervalSequence => &[TestKind::IntervalSequence],
            TestKind::Demuth => &[TestKind::Demuth],
            TestKind::WeakDemuth => &[TestKind::WeakDemuth],
        }
    }

    /// Kinds whose components obey `λ(G_m) ≤ 2^-m`.
    pub fn has_ml_bound(&self) -> bool {
        !matches!(self, TestKind::Solovay)
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown test kind {0:?}")]
pub struct UnknownKind(pub String);

impl FromStr for TestKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase().replace('-', "_");
        TestKind::ALL
            .iter()
            .find(|k| k.as_str() == t)
            .copied()
            .ok_or_else(|| UnknownKind(s.into()))
    }
}

/// One row `(Q^m_r(k))_k` of an interval-sequence test with its excision set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalBlock {
    pub m: u32,
    pub r: u32,
    pub intervals: Vec<RationalInterval>,
    pub excised: BTreeSet<usize>,
}

impl IntervalBlock {
    /// `∪{Q^m_r(k) : k ∉ E^m_r}`.
    pub fn kept(&self) -> IntervalUnion {
        normalize_union(
            self.intervals
                .iter()
                .enumerate()
                .filter(|(k, _)| !self.excised.contains(k))
                .map(|(_, i)| i.clone())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KindData {
    Plain,
    Schnorr {
        declared: Vec<Rational>,
    },
    Solovay {
        bound: Rational,
    },
    IntervalSequence {
        blocks: Vec<IntervalBlock>,
    },
    Pi1 {
        q: Vec<Rational>,
        c: Vec<BTreeSet<usize>>,
    },
    Demuth {
        budgets: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestFamily {
    pub kind: TestKind,
    pub label: String,
    /// Index `m` of the first component.
    pub offset: u32,
    pub components: Vec<Vec<IntervalUnion>>,
    pub data: KindData,
    /// Declared universal; never verified.
    pub universal: bool,
    /// Relative to the halting problem, as produced by the interval-sequence bridge.
    pub relativized: bool,
}

impl TestFamily {
    /// A single-version family with no kind payload.
    pub fn plain(kind: TestKind, offset: u32, components: Vec<IntervalUnion>) -> Self {
        TestFamily {
            kind,
            label: String::new(),
            offset,
            components: components.into_iter().map(|c| vec![c]).collect(),
            data: KindData::Plain,
            universal: false,
            relativized: false,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn schnorr(offset: u32, components: Vec<IntervalUnion>, declared: Vec<Rational>) -> Self {
        TestFamily {
            data: KindData::Schnorr { declared },
            ..Self::plain(TestKind::Schnorr, offset, components)
        }
    }

    pub fn solovay(offset: u32, components: Vec<IntervalUnion>, bound: Rational) -> Self {
        TestFamily {
            data: KindData::Solovay { bound },
            ..Self::plain(TestKind::Solovay, offset, components)
        }
    }

    /// Components are the failure classes `G_m = ∪_r ∪_{k∉E^m_r} Q^m_r(k)`
    /// for `m` from 1 up to the largest block index.
    pub fn interval_sequence(blocks: Vec<IntervalBlock>) -> Self {
        let top = blocks.iter().map(|b| b.m).max().unwrap_or(0);
        let components = (1..=top)
            .map(|m| failure_class(&blocks, m, u32::MAX))
            .collect();
        TestFamily {
            data: KindData::IntervalSequence { blocks },
            ..Self::plain(TestKind::IntervalSequence, 1, components)
        }
    }

    /// Demuth-style family; each component starts with the given versions.
    pub fn demuth(
        kind: TestKind,
        offset: u32,
        versions: Vec<Vec<IntervalUnion>>,
        budgets: Vec<usize>,
    ) -> Self {
        TestFamily {
            kind,
            label: String::new(),
            offset,
            components: versions,
            data: KindData::Demuth { budgets },
            universal: false,
            relativized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn index_of(&self, i: usize) -> u32 {
        self.offset + i as u32
    }

    /// The version in force for component `m`: the last one, or empty.
    pub fn final_component(&self, m: u32) -> IntervalUnion {
        m.checked_sub(self.offset)
            .and_then(|i| self.components.get(i as usize))
            .and_then(|v| v.last())
            .cloned()
            .unwrap_or_else(IntervalUnion::empty)
    }

    pub fn finals(&self) -> Vec<IntervalUnion> {
        self.components
            .iter()
            .map(|v| v.last().cloned().unwrap_or_else(IntervalUnion::empty))
            .collect()
    }

    pub fn budget(&self, m: u32) -> Option<usize> {
        match &self.data {
            KindData::Demuth { budgets } => {
                let i = m.checked_sub(self.offset)? as usize;
                budgets.get(i).or_else(|| budgets.last()).copied()
            }
            _ => None,
        }
    }
}

/// `∪_{r ≤ max_r} ∪_{k∉E^m_r} Q^m_r(k)`.
pub fn failure_class(blocks: &[IntervalBlock], m: u32, max_r: u32) -> IntervalUnion {
    let parts = blocks
        .iter()
        .filter(|b| b.m == m && b.r <= max_r)
        .flat_map(|b| b.kept().parts().to_vec())
        .collect();
    normalize_union(parts)
}

/// The first bound a family breaks, with the exact quantities involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MeasureBound {
        m: u32,
        version: usize,
        measure: Rational,
        bound: Rational,
    },
    DeclaredMismatch {
        m: u32,
        declared: Rational,
        actual: Rational,
    },
    MissingDeclared {
        m: u32,
    },
    SolovaySum {
        through_m: u32,
        total: Rational,
        bound: Rational,
    },
    BlockBound {
        m: u32,
        r: u32,
        measure: Rational,
        bound: Rational,
    },
    ClassBound {
        m: u32,
        measure: Rational,
        bound: Rational,
    },
    Pi1Residual {
        m: u32,
        measure: Rational,
        bound: Rational,
    },
    VersionBudget {
        m: u32,
        versions: usize,
        budget: usize,
    },
    MissingBudget {
        m: u32,
    },
    KindMismatch {
        kind: TestKind,
        requested: TestKind,
    },
    BadData(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MeasureBound {
                m,
                version,
                measure,
                bound,
            } => {
                write!(
                    f,
                    "m = {} (version {}): measure {} > {}",
                    m, version, measure, bound
                )
            }
            Violation::DeclaredMismatch {
                m,
                declared,
                actual,
            } => {
                write!(
                    f,
                    "m = {}: declared measure {} but actual {}",
                    m, declared, actual
                )
            }
            Violation::MissingDeclared { m } => write!(f, "m = {}: no declared measure", m),
            Violation::SolovaySum {
                through_m,
                total,
                bound,
            } => {
                write!(
                    f,
                    "measures through m = {} sum to {} > {}",
                    through_m, total, bound
                )
            }
            Violation::BlockBound {
                m,
                r,
                measure,
                bound,
            } => write!(
                f,
                "m = {}, r = {}: kept measure {} > {}",
                m, r, measure, bound
            ),
            Violation::ClassBound { m, measure, bound } => {
                write!(f, "m = {}: class measure {} > {}", m, measure, bound)
            }
            Violation::Pi1Residual { m, measure, bound } => {
                write!(
                    f,
                    "m = {}: residual measure {} is not < {}",
                    m, measure, bound
                )
            }
            Violation::VersionBudget {
                m,
                versions,
                budget,
            } => {
                write!(
                    f,
                    "m = {}: {} versions exceed budget {}",
                    m, versions, budget
                )
            }
            Violation::MissingBudget { m } => write!(f, "m = {}: no change budget", m),
            Violation::KindMismatch { kind, requested } => {
                write!(f, "a {} test cannot be read as {}", kind, requested)
            }
            Violation::BadData(s) => f.write_str(s),
        }
    }
}

/// Checks every bound of the family's own kind.
pub fn validate(t: &TestFamily) -> Result<(), Violation> {
    validate_as(t, t.kind)
}

/// Checks the family under `kind`, which must be one of its weakenings.
pub fn validate_as(t: &TestFamily, kind: TestKind) -> Result<(), Violation> {
    if !t.kind.weakenings().contains(&kind) {
        return Err(Violation::KindMismatch {
            kind: t.kind,
            requested: kind,
        });
    }
    if kind.has_ml_bound() {
        check_ml_bound(t)?;
    }
    match (kind, &t.data) {
        (TestKind::Ml | TestKind::FinitelyBounded, _) => Ok(()),
        (TestKind::Schnorr, KindData::Schnorr { declared }) => {
            for (i, versions) in t.components.iter().enumerate() {
                let m = t.index_of(i);
                let declared = declared.get(i).ok_or(Violation::MissingDeclared { m })?;
                let actual = versions
                    .last()
                    .map(IntervalUnion::measure)
                    .unwrap_or_default();
                if *declared != actual {
                    return Err(Violation::DeclaredMismatch {
                        m,
                        declared: declared.clone(),
                        actual,
                    });
                }
            }
            Ok(())
        }
        (TestKind::Solovay, KindData::Solovay { bound }) => {
            let mut total = Rational::zero();
            for (i, u) in t.finals().iter().enumerate() {
                total = total + u.measure();
                if total > *bound {
                    return Err(Violation::SolovaySum {
                        through_m: t.index_of(i),
                        total,
                        bound: bound.clone(),
                    });
                }
            }
            Ok(())
        }
        (TestKind::IntervalSequence, KindData::IntervalSequence { blocks }) => {
            check_block_bounds(blocks)?;
            let top = blocks.iter().map(|b| b.m).max().unwrap_or(0);
            for m in 1..=top {
                let measure = failure_class(blocks, m, u32::MAX).measure();
                let bound = Rational::pow2(-(m as i64));
                if measure > bound {
                    return Err(Violation::ClassBound { m, measure, bound });
                }
            }
            Ok(())
        }
        (TestKind::Pi1, KindData::Pi1 { q, c }) => {
            for (m, cm) in c.iter().enumerate() {
                let measure = pi1_residual(q, cm, q.len());
                let bound = Rational::pow2(-(m as i64));
                if measure >= bound {
                    return Err(Violation::Pi1Residual {
                        m: m as u32,
                        measure,
                        bound,
                    });
                }
            }
            Ok(())
        }
        (TestKind::Demuth | TestKind::WeakDemuth, KindData::Demuth { .. }) => {
            for (i, versions) in t.components.iter().enumerate() {
                let m = t.index_of(i);
                let budget = t.budget(m).ok_or(Violation::MissingBudget { m })?;
                if versions.len() > budget {
                    return Err(Violation::VersionBudget {
                        m,
                        versions: versions.len(),
                        budget,
                    });
                }
            }
            Ok(())
        }
        (kind, _) => Err(Violation::BadData(alloc::format!(
            "{} test without its {} payload",
            kind,
            kind
        ))),
    }
}

fn check_ml_bound(t: &TestFamily) -> Result<(), Violation> {
    for (i, versions) in t.components.iter().enumerate() {
        let m = t.index_of(i);
        let bound = Rational::pow2(-(m as i64));
        for (version, u) in versions.iter().enumerate() {
            let measure = u.measure();
            if measure > bound {
                return Err(Violation::MeasureBound {
                    m,
                    version,
                    measure,
                    bound,
                });
            }
        }
    }
    Ok(())
}

/// Block bounds: `λ(∪{Q^m_r(k) : k ∉ E^m_r}) ≤ 2^-(m+r)` with `m, r ≥ 1`.
pub fn check_block_bounds(blocks: &[IntervalBlock]) -> Result<(), Violation> {
    for b in blocks {
        if b.m == 0 || b.r == 0 {
            return Err(Violation::BadData(alloc::format!(
                "block indices start at 1, got m = {}, r = {}",
                b.m,
                b.r
            )));
        }
        let measure = b.kept().measure();
        let bound = Rational::pow2(-((b.m + b.r) as i64));
        if measure > bound {
            return Err(Violation::BlockBound {
                m: b.m,
                r: b.r,
                measure,
                bound,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UpdateError {
    #[error("only Demuth-style tests take updates, this one is {0}")]
    NotDemuth(TestKind),
    #[error("m = {m} is below the first component {offset}")]
    BelowOffset { m: u32, offset: u32 },
    #[error("m = {m} already has {versions} versions, budget {budget}")]
    BudgetExceeded {
        m: u32,
        versions: usize,
        budget: usize,
    },
    #[error("m = {m}: new version has measure {measure} > {bound}")]
    MeasureBoundViolation {
        m: u32,
        measure: Rational,
        bound: Rational,
    },
    #[error("m = {0} has no change budget")]
    MissingBudget(u32),
}

/// Appends a new version of component `m`, enforcing the change budget and
/// the measure bound.
pub fn demuth_update(
    t: &TestFamily,
    m: u32,
    version: IntervalUnion,
) -> Result<TestFamily, UpdateError> {
    if !matches!(t.kind, TestKind::Demuth | TestKind::WeakDemuth) {
        return Err(UpdateError::NotDemuth(t.kind));
    }
    let i = m.checked_sub(t.offset).ok_or(UpdateError::BelowOffset {
        m,
        offset: t.offset,
    })? as usize;
    let budget = t.budget(m).ok_or(UpdateError::MissingBudget(m))?;
    let versions = t.components.get(i).map_or(0, Vec::len);
    if versions >= budget {
        return Err(UpdateError::BudgetExceeded {
            m,
            versions: versions + 1,
            budget,
        });
    }
    let measure = version.measure();
    let bound = Rational::pow2(-(m as i64));
    if measure > bound {
        return Err(UpdateError::MeasureBoundViolation { m, measure, bound });
    }
    let mut next = t.clone();
    if next.components.len() <= i {
        next.components.resize(i + 1, Vec::new());
    }
    next.components[i].push(version);
    Ok(next)
}
