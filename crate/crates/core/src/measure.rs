//! Computable probability measures on Cantor space given by cylinder masses,
//! their distribution functions on `[0,1]`, and transport to the uniform
//! measure.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bits::{longest_cylinder_containing, BitString};
use crate::numeric::Rational;

/// Levels followed greedily when looking for an atom.
pub const ATOM_WINDOW: usize = 16;
/// Longest cylinder reported by `transport`.
pub const MAX_EMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("{0} is beyond the materialized depth {1}")]
    BeyondDepth(BitString, usize),
    #[error("Bernoulli parameter must lie in [0,1], got {0}")]
    BadParameter(Rational),
    #[error("{0} is not a dyadic rational in [0,1]")]
    NotDyadic(Rational),
    #[error("cylinder {0} has zero mass")]
    ZeroMassCylinder(BitString),
    #[error(
        "mass of {sigma} concentrates: {retained} of it stays in one cylinder {window} levels down"
    )]
    AtomSuspected {
        sigma: BitString,
        retained: Rational,
        window: usize,
    },
    #[error("measure is invalid: {0}")]
    Invalid(MeasureViolation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureRule {
    Uniform,
    /// Independent bits with `P(1) = p`.
    Bernoulli(Rational),
    /// `levels[n][i]` is the mass of the string of length `n` with index `i`.
    Table(Vec<Vec<Rational>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderMeasure {
    rule: MeasureRule,
    label: String,
}

impl CylinderMeasure {
    pub fn uniform() -> Self {
        CylinderMeasure {
            rule: MeasureRule::Uniform,
            label: "uniform".into(),
        }
    }

    pub fn bernoulli(p: Rational) -> Result<Self, MeasureError> {
        if p.is_negative() || p > Rational::one() {
            return Err(MeasureError::BadParameter(p));
        }
        let label = format!("bernoulli({})", p);
        Ok(CylinderMeasure {
            rule: MeasureRule::Bernoulli(p),
            label,
        })
    }

    /// Level `n` must hold `2^n` masses; this is not checked here.
    pub fn table(levels: Vec<Vec<Rational>>) -> Self {
        CylinderMeasure {
            rule: MeasureRule::Table(levels),
            label: "table".into(),
        }
    }

    pub fn rule(&self) -> &MeasureRule {
        &self.rule
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Deepest level with known masses, if bounded.
    pub fn depth(&self) -> Option<usize> {
        match &self.rule {
            MeasureRule::Table(levels) => Some(levels.len().saturating_sub(1)),
            _ => None,
        }
    }

    pub fn mass(&self, sigma: &BitString) -> Result<Rational, MeasureError> {
        match &self.rule {
            MeasureRule::Uniform => Ok(Rational::pow2(-(sigma.len() as i64))),
            MeasureRule::Bernoulli(p) => {
                let q = Rational::one() - p;
                Ok(sigma
                    .bits()
                    .iter()
                    .fold(Rational::one(), |acc, &b| acc * if b { p } else { &q }))
            }
            MeasureRule::Table(levels) => levels
                .get(sigma.len())
                .and_then(|l| l.get(sigma.index() as usize))
                .cloned()
                .ok_or_else(|| {
                    MeasureError::BeyondDepth(sigma.clone(), levels.len().saturating_sub(1))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureViolation {
    Root {
        mass: Rational,
    },
    Range {
        sigma: BitString,
        mass: Rational,
    },
    Additivity {
        sigma: BitString,
        mass: Rational,
        children: Rational,
    },
    Missing {
        sigma: BitString,
    },
}

impl core::fmt::Display for MeasureViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeasureViolation::Root { mass } => write!(f, "μ(ε) = {} ≠ 1", mass),
            MeasureViolation::Range { sigma, mass } => {
                write!(f, "μ({}) = {} is outside [0,1]", sigma, mass)
            }
            MeasureViolation::Additivity {
                sigma,
                mass,
                children,
            } => {
                write!(
                    f,
                    "μ({}) = {} but its children sum to {}",
                    sigma, mass, children
                )
            }
            MeasureViolation::Missing { sigma } => write!(f, "no mass for {}", sigma),
        }
    }
}

/// `μ(ε) = 1`, masses in `[0,1]`, and `μ(σ) = μ(σ0) + μ(σ1)` for `|σ| < depth`.
pub fn validate_measure(mu: &CylinderMeasure, depth: usize) -> Result<(), MeasureViolation> {
    let get = |sigma: &BitString| {
        mu.mass(sigma).map_err(|_| MeasureViolation::Missing {
            sigma: sigma.clone(),
        })
    };
    let root = get(&BitString::empty())?;
    if root != Rational::one() {
        return Err(MeasureViolation::Root { mass: root });
    }
    for n in 0..=depth as u32 {
        for sigma in BitString::all_of_length(n) {
            let mass = get(&sigma)?;
            if mass.is_negative() || mass > Rational::one() {
                return Err(MeasureViolation::Range { sigma, mass });
            }
            if (n as usize) < depth {
                let children = get(&sigma.child(false))? + get(&sigma.child(true))?;
                if children != mass {
                    return Err(MeasureViolation::Additivity {
                        sigma,
                        mass,
                        children,
                    });
                }
            }
        }
    }
    Ok(())
}

/// The binary digits of a dyadic `d ∈ [0,1)`, shortest form.
fn dyadic_digits(d: &Rational) -> Result<BitString, MeasureError> {
    let k = d
        .dyadic_exponent()
        .ok_or_else(|| MeasureError::NotDyadic(d.clone()))?;
    if d.is_negative() || *d >= Rational::one() {
        return Err(MeasureError::NotDyadic(d.clone()));
    }
    let scaled = d * &Rational::pow2(k as i64);
    let index: u64 = (&scaled.floor())
        .try_into()
        .map_err(|_| MeasureError::NotDyadic(d.clone()))?;
    Ok(BitString::from_index(index, k))
}

/// `F_μ(0.σ) = Σ_{i : σ_i = 1} μ(σ_0 … σ_{i-1} 0)`.
fn cdf_at(mu: &CylinderMeasure, sigma: &BitString) -> Result<Rational, MeasureError> {
    let mut total = Rational::zero();
    for (i, &b) in sigma.bits().iter().enumerate() {
        if b {
            total = total + mu.mass(&sigma.prefix(i).child(false))?;
        }
    }
    Ok(total)
}

/// `F_μ(d) = μ{X : 0.X < d}` at a dyadic `d ∈ [0,1]`.
pub fn cdf(mu: &CylinderMeasure, d: &Rational) -> Result<Rational, MeasureError> {
    if *d == Rational::one() {
        return Ok(Rational::one());
    }
    cdf_at(mu, &dyadic_digits(d)?)
}

/// The image `[F(0.a), F(0.a + 2^-|a|))` of the cylinder `[a)`.
fn image(mu: &CylinderMeasure, a: &BitString) -> Result<(Rational, Rational), MeasureError> {
    let lo = cdf_at(mu, a)?;
    let hi = &lo + &mu.mass(a)?;
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TransportStatus {
    Complete,
    NeedMoreInput,
}

impl TransportStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransportStatus::Complete => "COMPLETE",
            TransportStatus::NeedMoreInput => "NEED_MORE_INPUT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transport {
    pub input: BitString,
    pub lo: Rational,
    pub hi: Rational,
    /// Longest `c` whose cylinder contains `[lo, hi)`, capped at `MAX_EMIT`.
    pub output: BitString,
    pub status: TransportStatus,
}

/// Atoms of the product rules are known exactly: only `p ∈ {0, 1}` has one,
/// and every cylinder of positive mass holds it. Tables follow the heavier
/// child for `ATOM_WINDOW` levels and flag `a` when half its mass or more
/// survives; the check is skipped when a table is not that deep.
fn atom_check(mu: &CylinderMeasure, a: &BitString, mass: &Rational) -> Result<(), MeasureError> {
    match &mu.rule {
        MeasureRule::Uniform => return Ok(()),
        MeasureRule::Bernoulli(p) => {
            if p.is_zero() || *p == Rational::one() {
                return Err(MeasureError::AtomSuspected {
                    sigma: a.clone(),
                    retained: Rational::one(),
                    window: ATOM_WINDOW,
                });
            }
            return Ok(());
        }
        MeasureRule::Table(_) => {}
    }
    let window = ATOM_WINDOW;
    if mu.depth().is_some_and(|d| d < a.len() + window) {
        return Ok(());
    }
    let mut node = a.clone();
    let mut retained = mass.clone();
    for _ in 0..window {
        let (m0, m1) = (mu.mass(&node.child(false))?, mu.mass(&node.child(true))?);
        if m1 > m0 {
            node.push(true);
            retained = m1;
        } else {
            node.push(false);
            retained = m0;
        }
    }
    let ratio = retained / mass;
    if ratio >= Rational::new(1, 2) {
        return Err(MeasureError::AtomSuspected {
            sigma: a.clone(),
            retained: ratio,
            window,
        });
    }
    Ok(())
}

/// Maps the input prefix `a` through `F_μ`, which sends `μ` to the uniform
/// measure, and reports the bits of the image that are already decided.
pub fn transport(mu: &CylinderMeasure, a: &BitString) -> Result<Transport, MeasureError> {
    let (lo, hi) = image(mu, a)?;
    let mass = &hi - &lo;
    if mass.is_zero() {
        return Err(MeasureError::ZeroMassCylinder(a.clone()));
    }
    atom_check(mu, a, &mass)?;
    let output = longest_cylinder_containing(&lo, &hi, MAX_EMIT);
    let status = if output.len() >= a.len() {
        TransportStatus::Complete
    } else {
        TransportStatus::NeedMoreInput
    };
    Ok(Transport {
        input: a.clone(),
        lo,
        hi,
        output,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PushforwardCheck {
    pub tau: BitString,
    /// `Σ μ(a)` over inputs whose transport already extends `τ`.
    pub mass: Rational,
    /// `Σ μ(a)` over inputs whose transport is a proper prefix of `τ`.
    pub residual: Rational,
    pub target: Rational,
    pub passed: bool,
}

/// Checks `|Σ_{τ ⪯ c(a)} μ(a) - 2^-|τ|| ≤ residual` over inputs of length `depth`.
pub fn transport_pushforward_check(
    mu: &CylinderMeasure,
    tau: &BitString,
    depth: usize,
) -> Result<PushforwardCheck, MeasureError> {
    let transports = transport_all(mu, depth)?;
    Ok(pushforward_from(&transports, tau))
}

/// Transports of every input of length `depth`, in index order.
pub fn transport_all(mu: &CylinderMeasure, depth: usize) -> Result<Vec<Transport>, MeasureError> {
    BitString::all_of_length(depth as u32)
        .map(|a| transport(mu, &a))
        .collect()
}

/// The pushforward check against precomputed transports of one level.
pub fn pushforward_from(transports: &[Transport], tau: &BitString) -> PushforwardCheck {
    let mut mass = Rational::zero();
    let mut residual = Rational::zero();
    for t in transports {
        let w = &t.hi - &t.lo;
        if tau.is_prefix_of(&t.output) {
            mass = mass + w;
        } else if t.output.is_prefix_of(tau) {
            residual = residual + w;
        }
    }
    let target = Rational::pow2(-(tau.len() as i64));
    let passed = (&mass - &target).abs() <= residual;
    PushforwardCheck {
        tau: tau.clone(),
        mass,
        residual,
        target,
        passed,
    }
}
