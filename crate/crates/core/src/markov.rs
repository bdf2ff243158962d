//! Markov-computable functions on `[0,1]` given by finite, replayable data.
//!
//! Covers are staged enumerations of closed rational intervals. A function is
//! either polygonal, built from a cover with piecewise-linear data on each
//! interval (zero elsewhere), a truncation `[f,C]`, or a named built-in.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::BitString;
use crate::numeric::{normalize_union, Rational, RationalInterval};
use crate::real::{CauchyName, ModulusFunction};

pub const MAX_TREE_DEPTH: u32 = 16;
pub const MAX_SLOPE_GRID: u32 = 12;
pub const MAX_EXTENSION_PRECISION: u32 = 20;
/// Extra precision tried before an unmodulated hull is declared divergent.
pub const EXTENSION_REFINEMENTS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarkovError {
    #[error("bad polygon: {0}")]
    BadPolygon(String),
    #[error("bad cover data: {0}")]
    BadCover(String),
    #[error("stage_count must be at least 1")]
    NoStages,
    #[error("{what} = {requested} exceeds the budget {limit}")]
    BudgetExceeded {
        what: &'static str,
        requested: u64,
        limit: u64,
    },
    #[error("cover fails H(C): {0}")]
    CoverViolation(HViolation),
    #[error(
        "extension undefined at precision {precision}: hull {hull} never shrank below {target}"
    )]
    ExtensionUndefined {
        precision: u32,
        hull: RationalInterval,
        target: Rational,
    },
    #[error("slope bounds need w < z, got w = {w}, z = {z}")]
    BoundsOrder { w: Rational, z: Rational },
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
}

/// A staged finite enumeration of closed rational intervals.
///
/// `size_bound[k]` is the stage after which every new interval is shorter
/// than `2^-k`; indices past the end repeat the last entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StagedCover {
    pub stages: Vec<Vec<RationalInterval>>,
    pub size_bound: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HViolation {
    Overlap {
        first: RationalInterval,
        second: RationalInterval,
    },
    Size {
        k: usize,
        stage: usize,
        interval: RationalInterval,
    },
    MissingSizeBound,
}

impl fmt::Display for HViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HViolation::Overlap { first, second } => write!(f, "{} and {} overlap", first, second),
            HViolation::Size { k, stage, interval } => {
                write!(
                    f,
                    "k = {}: {} enumerated at stage {} is not shorter than 2^-{}",
                    k, interval, stage, k
                )
            }
            HViolation::MissingSizeBound => f.write_str("size_bound is empty"),
        }
    }
}

impl StagedCover {
    pub fn new(stages: Vec<Vec<RationalInterval>>, size_bound: Vec<usize>) -> Self {
        StagedCover { stages, size_bound }
    }

    pub fn empty() -> Self {
        StagedCover {
            stages: Vec::new(),
            size_bound: vec![0],
        }
    }

    /// Every interval with the stage it was enumerated at.
    pub fn enumerated(&self) -> impl Iterator<Item = (usize, &RationalInterval)> {
        self.stages
            .iter()
            .enumerate()
            .flat_map(|(s, v)| v.iter().map(move |i| (s, i)))
    }

    pub fn intervals(&self) -> Vec<RationalInterval> {
        self.enumerated().map(|(_, i)| i.clone()).collect()
    }

    pub fn size_bound_at(&self, k: usize) -> Option<usize> {
        self.size_bound
            .get(k)
            .or_else(|| self.size_bound.last())
            .copied()
    }

    /// Total length of the distinct points covered.
    pub fn measure(&self) -> Rational {
        normalize_union(self.intervals()).measure()
    }
}

/// Checks H(C): pairwise interiors disjoint, and for `k ≤ stages.len()`
/// every interval enumerated after stage `size_bound(k)` is shorter than `2^-k`.
pub fn check_h(c: &StagedCover) -> Result<(), HViolation> {
    let all: Vec<(usize, &RationalInterval)> = c.enumerated().collect();
    for (i, (_, a)) in all.iter().enumerate() {
        for (_, b) in &all[i + 1..] {
            if a.overlaps_interior(b) || (a == b && !a.is_point()) {
                return Err(HViolation::Overlap {
                    first: (*a).clone(),
                    second: (*b).clone(),
                });
            }
        }
    }
    if c.size_bound.is_empty() {
        if all.is_empty() {
            return Ok(());
        }
        return Err(HViolation::MissingSizeBound);
    }
    for k in 0..=c.stages.len() {
        let s = c.size_bound_at(k).unwrap_or(0);
        let limit = Rational::pow2(-(k as i64));
        for &(stage, interval) in &all {
            if stage > s && interval.length() >= limit {
                return Err(HViolation::Size {
                    k,
                    stage,
                    interval: interval.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Piecewise-linear data: sorted nodes, linear in between.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolygonalFunction {
    breakpoints: Vec<(Rational, Rational)>,
}

impl PolygonalFunction {
    /// Nodes must have strictly increasing x, starting at 0 and ending at 1.
    pub fn new(breakpoints: Vec<(Rational, Rational)>) -> Result<Self, MarkovError> {
        check_nodes(&breakpoints, &Rational::zero(), &Rational::one())
            .map_err(MarkovError::BadPolygon)?;
        Ok(PolygonalFunction { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(Rational, Rational)] {
        &self.breakpoints
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        interpolate(&self.breakpoints, x)
    }

    /// Largest absolute slope over the pieces.
    pub fn lipschitz(&self) -> Rational {
        self.breakpoints
            .windows(2)
            .map(|w| ((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)).abs())
            .fold(Rational::zero(), Rational::max)
    }
}

fn check_nodes(nodes: &[(Rational, Rational)], lo: &Rational, hi: &Rational) -> Result<(), String> {
    if nodes.len() < 2 && lo != hi {
        return Err(format!("need at least two nodes on [{},{}]", lo, hi));
    }
    if nodes.first().map(|n| &n.0) != Some(lo) || nodes.last().map(|n| &n.0) != Some(hi) {
        return Err(format!("nodes must start at {} and end at {}", lo, hi));
    }
    if nodes.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err("node x-coordinates must be strictly increasing".to_string());
    }
    Ok(())
}

// Linear interpolation; `x` is assumed to lie within the node range.
fn interpolate(nodes: &[(Rational, Rational)], x: &Rational) -> Rational {
    let i = nodes.partition_point(|(nx, _)| nx < x);
    if i < nodes.len() && &nodes[i].0 == x {
        return nodes[i].1.clone();
    }
    if i == 0 {
        return nodes[0].1.clone();
    }
    if i == nodes.len() {
        return nodes[i - 1].1.clone();
    }
    let (x0, y0) = &nodes[i - 1];
    let (x1, y1) = &nodes[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// One cover interval with its linear data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverPiece {
    pub interval: RationalInterval,
    pub nodes: Vec<(Rational, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Builtin {
    Identity,
    Square,
    /// `|x - c|`
    AbsOffset(Rational),
    Half,
    /// `1 - x`
    Complement,
    Constant(Rational),
}

#[derive(Debug, Clone)]
pub enum FunctionKind {
    Polygonal(PolygonalFunction),
    CoverBased {
        cover: StagedCover,
        pieces: Vec<CoverPiece>,
    },
    Truncated {
        base: Arc<MarkovFunction>,
        cover: StagedCover,
        intervals: Vec<(Rational, Rational)>,
    },
    Symbolic(Builtin),
}

#[derive(Debug, Clone)]
pub struct MarkovFunction {
    kind: FunctionKind,
    modulus: Option<ModulusFunction>,
    label: String,
}

impl MarkovFunction {
    fn symbolic(b: Builtin, theta: ModulusFunction, label: String) -> Self {
        MarkovFunction {
            kind: FunctionKind::Symbolic(b),
            modulus: Some(theta),
            label,
        }
    }

    pub fn identity() -> Self {
        Self::symbolic(
            Builtin::Identity,
            ModulusFunction::linear(Rational::one()),
            "identity".into(),
        )
    }

    pub fn square() -> Self {
        Self::symbolic(
            Builtin::Square,
            ModulusFunction::linear(Rational::new(1, 2)),
            "square".into(),
        )
    }

    pub fn abs_offset(c: Rational) -> Self {
        let label = format!("abs_offset {}", c);
        Self::symbolic(
            Builtin::AbsOffset(c),
            ModulusFunction::linear(Rational::one()),
            label,
        )
    }

    pub fn half() -> Self {
        Self::symbolic(
            Builtin::Half,
            ModulusFunction::linear(Rational::from_integer(2)),
            "half".into(),
        )
    }

    pub fn complement() -> Self {
        Self::symbolic(
            Builtin::Complement,
            ModulusFunction::linear(Rational::one()),
            "complement".into(),
        )
    }

    pub fn constant(q: Rational) -> Self {
        let label = format!("const {}", q);
        Self::symbolic(
            Builtin::Constant(q),
            ModulusFunction::lipschitz(&Rational::zero()),
            label,
        )
    }

    /// A polygonal function, with the Lipschitz modulus attached.
    pub fn polygonal(breakpoints: Vec<(Rational, Rational)>) -> Result<Self, MarkovError> {
        let p = PolygonalFunction::new(breakpoints)?;
        let theta = ModulusFunction::lipschitz(&p.lipschitz());
        Ok(MarkovFunction {
            kind: FunctionKind::Polygonal(p),
            modulus: Some(theta),
            label: "polygonal".into(),
        })
    }

    /// Piecewise-linear on each cover interval, zero off the cover.
    ///
    /// `nodes[i]` belongs to the i-th interval in enumeration order. Pieces
    /// sharing an endpoint must agree there.
    pub fn cover_based(
        cover: StagedCover,
        nodes: Vec<Vec<(Rational, Rational)>>,
    ) -> Result<Self, MarkovError> {
        let intervals = cover.intervals();
        if intervals.len() != nodes.len() {
            return Err(MarkovError::BadCover(format!(
                "{} intervals but {} node lists",
                intervals.len(),
                nodes.len()
            )));
        }
        let mut pieces = Vec::with_capacity(intervals.len());
        for (interval, nodes) in intervals.into_iter().zip(nodes) {
            let interval = interval.to_closed();
            check_nodes(&nodes, interval.lo(), interval.hi()).map_err(MarkovError::BadCover)?;
            pieces.push(CoverPiece { interval, nodes });
        }
        pieces.sort_by(|a, b| {
            a.interval
                .lo()
                .cmp(b.interval.lo())
                .then_with(|| a.interval.hi().cmp(b.interval.hi()))
        });
        for w in pieces.windows(2) {
            if w[0].interval.overlaps_interior(&w[1].interval) {
                return Err(MarkovError::BadCover(format!(
                    "{} overlaps {}",
                    w[0].interval, w[1].interval
                )));
            }
            if w[0].interval.hi() == w[1].interval.lo() {
                let left = &w[0].nodes.last().unwrap().1;
                let right = &w[1].nodes.first().unwrap().1;
                if left != right {
                    return Err(MarkovError::BadCover(format!(
                        "pieces disagree at shared endpoint {}: {} vs {}",
                        w[0].interval.hi(),
                        left,
                        right
                    )));
                }
            }
        }
        Ok(MarkovFunction {
            kind: FunctionKind::CoverBased { cover, pieces },
            modulus: None,
            label: "cover".into(),
        })
    }

    /// The standard computable function that is not uniformly continuous.
    ///
    /// `I_n = [1 - 2^-n, 1 - 2^-(n+1)]` is enumerated at stage `n` and carries
    /// a tent of height `n` at its midpoint; `f` is 0 elsewhere, including at
    /// the uncovered point 1.
    pub fn canonical_nonuc(stage_count: usize) -> Result<Self, MarkovError> {
        if stage_count == 0 {
            return Err(MarkovError::NoStages);
        }
        let mut stages = Vec::with_capacity(stage_count);
        let mut nodes = Vec::with_capacity(stage_count);
        for n in 0..stage_count {
            let i = canonical_interval(n);
            let peak = (i.midpoint(), Rational::from_integer(n as i64));
            nodes.push(vec![
                (i.lo().clone(), Rational::zero()),
                peak,
                (i.hi().clone(), Rational::zero()),
            ]);
            stages.push(vec![i]);
        }
        let cover = StagedCover::new(stages, (0..stage_count).collect());
        let mut f = Self::cover_based(cover, nodes)?;
        f.label = format!("canonical_nonuc {}", stage_count);
        Ok(f)
    }

    /// Parses a built-in name: `identity`, `square`, `half`, `complement`,
    /// `abs_offset c`, `const q`, `canonical_nonuc n`.
    pub fn from_name(name: &str) -> Result<Self, MarkovError> {
        let mut words = name.split_whitespace();
        let head = words.next().unwrap_or("");
        let arg = words.next();
        let unknown = || MarkovError::UnknownFunction(name.to_string());
        let rat = |a: Option<&str>| {
            a.and_then(|s| s.parse::<Rational>().ok())
                .ok_or_else(unknown)
        };
        let f = match head {
            "identity" => Self::identity(),
            "square" => Self::square(),
            "half" => Self::half(),
            "complement" => Self::complement(),
            "abs_offset" => Self::abs_offset(rat(arg)?),
            "const" | "constant" => Self::constant(rat(arg)?),
            "canonical_nonuc" => {
                let n = arg
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(unknown)?;
                Self::canonical_nonuc(n)?
            }
            _ => return Err(unknown()),
        };
        if words.next().is_some() {
            return Err(unknown());
        }
        Ok(f)
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn modulus(&self) -> Option<&ModulusFunction> {
        self.modulus.as_ref()
    }

    pub fn with_modulus(mut self, theta: Option<ModulusFunction>) -> Self {
        self.modulus = theta;
        self
    }

    /// The cover carried by cover-based and truncated functions.
    pub fn cover(&self) -> Option<&StagedCover> {
        match &self.kind {
            FunctionKind::CoverBased { cover, .. } | FunctionKind::Truncated { cover, .. } => {
                Some(cover)
            }
            _ => None,
        }
    }

    /// `f(x)`, with `x` clamped into `[0,1]`.
    pub fn eval(&self, x: &Rational) -> Rational {
        let x = x.clamp_unit();
        match &self.kind {
            FunctionKind::Polygonal(p) => p.eval(&x),
            FunctionKind::CoverBased { pieces, .. } => match piece_at(pieces, &x) {
                Some(p) => interpolate(&p.nodes, &x),
                None => Rational::zero(),
            },
            FunctionKind::Truncated {
                base, intervals, ..
            } => match segment_at(intervals, &x) {
                Some((a, b)) => {
                    let (fa, fb) = (base.eval(a), base.eval(b));
                    if a == b {
                        fa
                    } else {
                        &fa + (&fb - &fa) * (&x - a) / (b - a)
                    }
                }
                None => base.eval(&x),
            },
            FunctionKind::Symbolic(b) => match b {
                Builtin::Identity => x,
                Builtin::Square => &x * &x,
                Builtin::AbsOffset(c) => (&x - c).abs(),
                Builtin::Half => x.half(),
                Builtin::Complement => Rational::one() - x,
                Builtin::Constant(q) => q.clone(),
            },
        }
    }

    /// Exact `[min f, max f]` over the closed interval `[lo,hi]` (clamped).
    pub fn range_over(&self, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
        let (lo, hi) = (lo.clamp_unit(), hi.clamp_unit());
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mut hull = Hull::new(self.eval(&lo));
        hull.add(self.eval(&hi));
        match &self.kind {
            FunctionKind::Polygonal(p) => {
                for (x, y) in p.breakpoints() {
                    if *x > lo && *x < hi {
                        hull.add(y.clone());
                    }
                }
            }
            FunctionKind::CoverBased { pieces, .. } => {
                let window = RationalInterval::closed(lo.clone(), hi.clone());
                let mut covered = Vec::new();
                for p in pieces.iter().filter(|p| p.interval.intersects(&window)) {
                    for (x, y) in &p.nodes {
                        if *x >= lo && *x <= hi {
                            hull.add(y.clone());
                        }
                    }
                    if let Some(part) = p.interval.intersection(&window) {
                        covered.push(part);
                    }
                }
                // The union is closed, so full measure means full coverage.
                if normalize_union(covered).measure() < &hi - &lo {
                    hull.add(Rational::zero());
                }
            }
            FunctionKind::Truncated {
                base, intervals, ..
            } => {
                let mut cursor = lo.clone();
                for (a, b) in intervals.iter().filter(|(a, b)| *b >= lo && *a <= hi) {
                    if *a > cursor {
                        let (m, n) = base.range_over(&cursor, a);
                        hull.add(m);
                        hull.add(n);
                    }
                    // Linear inside: endpoints of the clipped segment suffice.
                    hull.add(self.eval(&a.clone().max(lo.clone())));
                    hull.add(self.eval(&b.clone().min(hi.clone())));
                    cursor = cursor.max(b.clone());
                }
                if cursor < hi {
                    let (m, n) = base.range_over(&cursor, &hi);
                    hull.add(m);
                    hull.add(n);
                }
            }
            FunctionKind::Symbolic(Builtin::AbsOffset(c)) => {
                if *c >= lo && *c <= hi {
                    hull.add(Rational::zero());
                }
            }
            // Remaining built-ins are monotone on [0,1].
            FunctionKind::Symbolic(_) => {}
        }
        (hull.lo, hull.hi)
    }
}

struct Hull {
    lo: Rational,
    hi: Rational,
}

impl Hull {
    fn new(q: Rational) -> Self {
        Hull {
            lo: q.clone(),
            hi: q,
        }
    }

    fn add(&mut self, q: Rational) {
        if q < self.lo {
            self.lo = q;
        } else if q > self.hi {
            self.hi = q;
        }
    }
}

fn piece_at<'a>(pieces: &'a [CoverPiece], x: &Rational) -> Option<&'a CoverPiece> {
    let i = pieces.partition_point(|p| p.interval.hi() < x);
    pieces.get(i).filter(|p| p.interval.contains(x))
}

fn segment_at<'a>(
    intervals: &'a [(Rational, Rational)],
    x: &Rational,
) -> Option<(&'a Rational, &'a Rational)> {
    let i = intervals.partition_point(|(_, b)| b < x);
    intervals
        .get(i)
        .filter(|(a, b)| a <= x && x <= b)
        .map(|(a, b)| (a, b))
}

/// `I_n` of the canonical example.
pub fn canonical_interval(n: usize) -> RationalInterval {
    let n = n as i64;
    RationalInterval::closed(
        Rational::one() - Rational::pow2(-n),
        Rational::one() - Rational::pow2(-n - 1),
    )
}

/// The strings of the oscillation tree at a threshold `2^-n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OscillationTree {
    pub threshold: u32,
    pub depth: u32,
    pub nodes: BTreeSet<BitString>,
}

impl OscillationTree {
    pub fn contains(&self, sigma: &BitString) -> bool {
        self.nodes.contains(sigma)
    }

    pub fn count_at(&self, len: usize) -> usize {
        self.nodes.iter().filter(|s| s.len() == len).count()
    }

    pub fn is_downward_closed(&self) -> bool {
        self.nodes
            .iter()
            .all(|s| s.parent().is_none_or(|p| self.nodes.contains(&p)))
    }
}

/// All `σ` with `|σ| ≤ depth` such that some dyadic `x, y ∈ [σ)` of
/// denominator `2^(depth+4)` have `|f(x) - f(y)| > 2^-n`.
pub fn oscillation_tree(
    f: &MarkovFunction,
    n: u32,
    depth: u32,
) -> Result<OscillationTree, MarkovError> {
    if depth > MAX_TREE_DEPTH {
        return Err(MarkovError::BudgetExceeded {
            what: "tree depth",
            requested: depth as u64,
            limit: MAX_TREE_DEPTH as u64,
        });
    }
    let grid = depth + 4;
    let threshold = Rational::pow2(-(n as i64));
    // Level `depth` blocks first, then merge pairwise toward the root.
    let block = 1u64 << 4;
    let mut level: Vec<(Rational, Rational)> = (0..1u64 << depth)
        .map(|j| {
            let mut hull = Hull::new(f.eval(&Rational::dyadic(j * block, grid)));
            for i in 1..block {
                hull.add(f.eval(&Rational::dyadic(j * block + i, grid)));
            }
            (hull.lo, hull.hi)
        })
        .collect();
    let mut nodes = BTreeSet::new();
    for len in (0..=depth).rev() {
        for (j, (lo, hi)) in level.iter().enumerate() {
            if hi - lo > threshold {
                nodes.insert(BitString::from_index(j as u64, len));
            }
        }
        if len > 0 {
            level = level
                .chunks(2)
                .map(|c| {
                    (
                        c[0].0.clone().min(c[1].0.clone()),
                        c[0].1.clone().max(c[1].1.clone()),
                    )
                })
                .collect();
        }
    }
    Ok(OscillationTree {
        threshold: n,
        depth,
        nodes,
    })
}

/// `[f,C]`: `f` off the cover, the chord of `f` across each cover interval.
pub fn truncate(f: &MarkovFunction, c: &StagedCover) -> Result<MarkovFunction, MarkovError> {
    check_h(c).map_err(MarkovError::CoverViolation)?;
    let mut intervals: Vec<(Rational, Rational)> = c
        .enumerated()
        .map(|(_, i)| (i.lo().clone(), i.hi().clone()))
        .collect();
    intervals.sort();
    Ok(MarkovFunction {
        kind: FunctionKind::Truncated {
            base: Arc::new(f.clone()),
            cover: c.clone(),
            intervals,
        },
        modulus: None,
        label: format!("[{},C]", f.label),
    })
}

/// First failure of the truncation slope bounds, or `Pass`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlopeVerdict {
    Pass,
    /// `w(b - a) < f(b) - f(a)` fails on a cover interval.
    CoverRise {
        interval: RationalInterval,
        increase: Rational,
        bound: Rational,
    },
    /// `[f,C](y) - [f,C](x) < z(y - x)` fails on a grid pair.
    SlopeCeiling {
        x: Rational,
        y: Rational,
        increase: Rational,
        bound: Rational,
    },
}

impl SlopeVerdict {
    pub fn passed(&self) -> bool {
        *self == SlopeVerdict::Pass
    }
}

/// Checks the cover-rise bound exactly on every interval of `c` and the
/// slope ceiling on every ordered pair of the grid `j/2^grid`.
///
/// For the ceiling it is enough that `[f,C](x) - z·x` strictly decreases between
/// consecutive grid points: strict decrease is transitive.
pub fn slope_bounds_check(
    f: &MarkovFunction,
    c: &StagedCover,
    w: &Rational,
    z: &Rational,
    grid: u32,
) -> Result<SlopeVerdict, MarkovError> {
    if w >= z {
        return Err(MarkovError::BoundsOrder {
            w: w.clone(),
            z: z.clone(),
        });
    }
    if grid > MAX_SLOPE_GRID {
        return Err(MarkovError::BudgetExceeded {
            what: "slope grid exponent",
            requested: grid as u64,
            limit: MAX_SLOPE_GRID as u64,
        });
    }
    for (_, interval) in c.enumerated() {
        let (a, b) = (interval.lo(), interval.hi());
        let increase = f.eval(b) - f.eval(a);
        let bound = w * (b - a);
        if bound >= increase {
            return Ok(SlopeVerdict::CoverRise {
                interval: interval.clone(),
                increase,
                bound,
            });
        }
    }
    let g = truncate(f, c)?;
    let points: Vec<Rational> = (0..=1u64 << grid)
        .map(|j| Rational::dyadic(j, grid))
        .collect();
    let values: Vec<Rational> = points.iter().map(|x| g.eval(x)).collect();
    for j in 1..points.len() {
        let increase = &values[j] - &values[j - 1];
        let bound = z * (&points[j] - &points[j - 1]);
        if increase >= bound {
            return Ok(SlopeVerdict::SlopeCeiling {
                x: points[j - 1].clone(),
                y: points[j].clone(),
                increase,
                bound,
            });
        }
    }
    Ok(SlopeVerdict::Pass)
}

/// An enclosure of `R[f](z)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionValue {
    pub interval: RationalInterval,
    /// True when backed by a declared modulus.
    pub certified: bool,
    /// Precision of the name actually queried.
    pub precision: u32,
}

/// Encloses `R[f](z)` in an interval of length at most `2^(-n+2)`.
///
/// With a modulus the hull over the window at the precision it dictates is
/// certified. Without one, the window is refined up to `n + 8` bits and the
/// first hull that is narrow enough is returned, marked non-certified.
pub fn eval_extension(
    f: &MarkovFunction,
    z: &CauchyName,
    n: u32,
) -> Result<ExtensionValue, MarkovError> {
    if n > MAX_EXTENSION_PRECISION {
        return Err(MarkovError::BudgetExceeded {
            what: "extension precision",
            requested: n as u64,
            limit: MAX_EXTENSION_PRECISION as u64,
        });
    }
    let hull_at = |p: u32| {
        let w = z.window(p);
        let (lo, hi) = f.range_over(w.lo(), w.hi());
        RationalInterval::closed(lo, hi)
    };
    if let Some(theta) = &f.modulus {
        let p = theta.precision_for(n);
        return Ok(ExtensionValue {
            interval: hull_at(p),
            certified: true,
            precision: p,
        });
    }
    let target = Rational::pow2(2 - n as i64);
    let mut hull = hull_at(n);
    for p in n..=n + EXTENSION_REFINEMENTS {
        hull = hull_at(p);
        if hull.length() <= target {
            return Ok(ExtensionValue {
                interval: hull,
                certified: false,
                precision: p,
            });
        }
    }
    Err(MarkovError::ExtensionUndefined {
        precision: n + EXTENSION_REFINEMENTS,
        hull,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn iv(lo: &str, hi: &str) -> RationalInterval {
        RationalInterval::closed(q(lo), q(hi))
    }

    #[test]
    fn canonical_values() {
        let f = MarkovFunction::canonical_nonuc(20).unwrap();
        assert_eq!(f.eval(&canonical_interval(2).midpoint()), q("2"));
        for n in 0..20 {
            let i = canonical_interval(n);
            assert_eq!(f.eval(i.lo()), Rational::zero());
            assert_eq!(f.eval(i.hi()), Rational::zero());
        }
        // Oracle: a quarter of the way in, the tent is at half height.
        let i5 = canonical_interval(5);
        let quarter = i5.lo() + i5.length() / Rational::from_integer(4);
        assert_eq!(f.eval(&quarter), q("5/2"));
        assert_eq!(f.eval(&Rational::one()), Rational::zero());
        assert!(MarkovFunction::canonical_nonuc(0).is_err());
    }

    #[test]
    fn identity_tree() {
        let t = oscillation_tree(&MarkovFunction::identity(), 3, 8).unwrap();
        let expected: BTreeSet<BitString> = (0..3).flat_map(BitString::all_of_length).collect();
        assert_eq!(t.nodes, expected);
    }

    #[test]
    fn constant_tree_is_empty() {
        let t = oscillation_tree(&MarkovFunction::constant(Rational::zero()), 2, 8).unwrap();
        assert!(t.nodes.is_empty());
        assert!(oscillation_tree(&MarkovFunction::identity(), 0, 17).is_err());
    }

    #[test]
    fn h_examples() {
        let ok = StagedCover::new(
            vec![
                vec![iv("0", "1/2")],
                vec![iv("1/2", "3/4")],
                vec![iv("3/4", "7/8")],
            ],
            vec![0, 1, 2],
        );
        assert_eq!(check_h(&ok), Ok(()));
        let overlap = StagedCover::new(vec![vec![iv("0", "1/2"), iv("1/4", "3/4")]], vec![0]);
        assert!(matches!(check_h(&overlap), Err(HViolation::Overlap { .. })));
        let size = StagedCover::new(
            vec![
                vec![iv("0", "1/4")],
                vec![iv("1/4", "1/2")],
                vec![iv("1/2", "1")],
            ],
            vec![0, 2, 1],
        );
        assert!(matches!(
            check_h(&size),
            Err(HViolation::Size { k: 2, stage: 2, .. })
        ));
    }

    #[test]
    fn truncation_examples() {
        let c = StagedCover::new(vec![vec![iv("0", "1/2")]], vec![0]);
        let t = truncate(&MarkovFunction::square(), &c).unwrap();
        assert_eq!(t.eval(&q("1/4")), q("1/8"));
        assert_eq!(t.eval(&q("3/4")), q("9/16"));
        let id = truncate(&MarkovFunction::identity(), &c).unwrap();
        for j in 0..=64u64 {
            let x = Rational::dyadic(j, 6);
            assert_eq!(id.eval(&x), x);
        }
        let bad = StagedCover::new(vec![vec![iv("0", "1/2"), iv("1/4", "3/4")]], vec![0]);
        assert!(matches!(
            truncate(&MarkovFunction::square(), &bad),
            Err(MarkovError::CoverViolation(_))
        ));
    }

    #[test]
    fn slope_bound_examples() {
        let sq = MarkovFunction::square();
        let v = slope_bounds_check(&sq, &StagedCover::empty(), &q("0"), &q("3"), 10).unwrap();
        assert!(v.passed());
        let v = slope_bounds_check(
            &MarkovFunction::identity(),
            &StagedCover::empty(),
            &q("2"),
            &q("3"),
            10,
        )
        .unwrap();
        assert!(v.passed());
        let c = StagedCover::new(vec![vec![iv("3/4", "1")]], vec![0]);
        let v = slope_bounds_check(&sq, &c, &q("3/2"), &q("2"), 10).unwrap();
        // The cover-rise bound holds on [3/4,1]: 7/16 > 3/8. The chord slope there is
        // 7/4 < 2, and x² has slope < 2 elsewhere on the grid.
        assert!(v.passed());
        let v = slope_bounds_check(&sq, &c, &q("7/4"), &q("3"), 4).unwrap();
        assert!(matches!(v, SlopeVerdict::CoverRise { .. }));
        let v = slope_bounds_check(&sq, &StagedCover::empty(), &q("0"), &q("1"), 4).unwrap();
        assert!(matches!(v, SlopeVerdict::SlopeCeiling { .. }));
        assert!(slope_bounds_check(&sq, &c, &q("2"), &q("2"), 4).is_err());
    }

    #[test]
    fn extension_examples() {
        let third = CauchyName::constant(q("1/3"));
        let e = eval_extension(&MarkovFunction::square(), &third, 8).unwrap();
        assert!(e.certified);
        assert!(e.interval.contains(&q("1/9")));
        assert!(e.interval.length() <= Rational::pow2(-6));

        let x = CauchyName::newton_sqrt2().sub(&CauchyName::constant(Rational::one()));
        let e = eval_extension(&MarkovFunction::identity(), &x, 10).unwrap();
        assert!(e.certified);
        assert_eq!(e.interval, x.window(10));

        let one = CauchyName::scripted(vec![Rational::one()], 0).unwrap();
        let f = MarkovFunction::canonical_nonuc(20).unwrap();
        assert!(matches!(
            eval_extension(&f, &one, 8),
            Err(MarkovError::ExtensionUndefined { .. })
        ));

        // Inside I_1 the unmodulated hull does shrink.
        let inside = CauchyName::constant(q("5/8"));
        let e = eval_extension(&f, &inside, 4).unwrap();
        assert!(!e.certified);
        assert!(e.interval.contains(&f.eval(&q("5/8"))));
    }

    #[test]
    fn names_parse() {
        for name in [
            "identity",
            "square",
            "half",
            "complement",
            "abs_offset 1/2",
            "const 3/4",
            "canonical_nonuc 5",
        ] {
            assert!(MarkovFunction::from_name(name).is_ok(), "{}", name);
        }
        assert!(MarkovFunction::from_name("cube").is_err());
        assert!(MarkovFunction::from_name("const").is_err());
    }

    #[test]
    fn range_matches_grid() {
        let f = MarkovFunction::canonical_nonuc(6).unwrap();
        let c = StagedCover::new(vec![vec![iv("1/8", "3/8")]], vec![0]);
        let t = truncate(&MarkovFunction::square(), &c).unwrap();
        for g in [&f, &t, &MarkovFunction::abs_offset(q("1/3"))] {
            for (lo, hi) in [(0u64, 64u64), (5, 9), (40, 63), (17, 17)] {
                let (a, b) = (Rational::dyadic(lo, 6), Rational::dyadic(hi, 6));
                let (m, n) = g.range_over(&a, &b);
                for j in lo * 16..=hi * 16 {
                    let v = g.eval(&Rational::dyadic(j, 10));
                    assert!(m <= v && v <= n);
                }
            }
        }
    }
}
