//! Fixture files: JSON documents with rationals as `"p/q"` strings,
//! intervals as `"[lo,hi)"` and bit strings as `"0110"`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use demuth_core::markov::MarkovFunction;
use demuth_core::measure::CylinderMeasure;
use demuth_core::numeric::{normalize_union, IntervalUnion, Rational, RationalInterval};
use demuth_core::randomness::{IntervalBlock, TestFamily, TestKind};
use demuth_core::real::CauchyName;
use demuth_core::tt::TTFunctional;
use demuth_core::{BitString, LimitOracle, Martingale, StagedCover};

use crate::error::LabError;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Doc {
    Test(TestDoc),
    Measure(MeasureDoc),
    Functional(FunctionalDoc),
    Martingale(MartingaleDoc),
    Truncation(TruncationDoc),
    Function(FunctionDoc),
    Oracle(OracleDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestDoc {
    kind: String,
    #[serde(default)]
    label: String,
    offset: Option<u32>,
    components: Option<Vec<Vec<String>>>,
    versions: Option<Vec<Vec<Vec<String>>>>,
    budgets: Option<Vec<usize>>,
    #[serde(default)]
    updates: Vec<UpdateDoc>,
    declared: Option<Vec<String>>,
    bound: Option<String>,
    blocks: Option<Vec<BlockDoc>>,
    q: Option<Vec<String>>,
    c: Option<Vec<Vec<usize>>>,
    depth: Option<usize>,
    #[serde(default)]
    universal: bool,
    #[serde(default)]
    points: Vec<PointDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UpdateDoc {
    m: u32,
    intervals: Vec<String>,
    expect: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    m: u32,
    r: u32,
    intervals: Vec<String>,
    #[serde(default)]
    excised: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDoc {
    label: String,
    value: Option<String>,
    scripted: Option<Vec<String>>,
    bound: Option<usize>,
    expect: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    rule: String,
    p: Option<String>,
    levels: Option<Vec<Vec<String>>>,
    depth: Option<usize>,
    #[serde(default)]
    cdf: Vec<CdfDoc>,
    #[serde(default)]
    prefixes: Vec<PrefixDoc>,
    tau_len: Option<usize>,
    transport_depth: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CdfDoc {
    at: String,
    expect: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrefixDoc {
    input: String,
    lo: Option<String>,
    hi: Option<String>,
    output: Option<String>,
    output_prefix: Option<String>,
    status: Option<String>,
    error: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionalDoc {
    rule: String,
    uses: Option<Vec<u32>>,
    tables: Option<Vec<String>>,
    function: Option<String>,
    depth: Option<u32>,
    #[serde(default)]
    expect: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MartingaleDoc {
    rule: Option<String>,
    table: Option<BTreeMap<String, String>>,
    depth: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncationDoc {
    function: String,
    stages: Vec<Vec<String>>,
    size_bound: Vec<usize>,
    w: String,
    z: String,
    grid: u32,
    check_grid: Option<u32>,
    #[serde(default)]
    values: Vec<ValueDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueDoc {
    x: String,
    expect: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDoc {
    function: String,
    #[serde(default)]
    values: Vec<ValueDoc>,
    #[serde(default)]
    derive: Vec<DeriveDoc>,
    #[serde(default)]
    tree: Vec<TreeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeriveDoc {
    point: String,
    scale: u32,
    grid: u32,
    tol: u32,
    expect: Option<String>,
    near: Option<String>,
    within: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    n: u32,
    depth: u32,
    expect: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleDoc {
    values: Option<Vec<Vec<String>>>,
    budget: Option<Vec<usize>>,
    intervals: Option<Vec<IntervalOracleDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalOracleDoc {
    scripts: Vec<Vec<Vec<String>>>,
    budget: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateExpect {
    Accepted,
    BudgetExceeded,
    MeasureBound,
}

impl UpdateExpect {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateExpect::Accepted => "ACCEPTED",
            UpdateExpect::BudgetExceeded => "BUDGET_EXCEEDED",
            UpdateExpect::MeasureBound => "MEASURE_BOUND",
        }
    }
}

pub struct Update {
    pub m: u32,
    pub version: IntervalUnion,
    pub expect: UpdateExpect,
}

pub struct Point {
    pub label: String,
    pub name: CauchyName,
    pub expect: Option<String>,
}

pub struct LoadedTest {
    pub kind: TestKind,
    /// Construction failures become FAIL records rather than load errors.
    pub family: Result<TestFamily, String>,
    pub updates: Vec<Update>,
    pub points: Vec<Point>,
}

pub struct Expectation {
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
    pub output: Option<BitString>,
    pub output_prefix: Option<BitString>,
    pub status: Option<String>,
    pub error: Option<String>,
}

pub struct LoadedMeasure {
    pub measure: CylinderMeasure,
    pub depth: usize,
    pub cdf: Vec<(Rational, Rational)>,
    pub prefixes: Vec<(BitString, Expectation)>,
    pub tau_len: usize,
    pub transport_depth: usize,
}

pub struct LoadedFunctional {
    pub functional: Result<TTFunctional, String>,
    /// Set when built from a function's modulus.
    pub source: Option<String>,
    pub undetermined: Option<usize>,
    pub depth: u32,
    pub expect: Vec<(BitString, Rational)>,
}

pub struct LoadedMartingale {
    pub martingale: Martingale,
    pub depth: u32,
}

pub struct LoadedTruncation {
    pub function: MarkovFunction,
    pub cover: StagedCover,
    pub w: Rational,
    pub z: Rational,
    pub grid: u32,
    pub check_grid: Option<u32>,
    pub values: Vec<(Rational, Rational)>,
}

pub struct Derivation {
    pub point: Rational,
    pub scale: u32,
    pub grid: u32,
    pub tol: u32,
    pub expect: Option<String>,
    pub near: Option<(Rational, u32)>,
}

pub struct TreeRequest {
    pub n: u32,
    pub depth: u32,
    pub expect: Option<String>,
}

pub struct LoadedFunction {
    pub function: MarkovFunction,
    pub values: Vec<(Rational, Rational)>,
    pub derive: Vec<Derivation>,
    pub tree: Vec<TreeRequest>,
}

pub struct LoadedOracle {
    pub values: Option<LimitOracle<Rational>>,
    pub intervals: Vec<LimitOracle<Vec<RationalInterval>>>,
}

pub enum Subject {
    Test(LoadedTest),
    Measure(LoadedMeasure),
    Functional(LoadedFunctional),
    Martingale(LoadedMartingale),
    Truncation(LoadedTruncation),
    Function(LoadedFunction),
    Oracle(LoadedOracle),
}

pub struct Fixture {
    /// File stem; the canonical sort key in reports.
    pub name: String,
    pub path: PathBuf,
    pub subject: Subject,
}

struct Ctx<'a> {
    path: &'a str,
}

impl Ctx<'_> {
    fn parse<T: FromStr>(&self, field: &str, s: &str) -> Result<T, LabError>
    where
        T::Err: std::fmt::Display,
    {
        s.parse::<T>()
            .map_err(|e| LabError::invalid(self.path, field, format!("{:?}: {}", s, e)))
    }

    fn all<T: FromStr>(&self, field: &str, v: &[String]) -> Result<Vec<T>, LabError>
    where
        T::Err: std::fmt::Display,
    {
        v.iter().map(|s| self.parse(field, s)).collect()
    }

    fn union(&self, field: &str, v: &[String]) -> Result<IntervalUnion, LabError> {
        Ok(normalize_union(self.all(field, v)?))
    }

    fn need<'b, T>(&self, field: &str, v: &'b Option<T>) -> Result<&'b T, LabError> {
        v.as_ref()
            .ok_or_else(|| LabError::invalid(self.path, field, "missing"))
    }

    fn err(&self, field: &str, e: impl std::fmt::Display) -> LabError {
        LabError::invalid(self.path, field, e)
    }
}

pub fn load_fixture(path: &Path) -> Result<Fixture, LabError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io {
        path: shown.clone(),
        source: e,
    })?;
    let doc: Doc = serde_json::from_str(&text).map_err(|e| LabError::Parse {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    let ctx = Ctx { path: &shown };
    let subject = match doc {
        Doc::Test(d) => Subject::Test(load_test(&ctx, d)?),
        Doc::Measure(d) => Subject::Measure(load_measure(&ctx, d)?),
        Doc::Functional(d) => Subject::Functional(load_functional(&ctx, d)?),
        Doc::Martingale(d) => Subject::Martingale(load_martingale(&ctx, d)?),
        Doc::Truncation(d) => Subject::Truncation(load_truncation(&ctx, d)?),
        Doc::Function(d) => Subject::Function(load_function(&ctx, d)?),
        Doc::Oracle(d) => Subject::Oracle(load_oracle(&ctx, d)?),
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| shown.clone());
    Ok(Fixture {
        name,
        path: path.to_path_buf(),
        subject,
    })
}

fn load_test(ctx: &Ctx, d: TestDoc) -> Result<LoadedTest, LabError> {
    let kind: TestKind = ctx.parse("kind", &d.kind)?;
    let offset = d.offset.unwrap_or(1);
    let components = |ctx: &Ctx| -> Result<Vec<IntervalUnion>, LabError> {
        ctx.need("components", &d.components)?
            .iter()
            .map(|c| ctx.union("components", c))
            .collect()
    };
    let family = match kind {
        TestKind::Ml | TestKind::FinitelyBounded => {
            Ok(TestFamily::plain(kind, offset, components(ctx)?))
        }
        TestKind::Schnorr => {
            let declared = ctx.all("declared", ctx.need("declared", &d.declared)?)?;
            Ok(TestFamily::schnorr(offset, components(ctx)?, declared))
        }
        TestKind::Solovay => {
            let bound = ctx.parse("bound", ctx.need("bound", &d.bound)?)?;
            Ok(TestFamily::solovay(offset, components(ctx)?, bound))
        }
        TestKind::IntervalSequence => {
            let mut blocks = Vec::new();
            for b in ctx.need("blocks", &d.blocks)? {
                blocks.push(IntervalBlock {
                    m: b.m,
                    r: b.r,
                    intervals: ctx.all("blocks.intervals", &b.intervals)?,
                    excised: b.excised.iter().copied().collect(),
                });
            }
            Ok(TestFamily::interval_sequence(blocks))
        }
        TestKind::Pi1 => {
            let q: Vec<Rational> = ctx.all("q", ctx.need("q", &d.q)?)?;
            let c: Vec<BTreeSet<usize>> = ctx
                .need("c", &d.c)?
                .iter()
                .map(|s| s.iter().copied().collect())
                .collect();
            let depth = d.depth.unwrap_or(q.len());
            TestFamily::pi1(q, c, depth).map_err(|e| e.to_string())
        }
        TestKind::Demuth | TestKind::WeakDemuth => {
            let versions = match (&d.versions, &d.components) {
                (Some(v), _) => v
                    .iter()
                    .map(|vs| vs.iter().map(|c| ctx.union("versions", c)).collect())
                    .collect::<Result<Vec<Vec<_>>, _>>()?,
                (None, Some(_)) => components(ctx)?.into_iter().map(|c| vec![c]).collect(),
                (None, None) => Vec::new(),
            };
            let budgets = ctx.need("budgets", &d.budgets)?.clone();
            Ok(TestFamily::demuth(kind, offset, versions, budgets))
        }
    };
    let family = family.map(|mut f| {
        f.label = d.label.clone();
        f.universal = d.universal;
        f
    });
    let mut updates = Vec::new();
    for u in &d.updates {
        let expect = match u.expect.as_str() {
            "ACCEPTED" => UpdateExpect::Accepted,
            "BUDGET_EXCEEDED" => UpdateExpect::BudgetExceeded,
            "MEASURE_BOUND" => UpdateExpect::MeasureBound,
            other => return Err(ctx.err("updates.expect", format!("unknown outcome {:?}", other))),
        };
        updates.push(Update {
            m: u.m,
            version: ctx.union("updates.intervals", &u.intervals)?,
            expect,
        });
    }
    let mut points = Vec::new();
    for p in &d.points {
        let name = match (&p.value, &p.scripted) {
            (Some(v), None) => CauchyName::constant(ctx.parse("points.value", v)?),
            (None, Some(s)) => {
                CauchyName::scripted(ctx.all("points.scripted", s)?, p.bound.unwrap_or(0))
                    .map_err(|e| ctx.err("points.scripted", e))?
            }
            _ => return Err(ctx.err("points", "need exactly one of value, scripted")),
        };
        points.push(Point {
            label: p.label.clone(),
            name: name.with_label(p.label.clone()),
            expect: p.expect.clone(),
        });
    }
    Ok(LoadedTest {
        kind,
        family,
        updates,
        points,
    })
}

fn load_measure(ctx: &Ctx, d: MeasureDoc) -> Result<LoadedMeasure, LabError> {
    let measure = match d.rule.as_str() {
        "uniform" => CylinderMeasure::uniform(),
        "bernoulli" => CylinderMeasure::bernoulli(ctx.parse("p", ctx.need("p", &d.p)?)?)
            .map_err(|e| ctx.err("p", e))?,
        "table" => {
            let levels = ctx
                .need("levels", &d.levels)?
                .iter()
                .map(|l| ctx.all("levels", l))
                .collect::<Result<Vec<Vec<Rational>>, _>>()?;
            for (n, l) in levels.iter().enumerate() {
                if l.len() != 1 << n {
                    return Err(ctx.err(
                        "levels",
                        format!("level {} has {} masses, expected {}", n, l.len(), 1 << n),
                    ));
                }
            }
            CylinderMeasure::table(levels)
        }
        other => return Err(ctx.err("rule", format!("unknown measure rule {:?}", other))),
    };
    let cap = measure.depth().unwrap_or(usize::MAX);
    let cdf = d
        .cdf
        .iter()
        .map(|c| {
            Ok((
                ctx.parse("cdf.at", &c.at)?,
                ctx.parse("cdf.expect", &c.expect)?,
            ))
        })
        .collect::<Result<_, LabError>>()?;
    let opt = |field: &str, v: &Option<String>| -> Result<Option<Rational>, LabError> {
        v.as_ref().map(|s| ctx.parse(field, s)).transpose()
    };
    let optb = |field: &str, v: &Option<String>| -> Result<Option<BitString>, LabError> {
        v.as_ref().map(|s| ctx.parse(field, s)).transpose()
    };
    let mut prefixes = Vec::new();
    for p in &d.prefixes {
        prefixes.push((
            ctx.parse("prefixes.input", &p.input)?,
            Expectation {
                lo: opt("prefixes.lo", &p.lo)?,
                hi: opt("prefixes.hi", &p.hi)?,
                output: optb("prefixes.output", &p.output)?,
                output_prefix: optb("prefixes.output_prefix", &p.output_prefix)?,
                status: p.status.clone(),
                error: p.error.clone(),
            },
        ));
    }
    Ok(LoadedMeasure {
        measure,
        depth: d.depth.unwrap_or(8).min(cap),
        cdf,
        prefixes,
        tau_len: d.tau_len.unwrap_or(3),
        transport_depth: d.transport_depth.unwrap_or(10).min(cap),
    })
}

fn load_functional(ctx: &Ctx, d: FunctionalDoc) -> Result<LoadedFunctional, LabError> {
    let depth = d.depth.unwrap_or(8);
    let (functional, source, undetermined) = match d.rule.as_str() {
        "table" => {
            let uses = ctx.need("uses", &d.uses)?.clone();
            let mut tables = Vec::new();
            for t in ctx.need("tables", &d.tables)? {
                let row = t
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(ctx.err("tables", format!("bad table entry {:?}", c))),
                    })
                    .collect::<Result<Vec<bool>, _>>()?;
                tables.push(row);
            }
            (
                TTFunctional::table(uses, tables).map_err(|e| e.to_string()),
                None,
                None,
            )
        }
        "from_ucf" => {
            let name = ctx.need("function", &d.function)?;
            let g = MarkovFunction::from_name(name).map_err(|e| ctx.err("function", e))?;
            match demuth_core::tt::tt_from_ucf(&g, depth as usize) {
                Ok(u) => (Ok(u.functional), Some(name.clone()), Some(u.undetermined)),
                Err(e) => (Err(e.to_string()), Some(name.clone()), None),
            }
        }
        name => (
            Ok(TTFunctional::from_name(name).map_err(|e| ctx.err("rule", e))?),
            None,
            None,
        ),
    };
    let expect = d
        .expect
        .iter()
        .map(|(s, v)| Ok((ctx.parse("expect", s)?, ctx.parse("expect", v)?)))
        .collect::<Result<_, LabError>>()?;
    Ok(LoadedFunctional {
        functional,
        source,
        undetermined,
        depth,
        expect,
    })
}

fn load_martingale(ctx: &Ctx, d: MartingaleDoc) -> Result<LoadedMartingale, LabError> {
    let martingale = match (&d.rule, &d.table) {
        (Some(rule), None) => {
            Martingale::from_rule(rule, d.depth).map_err(|e| ctx.err("rule", e))?
        }
        (None, Some(table)) => {
            let table = table
                .iter()
                .map(|(s, v)| Ok((ctx.parse("table", s)?, ctx.parse("table", v)?)))
                .collect::<Result<BTreeMap<BitString, Rational>, LabError>>()?;
            Martingale::from_table(&table).map_err(|e| ctx.err("table", e))?
        }
        _ => return Err(ctx.err("rule", "need exactly one of rule, table")),
    };
    if martingale.depth() < d.depth {
        return Err(ctx.err(
            "depth",
            format!("table only reaches depth {}", martingale.depth()),
        ));
    }
    Ok(LoadedMartingale {
        martingale,
        depth: d.depth,
    })
}

fn pairs(ctx: &Ctx, field: &str, v: &[ValueDoc]) -> Result<Vec<(Rational, Rational)>, LabError> {
    v.iter()
        .map(|p| Ok((ctx.parse(field, &p.x)?, ctx.parse(field, &p.expect)?)))
        .collect()
}

fn load_truncation(ctx: &Ctx, d: TruncationDoc) -> Result<LoadedTruncation, LabError> {
    let function = MarkovFunction::from_name(&d.function).map_err(|e| ctx.err("function", e))?;
    let stages = d
        .stages
        .iter()
        .map(|s| ctx.all("stages", s))
        .collect::<Result<Vec<Vec<RationalInterval>>, _>>()?;
    Ok(LoadedTruncation {
        function,
        cover: StagedCover::new(stages, d.size_bound.clone()),
        w: ctx.parse("w", &d.w)?,
        z: ctx.parse("z", &d.z)?,
        grid: d.grid,
        check_grid: d.check_grid,
        values: pairs(ctx, "values", &d.values)?,
    })
}

fn load_function(ctx: &Ctx, d: FunctionDoc) -> Result<LoadedFunction, LabError> {
    let function = MarkovFunction::from_name(&d.function).map_err(|e| ctx.err("function", e))?;
    let mut derive = Vec::new();
    for e in &d.derive {
        let near = match (&e.near, e.within) {
            (Some(n), Some(w)) => Some((ctx.parse("derive.near", n)?, w)),
            (None, None) => None,
            _ => return Err(ctx.err("derive", "near and within go together")),
        };
        derive.push(Derivation {
            point: ctx.parse("derive.point", &e.point)?,
            scale: e.scale,
            grid: e.grid,
            tol: e.tol,
            expect: e.expect.clone(),
            near,
        });
    }
    let tree = d
        .tree
        .iter()
        .map(|t| TreeRequest {
            n: t.n,
            depth: t.depth,
            expect: t.expect.clone(),
        })
        .collect();
    Ok(LoadedFunction {
        function,
        values: pairs(ctx, "values", &d.values)?,
        derive,
        tree,
    })
}

fn load_oracle(ctx: &Ctx, d: OracleDoc) -> Result<LoadedOracle, LabError> {
    let values = match &d.values {
        Some(v) => {
            let scripts = v
                .iter()
                .map(|s| ctx.all("values", s))
                .collect::<Result<Vec<Vec<Rational>>, _>>()?;
            Some(LimitOracle::new(scripts, d.budget.clone()).map_err(|e| ctx.err("values", e))?)
        }
        None => None,
    };
    let mut intervals = Vec::new();
    for o in d.intervals.iter().flatten() {
        let scripts = o
            .scripts
            .iter()
            .map(|query| {
                query
                    .iter()
                    .map(|stage| ctx.all("intervals", stage))
                    .collect()
            })
            .collect::<Result<Vec<Vec<Vec<RationalInterval>>>, LabError>>()?;
        intervals.push(
            LimitOracle::new(scripts, Some(o.budget.clone()))
                .map_err(|e| ctx.err("intervals", e))?,
        );
    }
    Ok(LoadedOracle { values, intervals })
}
