//! One function per subcommand, each turning a fixture into records.

use demuth_core::derivative::{classify_denjoy, pseudo_derivative, Extended};
use demuth_core::markov::{check_h, oscillation_tree, slope_bounds_check, truncate, SlopeVerdict};
use demuth_core::martingale::{
    check_fairness, find_savings_violation, level_sum, savings_transform, FairnessViolation,
};
use demuth_core::measure::{
    cdf, pushforward_from, transport, transport_all, validate_measure, MeasureError, Transport,
};
use demuth_core::numeric::Rational;
use demuth_core::randomness::{
    demuth_update, evaluate_with_precision, failure_class, interval_sequence_to_schnorr,
    pi1_residual, schnorr_to_interval_sequence, solovay_to_ml, validate, validate_as, KindData,
    TestFamily, TestKind, UpdateError, Violation, DEFAULT_PRECISION,
};
use demuth_core::real::CauchyName;
use demuth_core::tt::{induced_cylinder_measure, induced_measure};
use demuth_core::BitString;

use crate::config::Command;
use crate::fixture::{
    Fixture, LoadedFunction, LoadedFunctional, LoadedMartingale, LoadedMeasure, LoadedOracle,
    LoadedTest, LoadedTruncation, Subject, UpdateExpect,
};
use crate::report::{Record, Recorder, Status};

pub const DEFAULT_DEPTH: u32 = 8;
pub const DEFAULT_CONVERT_DEPTH: u32 = 8;

#[derive(Debug, Clone, Copy, Default)]
pub struct Params {
    pub depth: Option<u32>,
    pub precision: Option<u32>,
    pub scale: Option<u32>,
}

pub fn run_suite(f: &Fixture, suite: Command, p: &Params) -> Vec<Record> {
    let mut rec = Recorder::new(&f.name, suite);
    match (suite, &f.subject) {
        (Command::Verify, Subject::Test(t)) => verify_test(t, p, &mut rec),
        (Command::Verify, Subject::Measure(m)) => verify_measure(m, &mut rec),
        (Command::Verify, Subject::Functional(t)) => verify_functional(t, &mut rec),
        (Command::Verify, Subject::Martingale(m)) => verify_martingale(m, p, &mut rec),
        (Command::Verify, Subject::Truncation(t)) => verify_truncation(t, &mut rec),
        (Command::Verify, Subject::Function(g)) => verify_function(g, &mut rec),
        (Command::Verify, Subject::Oracle(o)) => verify_oracle(o, &mut rec),
        (Command::Evaluate, Subject::Test(t)) => evaluate_test(t, p, &mut rec),
        (Command::Transport, Subject::Measure(m)) => transport_measure(m, p, &mut rec),
        (Command::Derive, Subject::Function(g)) => derive_function(g, p, &mut rec),
        (Command::Tree, Subject::Function(g)) => tree_function(g, p, &mut rec),
        (Command::Convert, Subject::Test(t)) => convert_test(t, p, &mut rec),
        (Command::Convert, Subject::Oracle(o)) => convert_oracle(o, &mut rec),
        _ => {}
    }
    rec.records
}

fn m_subject(m: u32, version: usize, versions: usize) -> String {
    if versions > 1 {
        format!("m={} v={}", m, version)
    } else {
        format!("m={}", m)
    }
}

fn violation_values(v: &Violation) -> Vec<(&'static str, String)> {
    match v {
        Violation::MeasureBound {
            m,
            version,
            measure,
            bound,
        } => vec![
            ("m", m.to_string()),
            ("version", version.to_string()),
            ("measure", measure.to_string()),
            ("bound", bound.to_string()),
        ],
        Violation::DeclaredMismatch {
            m,
            declared,
            actual,
        } => vec![
            ("m", m.to_string()),
            ("declared", declared.to_string()),
            ("actual", actual.to_string()),
        ],
        Violation::MissingDeclared { m } | Violation::MissingBudget { m } => {
            vec![("m", m.to_string())]
        }
        Violation::SolovaySum {
            through_m,
            total,
            bound,
        } => vec![
            ("through_m", through_m.to_string()),
            ("total", total.to_string()),
            ("bound", bound.to_string()),
        ],
        Violation::BlockBound {
            m,
            r,
            measure,
            bound,
        } => vec![
            ("m", m.to_string()),
            ("r", r.to_string()),
            ("measure", measure.to_string()),
            ("bound", bound.to_string()),
        ],
        Violation::ClassBound { m, measure, bound }
        | Violation::Pi1Residual { m, measure, bound } => {
            vec![
                ("m", m.to_string()),
                ("measure", measure.to_string()),
                ("bound", bound.to_string()),
            ]
        }
        Violation::VersionBudget {
            m,
            versions,
            budget,
        } => vec![
            ("m", m.to_string()),
            ("versions", versions.to_string()),
            ("budget", budget.to_string()),
        ],
        Violation::KindMismatch { kind, requested } => {
            vec![
                ("kind", kind.to_string()),
                ("requested", requested.to_string()),
            ]
        }
        Violation::BadData(_) => vec![],
    }
}

fn push_validation(rec: &mut Recorder, check: &str, subject: &str, result: Result<(), Violation>) {
    match result {
        Ok(()) => rec.push::<&str, &str>(check, subject, Status::Pass, [], None),
        Err(v) => rec.push(
            check,
            subject,
            Status::Fail,
            violation_values(&v),
            Some(v.to_string()),
        ),
    }
}

/// Replays the update script, recording each outcome when asked.
fn apply_updates(
    t: &LoadedTest,
    family: &TestFamily,
    mut rec: Option<&mut Recorder>,
) -> TestFamily {
    let mut cur = family.clone();
    for (i, u) in t.updates.iter().enumerate() {
        let outcome = demuth_update(&cur, u.m, u.version.clone());
        let seen = match &outcome {
            Ok(_) => Some(UpdateExpect::Accepted),
            Err(UpdateError::BudgetExceeded { .. }) => Some(UpdateExpect::BudgetExceeded),
            Err(UpdateError::MeasureBoundViolation { .. }) => Some(UpdateExpect::MeasureBound),
            Err(_) => None,
        };
        if let Some(rec) = rec.as_deref_mut() {
            let bound = Rational::pow2(-(u.m as i64));
            let mut values = vec![
                ("m", u.m.to_string()),
                ("measure", u.version.measure().to_string()),
                ("bound", bound.to_string()),
                ("expected", u.expect.as_str().to_string()),
                ("outcome", seen.map_or("ERROR", |s| s.as_str()).to_string()),
            ];
            if let Some(b) = cur.budget(u.m) {
                values.push(("budget", b.to_string()));
            }
            let witness = outcome.as_ref().err().map(|e| e.to_string());
            rec.push(
                "update",
                format!("#{}", i),
                Status::of(seen == Some(u.expect)),
                values,
                witness,
            );
        }
        if let Ok(next) = outcome {
            cur = next;
        }
    }
    cur
}

fn verify_test(t: &LoadedTest, p: &Params, rec: &mut Recorder) {
    let family = match &t.family {
        Ok(f) => f,
        Err(e) => return rec.error("construct", t.kind.as_str(), e),
    };
    let family = apply_updates(t, family, Some(rec));
    let depth = p.depth.unwrap_or(DEFAULT_DEPTH);
    let kind = family.kind;
    if kind.has_ml_bound() && kind != TestKind::IntervalSequence {
        for (i, versions) in family.components.iter().enumerate() {
            let m = family.index_of(i);
            if m > depth {
                break;
            }
            let bound = Rational::pow2(-(m as i64));
            for (v, u) in versions.iter().enumerate() {
                let measure = u.measure();
                let status = Status::of(measure <= bound);
                let values = [
                    ("measure", measure.to_string()),
                    ("bound", bound.to_string()),
                ];
                rec.push(
                    "measure_bound",
                    m_subject(m, v, versions.len()),
                    status,
                    values,
                    None,
                );
            }
        }
    }
    match &family.data {
        KindData::Schnorr { declared } => {
            for (i, u) in family.finals().iter().enumerate() {
                let m = family.index_of(i);
                let actual = u.measure();
                match declared.get(i) {
                    Some(d) => rec.push(
                        "declared",
                        format!("m={}", m),
                        Status::of(*d == actual),
                        [("declared", d.to_string()), ("actual", actual.to_string())],
                        None,
                    ),
                    None => rec.error("declared", format!("m={}", m), "no declared measure"),
                }
            }
        }
        KindData::Solovay { bound } => {
            let total: Rational = family.finals().iter().map(|u| u.measure()).sum();
            rec.push(
                "solovay_sum",
                "all",
                Status::of(total <= *bound),
                [("total", total.to_string()), ("bound", bound.to_string())],
                None,
            );
        }
        KindData::IntervalSequence { blocks } => {
            for b in blocks {
                let measure = b.kept().measure();
                let bound = Rational::pow2(-((b.m + b.r) as i64));
                rec.push(
                    "block_bound",
                    format!("m={} r={}", b.m, b.r),
                    Status::of(measure <= bound),
                    [
                        ("measure", measure.to_string()),
                        ("bound", bound.to_string()),
                        ("excised", b.excised.len().to_string()),
                    ],
                    None,
                );
            }
            let top = blocks.iter().map(|b| b.m).max().unwrap_or(0).min(depth);
            for m in 1..=top {
                let measure = failure_class(blocks, m, u32::MAX).measure();
                let bound = Rational::pow2(-(m as i64));
                rec.push(
                    "class_bound",
                    format!("m={}", m),
                    Status::of(measure <= bound),
                    [
                        ("measure", measure.to_string()),
                        ("bound", bound.to_string()),
                    ],
                    None,
                );
            }
        }
        KindData::Pi1 { q, c } => {
            for (m, cm) in c.iter().enumerate() {
                let measure = pi1_residual(q, cm, q.len());
                let bound = Rational::pow2(-(m as i64));
                rec.push(
                    "pi1_residual",
                    format!("m={}", m),
                    Status::of(measure < bound),
                    [
                        ("measure", measure.to_string()),
                        ("bound", bound.to_string()),
                    ],
                    None,
                );
            }
        }
        KindData::Demuth { .. } => {
            for (i, versions) in family.components.iter().enumerate() {
                let m = family.index_of(i);
                match family.budget(m) {
                    Some(budget) => rec.push(
                        "version_budget",
                        format!("m={}", m),
                        Status::of(versions.len() <= budget),
                        [("versions", versions.len()), ("budget", budget)],
                        None,
                    ),
                    None => rec.error("version_budget", format!("m={}", m), "no change budget"),
                }
            }
        }
        KindData::Plain => {}
    }
    push_validation(rec, "validate", kind.as_str(), validate(&family));
    for &weaker in kind.weakenings().iter().filter(|&&k| k != kind) {
        push_validation(
            rec,
            "validate_as",
            weaker.as_str(),
            validate_as(&family, weaker),
        );
    }
}

fn evaluate_test(t: &LoadedTest, p: &Params, rec: &mut Recorder) {
    let family = match &t.family {
        Ok(f) => apply_updates(t, f, None),
        Err(e) => return rec.error("construct", t.kind.as_str(), e),
    };
    let depth = p.depth.unwrap_or(DEFAULT_DEPTH) as usize;
    let precision = p.precision.unwrap_or(DEFAULT_PRECISION);
    for point in &t.points {
        let e = evaluate_with_precision(&family, &point.name, depth, precision);
        for c in &e.components {
            let mut values = vec![
                ("result", c.result.as_str().to_string()),
                ("window", c.window.to_string()),
            ];
            if let Some(w) = &c.witness {
                values.push(("witness", w.to_string()));
            }
            rec.push(
                "membership",
                format!("{} m={}", point.label, c.m),
                Status::Info,
                values,
                None,
            );
        }
        let s = &e.summary;
        let outcome = s.outcome.as_str();
        let status = match &point.expect {
            Some(x) => Status::of(x == outcome),
            None => Status::Info,
        };
        let mut values = vec![
            ("outcome", outcome.to_string()),
            ("convention", s.convention.as_str().to_string()),
            ("considered", s.considered.to_string()),
            ("hits", s.hits.to_string()),
            ("escapes", s.escapes.to_string()),
            ("undecided", s.undecided.to_string()),
        ];
        if let Some(x) = &point.expect {
            values.push(("expected", x.clone()));
        }
        rec.push("outcome", point.label.clone(), status, values, None);
    }
}

fn verify_measure(m: &LoadedMeasure, rec: &mut Recorder) {
    let subject = format!("depth={}", m.depth);
    match validate_measure(&m.measure, m.depth) {
        Ok(()) => rec.push::<&str, &str>("validate_measure", subject, Status::Pass, [], None),
        Err(v) => rec.push::<&str, &str>(
            "validate_measure",
            subject,
            Status::Fail,
            [],
            Some(v.to_string()),
        ),
    }
    for (at, expect) in &m.cdf {
        match cdf(&m.measure, at) {
            Ok(v) => rec.push(
                "cdf",
                at.to_string(),
                Status::of(v == *expect),
                [("value", v.to_string()), ("expected", expect.to_string())],
                None,
            ),
            Err(e) => rec.error("cdf", at.to_string(), e),
        }
    }
}

fn error_name(e: &MeasureError) -> &'static str {
    match e {
        MeasureError::ZeroMassCylinder(_) => "ZERO_MASS_CYLINDER",
        MeasureError::AtomSuspected { .. } => "ATOM_SUSPECTED",
        MeasureError::BeyondDepth(..) => "BEYOND_DEPTH",
        MeasureError::BadParameter(_) => "BAD_PARAMETER",
        MeasureError::NotDyadic(_) => "NOT_DYADIC",
        MeasureError::Invalid(_) => "INVALID",
    }
}

fn transport_measure(m: &LoadedMeasure, p: &Params, rec: &mut Recorder) {
    for (a, x) in &m.prefixes {
        match transport(&m.measure, a) {
            Ok(t) => {
                let mut ok = true;
                let mut checked = false;
                let mut expect = |c: bool| {
                    checked = true;
                    ok &= c;
                };
                if let Some(lo) = &x.lo {
                    expect(t.lo == *lo);
                }
                if let Some(hi) = &x.hi {
                    expect(t.hi == *hi);
                }
                if let Some(o) = &x.output {
                    expect(t.output == *o);
                }
                if let Some(o) = &x.output_prefix {
                    expect(o.is_prefix_of(&t.output));
                }
                if let Some(s) = &x.status {
                    expect(s == t.status.as_str());
                }
                if x.error.is_some() {
                    expect(false);
                }
                let status = if checked {
                    Status::of(ok)
                } else {
                    Status::Info
                };
                let values = [
                    ("lo", t.lo.to_string()),
                    ("hi", t.hi.to_string()),
                    ("output", t.output.to_string()),
                    ("status", t.status.as_str().to_string()),
                ];
                rec.push("transport", a.to_string(), status, values, None);
            }
            Err(e) => {
                let status = Status::of(x.error.as_deref() == Some(error_name(&e)));
                rec.push(
                    "transport",
                    a.to_string(),
                    status,
                    [("error", error_name(&e))],
                    Some(e.to_string()),
                );
            }
        }
    }
    let depth = p.depth.map_or(m.transport_depth, |d| d as usize);
    if let Some(cap) = m.measure.depth() {
        if depth > cap {
            return rec.error(
                "transport_all",
                format!("depth={}", depth),
                format!("measure only reaches depth {}", cap),
            );
        }
    }
    let mut levels: Vec<Vec<Transport>> = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        match transport_all(&m.measure, n) {
            Ok(l) => levels.push(l),
            Err(e) => {
                return rec.push(
                    "transport_all",
                    format!("depth={}", n),
                    Status::Fail,
                    [("error", error_name(&e))],
                    Some(e.to_string()),
                )
            }
        }
    }
    let last = &levels[depth];
    let bad_order = last.windows(2).find(|w| {
        let (a, b) = (&w[0].output, &w[1].output);
        let nested = a.is_prefix_of(b) || b.is_prefix_of(a);
        w[0].hi > w[1].lo || (!nested && a.left_end() > b.left_end())
    });
    let subject = format!("depth={}", depth);
    match bad_order {
        None => rec.push(
            "monotone",
            subject.clone(),
            Status::Pass,
            [("inputs", last.len())],
            None,
        ),
        Some(w) => rec.push(
            "monotone",
            subject.clone(),
            Status::Fail,
            [
                ("left", w[0].input.to_string()),
                ("right", w[1].input.to_string()),
                ("left_hi", w[0].hi.to_string()),
                ("right_lo", w[1].lo.to_string()),
            ],
            None,
        ),
    }
    let mut incoherent = None;
    'outer: for n in 1..=depth {
        for (i, t) in levels[n].iter().enumerate() {
            let parent = &levels[n - 1][i / 2];
            let nested = parent.lo <= t.lo && t.hi <= parent.hi;
            if !nested || !parent.output.is_prefix_of(&t.output) {
                incoherent = Some((parent, t));
                break 'outer;
            }
        }
    }
    match incoherent {
        None => rec.push(
            "prefix_coherent",
            subject.clone(),
            Status::Pass,
            [("levels", depth + 1)],
            None,
        ),
        Some((parent, t)) => rec.push(
            "prefix_coherent",
            subject.clone(),
            Status::Fail,
            [
                ("input", t.input.to_string()),
                ("output", t.output.to_string()),
                ("parent_output", parent.output.to_string()),
            ],
            None,
        ),
    }
    for n in 0..=m.tau_len.min(depth) {
        for tau in BitString::all_of_length(n as u32) {
            let c = pushforward_from(last, &tau);
            rec.push(
                "pushforward",
                format!("tau={}", tau),
                Status::of(c.passed),
                [
                    ("mass", c.mass.to_string()),
                    ("residual", c.residual.to_string()),
                    ("target", c.target.to_string()),
                ],
                None,
            );
        }
    }
}

fn verify_functional(t: &LoadedFunctional, rec: &mut Recorder) {
    let phi = match &t.functional {
        Ok(phi) => phi,
        Err(e) => return rec.error("construct", t.source.clone().unwrap_or_default(), e),
    };
    if let (Some(src), Some(u)) = (&t.source, t.undetermined) {
        rec.push(
            "from_ucf",
            src.clone(),
            Status::Info,
            [("undetermined", u)],
            None,
        );
    }
    let subject = format!("depth={}", t.depth);
    match induced_cylinder_measure(phi, t.depth) {
        Ok(mu) => match validate_measure(&mu, t.depth as usize) {
            Ok(()) => rec.push::<&str, &str>("additivity", subject, Status::Pass, [], None),
            Err(v) => {
                rec.push::<&str, &str>("additivity", subject, Status::Fail, [], Some(v.to_string()))
            }
        },
        Err(e) => rec.error("additivity", subject, e),
    }
    for (sigma, expect) in &t.expect {
        match induced_measure(phi, sigma) {
            Ok(v) => rec.push(
                "induced_measure",
                sigma.to_string(),
                Status::of(v == *expect),
                [("value", v.to_string()), ("expected", expect.to_string())],
                None,
            ),
            Err(e) => rec.error("induced_measure", sigma.to_string(), e),
        }
    }
}

fn verify_martingale(lm: &LoadedMartingale, p: &Params, rec: &mut Recorder) {
    let m = &lm.martingale;
    let depth = p.depth.unwrap_or(lm.depth).min(m.depth());
    let subject = format!("depth={}", depth);
    match check_fairness(m, depth) {
        Ok(Ok(())) => rec.push::<&str, &str>("fairness", subject.clone(), Status::Pass, [], None),
        Ok(Err(FairnessViolation::Unfair {
            sigma,
            doubled,
            children,
        })) => rec.push(
            "fairness",
            subject.clone(),
            Status::Fail,
            [
                ("sigma", sigma.to_string()),
                ("doubled", doubled.to_string()),
                ("children", children.to_string()),
            ],
            None,
        ),
        Ok(Err(FairnessViolation::Negative { sigma, value })) => rec.push(
            "fairness",
            subject.clone(),
            Status::Fail,
            [("sigma", sigma.to_string()), ("value", value.to_string())],
            None,
        ),
        Err(e) => return rec.error("fairness", subject, e),
    }
    let root = m.initial_capital().clone();
    let broken = (0..=depth).find_map(|n| {
        let sum = level_sum(m, n)?;
        let expected = &root * &Rational::pow2(n as i64);
        (sum != expected).then_some((n, sum, expected))
    });
    match broken {
        None => rec.push(
            "level_sum",
            subject.clone(),
            Status::Pass,
            [("initial", root.to_string())],
            None,
        ),
        Some((n, sum, expected)) => rec.push(
            "level_sum",
            subject.clone(),
            Status::Fail,
            [
                ("n", n.to_string()),
                ("sum", sum.to_string()),
                ("expected", expected.to_string()),
            ],
            None,
        ),
    }
    match find_savings_violation(m, depth) {
        Ok(Some(v)) => rec.push(
            "savings_property",
            "input",
            Status::Info,
            [
                ("sigma", v.sigma.to_string()),
                ("tau", v.tau.to_string()),
                ("at_sigma", v.at_sigma.to_string()),
                ("at_tau", v.at_tau.to_string()),
            ],
            None,
        ),
        Ok(None) => rec.push(
            "savings_property",
            "input",
            Status::Info,
            [("violation", "none")],
            None,
        ),
        Err(e) => rec.error("savings_property", "input", e),
    }
    let s = match savings_transform(m, depth) {
        Ok(s) => s,
        Err(e) => return rec.error("savings_transform", subject, e),
    };
    let fair = matches!(check_fairness(&s.martingale, depth), Ok(Ok(())));
    let violation = find_savings_violation(&s.martingale, depth).ok().flatten();
    let mut values = vec![
        ("fair", fair.to_string()),
        ("coefficient", s.coefficient.to_string()),
        ("offset", s.offset.to_string()),
    ];
    if let Some(v) = &violation {
        values.push(("sigma", v.sigma.to_string()));
        values.push(("tau", v.tau.to_string()));
        values.push(("at_sigma", v.at_sigma.to_string()));
        values.push(("at_tau", v.at_tau.to_string()));
    }
    rec.push(
        "savings_transform",
        subject,
        Status::of(fair && violation.is_none()),
        values,
        None,
    );
}

fn verify_truncation(t: &LoadedTruncation, rec: &mut Recorder) {
    let cover = match check_h(&t.cover) {
        Ok(()) => {
            rec.push(
                "cover_h",
                "C",
                Status::Pass,
                [("measure", t.cover.measure())],
                None,
            );
            &t.cover
        }
        Err(v) => {
            return rec.push::<&str, &str>("cover_h", "C", Status::Fail, [], Some(v.to_string()))
        }
    };
    let truncated = match truncate(&t.function, cover) {
        Ok(g) => g,
        Err(e) => return rec.error("truncate", "C", e),
    };
    let subject = format!("w={} z={} grid={}", t.w, t.z, t.grid);
    match slope_bounds_check(&t.function, cover, &t.w, &t.z, t.grid) {
        Ok(SlopeVerdict::Pass) => {
            rec.push::<&str, &str>("slope_bounds", subject, Status::Pass, [], None)
        }
        Ok(SlopeVerdict::CoverRise {
            interval,
            increase,
            bound,
        }) => rec.push(
            "slope_bounds",
            subject,
            Status::Fail,
            [
                ("interval", interval.to_string()),
                ("increase", increase.to_string()),
                ("bound", bound.to_string()),
            ],
            Some("cover rise".into()),
        ),
        Ok(SlopeVerdict::SlopeCeiling {
            x,
            y,
            increase,
            bound,
        }) => rec.push(
            "slope_bounds",
            subject,
            Status::Fail,
            [
                ("x", x.to_string()),
                ("y", y.to_string()),
                ("increase", increase.to_string()),
                ("bound", bound.to_string()),
            ],
            Some("slope ceiling".into()),
        ),
        Err(e) => rec.error("slope_bounds", subject, e),
    }
    for (x, expect) in &t.values {
        let v = truncated.eval(x);
        rec.push(
            "value",
            x.to_string(),
            Status::of(v == *expect),
            [("value", v.to_string()), ("expected", expect.to_string())],
            None,
        );
    }
    if let Some(g) = t.check_grid {
        let parts = cover.intervals();
        let step = Rational::pow2(-(g as i64));
        let mut mismatch = None;
        for j in 0..=(1u64 << g) {
            let x = Rational::from_integer(j as i64) * &step;
            // Chord inside a cover interval, the function itself elsewhere.
            let expected = match parts.iter().find(|i| *i.lo() < x && x < *i.hi()) {
                Some(i) => {
                    let (a, b) = (i.lo(), i.hi());
                    let (fa, fb) = (t.function.eval(a), t.function.eval(b));
                    &fa + &(&(&fb - &fa) * &(&(&x - a) / &(b - a)))
                }
                None => t.function.eval(&x),
            };
            let got = truncated.eval(&x);
            if got != expected {
                mismatch = Some((x, got, expected));
                break;
            }
        }
        let subject = format!("grid=2^{}", g);
        match mismatch {
            None => rec.push(
                "grid_agreement",
                subject,
                Status::Pass,
                [("points", (1u64 << g) + 1)],
                None,
            ),
            Some((x, got, expected)) => rec.push(
                "grid_agreement",
                subject,
                Status::Fail,
                [
                    ("x", x.to_string()),
                    ("value", got.to_string()),
                    ("expected", expected.to_string()),
                ],
                None,
            ),
        }
    }
}

fn verify_function(g: &LoadedFunction, rec: &mut Recorder) {
    for (x, expect) in &g.values {
        let v = g.function.eval(x);
        rec.push(
            "value",
            x.to_string(),
            Status::of(v == *expect),
            [("value", v.to_string()), ("expected", expect.to_string())],
            None,
        );
    }
}

fn within(e: &Extended, target: &Rational, tol: &Rational) -> bool {
    e.finite().is_some_and(|v| (v - target).abs() <= *tol)
}

fn derive_function(g: &LoadedFunction, p: &Params, rec: &mut Recorder) {
    for d in &g.derive {
        let scale = p.scale.unwrap_or(d.scale);
        let grid = p.precision.unwrap_or(d.grid);
        let h = Rational::pow2(-(scale as i64));
        let subject = format!("x={} h=2^-{} grid={}", d.point, scale, grid);
        let z = CauchyName::constant(d.point.clone());
        let e = match pseudo_derivative(&g.function, &z, &h, grid) {
            Ok(e) => e,
            Err(err) => {
                rec.error("pseudo_derivative", subject, err);
                continue;
            }
        };
        let tol = Rational::pow2(-(d.tol as i64));
        let verdict = classify_denjoy(&e, &tol);
        let mut ok = true;
        let mut checked = false;
        if let Some(x) = &d.expect {
            checked = true;
            ok &= x == verdict.as_str();
        }
        if let Some((target, w)) = &d.near {
            checked = true;
            let w = Rational::pow2(-(*w as i64));
            ok &= within(&e.upper, target, &w) && within(&e.lower, target, &w);
        }
        let status = if checked {
            Status::of(ok)
        } else {
            Status::Info
        };
        let values = [
            ("upper", e.upper.to_string()),
            ("lower", e.lower.to_string()),
            ("scale", e.scale.to_string()),
            ("pairs", e.pairs.to_string()),
            ("tol", tol.to_string()),
            ("verdict", verdict.as_str().to_string()),
        ];
        rec.push("pseudo_derivative", subject, status, values, None);
    }
}

fn tree_function(g: &LoadedFunction, p: &Params, rec: &mut Recorder) {
    for r in &g.tree {
        let depth = p.depth.unwrap_or(r.depth);
        let subject = format!("n={} depth={}", r.n, depth);
        let tree = match oscillation_tree(&g.function, r.n, depth) {
            Ok(t) => t,
            Err(e) => {
                rec.error("oscillation_tree", subject, e);
                continue;
            }
        };
        let closed = tree.is_downward_closed();
        let expected = match r
            .expect
            .as_deref()
            .map(|e| e.split_once(' ').unwrap_or((e, "")))
        {
            Some(("empty", _)) => tree.nodes.is_empty(),
            Some(("nonempty", _)) => (0..=depth as usize).all(|k| tree.count_at(k) > 0),
            Some(("empty_from", k)) => match k.parse::<usize>() {
                Ok(k) => (k..=depth as usize).all(|j| tree.count_at(j) == 0),
                Err(_) => false,
            },
            _ => true,
        };
        let mut values: Vec<(String, String)> = vec![
            ("nodes".into(), tree.nodes.len().to_string()),
            ("downward_closed".into(), closed.to_string()),
        ];
        for k in 0..=depth as usize {
            values.push((format!("level_{:02}", k), tree.count_at(k).to_string()));
        }
        rec.push(
            "oscillation_tree",
            subject,
            Status::of(closed && expected),
            values,
            None,
        );
    }
}

fn push_components(rec: &mut Recorder, check: &str, t: &TestFamily) {
    for (i, u) in t.finals().iter().enumerate() {
        let m = t.index_of(i);
        let measure = u.measure();
        let bound = Rational::pow2(-(m as i64));
        rec.push(
            check,
            format!("m={}", m),
            Status::of(measure <= bound),
            [
                ("measure", measure.to_string()),
                ("bound", bound.to_string()),
                ("parts", u.parts().len().to_string()),
            ],
            None,
        );
    }
}

fn convert_test(t: &LoadedTest, p: &Params, rec: &mut Recorder) {
    let family = match &t.family {
        Ok(f) => f,
        Err(e) => return rec.error("construct", t.kind.as_str(), e),
    };
    let depth = p.depth.unwrap_or(DEFAULT_CONVERT_DEPTH);
    let converted = match family.kind {
        TestKind::Solovay => ("solovay_to_ml", solovay_to_ml(family, depth)),
        TestKind::IntervalSequence => (
            "interval_sequence_to_schnorr",
            interval_sequence_to_schnorr(family, depth),
        ),
        TestKind::Pi1 => {
            push_components(rec, "pi1_to_ml", family);
            push_validation(rec, "pi1_to_ml", "ML", validate_as(family, TestKind::Ml));
            return;
        }
        _ => return,
    };
    match converted {
        (check, Ok(out)) => {
            push_components(rec, check, &out);
            push_validation(rec, check, out.kind.as_str(), validate(&out));
        }
        (check, Err(e)) => rec.error(check, "all", e),
    }
}

fn verify_oracle(o: &LoadedOracle, rec: &mut Recorder) {
    let mut check = |name: &str, changes: Vec<(usize, Option<usize>)>| {
        for (x, (c, b)) in changes.into_iter().enumerate() {
            let subject = format!("{} x={}", name, x);
            match b {
                Some(b) => rec.push(
                    "change_budget",
                    subject,
                    Status::of(c <= b),
                    [("changes", c), ("budget", b)],
                    None,
                ),
                None => rec.push(
                    "change_budget",
                    subject,
                    Status::Info,
                    [("changes", c)],
                    None,
                ),
            }
        }
    };
    if let Some(v) = &o.values {
        check(
            "values",
            (0..v.queries())
                .map(|x| (v.changes(x), v.budget(x)))
                .collect(),
        );
    }
    for (i, v) in o.intervals.iter().enumerate() {
        let name = format!("m={}", i + 1);
        check(
            &name,
            (0..v.queries())
                .map(|x| (v.changes(x), v.budget(x)))
                .collect(),
        );
    }
}

fn convert_oracle(o: &LoadedOracle, rec: &mut Recorder) {
    if o.intervals.is_empty() {
        return;
    }
    match schnorr_to_interval_sequence(&o.intervals) {
        Ok(t) => {
            push_components(rec, "schnorr_to_interval_sequence", &t);
            push_validation(
                rec,
                "schnorr_to_interval_sequence",
                t.kind.as_str(),
                validate(&t),
            );
        }
        Err(e) => rec.error("schnorr_to_interval_sequence", "all", e),
    }
}
