//! Report records, canonical ordering and rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::{Command, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// Observations that are not checks.
    Info,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }

    pub fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Record {
    pub fixture: String,
    pub suite: Command,
    pub check: String,
    pub subject: String,
    pub status: Status,
    /// Exact values, rationals as `p/q`.
    pub values: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip)]
    pub seq: usize,
}

/// Collects the records of one fixture under one suite, numbering them in
/// emission order.
pub struct Recorder {
    fixture: String,
    suite: Command,
    pub records: Vec<Record>,
}

impl Recorder {
    pub fn new(fixture: &str, suite: Command) -> Self {
        Recorder {
            fixture: fixture.to_string(),
            suite,
            records: Vec::new(),
        }
    }

    pub fn push<K: ToString, V: ToString>(
        &mut self,
        check: &str,
        subject: impl Into<String>,
        status: Status,
        values: impl IntoIterator<Item = (K, V)>,
        witness: Option<String>,
    ) {
        let seq = self.records.len();
        self.records.push(Record {
            fixture: self.fixture.clone(),
            suite: self.suite,
            check: check.to_string(),
            subject: subject.into(),
            status,
            values: values
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            witness,
            seq,
        });
    }

    /// A failure carrying only an error message.
    pub fn error(&mut self, check: &str, subject: impl Into<String>, message: impl ToString) {
        self.push::<&str, String>(check, subject, Status::Fail, [], Some(message.to_string()));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    pub depth: Option<u32>,
    pub precision: Option<u32>,
    pub scale: Option<u32>,
    pub fixtures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
    pub verdict: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub command: Command,
    pub version: String,
    pub config: ConfigEcho,
    pub records: Vec<Record>,
    pub summary: SuiteSummary,
}

impl Report {
    /// Sorts records by fixture, suite and emission order, then tallies.
    pub fn assemble(command: Command, config: ConfigEcho, mut records: Vec<Record>) -> Self {
        records.sort_by(|a, b| (&a.fixture, a.suite, a.seq).cmp(&(&b.fixture, b.suite, b.seq)));
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        let (pass, fail, info) = (
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Info),
        );
        let summary = SuiteSummary {
            total: records.len(),
            pass,
            fail,
            info,
            verdict: Status::of(fail == 0),
        };
        Report {
            command,
            version: concat!("demuth-lab ", env!("CARGO_PKG_VERSION")).to_string(),
            config,
            records,
            summary,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per record plus a summary; for reading, not parsing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} ({})", self.command.as_str(), self.version);
        for r in &self.records {
            let _ = write!(
                out,
                "{} {} {} {} {}",
                r.status.as_str(),
                r.fixture,
                r.suite.as_str(),
                r.check,
                r.subject
            );
            for (k, v) in &r.values {
                let _ = write!(out, " {}={}", k, v);
            }
            if let Some(w) = &r.witness {
                let _ = write!(out, " | {}", w);
            }
            out.push('\n');
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "{}: {} records, {} pass, {} fail, {} info",
            s.verdict.as_str(),
            s.total,
            s.pass,
            s.fail,
            s.info
        );
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(fixture: &str, suite: Command, seq: usize, status: Status) -> Record {
        Record {
            fixture: fixture.into(),
            suite,
            check: format!("c{}", seq),
            subject: String::new(),
            status,
            values: BTreeMap::new(),
            witness: None,
            seq,
        }
    }

    #[test]
    fn assembly_orders_and_tallies() {
        let echo = ConfigEcho {
            depth: None,
            precision: None,
            scale: None,
            fixtures: vec!["a".into(), "b".into()],
        };
        let records = vec![
            record("b", Command::Verify, 0, Status::Pass),
            record("a", Command::Transport, 0, Status::Info),
            record("a", Command::Verify, 1, Status::Fail),
            record("a", Command::Verify, 0, Status::Pass),
        ];
        let r = Report::assemble(Command::Report, echo, records);
        let order: Vec<(&str, usize)> = r
            .records
            .iter()
            .map(|x| (x.fixture.as_str(), x.seq))
            .collect();
        assert_eq!(order, [("a", 0), ("a", 1), ("a", 0), ("b", 0)]);
        assert_eq!(r.records[2].suite, Command::Transport);
        assert_eq!((r.summary.pass, r.summary.fail, r.summary.info), (2, 1, 1));
        assert_eq!(r.exit_code(), 1);
        assert!(r
            .to_text()
            .ends_with("FAIL: 4 records, 2 pass, 1 fail, 1 info\n"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["summary"]["verdict"], "FAIL");
        assert!(json["records"][0].get("seq").is_none());
    }
}
