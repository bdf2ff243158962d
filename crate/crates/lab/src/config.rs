use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::LabError;

/// Default fixture directory override.
pub const FIXTURE_ENV: &str = "DEMUTHLAB_FIXTURES";

pub const MAX_DEPTH: u32 = 16;
pub const MAX_EVAL_PRECISION: u32 = 256;
pub const MAX_SCALE: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Evaluate,
    Transport,
    Derive,
    Tree,
    Convert,
    Report,
}

impl Command {
    pub const SUITES: [Command; 6] = [
        Command::Verify,
        Command::Evaluate,
        Command::Transport,
        Command::Derive,
        Command::Tree,
        Command::Convert,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Evaluate => "evaluate",
            Command::Transport => "transport",
            Command::Derive => "derive",
            Command::Tree => "tree",
            Command::Convert => "convert",
            Command::Report => "report",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::SUITES
            .iter()
            .chain([&Command::Report])
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown command {:?}", s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format {:?}", s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    /// Files or directories; empty means the default fixture directory.
    pub fixture_paths: Vec<PathBuf>,
    pub depth: Option<u32>,
    /// Evaluation precision for `evaluate`, grid exponent for `derive`.
    pub precision: Option<u32>,
    /// `h = 2^-scale` for `derive`.
    pub scale: Option<u32>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            fixture_paths: Vec::new(),
            depth: None,
            precision: None,
            scale: None,
            output_path: None,
            format: Format::Json,
            workers: None,
        }
    }

    /// Budget checks, run before any fixture is read.
    pub fn validate(&self) -> Result<(), LabError> {
        let check = |field: &str, value: Option<u32>, limit: u32| match value {
            Some(v) if v > limit => Err(LabError::BudgetExceeded {
                field: field.into(),
                value: v as u64,
                limit: limit as u64,
            }),
            _ => Ok(()),
        };
        check("depth", self.depth, MAX_DEPTH)?;
        check("scale", self.scale, MAX_SCALE)?;
        let precision_limit = match self.command {
            Command::Derive | Command::Report => demuth_core::derivative::MAX_GRID,
            _ => MAX_EVAL_PRECISION,
        };
        check("precision", self.precision, precision_limit)?;
        if self.workers == Some(0) {
            return Err(LabError::BudgetExceeded {
                field: "workers".into(),
                value: 0,
                limit: 0,
            });
        }
        Ok(())
    }
}

pub fn default_fixture_dir() -> PathBuf {
    match std::env::var_os(FIXTURE_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"),
    }
}

/// Expands directories to their `*.json` files (not recursive), sorted.
pub fn resolve_fixture_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, LabError> {
    let roots = if paths.is_empty() {
        vec![default_fixture_dir()]
    } else {
        paths.to_vec()
    };
    let mut out = Vec::new();
    for root in roots {
        if root.is_dir() {
            let io = |e| LabError::Io {
                path: root.display().to_string(),
                source: e,
            };
            let mut files: Vec<PathBuf> = std::fs::read_dir(&root)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(root);
        }
    }
    Ok(out)
}
