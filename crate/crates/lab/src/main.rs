use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use demuth_lab::{run, Command, Format, RunConfig};

#[derive(Parser)]
#[command(
    name = "labcli",
    version,
    about = "Run demuth-core checks over fixture files"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Fixture file or directory; repeatable. Defaults to $DEMUTHLAB_FIXTURES
    /// or the shipped fixture directory.
    #[arg(long, global = true)]
    fixture: Vec<PathBuf>,
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// Evaluation precision, or the grid exponent for `derive`.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// h = 2^-scale for `derive`.
    #[arg(long, global = true)]
    scale: Option<u32>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Fmt::Json)]
    format: Fmt,
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Check every bound a fixture declares
    Verify,
    /// Membership of the fixture points in each test
    Evaluate,
    /// Transport of measure fixtures to the uniform measure
    Transport,
    /// Pseudo-derivative estimates
    Derive,
    /// Oscillation trees
    Tree,
    /// Conversions between test kinds
    Convert,
    /// All of the above
    Report,
}

#[derive(ValueEnum, Clone, Copy)]
enum Fmt {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let command = match cli.command {
        Sub::Verify => Command::Verify,
        Sub::Evaluate => Command::Evaluate,
        Sub::Transport => Command::Transport,
        Sub::Derive => Command::Derive,
        Sub::Tree => Command::Tree,
        Sub::Convert => Command::Convert,
        Sub::Report => Command::Report,
    };
    let config = RunConfig {
        command,
        fixture_paths: cli.fixture,
        depth: cli.depth,
        precision: cli.precision,
        scale: cli.scale,
        output_path: cli.out,
        format: match cli.format {
            Fmt::Json => Format::Json,
            Fmt::Text => Format::Text,
        },
        workers: cli.workers,
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("labcli: {}", e);
            return ExitCode::from(2);
        }
    };
    let text = report.render(config.format);
    match &config.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("labcli: {}: {}", path.display(), e);
                return ExitCode::from(2);
            }
        }
        None => print!("{}", text),
    }
    ExitCode::from(report.exit_code() as u8)
}
