//! `wbcd`: one binary wiring the simulator, protocol server, recorder,
//! demonstration tools and scoring into subcommands.
//!
//! Exit codes: 0 success, 1 domain error or failed check, 2 usage or
//! configuration error.

mod args;
mod commands;
mod output;
mod run_config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, OutputFormat, ScoreCommand};
use run_config::RunConfig;

#[derive(Debug)]
pub struct Failure {
    pub exit_code: u8,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn domain(kind: &str, message: impl Into<String>) -> Failure {
        Failure {
            exit_code: 1,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn usage(kind: &str, message: impl Into<String>) -> Failure {
        Failure {
            exit_code: 2,
            kind: kind.into(),
            message: message.into(),
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Serve(_) => "serve",
        Command::Drive(_) => "drive",
        Command::Record(_) => "record",
        Command::Replay(_) => "replay",
        Command::Trim(_) => "trim",
        Command::Prep(_) => "prep",
        Command::Score(s) => match s.command {
            ScoreCommand::Replay { .. } => "score replay",
            ScoreCommand::Table1 { .. } => "score table1",
        },
    }
}

/// Whether structured output was requested, read without a successful parse.
fn wants_structured() -> bool {
    let args: Vec<String> = std::env::args().collect();
    let flag = args.iter().enumerate().any(|(i, a)| {
        a == "--output=structured"
            || (a == "--output" && args.get(i + 1).is_some_and(|v| v == "structured"))
    });
    flag || std::env::var("WBCD_OUTPUT").is_ok_and(|v| v == "structured")
}

fn run(cli: &Cli) -> Result<output::Outcome, Failure> {
    let cfg = RunConfig::load(cli)?;
    match &cli.command {
        Command::Serve(a) => commands::serve(&cfg, a),
        Command::Drive(a) => commands::drive_cmd(&cfg, a),
        Command::Record(a) => commands::record(&cfg, a),
        Command::Replay(a) => commands::replay_cmd(&cfg, a),
        Command::Trim(a) => commands::trim(&cfg, a),
        Command::Prep(a) => commands::prep(&cfg, a),
        Command::Score(s) => commands::score(&s.command),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if wants_structured() {
                let f = Failure::usage("Usage", e.kind().to_string());
                return ExitCode::from(output::emit(OutputFormat::Structured, "", Err(&f)));
            }
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let name = command_name(&cli.command);
    let result = run(&cli);
    ExitCode::from(output::emit(cli.output, name, result.as_ref()))
}
