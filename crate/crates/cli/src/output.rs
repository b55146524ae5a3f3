use serde_json::{json, Value};

use crate::args::OutputFormat;
use crate::Failure;

/// Version of the structured output document.
pub const SCHEMA: u32 = 1;

/// What a subcommand produced: a machine-readable result and its text rendering.
pub struct Outcome {
    pub result: Value,
    pub text: String,
    /// A check ran to completion and did not hold.
    pub failed_check: Option<String>,
}

impl Outcome {
    pub fn new(result: Value, text: impl Into<String>) -> Outcome {
        Outcome {
            result,
            text: text.into(),
            failed_check: None,
        }
    }
}

pub fn emit(format: OutputFormat, command: &str, outcome: Result<&Outcome, &Failure>) -> u8 {
    let code = match outcome {
        Ok(o) if o.failed_check.is_some() => 1,
        Ok(_) => 0,
        Err(f) => f.exit_code,
    };
    match format {
        OutputFormat::Text => match outcome {
            Ok(o) => {
                print!("{}", o.text);
                if let Some(why) = &o.failed_check {
                    eprintln!("wbcd {command}: {why}");
                }
            }
            Err(f) => eprintln!("wbcd {command}: {}: {}", f.kind, f.message),
        },
        OutputFormat::Structured => {
            let doc = match outcome {
                Ok(o) => json!({
                    "schema": SCHEMA,
                    "command": command,
                    "ok": o.failed_check.is_none(),
                    "exit_code": code,
                    "result": o.result,
                    "error": o.failed_check.as_ref().map(|m| json!({"kind": "CheckFailed", "message": m})),
                }),
                Err(f) => json!({
                    "schema": SCHEMA,
                    "command": command,
                    "ok": false,
                    "exit_code": code,
                    "result": Value::Null,
                    "error": {"kind": f.kind, "message": f.message},
                }),
            };
            println!("{doc}");
        }
    }
    code
}
