use std::fmt;

use ridgesplit::calculus::{CalculusError, IngestError};
use ridgesplit::geometry::GeometryError;
use ridgesplit::{DecomposeError, FormatError, PdeError};
use serde_json::{json, Value};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DEFECT: u8 = 3;

/// A failed run: exit status plus the fields of its final record.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub details: Value,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            kind: "input",
            message: message.into(),
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError {
            kind: "ingest",
            ..CliError::input(e.to_string())
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError {
            kind: "format",
            ..CliError::input(e.to_string())
        }
    }
}

impl From<CalculusError> for CliError {
    fn from(e: CalculusError) -> Self {
        match e {
            CalculusError::OutOfRange { t, t_min, t_max } => CliError {
                kind: "range",
                ..CliError::input(format!("profile range is insufficient: {e}"))
            }
            .with_details(json!({ "argument": t, "profile_range": [t_min, t_max] })),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            kind: "io",
            ..CliError::input(e.to_string())
        }
    }
}

impl From<DecomposeError> for CliError {
    fn from(e: DecomposeError) -> Self {
        match &e {
            DecomposeError::NotRepresentable {
                kind,
                stage,
                defect,
                tolerance,
            } => CliError {
                code: EXIT_DEFECT,
                kind: "representability",
                message: e.to_string(),
                details: json!({
                    "defect_kind": kind,
                    "stage": stage,
                    "defect": defect,
                    "tolerance": tolerance,
                }),
            },
            DecomposeError::RangeNotCovered {
                index,
                need_lo,
                need_hi,
                got_lo,
                got_hi,
            } => CliError {
                kind: "range",
                ..CliError::input(e.to_string())
            }
            .with_details(json!({
                "direction_index": index,
                "needed": [need_lo, need_hi],
                "reachable": [got_lo, got_hi],
            })),
            DecomposeError::Calculus(inner) => inner.clone().into(),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<PdeError> for CliError {
    fn from(e: PdeError) -> Self {
        match e {
            PdeError::Decompose(inner) => inner.into(),
            PdeError::Calculus(inner) => inner.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

/// Prints the final machine-readable line of a run.
pub fn emit_record(command: &str, status: &str, mut fields: Value) {
    let obj = fields.as_object_mut().expect("record fields form an object");
    obj.insert("command".into(), json!(command));
    obj.insert("status".into(), json!(status));
    println!("{}", ridgesplit::format::compact_json(&fields));
}

pub fn emit_error(command: &str, err: &CliError) {
    eprintln!("error: {err}");
    emit_record(
        command,
        "error",
        json!({
            "exit_code": err.code,
            "kind": err.kind,
            "message": err.message,
            "details": err.details,
        }),
    );
}
