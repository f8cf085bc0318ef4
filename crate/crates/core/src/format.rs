//! JSON persistence for [`Decomposition`].
//!
//! Floating-point values are written with 17 significant digits
//! (`1.2345678901234567e-3`), so reading a file and writing it again gives
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::calculus::{Interpolation, Method, SampledProfile};
use crate::decompose::{Decomposition, DecompositionMetadata};
use crate::geometry::{Direction, Rect};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot access decomposition file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed decomposition file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("invalid decomposition file: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRecord {
    direction_index: usize,
    t_min: f64,
    t_max: f64,
    step: f64,
    base_point: f64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRecord {
    format_version: u32,
    directions: Vec<[f64; 2]>,
    domain: [f64; 4],
    method: Method,
    interpolation: Interpolation,
    reconstruction_sup_error: f64,
    separation_defect: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_expression: Option<String>,
    profiles: Vec<ProfileRecord>,
    metadata: DecompositionMetadata,
}

/// A double with 17 significant digits, e.g. `-1.0000000000000000e0`.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(i) = n.as_i64() {
        write!(out, "{i}").unwrap();
    } else if let Some(u) = n.as_u64() {
        write!(out, "{u}").unwrap();
    } else {
        out.push_str(&number(n.as_f64().expect("finite number")));
    }
}

/// Single-line JSON with numbers written as by [`number`].
pub fn compact_json(v: &Value) -> String {
    let mut out = String::new();
    write_compact(&mut out, v);
    out
}

fn write_compact(out: &mut String, v: &Value) {
    match v {
        Value::Number(n) => write_number(out, n),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_compact(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key encodes"));
                out.push(':');
                write_compact(out, item);
            }
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat(' ').take(k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => write!(out, "{b}").unwrap(),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&serde_json::to_string(k).expect("key encodes"));
                out.push_str(": ");
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

pub fn to_json(dec: &Decomposition) -> String {
    let record = FileRecord {
        format_version: FORMAT_VERSION,
        directions: dec.directions.iter().map(|d| [d.a, d.b]).collect(),
        domain: [dec.domain.x0, dec.domain.x1, dec.domain.y0, dec.domain.y1],
        method: dec.method,
        interpolation: dec.interpolation,
        reconstruction_sup_error: dec.reconstruction_sup_error,
        separation_defect: dec.separation_defect,
        source_expression: dec.source_expression.clone(),
        profiles: dec
            .profiles
            .iter()
            .enumerate()
            .map(|(i, p)| ProfileRecord {
                direction_index: i,
                t_min: p.t_min(),
                t_max: p.t_max(),
                step: p.step(),
                base_point: p.base_point(),
                values: p.values().to_vec(),
            })
            .collect(),
        metadata: dec.metadata.clone(),
    };
    let value = serde_json::to_value(&record).expect("decomposition serializes");
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out.push('\n');
    out
}

pub fn from_json(text: &str) -> Result<Decomposition, FormatError> {
    let rec: FileRecord = serde_json::from_str(text)?;
    if rec.format_version != FORMAT_VERSION {
        return Err(FormatError::Version(rec.format_version));
    }
    let n = rec.directions.len();
    if rec.profiles.len() != n {
        return Err(FormatError::Invalid(format!(
            "{} profiles for {n} directions",
            rec.profiles.len()
        )));
    }
    let domain = Rect::new(rec.domain[0], rec.domain[1], rec.domain[2], rec.domain[3])
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    let mut profiles: Vec<Option<SampledProfile>> = vec![None; n];
    for p in rec.profiles {
        let slot = profiles
            .get_mut(p.direction_index)
            .ok_or_else(|| FormatError::Invalid(format!("direction_index {} out of range", p.direction_index)))?;
        if slot.is_some() {
            return Err(FormatError::Invalid(format!(
                "two profiles for direction {}",
                p.direction_index
            )));
        }
        let index = p.direction_index;
        *slot = Some(
            SampledProfile::with_step(p.t_min, p.t_max, p.step, p.values, p.base_point)
                .map_err(|e| FormatError::Invalid(format!("profile {index}: {e}")))?,
        );
    }
    Ok(Decomposition {
        directions: rec.directions.iter().map(|d| Direction::new(d[0], d[1])).collect(),
        profiles: profiles.into_iter().map(|p| p.expect("all slots filled")).collect(),
        domain,
        method: rec.method,
        interpolation: rec.interpolation,
        reconstruction_sup_error: rec.reconstruction_sup_error,
        separation_defect: rec.separation_defect,
        metadata: rec.metadata,
        source_expression: rec.source_expression,
    })
}

pub fn write_decomposition(path: &Path, dec: &Decomposition) -> Result<(), FormatError> {
    std::fs::write(path, to_json(dec))?;
    Ok(())
}

pub fn read_decomposition(path: &Path) -> Result<Decomposition, FormatError> {
    from_json(&std::fs::read_to_string(path)?)
}
