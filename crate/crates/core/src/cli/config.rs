//! Source-class and delay-sequence files.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::bounds::SourceClass;
use crate::delaysource::DelaySpec;
use crate::error::{Error, Result};
use crate::probcore::JointPmf;

/// Largest `|sum - 1|` that is silently renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Number {
    Float(f64),
    Text(String),
}

impl Number {
    fn value(&self) -> Result<f64> {
        match self {
            Number::Float(v) => Ok(*v),
            Number::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{s:?} is not a number"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceFile {
    alphabet_x: usize,
    alphabet_y: usize,
    members: Vec<Vec<Number>>,
}

/// Parse a source class from its JSON text.
pub fn parse_source_class(text: &str) -> Result<SourceClass> {
    let f: SourceFile = serde_json::from_str(text)?;
    if f.alphabet_x == 0 || f.alphabet_y == 0 {
        return Err(Error::Config("alphabet sizes must be positive".into()));
    }
    if f.members.is_empty() {
        return Err(Error::Config("source class has no members".into()));
    }
    let cells = f.alphabet_x * f.alphabet_y;
    let mut members = Vec::with_capacity(f.members.len());
    for (k, m) in f.members.iter().enumerate() {
        if m.len() != cells {
            return Err(Error::Config(format!(
                "member {k} has {} entries, expected {} x {} = {cells}",
                m.len(),
                f.alphabet_x,
                f.alphabet_y
            )));
        }
        let mut p = m.iter().map(Number::value).collect::<Result<Vec<f64>>>()?;
        if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Config(format!("member {k} has invalid probability {v}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::Config(format!("member {k} sums to {total}, not 1")));
        }
        p.iter_mut().for_each(|v| *v /= total);
        members
            .push(JointPmf::new(f.alphabet_x, f.alphabet_y, p).map_err(|e| Error::Config(format!("member {k}: {e}")))?);
    }
    SourceClass::new(members)
}

fn in_file(path: &Path, e: Error) -> Error {
    let msg = match e {
        Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{}: {msg}", path.display()))
}

pub fn load_source_class(path: &Path) -> Result<SourceClass> {
    let text = fs::read_to_string(path).map_err(|e| in_file(path, e.into()))?;
    parse_source_class(&text).map_err(|e| in_file(path, e))
}

/// A delay-sequence file is a JSON array of `[lo, hi]` pairs, entry `k` for
/// blocklength `k + 1`.
pub fn load_delay_sequence(path: &Path) -> Result<DelaySpec> {
    let text = fs::read_to_string(path).map_err(|e| in_file(path, e.into()))?;
    let v: Vec<(i64, i64)> = serde_json::from_str(&text).map_err(|e| in_file(path, e.into()))?;
    DelaySpec::explicit(v).map_err(|e| in_file(path, e))
}
