//! File output with 9 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// `x` rounded to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Shortest decimal for `round_sig(x)`.
pub fn fmt_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else if r.abs() < 1e-5 || r.abs() >= 1e16 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

/// Pretty JSON with every float rounded to 9 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let v = serde_json::to_value(value).map_err(|e| CliError::usage("serialize", e))?;
    let mut s = serde_json::to_string_pretty(&round_value(v))
        .map_err(|e| CliError::usage("serialize", e))?;
    s.push('\n');
    Ok(s)
}

/// Output directory, created on demand.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| {
            CliError::usage(
                format!("cannot create output directory {}", root.display()),
                e,
            )
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::usage(format!("cannot write {}", path.display()), e))?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        self.write(name, &to_json(value)?)
    }
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_table(
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::usage("csv", e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::usage("csv", e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage("csv", e))?;
    String::from_utf8(bytes).map_err(|e| CliError::usage("csv", e))
}
