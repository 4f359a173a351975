//! Reports and their byte-stable rendering.
//!
//! Every float is written with 17 significant digits in exponent form, keys
//! come out sorted, and nothing time-dependent enters a report; wall-clock
//! data goes to a separate metadata document.

use crate::scenario::{Check, Expect, Kind, Outcome};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const TOOL_VERSION: &str = concat!("mh ", env!("CARGO_PKG_VERSION"));

/// A plot-ready numeric table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| number(*x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Outcome and checks as expected (or a pass with no expectations).
    Ok,
    Unexpected,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Unexpected => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    #[serde(flatten)]
    pub check: Check,
    pub actual: Value,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub kind: Kind,
    pub seed: u64,
    pub tool_version: &'static str,
    pub outcome: Outcome,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expect>,
    pub checks: Vec<CheckResult>,
    pub result: Value,
    pub tables: BTreeMap<String, Table>,
    pub tolerances: mhsets::tol::ToleranceTable,
}

impl Report {
    pub fn to_json(&self) -> String {
        render(&serde_json::to_value(self).expect("report serializes"))
    }
}

/// Evaluates one check against the `result` document.
pub fn evaluate(check: &Check, result: &Value) -> CheckResult {
    let actual = result.pointer(&check.path).cloned().unwrap_or(Value::Null);
    let mut ok = !actual.is_null();
    if let Some(want) = &check.equals {
        ok &= match (want.as_f64(), actual.as_f64()) {
            (Some(a), Some(b)) => a == b,
            _ => want == &actual,
        };
    }
    let numeric = check.target.is_some() || check.min.is_some() || check.max.is_some();
    if numeric {
        match actual.as_f64() {
            None => ok = false,
            Some(x) => {
                if let Some(t) = check.target {
                    let mut allowed = 0.0f64;
                    if let Some(r) = check.rel {
                        allowed = allowed.max(r * t.abs());
                    }
                    if let Some(a) = check.abs {
                        allowed = allowed.max(a);
                    }
                    ok &= (x - t).abs() <= allowed;
                }
                if let Some(lo) = check.min {
                    ok &= x >= lo;
                }
                if let Some(hi) = check.max {
                    ok &= x <= hi;
                }
            }
        }
    }
    CheckResult { check: check.clone(), actual, ok }
}

/// Fixed 17-significant-digit rendering of a float.
pub fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with fixed-format floats. Integers stay integers.
pub fn render(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| {
        for _ in 0..d {
            out.push_str("  ");
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&number(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric rows stay on one line
            if items.len() <= 8 && items.iter().all(|x| x.is_number()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, depth + 1);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}
