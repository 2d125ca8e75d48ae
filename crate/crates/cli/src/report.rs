//! Report documents and their deterministic JSON / CSV encodings.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sympkit_core::{CMatrix, TrajectorySequence};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported value without an acceptance decision.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), status: if pass { Status::Pass } else { Status::Fail }, residual: None, detail: None }
    }

    pub fn info(name: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Info, residual: None, detail: None }
    }

    /// Passes when `residual ≤ limit`; NaN fails.
    pub fn bounded(name: impl Into<String>, residual: f64, limit: f64) -> Self {
        Self::new(name, residual <= limit).with_residual(residual)
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.residual = Some(residual);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub config: RunConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub payload: serde_json::Value,
}

impl ReportDocument {
    pub fn new(command: &str, config: &RunConfig, checks: Vec<Check>, payload: serde_json::Value) -> Self {
        let passed = checks.iter().all(|c| c.status != Status::Fail);
        Self { command: command.to_string(), config: config.clone(), passed, checks, payload }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed { 0 } else { 1 }
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let value = serde_json::to_value(self).map_err(|e| CliError::Output(e.to_string()))?;
        let mut out = String::new();
        write_value(&mut out, &value, 0);
        out.push('\n');
        Ok(out.into_bytes())
    }

    pub fn checks_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(["command", "check", "status", "residual", "detail"]).map_err(fail)?;
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Info => "info",
            };
            let residual = c.residual.map(fmt_f64).unwrap_or_default();
            w.write_record([self.command.as_str(), &c.name, status, &residual, c.detail.as_deref().unwrap_or("")])
                .map_err(fail)?;
        }
        w.into_inner().map_err(|e| CliError::Output(e.to_string()))
    }
}

/// One entry `G_{k,l}[i, j]` of a Green table.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenRow {
    pub lambda: Complex64,
    pub k: usize,
    pub l: usize,
    pub i: usize,
    pub j: usize,
    pub value: Complex64,
}

pub fn green_csv(rows: &[GreenRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(["lambda_re", "lambda_im", "k", "l", "i", "j", "re", "im"]).map_err(fail)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.lambda.re),
            fmt_f64(r.lambda.im),
            r.k.to_string(),
            r.l.to_string(),
            r.i.to_string(),
            r.j.to_string(),
            fmt_f64(r.value.re),
            fmt_f64(r.value.im),
        ])
        .map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

/// 17 significant digits, which round-trips every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() { format!("{x:.16e}") } else { x.to_string() }
}

pub fn complex_pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Row-major nested `[re, im]` pairs.
pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| complex_pair(m[(i, j)])).collect()).collect()
}

pub fn sequence_rows(z: &TrajectorySequence) -> Vec<Vec<Vec<[f64; 2]>>> {
    z.values.iter().map(matrix_rows).collect()
}

/// Two-space indented JSON with fixed-precision floats. Arrays of scalars
/// stay on one line so matrices and sequences remain readable.
fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (None, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                out.push_str(if i > 0 { ",\n" } else { "\n" });
                push_indent(out, indent + 1);
                write_value(out, x, indent + 1);
            }
            out.push('\n');
            push_indent(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push('{');
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(if i > 0 { ",\n" } else { "\n" });
                push_indent(out, indent + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, x, indent + 1);
            }
            out.push('\n');
            push_indent(out, indent);
            out.push('}');
        }
    }
}

fn push_indent(out: &mut String, level: usize) {
    out.extend(std::iter::repeat_n("  ", level));
}
