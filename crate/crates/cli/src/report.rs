//! Run reports: named steps with recorded values, pass/fail checks and the
//! artifacts they wrote. Reports are canonical JSON (sorted keys, floats at
//! 15 significant digits) so repeated runs are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::path::{Path, PathBuf};

use nonscatter::geometry::round_sig;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

pub const REPORT_FORMAT: &str = "nonscatter-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub name: String,
    pub status: Status,
    pub values: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub format: &'static str,
    pub recipe: String,
    pub anchor: String,
    pub status: Status,
    pub steps: Vec<StepRecord>,
}

impl RunReport {
    /// Process exit code: 0 pass, 1 failed check, 3 module or I/O error.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serialises");
        let mut s = serde_json::to_string_pretty(&canonical(v)).expect("value serialises");
        s.push('\n');
        s
    }
}

/// Round every float to 15 significant digits.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(round_sig(x)).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// A step in progress.
pub struct Step<'a> {
    rec: StepRecord,
    out: &'a Path,
}

impl Step<'_> {
    pub fn value(&mut self, key: &str, v: impl Serialize) {
        self.rec.values.insert(key.to_string(), to_value(v));
    }

    fn push(&mut self, name: &str, passed: bool, detail: Value) -> bool {
        self.rec.checks.push(Check { name: name.to_string(), passed, detail });
        passed
    }

    /// `value < limit` (false for NaN).
    pub fn below(&mut self, name: &str, value: f64, limit: f64) -> bool {
        self.push(name, value < limit, serde_json::json!({ "value": value, "op": "<", "limit": limit }))
    }

    /// `value > limit` (false for NaN).
    pub fn above(&mut self, name: &str, value: f64, limit: f64) -> bool {
        self.push(name, value > limit, serde_json::json!({ "value": value, "op": ">", "limit": limit }))
    }

    pub fn holds(&mut self, name: &str, cond: bool) -> bool {
        self.push(name, cond, Value::Null)
    }

    pub fn equals<T: Serialize + PartialEq + Debug>(&mut self, name: &str, got: T, want: T) -> bool {
        let ok = got == want;
        self.push(name, ok, serde_json::json!({ "value": to_value(&got), "op": "==", "expected": to_value(&want) }))
    }

    /// Write an artifact into the run directory and record its relative path.
    pub fn write(&mut self, file: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(file);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.rec.artifacts.push(file.to_string());
        Ok(())
    }
}

/// Marker returned once a step errors; the remaining steps are skipped.
#[derive(Debug)]
pub struct Halt;

/// A run of a recipe or subcommand writing into one output directory.
pub struct Run {
    name: String,
    anchor: String,
    out: PathBuf,
    steps: Vec<StepRecord>,
}

impl Run {
    pub fn new(name: &str, anchor: &str, out: &Path) -> Self {
        Run { name: name.to_string(), anchor: anchor.to_string(), out: out.to_path_buf(), steps: Vec::new() }
    }

    pub fn step<T>(&mut self, name: &str, f: impl FnOnce(&mut Step) -> Result<T, CliError>) -> Result<T, Halt> {
        let rec = StepRecord {
            name: name.to_string(),
            status: Status::Pass,
            values: BTreeMap::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            error: None,
        };
        let mut step = Step { rec, out: &self.out };
        let r = f(&mut step);
        let mut rec = step.rec;
        let out = match r {
            Ok(v) => {
                if rec.checks.iter().any(|c| !c.passed) {
                    rec.status = Status::Fail;
                }
                Ok(v)
            }
            Err(e) => {
                rec.status = Status::Error;
                rec.error = Some(e.to_string());
                Err(Halt)
            }
        };
        self.steps.push(rec);
        out
    }

    pub fn finish(self) -> RunReport {
        let status = if self.steps.iter().any(|s| s.status == Status::Error) {
            Status::Error
        } else if self.steps.iter().any(|s| s.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
        RunReport { format: REPORT_FORMAT, recipe: self.name, anchor: self.anchor, status, steps: self.steps }
    }
}
