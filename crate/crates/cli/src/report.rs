use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "spanforge-report/1";

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Derived,
    Trivial,
}

/// One aggregated check: `count` cases, the worst deviation seen, and the
/// tolerance it was held to.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub count: u64,
    pub failures: u64,
    pub worst: Value,
    pub tolerance: f64,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, tolerance: f64, provenance: Provenance) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            count: 0,
            failures: 0,
            worst: Value::Null,
            tolerance,
            provenance,
            note: None,
        }
    }

    /// Records a deviation that must stay at or below the tolerance.
    pub fn deviation(&mut self, d: f64) {
        self.count += 1;
        let ok = d <= self.tolerance;
        if !ok {
            self.failures += 1;
            self.passed = false;
        }
        let worse = match self.worst.as_f64() {
            Some(w) => !(d <= w),
            None => !self.worst.is_string(),
        };
        if worse {
            self.worst = num(d);
        }
    }

    pub fn note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: Value,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub values: Map<String, Value>,
    pub queries: u64,
}

impl Report {
    pub fn new(command: Value) -> Self {
        Self {
            schema: SCHEMA,
            command,
            passed: true,
            checks: Vec::new(),
            values: Map::new(),
            queries: 0,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn value(&mut self, key: &str, v: Value) {
        self.values.insert(key.to_string(), v);
    }
}

/// JSON has no infinities; they are written as the strings `"inf"`/`"-inf"`.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}
