//! Structured pass/fail output shared by the assumption checkers and the
//! run verifiers.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One named check. `margin` is signed so that `margin >= 0` reads as
/// "satisfied with room to spare"; its exact meaning is check-specific and
/// spelled out in the witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub pass: bool,
    pub witness: Value,
    pub margin: f64,
}

impl Check {
    pub fn new(check: impl Into<String>, pass: bool, margin: f64, witness: Value) -> Self {
        Self {
            check: check.into(),
            pass,
            witness,
            margin,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

/// Output of the assumption checkers in `laws`.
pub type AssumptionReport = Report;
/// Output of the run verifiers in `recurse` and `lyapunov`.
pub type RunReport = Report;

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// JSON has no infinities; encode them as strings so reports stay lossless.
pub(crate) fn ext(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("NaN")
    } else if x > 0.0 {
        Value::from("+inf")
    } else {
        Value::from("-inf")
    }
}
