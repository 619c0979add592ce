//! Pass/fail tables for invariant checks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How a measured value is compared against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value| <= tolerance`
    AbsAtMost,
    /// `value >= tolerance`
    AtLeast,
    /// `value <= tolerance`
    AtMost,
    /// Boolean outcome; `value` is 1 or 0 and the tolerance is ignored.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, tolerance: f64) -> Self {
        let mut c = Self {
            name: name.into(),
            value,
            tolerance,
            comparison,
            passed: false,
            detail: String::new(),
        };
        c.evaluate();
        c
    }

    fn evaluate(&mut self) {
        self.passed = match self.comparison {
            Comparison::AbsAtMost => self.value.abs() <= self.tolerance,
            Comparison::AtLeast => self.value >= self.tolerance,
            Comparison::AtMost => self.value <= self.tolerance,
            Comparison::Holds => self.value != 0.0,
        };
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Comparison::Holds, 0.0)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Replaces the tolerance of the named check and re-evaluates it.
    /// Returns `false` if no check has that name.
    pub fn set_tolerance(&mut self, name: &str, tolerance: f64) -> bool {
        let mut found = false;
        for c in self.checks.iter_mut().filter(|c| c.name == name) {
            c.tolerance = tolerance;
            c.evaluate();
            found = true;
        }
        found
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>14}  {:>4}  {:>12}  result", "check", "value", "cmp", "tolerance");
        for c in &self.checks {
            let cmp = match c.comparison {
                Comparison::AbsAtMost => "|<=|",
                Comparison::AtLeast => ">=",
                Comparison::AtMost => "<=",
                Comparison::Holds => "",
            };
            let tol = if c.comparison == Comparison::Holds {
                "-".to_string()
            } else {
                format!("{:.3e}", c.tolerance)
            };
            let _ = write!(
                out,
                "{:<width$}  {:>14.6e}  {:>4}  {:>12}  {}",
                c.name,
                c.value,
                cmp,
                tol,
                if c.passed { "PASS" } else { "FAIL" }
            );
            if !c.detail.is_empty() {
                let _ = write!(out, "  ({})", c.detail);
            }
            out.push('\n');
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
