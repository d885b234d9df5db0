use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::config::ConfigRecord;

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckRecord {
    /// Unique id within the report, e.g. `wronski/elliptic/n=3/l=2`.
    pub id: String,
    /// Stable name of the identity being tested.
    pub anchor: String,
    /// `numeric` (relative residual against a tolerance) or `exact`.
    pub kind: String,
    /// Largest relative residual as a decimal string, or `exact` /
    /// `mismatch` for exact checks, or `error` when the check could not run.
    pub residual: String,
    /// Relative tolerance as a decimal string, or `exact`.
    pub tolerance: String,
    pub samples: usize,
    pub elapsed_seconds: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// Result of running one suite (or all of them).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub suite: String,
    pub config: ConfigRecord,
    pub checks: Vec<CheckRecord>,
    pub status: Status,
}

impl IdentityReport {
    pub fn new(suite: &str, config: ConfigRecord, checks: Vec<CheckRecord>) -> Self {
        let status = if checks.iter().all(|c| c.passed) {
            Status::Pass
        } else {
            Status::Fail
        };
        IdentityReport {
            suite: suite.to_string(),
            config,
            checks,
            status,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Plain-text table, one row per check.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(2).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<6}  {:<14}  {:<10}  {:>8}",
            "check", "status", "residual", "tolerance", "seconds"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:<6}  {:<14}  {:<10}  {:>8}",
                c.id,
                if c.passed { "pass" } else { "FAIL" },
                c.residual,
                c.tolerance,
                c.elapsed_seconds
            );
            if let Some(e) = &c.error {
                let _ = writeln!(out, "{:<width$}    error: {e}", "");
            }
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{}: {} checks, {} failed, status {}",
            self.suite,
            self.checks.len(),
            failed,
            if self.passed() { "pass" } else { "FAIL" }
        );
        out
    }
}

fn is_decimal(s: &str) -> bool {
    s.parse::<f64>().is_ok_and(f64::is_finite)
}

/// Check a JSON report against the documented schema. Returns every
/// violation found, not just the first.
pub fn validate_report(value: &Value) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(vec!["report is not an object".into()]);
    };
    for key in obj.keys() {
        if !["suite", "config", "checks", "status"].contains(&key.as_str()) {
            errs.push(format!("unexpected top-level key `{key}`"));
        }
    }
    if !obj.get("suite").is_some_and(Value::is_string) {
        errs.push("`suite` must be a string".into());
    }
    match obj.get("config").and_then(Value::as_object) {
        None => errs.push("`config` must be an object".into()),
        Some(c) => {
            if !c
                .get("flavors")
                .and_then(Value::as_array)
                .is_some_and(|a| !a.is_empty() && a.iter().all(Value::is_string))
            {
                errs.push("`config.flavors` must be a nonempty array of strings".into());
            }
            for key in ["n", "lmax", "rmax", "precision"] {
                if !c.get(key).is_some_and(Value::is_u64) {
                    errs.push(format!("`config.{key}` must be a nonnegative integer"));
                }
            }
            for key in ["seed", "q", "t"] {
                if !c.get(key).is_some_and(Value::is_string) {
                    errs.push(format!("`config.{key}` must be a string"));
                }
            }
            for key in ["tolerance", "perturb_kappa"] {
                match c.get(key) {
                    Some(Value::Null) => {}
                    Some(Value::String(s)) if is_decimal(s) => {}
                    _ => errs.push(format!("`config.{key}` must be null or a decimal string")),
                }
            }
            if !c.get("samples").is_some_and(|v| v.is_null() || v.is_u64()) {
                errs.push("`config.samples` must be null or a nonnegative integer".into());
            }
        }
    }
    let mut all_passed = true;
    match obj.get("checks").and_then(Value::as_array) {
        None => errs.push("`checks` must be an array".into()),
        Some(checks) => {
            let mut seen = std::collections::BTreeSet::new();
            for (i, c) in checks.iter().enumerate() {
                validate_check(i, c, &mut errs, &mut seen, &mut all_passed);
            }
        }
    }
    match obj.get("status").and_then(Value::as_str) {
        Some("pass") if !all_passed => errs.push("`status` is pass but a check failed".into()),
        Some("fail") if all_passed => errs.push("`status` is fail but every check passed".into()),
        Some("pass" | "fail") => {}
        _ => errs.push("`status` must be \"pass\" or \"fail\"".into()),
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn validate_check(
    i: usize,
    c: &Value,
    errs: &mut Vec<String>,
    seen: &mut std::collections::BTreeSet<String>,
    all_passed: &mut bool,
) {
    let Some(c) = c.as_object() else {
        errs.push(format!("checks[{i}] is not an object"));
        return;
    };
    let text = |key: &str| c.get(key).and_then(Value::as_str);
    match text("id") {
        Some(id) if !id.is_empty() => {
            if !seen.insert(id.to_string()) {
                errs.push(format!("checks[{i}]: duplicate id `{id}`"));
            }
        }
        _ => errs.push(format!("checks[{i}]: `id` must be a nonempty string")),
    }
    if !text("anchor").is_some_and(|a| !a.is_empty()) {
        errs.push(format!("checks[{i}]: `anchor` must be a nonempty string"));
    }
    let kind = text("kind");
    let residual = text("residual");
    let tolerance = text("tolerance");
    let has_error = c.get("error").is_some_and(Value::is_string);
    match kind {
        Some("numeric") => {
            if !(residual.is_some_and(is_decimal) || (residual == Some("error") && has_error)) {
                errs.push(format!("checks[{i}]: numeric `residual` must be a decimal string"));
            }
            if !tolerance.is_some_and(is_decimal) {
                errs.push(format!("checks[{i}]: numeric `tolerance` must be a decimal string"));
            }
        }
        Some("exact") => {
            if !matches!(residual, Some("exact" | "mismatch")) && !(residual == Some("error") && has_error) {
                errs.push(format!("checks[{i}]: exact `residual` must be exact, mismatch or error"));
            }
            if tolerance != Some("exact") {
                errs.push(format!("checks[{i}]: exact `tolerance` must be \"exact\""));
            }
        }
        _ => errs.push(format!("checks[{i}]: `kind` must be numeric or exact")),
    }
    if !c.get("samples").is_some_and(Value::is_u64) {
        errs.push(format!("checks[{i}]: `samples` must be a nonnegative integer"));
    }
    if !text("elapsed_seconds").is_some_and(is_decimal) {
        errs.push(format!("checks[{i}]: `elapsed_seconds` must be a decimal string"));
    }
    match c.get("passed").and_then(Value::as_bool) {
        Some(p) => *all_passed &= p,
        None => errs.push(format!("checks[{i}]: `passed` must be a boolean")),
    }
    if c.get("error").is_some_and(|e| !e.is_string()) {
        errs.push(format!("checks[{i}]: `error` must be a string"));
    }
}
