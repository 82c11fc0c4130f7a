//! Well-formedness validation of recovered predictions, split into four
//! independent check families: key presence, field types, label vocabulary,
//! and probability-mass conservation of the final distribution. Reports,
//! never panics.

use std::fmt;

use serde::Serialize;
use serde_json::Value;

use crate::extract::{resolve_category, NumValue, Prediction};
use crate::model::heir_from_name;
use crate::rational::Frac;

/// Maximum tolerated deviation of Σ percent·count from 100, inclusive.
pub const MASS_TOLERANCE: f64 = 5.0;

/// The fields every prediction must carry.
pub const CRITICAL_KEYS: [&str; 3] = ["heirs", "shares", "awl_or_radd"];

/// Outcome of one check family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

impl CheckResult {
    fn from_diagnostics(diagnostics: Vec<String>) -> CheckResult {
        CheckResult { passed: diagnostics.is_empty(), diagnostics }
    }
}

/// All four families plus their conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub c_keys: CheckResult,
    pub c_types: CheckResult,
    pub c_labels: CheckResult,
    pub c_mass: CheckResult,
    pub overall: bool,
}

impl ValidationReport {
    pub fn checks(&self) -> [(&'static str, &CheckResult); 4] {
        [
            ("c_keys", &self.c_keys),
            ("c_types", &self.c_types),
            ("c_labels", &self.c_labels),
            ("c_mass", &self.c_mass),
        ]
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, check) in self.checks() {
            write!(f, "{name}: {}", if check.passed { "pass" } else { "FAIL" })?;
            for d in &check.diagnostics {
                write!(f, " [{d}]")?;
            }
            writeln!(f)?;
        }
        write!(f, "overall: {}", if self.overall { "pass" } else { "FAIL" })
    }
}

/// Runs all four families over the raw recovered object.
pub fn validate(pred: &Prediction) -> ValidationReport {
    let c_keys = check_keys(&pred.raw);
    let c_types = check_types(&pred.raw);
    let c_labels = check_labels(&pred.raw);
    let c_mass = check_mass(pred);
    let overall = c_keys.passed && c_types.passed && c_labels.passed && c_mass.passed;
    ValidationReport { c_keys, c_types, c_labels, c_mass, overall }
}

fn check_keys(raw: &Value) -> CheckResult {
    let mut diagnostics = Vec::new();
    match raw.as_object() {
        Some(object) => {
            for key in CRITICAL_KEYS {
                if !object.contains_key(key) {
                    diagnostics.push(format!("critical key \"{key}\" is missing"));
                }
            }
        }
        None => diagnostics.push("prediction is not an object".to_string()),
    }
    CheckResult::from_diagnostics(diagnostics)
}

fn is_numeric(value: &Value) -> bool {
    NumValue::from_json(value).is_some()
}

/// One heir entry is a name string, a `{kind, count}` object, or a map pair
/// with an integer count.
fn check_heir_list(field: &str, value: &Value, diagnostics: &mut Vec<String>) {
    match value {
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::String(_) => {}
                    Value::Object(fields) => {
                        if !fields.get("kind").is_some_and(Value::is_string) {
                            diagnostics.push(format!("{field}[{i}] has no \"kind\" name"));
                        }
                        if let Some(count) = fields.get("count") {
                            if count.as_u64().is_none() {
                                diagnostics
                                    .push(format!("{field}[{i}].count is not a whole number"));
                            }
                        }
                    }
                    other => diagnostics.push(format!(
                        "{field}[{i}] is neither a name nor an object: {other}"
                    )),
                }
            }
        }
        Value::Object(fields) => {
            for (name, count) in fields {
                if count.as_u64().is_none() {
                    diagnostics.push(format!("{field}[{name}] count is not a whole number"));
                }
            }
        }
        other => diagnostics.push(format!("{field} is neither a list nor a map: {other}")),
    }
}

fn check_types(raw: &Value) -> CheckResult {
    let mut diagnostics = Vec::new();
    let Some(object) = raw.as_object() else {
        return CheckResult::from_diagnostics(vec!["prediction is not an object".to_string()]);
    };

    if let Some(heirs) = object.get("heirs") {
        check_heir_list("heirs", heirs, &mut diagnostics);
    }
    if let Some(blocked) = object.get("blocked") {
        check_heir_list("blocked", blocked, &mut diagnostics);
    }
    if let Some(shares) = object.get("shares") {
        match shares.as_object() {
            Some(pairs) => {
                for (name, value) in pairs {
                    if !is_numeric(value) {
                        diagnostics.push(format!("shares[{name}] is not numeric: {value}"));
                    }
                }
            }
            None => diagnostics.push(format!("shares is not a map: {shares}")),
        }
    }
    if let Some(label) = object.get("awl_or_radd") {
        if !label.is_string() {
            diagnostics.push(format!("awl_or_radd is not a label string: {label}"));
        }
    }
    for base in ["tasil_stage", "original_base", "final_base"] {
        if let Some(value) = object.get(base) {
            if !is_numeric(value) {
                diagnostics.push(format!("{base} is not numeric: {value}"));
            }
        }
    }
    if let Some(post) = object.get("post_tasil") {
        match post.as_object() {
            Some(pairs) => {
                for (name, entry) in pairs {
                    match entry {
                        Value::Object(parts) => {
                            for part in ["percent", "count", "siham"] {
                                if let Some(v) = parts.get(part) {
                                    if !is_numeric(v) {
                                        diagnostics.push(format!(
                                            "post_tasil[{name}].{part} is not numeric: {v}"
                                        ));
                                    }
                                }
                            }
                        }
                        other if is_numeric(other) => {}
                        other => diagnostics
                            .push(format!("post_tasil[{name}] is not numeric: {other}")),
                    }
                }
            }
            None => diagnostics.push(format!("post_tasil is not a map: {post}")),
        }
    }
    CheckResult::from_diagnostics(diagnostics)
}

/// All heir names appearing anywhere in the field.
fn heir_names(value: &Value) -> Vec<&str> {
    match value {
        Value::Array(items) => items
            .iter()
            .filter_map(|item| match item {
                Value::String(name) => Some(name.as_str()),
                Value::Object(fields) => fields.get("kind").and_then(Value::as_str),
                _ => None,
            })
            .collect(),
        Value::Object(fields) => fields.keys().map(String::as_str).collect(),
        _ => Vec::new(),
    }
}

fn check_labels(raw: &Value) -> CheckResult {
    let mut diagnostics = Vec::new();
    let Some(object) = raw.as_object() else {
        return CheckResult::from_diagnostics(vec!["prediction is not an object".to_string()]);
    };
    if let Some(label) = object.get("awl_or_radd").and_then(Value::as_str) {
        if resolve_category(label).is_none() {
            diagnostics.push(format!("awl_or_radd label \"{label}\" is not recognized"));
        }
    }
    for field in ["heirs", "blocked", "shares", "post_tasil"] {
        if let Some(value) = object.get(field) {
            for name in heir_names(value) {
                if heir_from_name(name).is_none() {
                    diagnostics.push(format!("{field} names unknown heir \"{name}\""));
                }
            }
        }
    }
    CheckResult::from_diagnostics(diagnostics)
}

/// Σ percent·count over the typed final distribution, exact when every
/// operand is an exact fraction.
fn exact_mass(pred: &Prediction) -> Option<Frac> {
    let mut sum = Frac::ZERO;
    for entry in pred.post_tasil.values() {
        let percent = entry.percent?.as_frac()?;
        let count = match entry.count {
            Some(count) => count.as_frac()?,
            None => Frac::ONE,
        };
        sum = sum.checked_add(percent.checked_mul(count)?)?;
    }
    Some(sum)
}

fn check_mass(pred: &Prediction) -> CheckResult {
    let mut diagnostics = Vec::new();
    let raw_entries = pred
        .raw
        .get("post_tasil")
        .and_then(Value::as_object)
        .map(|o| o.len());
    match raw_entries {
        None => {
            diagnostics.push(
                "post_tasil is absent; the distribution mass cannot be verified".to_string(),
            );
            return CheckResult::from_diagnostics(diagnostics);
        }
        Some(n) if n != pred.post_tasil.len() => {
            diagnostics.push(format!(
                "only {} of {n} post_tasil entries were readable",
                pred.post_tasil.len()
            ));
            return CheckResult::from_diagnostics(diagnostics);
        }
        Some(_) => {}
    }
    for (kind, entry) in &pred.post_tasil {
        if entry.percent.is_none() {
            diagnostics.push(format!("post_tasil[{kind}] has no percent"));
        }
    }
    if !diagnostics.is_empty() {
        return CheckResult::from_diagnostics(diagnostics);
    }

    if let Some(sum) = exact_mass(pred) {
        let hundred = Frac::from_int(100);
        let bound = Frac::from_int(5);
        let within = sum
            .checked_sub(hundred)
            .map(|diff| diff.abs() <= bound)
            .unwrap_or(false);
        if !within {
            diagnostics.push(format!(
                "distribution mass {sum} deviates from 100 by more than {MASS_TOLERANCE}"
            ));
        }
    } else {
        let sum: f64 = pred
            .post_tasil
            .values()
            .map(|e| {
                e.percent.map(NumValue::to_f64).unwrap_or(0.0)
                    * e.count.map(NumValue::to_f64).unwrap_or(1.0)
            })
            .sum();
        if !((sum - 100.0).abs() <= MASS_TOLERANCE) {
            diagnostics.push(format!(
                "distribution mass {sum} deviates from 100 by more than {MASS_TOLERANCE}"
            ));
        }
    }
    CheckResult::from_diagnostics(diagnostics)
}
