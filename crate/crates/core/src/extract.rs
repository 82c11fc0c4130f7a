//! Recovery of a structured answer from free-form model output. Routes are
//! tried in a fixed order — whole-text JSON, fenced code block, balanced-brace
//! scan, per-field pattern harvest — and the first success wins. A typed
//! [`Prediction`] is then interpreted from the recovered object, with
//! rule-based defaults for the non-critical fields.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{heir_from_name, CaseCategory, HeirKind, SolvedCase};
use crate::rational::{lcm_of_dens, Frac};
use crate::text::normalize;

/// Extraction failures.
#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("no structured object could be recovered from the answer text")]
    NoStructure,
    #[error("cannot fill defaults: critical field \"{0}\" is missing")]
    MissingCritical(&'static str),
}

/// Which recovery route produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractRoute {
    /// The whole answer parsed as a JSON object.
    Direct,
    /// A ``` fenced code block parsed.
    FencedBlock,
    /// A balanced `{…}` span inside prose parsed.
    BalancedScan,
    /// Individual fields harvested from prose patterns.
    FieldHarvest,
    /// Nothing was recovered; the prediction is all defaults.
    DefaultFill,
}

impl ExtractRoute {
    pub fn name(self) -> &'static str {
        match self {
            ExtractRoute::Direct => "direct",
            ExtractRoute::FencedBlock => "fenced-block",
            ExtractRoute::BalancedScan => "balanced-scan",
            ExtractRoute::FieldHarvest => "field-harvest",
            ExtractRoute::DefaultFill => "default-fill",
        }
    }
}

/// A numeric field value: exact fraction when the surface form allows it,
/// floating point otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumValue {
    Exact(Frac),
    Approx(f64),
}

impl NumValue {
    pub fn to_f64(self) -> f64 {
        match self {
            NumValue::Exact(f) => f.to_f64(),
            NumValue::Approx(x) => x,
        }
    }

    pub fn as_frac(self) -> Option<Frac> {
        match self {
            NumValue::Exact(f) => Some(f),
            NumValue::Approx(_) => None,
        }
    }

    /// Parses `"3/7"`, `"12"`, `"0.25"`, `"42.86%"`, and their Arabic-digit
    /// forms. A percent sign is stripped; the numeric value is unchanged.
    pub fn parse(text: &str) -> Option<NumValue> {
        let norm = normalize(text);
        let trimmed = norm.trim().trim_end_matches(['%', '٪']).trim();
        if trimmed.is_empty() {
            return None;
        }
        if let Some((num, den)) = trimmed.split_once('/') {
            let num: i64 = num.trim().parse().ok()?;
            let den: i64 = den.trim().parse().ok()?;
            return Frac::new(num, den).ok().map(NumValue::Exact);
        }
        if let Ok(int) = trimmed.parse::<i64>() {
            return Some(NumValue::Exact(Frac::from_int(int)));
        }
        if let Some(exact) = parse_decimal(trimmed) {
            return Some(NumValue::Exact(exact));
        }
        trimmed.parse::<f64>().ok().filter(|x| x.is_finite()).map(NumValue::Approx)
    }

    /// Reads a JSON number or a numeric string.
    pub fn from_json(value: &Value) -> Option<NumValue> {
        match value {
            Value::Number(n) => {
                if let Some(int) = n.as_i64() {
                    Some(NumValue::Exact(Frac::from_int(int)))
                } else {
                    n.as_f64().filter(|x| x.is_finite()).map(NumValue::Approx)
                }
            }
            Value::String(s) => NumValue::parse(s),
            _ => None,
        }
    }
}

/// Exact conversion of a finite decimal string like `"-12.375"`.
fn parse_decimal(text: &str) -> Option<Frac> {
    let (sign, digits) = match text.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, text),
    };
    let (int_part, frac_part) = digits.split_once('.')?;
    if frac_part.is_empty() || frac_part.len() > 15 {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let den = 10i64.checked_pow(frac_part.len() as u32)?;
    let whole: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let num = whole.checked_mul(den)?.checked_add(frac_part.parse::<i64>().ok()?)?;
    Frac::new(sign * num, den).ok()
}

/// The per-heir entry of the final-distribution field.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PostTasilValue {
    pub percent: Option<NumValue>,
    pub count: Option<NumValue>,
    pub siham: Option<NumValue>,
}

/// A typed view of one recovered answer, alongside the raw object it came
/// from. Unparseable parts are dropped from the typed view but stay visible
/// to the validator through `raw`.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub raw: Value,
    pub route: ExtractRoute,
    /// Field names that were filled by [`apply_defaults`].
    pub defaulted: Vec<String>,
    pub heirs: BTreeMap<HeirKind, u32>,
    pub blocked: BTreeSet<HeirKind>,
    pub shares: BTreeMap<HeirKind, NumValue>,
    pub category: Option<CaseCategory>,
    pub tasil_stage: Option<NumValue>,
    pub post_tasil: BTreeMap<HeirKind, PostTasilValue>,
    /// Heir labels that did not resolve to a known kind.
    pub unresolved: Vec<String>,
}

/// Maps a category label (English or Arabic, any common synonym) onto the
/// canonical three-way label.
pub fn resolve_category(label: &str) -> Option<CaseCategory> {
    let key = normalize(label);
    let key = key.trim();
    for candidate in CaseCategory::ALL {
        if key == candidate.name() {
            return Some(candidate);
        }
    }
    match key {
        "none" | "basic" | "normal" | "no adjustment" | "عاديه" | "بسيطه"
        | "لا عول ولا رد" | "بلا عول ولا رد" => Some(CaseCategory::Simple),
        "aul" | "awl case" | "عول" | "العول" | "عالت" => Some(CaseCategory::Awl),
        "rad" | "return" | "radd case" | "رد" | "الرد" | "ردت" => Some(CaseCategory::Radd),
        _ => None,
    }
}

/// Extracts a structured object from answer text, recording the route.
pub fn extract_value(answer_text: &str) -> Option<(Value, ExtractRoute)> {
    if let Some(value) = parse_object(answer_text) {
        return Some((value, ExtractRoute::Direct));
    }
    for block in fenced_blocks(answer_text) {
        if let Some(value) = parse_object(block) {
            return Some((value, ExtractRoute::FencedBlock));
        }
    }
    for span in balanced_spans(answer_text) {
        if let Some(value) = parse_object(span) {
            return Some((value, ExtractRoute::BalancedScan));
        }
    }
    harvest_fields(answer_text).map(|value| (value, ExtractRoute::FieldHarvest))
}

/// Extracts and types a prediction in one step.
pub fn extract(answer_text: &str) -> Result<Prediction, ExtractError> {
    let (value, route) = extract_value(answer_text).ok_or(ExtractError::NoStructure)?;
    Ok(Prediction::from_value(value, route))
}

fn parse_object(text: &str) -> Option<Value> {
    let value: Value = serde_json::from_str(text.trim()).ok()?;
    value.is_object().then_some(value)
}

/// Contents of every ``` fence, language tags stripped.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut parts = text.split("```");
    parts.next(); // text before the first fence
    while let Some(inside) = parts.next() {
        let body = match inside.split_once('\n') {
            // The first line of a fence is a language tag unless it already
            // starts the payload.
            Some((first, rest)) if !first.trim_start().starts_with('{') => rest,
            _ => inside,
        };
        blocks.push(body);
        parts.next(); // text after the closing fence
    }
    blocks
}

/// Every balanced `{…}` span, outermost first per opening position, with a
/// JSON-string-aware depth counter.
fn balanced_spans(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut stack = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &byte) in bytes.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if byte == b'\\' {
                escaped = true;
            } else if byte == b'"' {
                in_string = false;
            }
            continue;
        }
        match byte {
            b'"' => in_string = true,
            b'{' => stack.push(i),
            b'}' => {
                if let Some(start) = stack.pop() {
                    spans.push((start, i + 1));
                }
            }
            _ => {}
        }
    }
    // Outermost candidates first: earlier start, then longer span.
    spans.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    spans.into_iter().map(|(start, end)| &text[start..end]).collect()
}

fn split_names(list: &str) -> Vec<String> {
    let mut names = Vec::new();
    for chunk in list.replace(" and ", "،").split(['،', ',']) {
        let mut name = chunk.trim();
        // A conjunction prefixed to the name: "وأم" → "أم". Multi-word names
        // never start with a bare waw, so this is safe.
        if let Some(rest) = name.strip_prefix('و') {
            if !rest.starts_with(' ') && !rest.is_empty() {
                name = rest;
            }
        }
        if !name.is_empty() {
            names.push(name.to_string());
        }
    }
    names
}

/// Which canonical field a prose key refers to, if any.
fn key_field(key: &str) -> Option<&'static str> {
    let key = normalize(key);
    let key = key.trim().trim_start_matches("ال");
    match key {
        "heirs" | "ورثه" | "وارثون" => Some("heirs"),
        "blocked" | "محجوب" | "محجوبون" => Some("blocked"),
        "shares" | "انصبه" | "نصيب كل وارث" => Some("shares"),
        "awl_or_radd" | "category" | "case" | "حاله" => Some("awl_or_radd"),
        "tasil_stage" | "تصح من" | "تصح المساله من" | "اصل المساله" => Some("tasil_stage"),
        "final_base" => Some("final_base"),
        "original_base" => Some("original_base"),
        _ => None,
    }
}

/// Last-resort recovery: scans prose for `key: value` statements and per-heir
/// percentage lines, assembling whatever fields it finds.
fn harvest_fields(text: &str) -> Option<Value> {
    let percent_line = regex::Regex::new(
        r"نصيب\s+(?:كل\s+)?(.+?)\s*[:=]\s*([0-9]+(?:[./][0-9]+)?)\s*[%٪]",
    )
    .expect("static pattern");

    let mut object = serde_json::Map::new();
    let mut percents = serde_json::Map::new();
    // Normalization collapses newlines, so cut segments out of the raw text
    // first and normalize each one on its own.
    for segment in text.split(['\n', '؛', ';']) {
        let segment = normalize(segment);
        let segment = segment.trim();
        if segment.is_empty() {
            continue;
        }
        let mut matched_percent = false;
        for caps in percent_line.captures_iter(segment) {
            matched_percent = true;
            percents.insert(
                caps[1].trim().to_string(),
                Value::Object(
                    [("percent".to_string(), Value::String(caps[2].to_string()))]
                        .into_iter()
                        .collect(),
                ),
            );
        }
        if matched_percent {
            continue;
        }
        let Some((key, value)) = segment.split_once([':', '=']) else { continue };
        let Some(field) = key_field(key) else { continue };
        let value = value.trim();
        if object.contains_key(field) || value.is_empty() {
            continue;
        }
        let parsed = match field {
            "heirs" | "blocked" => {
                Value::Array(split_names(value).into_iter().map(Value::String).collect())
            }
            "shares" => {
                let mut pairs = serde_json::Map::new();
                for chunk in value.split(['،', ',']) {
                    if let Some((name, number)) = chunk.split_once([':', '=']) {
                        let (name, number) = (name.trim(), number.trim());
                        if !name.is_empty() && !number.is_empty() {
                            pairs.insert(name.to_string(), Value::String(number.to_string()));
                        }
                    }
                }
                if pairs.is_empty() {
                    continue;
                }
                Value::Object(pairs)
            }
            "awl_or_radd" => Value::String(value.to_string()),
            _ => match value.split_whitespace().next().and_then(|w| w.parse::<u64>().ok()) {
                Some(n) => Value::Number(n.into()),
                None => continue,
            },
        };
        object.insert(field.to_string(), parsed);
    }
    if !percents.is_empty() {
        object.insert("post_tasil".to_string(), Value::Object(percents));
    }
    (!object.is_empty()).then(|| Value::Object(object))
}

fn resolve_name(raw: &str, unresolved: &mut Vec<String>) -> Option<HeirKind> {
    match heir_from_name(raw) {
        Some(kind) => Some(kind),
        None => {
            unresolved.push(raw.to_string());
            None
        }
    }
}

/// Reads heir labels (and counts when given) from a list of strings, a list
/// of `{kind, count}` objects, or a `name → count` map.
fn read_heir_counts(
    value: &Value,
    unresolved: &mut Vec<String>,
) -> BTreeMap<HeirKind, u32> {
    let mut heirs = BTreeMap::new();
    let mut add = |name: &str, count: Option<u64>, unresolved: &mut Vec<String>| {
        if let Some(kind) = resolve_name(name, unresolved) {
            let count = count.unwrap_or(1).min(u32::MAX as u64) as u32;
            heirs.insert(kind, count.max(1));
        }
    };
    match value {
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::String(name) => add(name, None, unresolved),
                    Value::Object(fields) => {
                        if let Some(name) = fields.get("kind").and_then(Value::as_str) {
                            add(name, fields.get("count").and_then(Value::as_u64), unresolved);
                        }
                    }
                    _ => {}
                }
            }
        }
        Value::Object(fields) => {
            for (name, count) in fields {
                add(name, count.as_u64(), unresolved);
            }
        }
        _ => {}
    }
    heirs
}

impl Prediction {
    /// Interprets a recovered object. Unparseable parts are skipped here;
    /// the validator reports them from `raw`.
    pub fn from_value(raw: Value, route: ExtractRoute) -> Prediction {
        let mut unresolved = Vec::new();
        let heirs = raw
            .get("heirs")
            .map(|v| read_heir_counts(v, &mut unresolved))
            .unwrap_or_default();
        let blocked = raw
            .get("blocked")
            .map(|v| read_heir_counts(v, &mut unresolved).into_keys().collect())
            .unwrap_or_default();

        let mut shares = BTreeMap::new();
        if let Some(Value::Object(fields)) = raw.get("shares") {
            for (name, value) in fields {
                if let (Some(kind), Some(number)) =
                    (resolve_name(name, &mut unresolved), NumValue::from_json(value))
                {
                    shares.insert(kind, number);
                }
            }
        }

        let category = raw
            .get("awl_or_radd")
            .and_then(Value::as_str)
            .and_then(resolve_category);
        let tasil_stage = raw.get("tasil_stage").and_then(NumValue::from_json);

        let mut post_tasil = BTreeMap::new();
        if let Some(Value::Object(fields)) = raw.get("post_tasil") {
            for (name, value) in fields {
                let Some(kind) = resolve_name(name, &mut unresolved) else { continue };
                let entry = match value {
                    Value::Object(parts) => PostTasilValue {
                        percent: parts.get("percent").and_then(NumValue::from_json),
                        count: parts.get("count").and_then(NumValue::from_json),
                        siham: parts.get("siham").and_then(NumValue::from_json),
                    },
                    // A bare number is read as the percentage.
                    other => PostTasilValue {
                        percent: NumValue::from_json(other),
                        ..PostTasilValue::default()
                    },
                };
                post_tasil.insert(kind, entry);
            }
        }

        Prediction {
            raw,
            route,
            defaulted: Vec::new(),
            heirs,
            blocked,
            shares,
            category,
            tasil_stage,
            post_tasil,
            unresolved,
        }
    }

    /// An all-defaults prediction, for callers that must emit something even
    /// when every route failed. It cannot pass validation.
    pub fn default_fill() -> Prediction {
        Prediction::from_value(Value::Object(serde_json::Map::new()), ExtractRoute::DefaultFill)
    }

    /// The typed view of a solver result, for gold-side scoring.
    pub fn from_solved(case: &SolvedCase) -> Prediction {
        let value = serde_json::to_value(case).expect("solved cases serialize");
        Prediction::from_value(value, ExtractRoute::Direct)
    }
}

/// Fills the non-critical fields the model omitted: `blocked` becomes empty
/// and `tasil_stage` falls back to the no-adjustment base implied by the
/// share denominators. Refuses to invent critical fields. Idempotent.
pub fn apply_defaults(pred: &mut Prediction) -> Result<(), ExtractError> {
    let object = match pred.raw.as_object() {
        Some(o) => o,
        None => return Err(ExtractError::MissingCritical("heirs")),
    };
    for critical in ["heirs", "shares", "awl_or_radd"] {
        if !object.contains_key(critical) {
            return Err(ExtractError::MissingCritical(match critical {
                "heirs" => "heirs",
                "shares" => "shares",
                _ => "awl_or_radd",
            }));
        }
    }
    let object = pred.raw.as_object_mut().expect("checked above");
    if !object.contains_key("blocked") {
        object.insert("blocked".to_string(), Value::Array(Vec::new()));
        pred.blocked.clear();
        pred.defaulted.push("blocked".to_string());
    }
    if !object.contains_key("tasil_stage") {
        let exact: Vec<Frac> = pred.shares.values().filter_map(|v| v.as_frac()).collect();
        let base = lcm_of_dens(&exact).unwrap_or(1);
        object.insert("tasil_stage".to_string(), Value::Number(base.into()));
        pred.tasil_stage = Some(NumValue::Exact(Frac::from_int(base as i64)));
        pred.defaulted.push("tasil_stage".to_string());
    }
    Ok(())
}
