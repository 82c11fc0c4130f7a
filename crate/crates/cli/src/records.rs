//! Line-delimited JSON persistence for corpus documents and model answers.
//! Readers tolerate malformed lines: every parse failure is reported with its
//! line number instead of being silently dropped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use faraid_core::extract::{apply_defaults, extract, Prediction};
use faraid_core::gen::Document;
use serde::{Deserialize, Serialize};

/// One malformed input line: its 1-based position and the parser's complaint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Prints collected line issues to stderr under the file's name.
pub fn report_issues(path: &Path, issues: &[LineIssue]) {
    for issue in issues {
        eprintln!("{}: {issue}", path.display());
    }
}

fn read_lines<T, F>(path: &Path, mut parse: F) -> Result<(Vec<T>, Vec<LineIssue>)>
where
    F: FnMut(&str) -> Result<T, String>,
{
    let file =
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| {
            format!("cannot read line {} of {}", index + 1, path.display())
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse(&line) {
            Ok(record) => records.push(record),
            Err(message) => issues.push(LineIssue { line: index + 1, message }),
        }
    }
    Ok((records, issues))
}

/// Reads a corpus file: one document per line.
pub fn read_documents(path: &Path) -> Result<(Vec<Document>, Vec<LineIssue>)> {
    read_lines(path, |line| {
        serde_json::from_str::<Document>(line).map_err(|e| e.to_string())
    })
}

/// Writes documents as they arrive, one per line, stopping at the first
/// producer error. Returns the count written.
pub fn write_documents<I, E>(path: &Path, documents: I) -> Result<usize>
where
    I: IntoIterator<Item = std::result::Result<Document, E>>,
    E: std::error::Error + Send + Sync + 'static,
{
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    let mut count = 0;
    for document in documents {
        serde_json::to_writer(&mut writer, &document?)?;
        writer.write_all(b"\n")?;
        count += 1;
    }
    writer.flush()?;
    Ok(count)
}

/// One answered question: the id and question it belongs to, the model's
/// answer text, and optionally its reasoning stream and the retrieved ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub think: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contexts: Vec<String>,
}

/// Writes answer records, one per line.
pub fn write_answers(path: &Path, records: &[AnswerRecord]) -> Result<()> {
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// One question to answer or prediction to evaluate, read from either record
/// shape: an answer record, or a corpus document (whose problem text is the
/// question and whose solution is the prediction).
#[derive(Debug, Clone)]
pub struct PredictionRecord {
    pub id: String,
    pub question: String,
    pub prediction: Result<Prediction, String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyRecord {
    Answer(AnswerRecord),
    Document(Box<Document>),
}

fn prediction_from_answer(answer: &str) -> Result<Prediction, String> {
    let mut prediction = extract(answer).map_err(|e| e.to_string())?;
    // Best effort: a missing critical key is recorded by the validator, not here.
    let _ = apply_defaults(&mut prediction);
    Ok(prediction)
}

/// Reads predictions from either record shape. Extraction failures are kept
/// per record (so callers can count or fail them), parse failures per line.
pub fn read_predictions(path: &Path) -> Result<(Vec<PredictionRecord>, Vec<LineIssue>)> {
    let (raw, issues) = read_lines(path, |line| {
        serde_json::from_str::<AnyRecord>(line).map_err(|e| e.to_string())
    })?;
    let records = raw
        .into_iter()
        .map(|record| match record {
            AnyRecord::Answer(answer) => PredictionRecord {
                prediction: prediction_from_answer(&answer.answer),
                id: answer.id,
                question: answer.question,
            },
            AnyRecord::Document(doc) => PredictionRecord {
                id: doc.id,
                question: doc.problem_text,
                prediction: Ok(Prediction::from_solved(&doc.structured_output)),
            },
        })
        .collect();
    Ok((records, issues))
}

/// Reads the questions to answer from either record shape: answer records
/// keep their question field, documents contribute their problem text.
pub fn read_questions(path: &Path) -> Result<(Vec<(String, String)>, Vec<LineIssue>)> {
    let (raw, issues) = read_lines(path, |line| {
        serde_json::from_str::<AnyRecord>(line).map_err(|e| e.to_string())
    })?;
    let questions = raw
        .into_iter()
        .map(|record| match record {
            AnyRecord::Answer(answer) => (answer.id, answer.question),
            AnyRecord::Document(doc) => (doc.id, doc.problem_text),
        })
        .collect();
    Ok((questions, issues))
}
