//! `score`: stage-weighted evaluation of predictions against gold cases.
//! Prints the run summary; optionally writes the full per-case report.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use faraid_core::extract::Prediction;
use faraid_core::model::SolvedCase;
use faraid_core::score::{score_run, StageWeights, Tolerances};

use crate::records;

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Gold corpus file (documents with solved outputs).
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,
    /// Predictions: answer records or corpus documents.
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Also write the per-case report as JSON.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

pub fn run(args: ScoreArgs) -> Result<ExitCode> {
    let (documents, _) = super::load_corpus(&args.gold)?;
    let gold: Vec<(String, SolvedCase)> = documents
        .into_iter()
        .map(|doc| (doc.id, doc.structured_output))
        .collect();

    let (records, issues) = records::read_predictions(&args.pred)?;
    records::report_issues(&args.pred, &issues);
    let mut predictions: Vec<(String, Prediction)> = Vec::with_capacity(records.len());
    for record in records {
        match record.prediction {
            Ok(prediction) => predictions.push((record.id, prediction)),
            // An unextractable answer scores as a missing output.
            Err(message) => eprintln!("{}: {}: {message}", args.pred.display(), record.id),
        }
    }

    let report = score_run(&gold, &predictions, &StageWeights::default(), &Tolerances::default())?;
    print!("{report}");

    if let Some(path) = &args.report {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &report)?;
        println!("report written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
