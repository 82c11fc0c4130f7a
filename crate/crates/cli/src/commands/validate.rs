//! `validate`: run extraction and the four validation families over each
//! prediction, print a per-record verdict, and exit nonzero on any failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use faraid_core::validate::validate;

use crate::records;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Predictions to check: answer records or corpus documents.
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Print every check for passing records too.
    #[arg(long)]
    verbose: bool,
}

pub fn run(args: ValidateArgs) -> Result<ExitCode> {
    let (predictions, issues) = records::read_predictions(&args.pred)?;
    records::report_issues(&args.pred, &issues);

    let mut passed = 0usize;
    let mut failed = issues.len();
    for record in &predictions {
        match &record.prediction {
            Err(message) => {
                failed += 1;
                println!("{} FAIL extraction: {message}", record.id);
            }
            Ok(prediction) => {
                let report = validate(prediction);
                if report.overall {
                    passed += 1;
                    println!("{} PASS (route: {})", record.id, prediction.route.name());
                    if args.verbose {
                        for line in report.to_string().lines() {
                            println!("  {line}");
                        }
                    }
                } else {
                    failed += 1;
                    println!("{} FAIL", record.id);
                    for line in report.to_string().lines() {
                        println!("  {line}");
                    }
                }
            }
        }
    }

    println!(
        "{passed} passed, {failed} failed of {} records",
        predictions.len() + issues.len()
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
