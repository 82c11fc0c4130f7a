//! `package`: validate every prediction, rename output keys, and pack the
//! sorted entries into a deterministic submission archive.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use faraid_core::validate::validate;

use crate::archive::{rename_keys, submission_bytes, zip_single_member, SubmissionEntry};
use crate::config::{self, EndpointFlags};
use crate::records;

#[derive(Debug, Args)]
pub struct PackageArgs {
    /// Predictions to pack: answer records or corpus documents.
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Archive file to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Key rename OLD=NEW applied to each output object; repeatable.
    /// Overrides the settings file (default: tasil_stage=awl_stage).
    #[arg(long, value_name = "OLD=NEW")]
    rename: Vec<String>,
}

fn parse_renames(pairs: &[String]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let (old, new) = pair
            .split_once('=')
            .with_context(|| format!("rename must be OLD=NEW, got \"{pair}\""))?;
        if old.is_empty() || new.is_empty() {
            bail!("rename must be OLD=NEW, got \"{pair}\"");
        }
        map.insert(old.to_string(), new.to_string());
    }
    Ok(map)
}

pub fn run(args: PackageArgs, config_path: Option<&Path>) -> Result<ExitCode> {
    let rename = if args.rename.is_empty() {
        config::resolve(config_path, &EndpointFlags::default())?.rename
    } else {
        parse_renames(&args.rename)?
    };

    let (predictions, issues) = records::read_predictions(&args.pred)?;
    records::report_issues(&args.pred, &issues);
    if !issues.is_empty() {
        bail!(
            "{} malformed lines in {}; refusing to pack a partial submission",
            issues.len(),
            args.pred.display()
        );
    }

    let mut entries = Vec::with_capacity(predictions.len());
    for record in predictions {
        let prediction = match record.prediction {
            Ok(prediction) => prediction,
            Err(message) => {
                bail!("prediction {} could not be extracted: {message}", record.id)
            }
        };
        let report = validate(&prediction);
        if !report.overall {
            let failed: Vec<&str> = report
                .checks()
                .iter()
                .filter(|(_, check)| !check.passed)
                .map(|(name, _)| *name)
                .collect();
            bail!(
                "prediction {} fails validation ({}); fix or drop it before packaging",
                record.id,
                failed.join(", ")
            );
        }
        let mut output = prediction.raw.clone();
        rename_keys(&mut output, &rename)
            .with_context(|| format!("prediction {}", record.id))?;
        entries.push(SubmissionEntry { id: record.id, question: record.question, output });
    }

    if entries.is_empty() {
        eprintln!("warning: packaging an empty prediction set");
    }
    let count = entries.len();
    let bytes = submission_bytes(entries)?;
    let archive = zip_single_member("submission.json", &bytes);
    std::fs::write(&args.out, &archive)
        .with_context(|| format!("cannot write {}", args.out.display()))?;

    println!(
        "packaged {count} predictions into {} ({} bytes)",
        args.out.display(),
        archive.len()
    );
    Ok(ExitCode::SUCCESS)
}
