//! `generate`: synthesize a solved corpus and stream it to a file, one
//! document per line.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use faraid_core::gen::{generate_corpus, GenSpec};
use faraid_core::solver::profile::RuleProfile;

use crate::records;

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Corpus file to write (line-delimited JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Number of documents to produce.
    #[arg(long, default_value_t = GenSpec::default().target_count)]
    count: usize,
    /// Random seed; the same seed reproduces the corpus byte for byte.
    #[arg(long, default_value_t = GenSpec::default().seed)]
    seed: u64,
    /// Proportion of unadjusted cases.
    #[arg(long)]
    simple: Option<f64>,
    /// Proportion of base-inflation cases.
    #[arg(long)]
    awl: Option<f64>,
    /// Proportion of residue-return cases.
    #[arg(long)]
    radd: Option<f64>,
    /// Probability that a document states a concrete estate amount.
    #[arg(long, value_name = "P")]
    estate_probability: Option<f64>,
}

pub fn run(args: GenerateArgs) -> Result<ExitCode> {
    let mut spec = GenSpec {
        target_count: args.count,
        seed: args.seed,
        ..GenSpec::default()
    };
    if let Some(simple) = args.simple {
        spec.category_mix.simple = simple;
    }
    if let Some(awl) = args.awl {
        spec.category_mix.awl = awl;
    }
    if let Some(radd) = args.radd {
        spec.category_mix.radd = radd;
    }
    if let Some(p) = args.estate_probability {
        spec.estate_probability = p;
    }

    let profile = RuleProfile::default_majority();
    let documents = generate_corpus(&spec, &profile)?;
    let count = records::write_documents(&args.out, documents)?;

    println!("wrote {count} documents to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}
