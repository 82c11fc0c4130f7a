//! `ablate`: retrieval-quality report. Samples corpus questions, retrieves
//! context for each, computes the per-question quality row, and aggregates
//! the rows per source tag.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use faraid_core::gen::SourceTag;
use faraid_core::retrieval::dense::HashedNgramEmbedder;
use faraid_core::retrieval::{tokenize, Retriever};
use faraid_core::score::{ablation_row, QualityBin, TfIdfModel};
use serde_json::json;

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Corpus file the index was built from.
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Index file written by the index command.
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    /// Number of questions to sample (evenly spaced over the corpus).
    #[arg(long, default_value_t = 200)]
    sample: usize,
    /// Retrieved contexts per question.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Also write the aggregate report as JSON.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

fn tag_name(tag: SourceTag) -> &'static str {
    match tag {
        SourceTag::Synthetic => "synthetic",
        SourceTag::Textbook => "textbook",
        SourceTag::Web => "web",
    }
}

#[derive(Default)]
struct TagSummary {
    questions: usize,
    successes: usize,
    combined_sum: f64,
    bins: BTreeMap<QualityBin, usize>,
}

pub fn run(args: AblateArgs) -> Result<ExitCode> {
    let (documents, _) = super::load_corpus(&args.corpus)?;
    let retriever = Retriever::load_default_from_file(&args.index)
        .with_context(|| format!("cannot load index {}", args.index.display()))?;

    // The quality signals compare each question with the display text of its
    // retrieved documents — what an answering prompt would actually carry —
    // so the tf-idf space is fitted over those display texts.
    let by_id: BTreeMap<&str, &str> = documents
        .iter()
        .map(|doc| (doc.id.as_str(), doc.problem_text.as_str()))
        .collect();
    let token_lists: Vec<Vec<String>> = documents
        .iter()
        .map(|doc| tokenize(&doc.problem_text))
        .collect();
    let tfidf = TfIdfModel::fit(&token_lists);
    let embedder = HashedNgramEmbedder::default();

    let total = documents.len();
    let sample = args.sample.min(total).max(1);
    let mut summaries: BTreeMap<&'static str, TagSummary> = BTreeMap::new();
    for i in 0..sample {
        let doc = &documents[i * total / sample];
        let question = &doc.problem_text;
        let hits = retriever
            .retrieve(question, args.k)
            .with_context(|| format!("retrieval failed for document {}", doc.id))?;
        let contexts: Vec<&str> = hits
            .iter()
            .filter_map(|hit| by_id.get(hit.doc_id.as_str()).copied())
            .collect();
        let row = ablation_row(question, &contexts, &embedder, &tfidf)?;

        let summary = summaries.entry(tag_name(doc.source_tag)).or_default();
        summary.questions += 1;
        summary.successes += usize::from(row.success);
        summary.combined_sum += row.s_comb;
        *summary.bins.entry(row.bin).or_default() += 1;
    }

    let mut report = serde_json::Map::new();
    for (tag, summary) in &summaries {
        let mean = summary.combined_sum / summary.questions as f64;
        let bins: Vec<String> = summary
            .bins
            .iter()
            .map(|(bin, count)| format!("{bin}={count}"))
            .collect();
        println!(
            "tag {tag}: {} questions, success {}/{}, mean combined {mean:.4}, bins {}",
            summary.questions,
            summary.successes,
            summary.questions,
            bins.join(" ")
        );
        report.insert(
            (*tag).to_string(),
            json!({
                "questions": summary.questions,
                "successes": summary.successes,
                "mean_combined": mean,
                "bins": summary.bins.iter().map(|(bin, count)| (bin.to_string(), *count)).collect::<BTreeMap<_, _>>(),
            }),
        );
    }

    if let Some(path) = &args.report {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &report)?;
        println!("report written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
