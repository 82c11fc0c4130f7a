//! `index`: build the hybrid retrieval index over a corpus file and persist
//! it for the query-side commands.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use faraid_core::retrieval::{document_text, RetrievalParams, Retriever};

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Corpus file to index (line-delimited JSON).
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Index file to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Fusion weight of the dense channel.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fusion weight of the lexical channel.
    #[arg(long)]
    beta: Option<f64>,
    /// Rank-smoothing constant in the reciprocal-rank fusion.
    #[arg(long)]
    rrf_k: Option<f64>,
    /// Lexical term-frequency saturation.
    #[arg(long)]
    k1: Option<f64>,
    /// Lexical length-normalization strength.
    #[arg(long)]
    b: Option<f64>,
    /// Candidates each channel contributes before fusion.
    #[arg(long)]
    channel_depth: Option<usize>,
    /// Fused candidates passed to the reranker.
    #[arg(long)]
    rerank_depth: Option<usize>,
}

pub fn run(args: IndexArgs) -> Result<ExitCode> {
    let (documents, issues) = super::load_corpus(&args.corpus)?;

    let mut params = RetrievalParams::default();
    if let Some(alpha) = args.alpha {
        params.fuse.alpha = alpha;
    }
    if let Some(beta) = args.beta {
        params.fuse.beta = beta;
    }
    if let Some(k) = args.rrf_k {
        params.fuse.k = k;
    }
    if let Some(k1) = args.k1 {
        params.bm25.k1 = k1;
    }
    if let Some(b) = args.b {
        params.bm25.b = b;
    }
    if let Some(depth) = args.channel_depth {
        params.channel_depth = depth;
    }
    if let Some(depth) = args.rerank_depth {
        params.rerank_depth = depth;
    }

    let pairs = documents
        .iter()
        .map(|doc| (doc.id.clone(), document_text(doc)))
        .collect();
    let retriever = Retriever::build_default(pairs, params)?;
    retriever
        .save_to_file(&args.out)
        .with_context(|| format!("cannot write index to {}", args.out.display()))?;

    println!(
        "indexed {} documents into {}{}",
        documents.len(),
        args.out.display(),
        if issues.is_empty() {
            String::new()
        } else {
            format!(" ({} malformed lines skipped, reported above)", issues.len())
        }
    );
    Ok(ExitCode::SUCCESS)
}
