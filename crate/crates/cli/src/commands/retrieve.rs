//! `retrieve`: query a saved index and print the fused, reranked hits as
//! JSON lines.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use faraid_core::retrieval::Retriever;
use serde_json::json;

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Index file written by the index command.
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    /// Query text.
    #[arg(long)]
    query: String,
    /// Maximum number of hits to return.
    #[arg(long, default_value_t = 3)]
    k: usize,
}

pub fn run(args: RetrieveArgs) -> Result<ExitCode> {
    let retriever = Retriever::load_default_from_file(&args.index)
        .with_context(|| format!("cannot load index {}", args.index.display()))?;
    let hits = retriever.retrieve(&args.query, args.k)?;
    for hit in &hits {
        let line = json!({
            "doc_id": hit.doc_id,
            "rank": hit.rank,
            "rrf_score": hit.rrf_score,
            "rerank_score": hit.rerank_score,
        });
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}
