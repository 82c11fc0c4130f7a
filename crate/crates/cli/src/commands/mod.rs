//! One module per subcommand. Each exposes an `Args` struct for clap and a
//! `run` function returning the process exit code.

pub mod ablate;
pub mod answer;
pub mod generate;
pub mod index;
pub mod package;
pub mod retrieve;
pub mod score;
pub mod validate;

use std::path::Path;

use anyhow::{bail, Result};
use faraid_core::gen::Document;

use crate::records::{self, LineIssue};

/// Reads a corpus file, printing any malformed-line reports to stderr.
/// Refuses to continue on an empty result: every command that takes a corpus
/// needs at least one document.
pub(crate) fn load_corpus(path: &Path) -> Result<(Vec<Document>, Vec<LineIssue>)> {
    let (documents, issues) = records::read_documents(path)?;
    records::report_issues(path, &issues);
    if documents.is_empty() {
        bail!("no readable documents in {}", path.display());
    }
    Ok((documents, issues))
}
