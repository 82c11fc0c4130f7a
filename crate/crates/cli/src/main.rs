//! `faraid`: the command-line surface over the inheritance-solving pipeline —
//! corpus generation, retrieval indexing and querying, endpoint-backed or
//! offline answering, validation, scoring, retrieval ablation, and submission
//! packaging. Usage errors exit 2; runtime failures print a diagnostic and
//! exit 1.

mod archive;
mod commands;
mod config;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "faraid",
    version,
    about = "Retrieval-augmented question answering over Islamic inheritance problems"
)]
struct Cli {
    /// Flat TOML settings file (endpoint credentials, output key renames).
    /// Flags override environment variables, which override this file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a solved corpus as line-delimited JSON
    Generate(commands::generate::GenerateArgs),
    /// Build the hybrid retrieval index over a corpus file
    Index(commands::index::IndexArgs),
    /// Query an index and print the top hits
    Retrieve(commands::retrieve::RetrieveArgs),
    /// Answer questions with retrieved context (endpoint or offline mock)
    Answer(commands::answer::AnswerArgs),
    /// Extract and validate structured outputs from answers
    Validate(commands::validate::ValidateArgs),
    /// Score predictions against gold cases
    Score(commands::score::ScoreArgs),
    /// Report retrieval quality per source tag
    Ablate(commands::ablate::AblateArgs),
    /// Pack validated predictions into a submission archive
    Package(commands::package::PackageArgs),
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Generate(args) => commands::generate::run(args),
        Command::Index(args) => commands::index::run(args),
        Command::Retrieve(args) => commands::retrieve::run(args),
        Command::Answer(args) => commands::answer::run(args, config),
        Command::Validate(args) => commands::validate::run(args),
        Command::Score(args) => commands::score::run(args),
        Command::Ablate(args) => commands::ablate::run(args),
        Command::Package(args) => commands::package::run(args, config),
    };
    match result {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
