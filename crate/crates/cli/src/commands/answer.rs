//! `answer`: the full retrieval-augmented loop. Questions are answered with
//! retrieved context by the configured endpoint, or offline by echoing the
//! nearest retrieved solution. Endpoint calls run on a bounded worker pool;
//! the output file is written once, in input order, by a single writer.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use faraid_core::bridge::{
    Answerer, BridgeError, ContextSnippet, LlmClient, LlmReply, NearestPayloadAnswerer,
};
use faraid_core::retrieval::Retriever;

use crate::config::{self, EndpointFlags};
use crate::records::{self, AnswerRecord};

#[derive(Debug, Args)]
pub struct AnswerArgs {
    /// Index file written by the index command.
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    /// Corpus file the index was built from (supplies context payloads).
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Questions to answer: corpus documents or {"id", "question"} lines.
    #[arg(long, value_name = "FILE")]
    questions: PathBuf,
    /// Answers file to write (line-delimited JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Retrieved examples per question.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Answer only the first N questions.
    #[arg(long, value_name = "N")]
    take: Option<usize>,
    /// Answer offline by echoing the nearest retrieved solution.
    #[arg(long)]
    mock: bool,
    /// Concurrent endpoint requests.
    #[arg(long, default_value_t = 4)]
    parallel: usize,
    /// Endpoint URL (overrides environment and settings file).
    #[arg(long, value_name = "URL")]
    endpoint_url: Option<String>,
    /// Endpoint API key (overrides environment and settings file).
    #[arg(long, value_name = "KEY")]
    endpoint_key: Option<String>,
    /// Endpoint model name (overrides environment and settings file).
    #[arg(long, value_name = "NAME")]
    endpoint_model: Option<String>,
}

pub fn run(args: AnswerArgs, config_path: Option<&Path>) -> Result<ExitCode> {
    let answerer: Box<dyn Answerer> = if args.mock {
        Box::new(NearestPayloadAnswerer)
    } else {
        let flags = EndpointFlags {
            url: args.endpoint_url.clone(),
            key: args.endpoint_key.clone(),
            model: args.endpoint_model.clone(),
        };
        let settings = config::resolve(config_path, &flags)?;
        Box::new(LlmClient::new(settings.endpoint()?)?)
    };

    let (mut questions, question_issues) = records::read_questions(&args.questions)?;
    records::report_issues(&args.questions, &question_issues);
    if let Some(take) = args.take {
        questions.truncate(take);
    }
    if questions.is_empty() {
        bail!("no questions to answer in {}", args.questions.display());
    }

    let (documents, _) = super::load_corpus(&args.corpus)?;
    let mut payloads: HashMap<&str, (&str, String)> = HashMap::with_capacity(documents.len());
    for doc in &documents {
        let payload = serde_json::to_string(&doc.structured_output)?;
        payloads.insert(doc.id.as_str(), (doc.problem_text.as_str(), payload));
    }

    let retriever = Retriever::load_default_from_file(&args.index)
        .with_context(|| format!("cannot load index {}", args.index.display()))?;

    // Retrieval is local and fast; do it up front, sequentially.
    let mut tasks: Vec<(String, String, Vec<ContextSnippet>)> =
        Vec::with_capacity(questions.len());
    for (id, question) in questions {
        let hits = retriever
            .retrieve(&question, args.k)
            .with_context(|| format!("retrieval failed for question {id}"))?;
        let mut context = Vec::with_capacity(hits.len());
        for hit in hits {
            let (text, payload) = payloads.get(hit.doc_id.as_str()).ok_or_else(|| {
                anyhow!(
                    "retrieved document {} is not present in {}",
                    hit.doc_id,
                    args.corpus.display()
                )
            })?;
            context.push(ContextSnippet {
                doc_id: hit.doc_id,
                text: (*text).to_string(),
                payload: Some(payload.clone()),
            });
        }
        tasks.push((id, question, context));
    }

    // Answering may block on the network; run it on a bounded pool.
    let replies = answer_all(answerer.as_ref(), &tasks, args.parallel.max(1));

    let mut answers = Vec::with_capacity(tasks.len());
    for ((id, question, context), reply) in tasks.into_iter().zip(replies) {
        let reply = reply.with_context(|| format!("answering question {id} failed"))?;
        answers.push(AnswerRecord {
            id,
            question,
            answer: reply.answer,
            think: reply.think,
            contexts: context.into_iter().map(|snippet| snippet.doc_id).collect(),
        });
    }
    records::write_answers(&args.out, &answers)?;

    println!("answered {} questions to {}", answers.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Fans `tasks` out to at most `parallel` workers and returns one reply per
/// task, in task order.
fn answer_all(
    answerer: &dyn Answerer,
    tasks: &[(String, String, Vec<ContextSnippet>)],
    parallel: usize,
) -> Vec<Result<LlmReply, BridgeError>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<LlmReply, BridgeError>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..parallel.min(tasks.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (_, question, context) = &tasks[i];
                let reply = answerer.answer(question, context);
                *slots[i].lock().expect("no panics hold this lock") = Some(reply);
            });
        }
    });

    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("no panics hold this lock")
                .expect("every task index was visited")
        })
        .collect()
}
