//! Behavior checks on the command-line surface: exit codes, diagnostics,
//! self-scoring, hit limits, malformed-line reporting, and the settings
//! precedence (flags over environment over file) proven against a live local
//! HTTP endpoint.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

fn command() -> Command {
    let mut command = Command::new(env!("CARGO_BIN_EXE_faraid"));
    command
        .env_remove("FARAID_ENDPOINT_URL")
        .env_remove("FARAID_ENDPOINT_KEY")
        .env_remove("FARAID_ENDPOINT_MODEL");
    command
}

fn faraid(args: &[&str]) -> Output {
    command().args(args).output().expect("the binary must run")
}

fn run_ok(args: &[&str]) -> String {
    let output = faraid(args);
    assert!(
        output.status.success(),
        "command {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Builds a small corpus + index pair once per temp dir.
fn prepare_corpus(dir: &Path, count: usize) -> (String, String) {
    let corpus = dir.join("corpus.jsonl").display().to_string();
    let index = dir.join("corpus.idx").display().to_string();
    run_ok(&["generate", "--out", &corpus, "--count", &count.to_string(), "--seed", "99"]);
    run_ok(&["index", "--corpus", &corpus, "--out", &index]);
    (corpus, index)
}

fn first_problem_text(corpus: &str) -> String {
    let line = std::fs::read_to_string(corpus)
        .expect("corpus readable")
        .lines()
        .next()
        .expect("corpus non-empty")
        .to_string();
    serde_json::from_str::<serde_json::Value>(&line).expect("corpus line parses")["problem_text"]
        .as_str()
        .expect("problem text")
        .to_string()
}

#[test]
fn usage_errors_exit_2() {
    let unknown_flag = faraid(&["generate", "--definitely-not-a-flag"]);
    assert_eq!(unknown_flag.status.code(), Some(2), "unknown flag must be a usage error");

    let unknown_subcommand = faraid(&["frobnicate"]);
    assert_eq!(unknown_subcommand.status.code(), Some(2), "unknown subcommand is a usage error");

    let missing_required = faraid(&["retrieve"]);
    assert_eq!(missing_required.status.code(), Some(2), "missing required flags is a usage error");
}

#[test]
fn missing_settings_file_is_a_named_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("empty.jsonl");
    std::fs::write(&pred, "").unwrap();
    let out = dir.path().join("out.zip");

    let output = faraid(&[
        "package",
        "--pred",
        &pred.display().to_string(),
        "--out",
        &out.display().to_string(),
        "--config",
        "/definitely/missing/settings.toml",
    ]);
    assert_eq!(output.status.code(), Some(1), "a missing named file is a runtime error");
    assert!(
        stderr_of(&output).contains("/definitely/missing/settings.toml"),
        "the diagnostic must name the missing file, got: {}",
        stderr_of(&output)
    );
}

#[test]
fn gold_scored_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl").display().to_string();
    run_ok(&["generate", "--out", &corpus, "--count", "50", "--seed", "3"]);

    let stdout = run_ok(&["score", "--gold", &corpus, "--pred", &corpus]);
    assert!(stdout.contains("mean score: 1.0000"), "got:\n{stdout}");
    assert!(stdout.contains("missing outputs: 0"), "got:\n{stdout}");
}

#[test]
fn retrieve_returns_at_most_k_hits_as_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, index) = prepare_corpus(dir.path(), 30);
    let query = first_problem_text(&corpus);

    let stdout = run_ok(&["retrieve", "--index", &index, "--query", &query, "--k", "3"]);
    let hits: Vec<serde_json::Value> = stdout
        .lines()
        .map(|line| serde_json::from_str(line).expect("each hit line is JSON"))
        .collect();
    assert_eq!(hits.len(), 3);
    for (i, hit) in hits.iter().enumerate() {
        assert_eq!(hit["rank"].as_u64(), Some(i as u64 + 1));
        assert!(hit["doc_id"].is_string());
        assert!(hit["rrf_score"].is_number());
        assert!(hit["rerank_score"].is_number());
    }
}

#[test]
fn malformed_corpus_lines_are_reported_with_their_position() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl").display().to_string();
    run_ok(&["generate", "--out", &corpus, "--count", "10", "--seed", "5"]);

    // Corrupt the fourth line.
    let text = std::fs::read_to_string(&corpus).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "{\"id\": \"broken";
    std::fs::write(&corpus, lines.join("\n")).unwrap();

    let index = dir.path().join("corpus.idx").display().to_string();
    let output = faraid(&["index", "--corpus", &corpus, "--out", &index]);
    assert!(output.status.success(), "good lines must still be indexed");
    assert!(
        stderr_of(&output).contains("line 4"),
        "the report must carry the line position, got: {}",
        stderr_of(&output)
    );
    assert!(
        String::from_utf8_lossy(&output.stdout).contains("indexed 9 documents"),
        "nine good documents remain"
    );
}

#[test]
fn validation_failures_exit_nonzero_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("answers.jsonl");
    let good = serde_json::json!({
        "id": "ok-1",
        "question": "q",
        "answer": "{\"heirs\": {\"son\": 1}, \"shares\": {\"son\": \"1/1\"}, \"awl_or_radd\": \"simple\", \
                    \"post_tasil\": {\"son\": {\"percent\": 100, \"count\": 1}}}",
    });
    let bad = serde_json::json!({
        "id": "bad-1",
        "question": "q",
        "answer": "{\"shares\": {\"son\": \"1/1\"}}",
    });
    let unparseable = serde_json::json!({
        "id": "bad-2",
        "question": "q",
        "answer": "لا شيء منظم هنا",
    });
    std::fs::write(&pred, format!("{good}\n{bad}\n{unparseable}\n")).unwrap();

    let output = faraid(&["validate", "--pred", &pred.display().to_string()]);
    assert_eq!(output.status.code(), Some(1), "failures must exit nonzero");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("ok-1 PASS"), "got:\n{stdout}");
    assert!(stdout.contains("bad-1 FAIL"), "got:\n{stdout}");
    assert!(stdout.contains("bad-2 FAIL extraction"), "got:\n{stdout}");
    assert!(stdout.contains("1 passed, 2 failed of 3 records"), "got:\n{stdout}");
}

#[test]
fn empty_prediction_set_packages_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("empty.jsonl");
    std::fs::write(&pred, "").unwrap();
    let out = dir.path().join("sub.zip");

    let output = faraid(&[
        "package",
        "--pred",
        &pred.display().to_string(),
        "--out",
        &out.display().to_string(),
    ]);
    assert!(output.status.success());
    assert!(
        stderr_of(&output).contains("warning"),
        "an empty set is allowed but warned, got: {}",
        stderr_of(&output)
    );
    assert!(out.exists(), "the archive is still written");
}

/// A single-threaded canned chat-completions endpoint: answers every request
/// on the given listener with the same reply body and closes the connection.
fn serve_canned_replies(listener: TcpListener, content: &'static str) {
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            // Read headers, then exactly content-length body bytes.
            let mut buffer = Vec::new();
            let mut chunk = [0u8; 1024];
            let body_start = loop {
                match stream.read(&mut chunk) {
                    Ok(0) => break None,
                    Ok(n) => {
                        buffer.extend_from_slice(&chunk[..n]);
                        if let Some(at) =
                            buffer.windows(4).position(|window| window == b"\r\n\r\n")
                        {
                            break Some(at + 4);
                        }
                    }
                    Err(_) => break None,
                }
            };
            let Some(body_start) = body_start else { continue };
            let headers = String::from_utf8_lossy(&buffer[..body_start]).to_lowercase();
            let content_length: usize = headers
                .lines()
                .find_map(|line| line.strip_prefix("content-length:"))
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(0);
            while buffer.len() < body_start + content_length {
                match stream.read(&mut chunk) {
                    Ok(0) => break,
                    Ok(n) => buffer.extend_from_slice(&chunk[..n]),
                    Err(_) => break,
                }
            }

            let body = serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": content}}]
            })
            .to_string();
            let reply = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
}

const CANNED_ANSWER: &str = "<think>مثال</think>\n{\"heirs\": {\"son\": 1}, \"shares\": {\"son\": \"1/1\"}, \"awl_or_radd\": \"simple\"}";

#[test]
fn endpoint_settings_prefer_flags_over_env_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, index) = prepare_corpus(dir.path(), 12);

    let listener = TcpListener::bind("127.0.0.1:0").expect("bind a local port");
    let good_url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    serve_canned_replies(listener, CANNED_ANSWER);
    // Nothing listens on the discard port; requests there fail fast.
    let bad_url = "http://127.0.0.1:9/v1/chat/completions";

    // Flags must beat the environment: the env URL is unreachable, the flag
    // URL is the live server — success proves the flag won.
    let answers = dir.path().join("by-flag.jsonl").display().to_string();
    let output = command()
        .args([
            "answer", "--index", &index, "--corpus", &corpus, "--questions", &corpus,
            "--out", &answers, "--take", "2", "--parallel", "1",
            "--endpoint-url", &good_url, "--endpoint-model", "flag-model",
        ])
        .env("FARAID_ENDPOINT_URL", bad_url)
        .output()
        .expect("the binary must run");
    assert!(
        output.status.success(),
        "flag URL must win over env URL\nstderr: {}",
        stderr_of(&output)
    );

    // The environment must beat the file: the file URL is unreachable, the
    // env URL is the live server; the model comes from the file.
    let settings = dir.path().join("settings.toml");
    std::fs::write(
        &settings,
        format!("endpoint_url = \"{bad_url}\"\nendpoint_model = \"file-model\"\n"),
    )
    .unwrap();
    let answers_env = dir.path().join("by-env.jsonl").display().to_string();
    let output = command()
        .args([
            "answer", "--index", &index, "--corpus", &corpus, "--questions", &corpus,
            "--out", &answers_env, "--take", "2", "--parallel", "1",
            "--config", &settings.display().to_string(),
        ])
        .env("FARAID_ENDPOINT_URL", &good_url)
        .output()
        .expect("the binary must run");
    assert!(
        output.status.success(),
        "env URL must win over file URL\nstderr: {}",
        stderr_of(&output)
    );

    // Both runs produced real completions with the reasoning stream split off.
    for path in [&answers, &answers_env] {
        let text = std::fs::read_to_string(path).unwrap();
        let records: Vec<serde_json::Value> =
            text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(records.len(), 2);
        for record in &records {
            assert!(record["answer"].as_str().unwrap().contains("heirs"));
            assert_eq!(record["think"].as_str(), Some("مثال"));
            assert!(!record["contexts"].as_array().unwrap().is_empty());
        }
    }

    // Without any endpoint setting, answering must fail with guidance.
    let output = command()
        .args([
            "answer", "--index", &index, "--corpus", &corpus, "--questions", &corpus,
            "--out", &dir.path().join("none.jsonl").display().to_string(),
            "--take", "1",
        ])
        .output()
        .expect("the binary must run");
    assert_eq!(output.status.code(), Some(1));
    assert!(
        stderr_of(&output).contains("endpoint URL not set"),
        "got: {}",
        stderr_of(&output)
    );
}
