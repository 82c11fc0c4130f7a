//! Client for an OpenAI-style chat-completions endpoint: prompt assembly
//! from retrieved examples, throttling-aware retries, and separation of the
//! model's reasoning stream (`<think>…</think>`) from its final answer.

use std::time::Duration;

use thiserror::Error;

/// Failures while talking to the model endpoint.
#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("request to the model endpoint failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("model endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("could not read a completion out of the endpoint reply: {0}")]
    MalformedReply(String),
    #[error("gave up after {attempts} attempts; last failure: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("no context documents were provided")]
    EmptyContext,
    #[error("document {0} carries no structured payload to echo")]
    MissingPayload(String),
}

/// Connection and sampling settings for the endpoint.
#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// Full URL of the chat-completions route.
    pub url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    /// Base delay before the second attempt; doubles per retry, capped.
    pub retry_backoff: Duration,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> EndpointConfig {
        EndpointConfig {
            url: url.into(),
            api_key: None,
            model: model.into(),
            temperature: 0.2,
            max_tokens: 2048,
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            retry_backoff: Duration::from_millis(500),
        }
    }
}

/// One retrieved example handed to the prompt builder: its display text and,
/// when available, the machine-readable solution attached to it.
#[derive(Debug, Clone)]
pub struct ContextSnippet {
    pub doc_id: String,
    pub text: String,
    pub payload: Option<String>,
}

/// A completion with the reasoning stream already separated out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmReply {
    pub think: Option<String>,
    pub answer: String,
    /// The full completion text before splitting.
    pub raw: String,
}

/// Anything that can turn a question plus retrieved context into a reply:
/// the real endpoint client, or the offline echo used for dry runs. Shared
/// across worker threads, so implementations must be thread-safe.
pub trait Answerer: Send + Sync {
    fn answer(&self, question: &str, context: &[ContextSnippet]) -> Result<LlmReply, BridgeError>;
}

/// Builds the Arabic few-shot prompt: instruction, numbered examples, the
/// question, and the JSON output contract.
pub fn build_prompt(question: &str, context: &[ContextSnippet]) -> String {
    let mut prompt = String::from(
        "أنت خبير في علم الفرائض والمواريث. ادرس الأمثلة المحلولة التالية ثم أجب عن السؤال الأخير.\n",
    );
    for (i, snippet) in context.iter().enumerate() {
        prompt.push_str(&format!("\nمثال {}:\n{}\n", i + 1, snippet.text.trim()));
        if let Some(payload) = &snippet.payload {
            prompt.push_str(&format!("الحل المنظم:\n{}\n", payload.trim()));
        }
    }
    prompt.push_str(&format!("\nالسؤال:\n{}\n", question.trim()));
    prompt.push_str(
        "\nأعد الجواب النهائي بصيغة JSON فقط داخل سطر واحد أو كتلة واحدة، بهذه المفاتيح:\n\
         {\"heirs\": {…}, \"blocked\": […], \"shares\": {…}, \"awl_or_radd\": \"…\", \
         \"original_base\": n, \"final_base\": n, \"tasil_stage\": n, \"post_tasil\": {…}}\n",
    );
    prompt
}

/// Splits a completion into its reasoning stream and final answer. Total:
/// handles missing, unclosed, bare-closing, and repeated tags.
pub fn split_think_answer(text: &str) -> (Option<String>, String) {
    const OPEN: &str = "<think>";
    const CLOSE: &str = "</think>";
    let mut thinks: Vec<&str> = Vec::new();
    let mut answer = String::new();
    let mut rest = text;

    // Some endpoints stream the reply mid-thought, so the first tag seen is
    // a bare closer: everything before it is reasoning.
    if let Some(close) = rest.find(CLOSE) {
        if !rest[..close].contains(OPEN) {
            thinks.push(&rest[..close]);
            rest = &rest[close + CLOSE.len()..];
        }
    }
    while let Some(open) = rest.find(OPEN) {
        answer.push_str(&rest[..open]);
        let after = &rest[open + OPEN.len()..];
        match after.find(CLOSE) {
            Some(close) => {
                thinks.push(&after[..close]);
                rest = &after[close + CLOSE.len()..];
            }
            None => {
                thinks.push(after);
                rest = "";
            }
        }
    }
    answer.push_str(rest);

    let think = thinks.join("\n");
    let think = think.trim();
    (
        (!think.is_empty()).then(|| think.to_string()),
        answer.trim().to_string(),
    )
}

fn parse_reply(http_body: &str) -> Result<LlmReply, BridgeError> {
    let value: serde_json::Value = serde_json::from_str(http_body)
        .map_err(|e| BridgeError::MalformedReply(e.to_string()))?;
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .or_else(|| value.pointer("/choices/0/text").and_then(|v| v.as_str()))
        .ok_or_else(|| {
            BridgeError::MalformedReply("reply has no choices[0].message.content".to_string())
        })?;
    let (think, answer) = split_think_answer(content);
    Ok(LlmReply { think, answer, raw: content.to_string() })
}

/// Blocking client for the chat-completions endpoint.
pub struct LlmClient {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
}

impl LlmClient {
    pub fn new(config: EndpointConfig) -> Result<LlmClient, BridgeError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()?;
        Ok(LlmClient { config, client })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// Sends one prompt, retrying on throttling (429), server errors (5xx),
    /// and transport failures with doubling backoff.
    pub fn complete(&self, prompt: &str) -> Result<LlmReply, BridgeError> {
        let payload = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut last = String::from("no attempt was made");
        for attempt in 1..=self.config.max_attempts {
            if attempt > 1 {
                let factor = 1u32 << (attempt - 2).min(4);
                std::thread::sleep(self.config.retry_backoff * factor);
            }
            let mut request = self.client.post(&self.config.url).json(&payload);
            if let Some(key) = &self.config.api_key {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status().as_u16();
                    let body = response.text().unwrap_or_default();
                    if (200..300).contains(&status) {
                        return parse_reply(&body);
                    }
                    if status == 429 || (500..600).contains(&status) {
                        last = format!("status {status}");
                        log::warn!(
                            "attempt {attempt}/{}: endpoint returned {status}, will retry",
                            self.config.max_attempts
                        );
                        continue;
                    }
                    return Err(BridgeError::Status { status, body });
                }
                Err(err) => {
                    last = err.to_string();
                    log::warn!("attempt {attempt}/{}: {err}", self.config.max_attempts);
                }
            }
        }
        Err(BridgeError::Exhausted { attempts: self.config.max_attempts, last })
    }
}

impl Answerer for LlmClient {
    fn answer(&self, question: &str, context: &[ContextSnippet]) -> Result<LlmReply, BridgeError> {
        self.complete(&build_prompt(question, context))
    }
}

/// Offline stand-in for the endpoint: replies with the structured payload of
/// the nearest retrieved example, wrapped in a short reasoning note. Lets the
/// whole pipeline run without network access.
pub struct NearestPayloadAnswerer;

impl Answerer for NearestPayloadAnswerer {
    fn answer(&self, _question: &str, context: &[ContextSnippet]) -> Result<LlmReply, BridgeError> {
        let top = context.first().ok_or(BridgeError::EmptyContext)?;
        let payload = top
            .payload
            .as_deref()
            .ok_or_else(|| BridgeError::MissingPayload(top.doc_id.clone()))?;
        let content = format!(
            "<think>أقرب مثال مسترجع هو {} فاعتمدت حله.</think>\n{payload}",
            top.doc_id
        );
        let (think, answer) = split_think_answer(&content);
        Ok(LlmReply { think, answer, raw: content })
    }
}
