//! OpenAI-compatible chat-completions client with bounded retries.

use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{ChatBackend, ChatRequest, ChatResponse, Speaker, Usage};
use crate::error::{Error, Result};

/// Environment variable holding the bearer credential.
pub const API_KEY_ENV: &str = "PERF_SAMPLER_API_KEY";

const CHAT_COMPLETIONS_PATH: &str = "/v1/chat/completions";

/// Descriptor of a live chat-completions endpoint.
#[derive(Clone, Debug)]
pub struct LiveEndpoint {
    base_url: String,
    max_retries: u32,
    backoff_base: Duration,
    timeout: Duration,
}

impl LiveEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        LiveEndpoint {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            max_retries: 3,
            backoff_base: Duration::from_millis(250),
            timeout: Duration::from_secs(120),
        }
    }

    pub fn with_max_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    pub fn with_backoff_base(mut self, backoff_base: Duration) -> Self {
        self.backoff_base = backoff_base;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn url(&self) -> String {
        format!("{}{}", self.base_url, CHAT_COMPLETIONS_PATH)
    }

    fn attempt(&self, client: &reqwest::blocking::Client, req: &ChatRequest) -> AttemptOutcome {
        let messages: Vec<_> = req
            .messages
            .iter()
            .map(|m| {
                json!({
                    "role": match m.speaker {
                        Speaker::System => "system",
                        Speaker::User => "user",
                        Speaker::Assistant => "assistant",
                    },
                    "content": m.text,
                })
            })
            .collect();
        let body = json!({
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
        });
        let mut http = client.post(self.url()).json(&body);
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                http = http.bearer_auth(key);
            }
        }
        let resp = match http.send() {
            Ok(r) => r,
            Err(e) => return AttemptOutcome::Retryable(e.to_string()),
        };
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return AttemptOutcome::Retryable(format!("status {status}"));
        }
        if !status.is_success() {
            let message = resp.text().unwrap_or_default();
            return AttemptOutcome::Fatal(Error::NonRetryableStatus {
                status: status.as_u16(),
                message,
            });
        }
        let parsed: CompletionBody = match resp.json() {
            Ok(p) => p,
            Err(e) => return AttemptOutcome::Retryable(format!("malformed body: {e}")),
        };
        let text = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .unwrap_or_default();
        if text.is_empty() {
            return AttemptOutcome::Fatal(Error::EmptyCompletion);
        }
        AttemptOutcome::Done {
            text,
            usage: Usage {
                prompt_tokens: parsed.usage.prompt_tokens,
                completion_tokens: parsed.usage.completion_tokens,
            },
        }
    }
}

enum AttemptOutcome {
    Done { text: String, usage: Usage },
    Retryable(String),
    Fatal(Error),
}

#[derive(Deserialize)]
struct CompletionBody {
    #[serde(default)]
    choices: Vec<Choice>,
    #[serde(default)]
    usage: UsageBody,
}

#[derive(Deserialize)]
struct Choice {
    message: MessageBody,
}

#[derive(Deserialize)]
struct MessageBody {
    #[serde(default)]
    content: String,
}

#[derive(Default, Deserialize)]
struct UsageBody {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl ChatBackend for LiveEndpoint {
    fn complete_chat(&self, req: &ChatRequest) -> Result<ChatResponse> {
        let started = Instant::now();
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| Error::TransportError {
                attempts: 0,
                message: e.to_string(),
            })?;
        let mut last_message = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
            match self.attempt(&client, req) {
                AttemptOutcome::Done { text, usage } => {
                    return Ok(ChatResponse {
                        text,
                        usage,
                        latency: started.elapsed(),
                    })
                }
                AttemptOutcome::Fatal(err) => return Err(err),
                AttemptOutcome::Retryable(message) => last_message = message,
            }
        }
        Err(Error::TransportError {
            attempts: self.max_retries + 1,
            message: last_message,
        })
    }
}
