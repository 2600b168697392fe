//! Uniform access to chat-completion LLMs: an OpenAI-compatible live client,
//! a deterministic scripted mock used by all tests, structured-output
//! extraction, and replayable transcripts.

mod extract;
mod live;
mod mock;
mod transcript;

pub use extract::{extract_structured, FieldKind, Schema};
pub use live::LiveEndpoint;
pub use mock::{IterationPattern, MockEntry, MockScript};
pub use transcript::{read_transcript, transcript_log, RecordingBackend, TranscriptRecord, TranscriptSink};

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pipeline role issuing a request. Mock lookup and transcripts key on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleTag {
    Filter,
    Analyzer,
    Designer,
    Generator,
    VoterAux,
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RoleTag::Filter => "filter",
            RoleTag::Analyzer => "analyzer",
            RoleTag::Designer => "designer",
            RoleTag::Generator => "generator",
            RoleTag::VoterAux => "voter-aux",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub speaker: Speaker,
    pub text: String,
}

/// One chat-completion request. Messages are non-empty and start with a
/// system message; temperature lies in [0, 2].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role_tag: RoleTag,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub model_id: String,
    pub iteration: u32,
}

impl ChatRequest {
    pub fn new(
        role_tag: RoleTag,
        model_id: impl Into<String>,
        iteration: u32,
        messages: Vec<ChatMessage>,
        temperature: f64,
    ) -> Result<Self> {
        if messages.is_empty() {
            return Err(Error::InvalidRequest("messages must be non-empty".into()));
        }
        if messages[0].speaker != Speaker::System {
            return Err(Error::InvalidRequest("first message must be from system".into()));
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(Error::InvalidRequest(format!(
                "temperature {temperature} outside [0, 2]"
            )));
        }
        Ok(ChatRequest {
            role_tag,
            messages,
            temperature,
            model_id: model_id.into(),
            iteration,
        })
    }

    /// Common two-message form: one system prompt, one user prompt.
    pub fn system_user(
        role_tag: RoleTag,
        model_id: impl Into<String>,
        iteration: u32,
        system: impl Into<String>,
        user: impl Into<String>,
        temperature: f64,
    ) -> Result<Self> {
        Self::new(
            role_tag,
            model_id,
            iteration,
            vec![
                ChatMessage {
                    speaker: Speaker::System,
                    text: system.into(),
                },
                ChatMessage {
                    speaker: Speaker::User,
                    text: user.into(),
                },
            ],
            temperature,
        )
    }

    /// Canonical flattened text of the request. Mock matchers match against
    /// this string and transcripts store it, so replay lookups are exact.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            let speaker = match m.speaker {
                Speaker::System => "system",
                Speaker::User => "user",
                Speaker::Assistant => "assistant",
            };
            out.push_str(speaker);
            out.push_str(": ");
            out.push_str(&m.text);
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub usage: Usage,
    #[serde(default)]
    pub latency: Duration,
}

/// A chat-completion backend: the live endpoint or the scripted mock.
/// Implementations must be safe to call concurrently (generators run in
/// parallel).
pub trait ChatBackend: Send + Sync {
    fn complete_chat(&self, req: &ChatRequest) -> Result<ChatResponse>;
}

/// Issues one chat-completion call against the given backend.
pub fn complete_chat(backend: &dyn ChatBackend, req: &ChatRequest) -> Result<ChatResponse> {
    backend.complete_chat(req)
}
