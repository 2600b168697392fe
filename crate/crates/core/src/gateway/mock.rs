//! Deterministic scripted mock backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, ChatResponse, RoleTag, Usage};
use crate::error::{Error, Result};

/// Iteration selector of a mock entry: a specific iteration or `"*"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IterationPattern {
    At(u32),
    Any(AnyMarker),
}

/// Serializes as the literal string `"*"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnyMarker {
    #[serde(rename = "*")]
    Star,
}

impl IterationPattern {
    pub const ANY: IterationPattern = IterationPattern::Any(AnyMarker::Star);

    fn matches(&self, iteration: u32) -> bool {
        match self {
            IterationPattern::At(i) => *i == iteration,
            IterationPattern::Any(_) => true,
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self, IterationPattern::At(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    pub role_tag: RoleTag,
    pub iteration: IterationPattern,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher: Option<String>,
    pub response: String,
}

/// A table of canned responses. Lookup is deterministic: an entry with an
/// exact iteration and a matching substring beats an exact iteration alone,
/// which beats a wildcard iteration; among equally specific entries the
/// first in file order wins.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    pub entries: Vec<MockEntry>,
}

impl MockScript {
    pub fn new(entries: Vec<MockEntry>) -> Self {
        MockScript { entries }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mock script serializes")
    }

    pub fn push(
        &mut self,
        role_tag: RoleTag,
        iteration: IterationPattern,
        matcher: Option<&str>,
        response: impl Into<String>,
    ) {
        self.entries.push(MockEntry {
            role_tag,
            iteration,
            matcher: matcher.map(str::to_string),
            response: response.into(),
        });
    }

    fn lookup(&self, req: &ChatRequest) -> Option<&str> {
        let text = req.canonical_text();
        let mut best: Option<(u8, &str)> = None;
        for entry in &self.entries {
            if entry.role_tag != req.role_tag || !entry.iteration.matches(req.iteration) {
                continue;
            }
            let matcher_hit = match &entry.matcher {
                Some(m) => {
                    if !text.contains(m.as_str()) {
                        continue;
                    }
                    true
                }
                None => false,
            };
            let specificity = (entry.iteration.is_exact() as u8) << 1 | matcher_hit as u8;
            if best.map_or(true, |(s, _)| specificity > s) {
                best = Some((specificity, entry.response.as_str()));
            }
        }
        best.map(|(_, r)| r)
    }
}

impl ChatBackend for MockScript {
    fn complete_chat(&self, req: &ChatRequest) -> Result<ChatResponse> {
        if req.messages.is_empty() {
            return Err(Error::InvalidRequest("messages must be non-empty".into()));
        }
        let text = self.lookup(req).ok_or_else(|| Error::NoScriptEntry {
            role: req.role_tag.to_string(),
            iteration: req.iteration,
        })?;
        Ok(ChatResponse {
            text: text.to_string(),
            usage: Usage::default(),
            latency: Duration::ZERO,
        })
    }
}
