//! Append-only JSON-lines transcript of gateway calls, replayable as a
//! [`MockScript`].

use std::io::{BufRead, Write};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::mock::{IterationPattern, MockEntry, MockScript};
use super::{ChatBackend, ChatRequest, ChatResponse, RoleTag, Usage};
use crate::error::Result;

/// One logged gateway call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub role_tag: RoleTag,
    pub iteration: u32,
    pub model_id: String,
    pub request_text: String,
    pub response_text: String,
    pub usage: Usage,
    /// Seconds since the Unix epoch at log time.
    pub timestamp: f64,
}

/// Serialized sink for transcript records; appends are atomic per record.
pub struct TranscriptSink {
    writer: Mutex<Box<dyn Write + Send>>,
}

impl TranscriptSink {
    pub fn new(writer: impl Write + Send + 'static) -> Self {
        TranscriptSink {
            writer: Mutex::new(Box::new(writer)),
        }
    }

    pub fn to_file(path: &std::path::Path) -> Result<Self> {
        Ok(Self::new(std::fs::File::create(path)?))
    }

    fn append(&self, record: &TranscriptRecord) -> Result<()> {
        let line = serde_json::to_string(record)?;
        let mut w = self.writer.lock().expect("transcript sink poisoned");
        writeln!(w, "{line}")?;
        w.flush()?;
        Ok(())
    }
}

/// Appends one record for the given request/response pair.
pub fn transcript_log(req: &ChatRequest, resp: &ChatResponse, sink: &TranscriptSink) -> Result<()> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    sink.append(&TranscriptRecord {
        role_tag: req.role_tag,
        iteration: req.iteration,
        model_id: req.model_id.clone(),
        request_text: req.canonical_text(),
        response_text: resp.text.clone(),
        usage: resp.usage,
        timestamp,
    })
}

/// Parses a JSON-lines transcript.
pub fn read_transcript(reader: impl BufRead) -> Result<Vec<TranscriptRecord>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

impl MockScript {
    /// Rebuilds a mock from a recorded transcript. Each record becomes an
    /// entry matched by its full request text, so replaying the identical
    /// call sequence reproduces the identical responses.
    pub fn from_transcript(records: &[TranscriptRecord]) -> MockScript {
        MockScript::new(
            records
                .iter()
                .map(|r| MockEntry {
                    role_tag: r.role_tag,
                    iteration: IterationPattern::At(r.iteration),
                    matcher: Some(r.request_text.clone()),
                    response: r.response_text.clone(),
                })
                .collect(),
        )
    }
}

/// Backend wrapper that logs every call to a transcript sink.
pub struct RecordingBackend<'a> {
    inner: &'a dyn ChatBackend,
    sink: &'a TranscriptSink,
}

impl<'a> RecordingBackend<'a> {
    pub fn new(inner: &'a dyn ChatBackend, sink: &'a TranscriptSink) -> Self {
        RecordingBackend { inner, sink }
    }
}

impl ChatBackend for RecordingBackend<'_> {
    fn complete_chat(&self, req: &ChatRequest) -> Result<ChatResponse> {
        let resp = self.inner.complete_chat(req)?;
        transcript_log(req, &resp, self.sink)?;
        Ok(resp)
    }
}
