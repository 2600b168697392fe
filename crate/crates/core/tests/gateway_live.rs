//! Live-endpoint behavior against a local HTTP responder: success parsing,
//! bounded retries with eventual success, and non-retryable statuses.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use llm4perf::gateway::{ChatBackend, ChatRequest, LiveEndpoint, RoleTag};
use llm4perf::Error;

/// Serves canned HTTP responses; one closure call per request.
fn serve(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind local port");
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_clone = hits.clone();
    std::thread::spawn(move || {
        for (status, body) in responses {
            let Ok((mut stream, _)) = listener.accept() else {
                return;
            };
            hits_clone.fetch_add(1, Ordering::SeqCst);
            // drain the request: headers, then content-length body bytes
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).is_err() || line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(rest) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = rest.trim().parse().unwrap_or(0);
                }
            }
            let mut body_buf = vec![0u8; content_length];
            let _ = reader.read_exact(&mut body_buf);
            let reason = if status == 200 { "OK" } else { "ERR" };
            let _ = write!(
                stream,
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}"), hits)
}

fn request() -> ChatRequest {
    ChatRequest::system_user(RoleTag::Designer, "test-model", 1, "sys", "plan something", 0.2)
        .unwrap()
}

fn completion_body(text: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 12, "completion_tokens": 4}
    })
    .to_string()
}

#[test]
fn parses_first_choice_and_usage() {
    let (base, hits) = serve(vec![(200, completion_body("a plan"))]);
    let endpoint = LiveEndpoint::new(&base).with_timeout(Duration::from_secs(5));
    let resp = endpoint.complete_chat(&request()).unwrap();
    assert_eq!(resp.text, "a plan");
    assert_eq!(resp.usage.prompt_tokens, 12);
    assert_eq!(resp.usage.completion_tokens, 4);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (base, hits) = serve(vec![
        (500, "{}".into()),
        (429, "{}".into()),
        (200, completion_body("eventually")),
    ]);
    let endpoint = LiveEndpoint::new(&base)
        .with_max_retries(3)
        .with_backoff_base(Duration::from_millis(5))
        .with_timeout(Duration::from_secs(5));
    let resp = endpoint.complete_chat(&request()).unwrap();
    assert_eq!(resp.text, "eventually");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn retry_budget_is_bounded() {
    let (base, hits) = serve(vec![(500, "{}".into()), (500, "{}".into()), (500, "{}".into())]);
    let endpoint = LiveEndpoint::new(&base)
        .with_max_retries(2)
        .with_backoff_base(Duration::from_millis(5))
        .with_timeout(Duration::from_secs(5));
    let err = endpoint.complete_chat(&request()).unwrap_err();
    assert!(matches!(err, Error::TransportError { attempts: 3, .. }), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 3); // 1 first try + 2 retries
}

#[test]
fn client_errors_do_not_retry() {
    let (base, hits) = serve(vec![(400, "bad request".into()), (200, completion_body("x"))]);
    let endpoint = LiveEndpoint::new(&base)
        .with_max_retries(3)
        .with_backoff_base(Duration::from_millis(5))
        .with_timeout(Duration::from_secs(5));
    let err = endpoint.complete_chat(&request()).unwrap_err();
    assert!(matches!(err, Error::NonRetryableStatus { status: 400, .. }), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn empty_completion_is_an_error() {
    let (base, _) = serve(vec![(200, completion_body(""))]);
    let endpoint = LiveEndpoint::new(&base).with_timeout(Duration::from_secs(5));
    let err = endpoint.complete_chat(&request()).unwrap_err();
    assert!(matches!(err, Error::EmptyCompletion), "{err}");
}
