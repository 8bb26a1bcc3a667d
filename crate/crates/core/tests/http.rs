use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};
use unlearnkit::elicit::http::{HttpConfig, HttpResponder};
use unlearnkit::elicit::{Responder, ResponderError};

#[derive(Debug, Clone)]
struct Seen {
    authorization: Option<String>,
    body: Value,
}

/// Serves the scripted `(status, body)` replies in order, one per connection.
fn serve(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, reply) in script {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (k, v) = line.split_once(':').unwrap_or((line, ""));
                match k.to_ascii_lowercase().as_str() {
                    "content-length" => len = v.trim().parse().unwrap(),
                    "authorization" => authorization = Some(v.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(Seen { authorization, body: serde_json::from_slice(&body).unwrap() });
            let response = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                reply.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
    });
    (format!("http://{addr}/v1/chat/completions"), seen)
}

fn completion(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn config(endpoint: String) -> HttpConfig {
    HttpConfig { endpoint, model: "tiny".into(), backoff_ms: 1, retries: 2, seed: Some(100), ..HttpConfig::default() }
}

#[test]
fn retries_transient_failures() {
    let (endpoint, seen) = serve(vec![
        (503, "busy".into()),
        (429, "slow down".into()),
        (200, completion("1. Blank Space")),
    ]);
    let r = HttpResponder::new(config(endpoint)).with_api_key("sekrit");
    assert_eq!(r.complete("hello", 2).unwrap(), "1. Blank Space");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let last = &seen[2];
    assert_eq!(last.authorization.as_deref(), Some("Bearer sekrit"));
    assert_eq!(last.body["model"], "tiny");
    assert_eq!(last.body["seed"], 102);
    assert_eq!(last.body["messages"][0], json!({"role": "user", "content": "hello"}));
}

#[test]
fn client_errors_are_not_retried() {
    let (endpoint, seen) = serve(vec![(400, "bad request".into())]);
    let r = HttpResponder::new(config(endpoint));
    match r.complete("x", 0) {
        Err(ResponderError::Status { status: 400, body }) => assert_eq!(body, "bad request"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn gives_up_after_retry_budget() {
    let (endpoint, seen) = serve(vec![(500, "a".into()), (500, "b".into()), (500, "c".into())]);
    let r = HttpResponder::new(config(endpoint));
    assert!(matches!(r.complete("x", 0), Err(ResponderError::Status { status: 500, .. })));
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn malformed_payload_is_reported() {
    let (endpoint, _) = serve(vec![(200, r#"{"choices": []}"#.into())]);
    let r = HttpResponder::new(config(endpoint));
    assert!(matches!(r.complete("x", 0), Err(ResponderError::Payload(_))));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let r = HttpResponder::new(HttpConfig { retries: 0, ..config(format!("http://{addr}/")) });
    assert!(matches!(r.complete("x", 0), Err(ResponderError::Transport(_))));
}
