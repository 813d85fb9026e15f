//! Remote backend against a local mock chat-completion server.

mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use common::world_with;
use madd_core::content::{InterventionPlan, Stage, Strategy};
use madd_core::engine::{run, RunOptions};
use madd_core::evaluator::{
    EvaluationRequest, EvaluatorError, RemoteBackend, RemoteConfig, RequestKind,
};
use madd_core::synth::{generate, SynthConfig};
use madd_core::Evaluator;
use serde_json::{json, Value};

type Handler = dyn Fn(usize, &Value) -> (u16, String) + Send + Sync;

struct Mock {
    url: String,
    requests: Arc<AtomicUsize>,
    auth: Arc<Mutex<Vec<Option<String>>>>,
}

fn serve(handler: Box<Handler>) -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let requests = Arc::new(AtomicUsize::new(0));
    let auth = Arc::new(Mutex::new(Vec::new()));
    let handler: Arc<Handler> = Arc::from(handler);
    let (count, seen) = (requests.clone(), auth.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let handler = handler.clone();
            let (count, seen) = (count.clone(), seen.clone());
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0usize;
                let mut bearer = None;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        bearer = Some(line["authorization:".len()..].trim().to_string());
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                let n = count.fetch_add(1, Ordering::SeqCst);
                seen.lock().unwrap().push(bearer);
                let request: Value = serde_json::from_slice(&body).unwrap();
                let (status, reply) = handler(n, &request);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    Mock {
        url,
        requests,
        auth,
    }
}

/// A reply carrying every score any request kind can ask for.
fn universal(communities: &[String]) -> String {
    let list: Vec<Value> = communities
        .iter()
        .map(|c| json!({"Community": c, "Score": 9}))
        .collect();
    let trust: Vec<Value> = communities
        .iter()
        .map(|c| json!({"Community": c, "Score": 0.5}))
        .collect();
    let content = json!({
        "Interest Community Scores": list,
        "Trust Threshold Scores": trust,
        "PlausibilityScore": 0.8,
        "Score": 0.6,
        "Belief": "No",
        "Reasoning": "mock",
    });
    completion(&content.to_string(), Some((12, 3)))
}

fn completion(content: &str, usage: Option<(u64, u64)>) -> String {
    let mut body = json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
    if let Some((i, o)) = usage {
        body["usage"] = json!({"prompt_tokens": i, "completion_tokens": o});
    }
    body.to_string()
}

fn backend(mock: &Mock) -> RemoteBackend {
    RemoteBackend::new(
        RemoteConfig::new(&mock.url, "mock-model"),
        Some("secret".into()),
    )
    .unwrap()
}

fn plausibility_request() -> EvaluationRequest {
    EvaluationRequest::new(
        RequestKind::Plausibility,
        vec!["The moon is made of cheese".into()],
    )
    .with_context("community", "Science")
}

#[test]
fn full_run_meters_every_http_call() {
    let scenario = generate(&SynthConfig::uniform(2, 12, 5));
    let names = scenario.communities.clone();
    let mock = serve(Box::new(move |_, req| {
        assert_eq!(req["model"], "mock-model");
        assert_eq!(req["temperature"], 0);
        (200, universal(&names))
    }));
    let w = world_with(scenario, Evaluator::new(backend(&mock)));
    let plan =
        InterventionPlan::new(Stage::Early, Strategy::FactBased, &w.scenario.params).unwrap();
    let report = run(
        &w.scenario,
        &w.population,
        &w.network,
        plan,
        &w.evaluator,
        RunOptions::default(),
    )
    .unwrap();
    report.validate().unwrap();
    let ledger = w.evaluator.ledger_snapshot();
    assert_eq!(
        ledger.total.llm_calls,
        mock.requests.load(Ordering::SeqCst) as u64
    );
    assert_eq!(ledger.total.tokens_in, 12 * ledger.total.llm_calls);
    assert_eq!(ledger.total.tokens_out, 3 * ledger.total.llm_calls);
    assert!(!ledger.total.approximate_tokens);
    assert_eq!(ledger.summed(), ledger.total);
    assert!(mock
        .auth
        .lock()
        .unwrap()
        .iter()
        .all(|a| a.as_deref() == Some("Bearer secret")));
}

#[test]
fn malformed_reply_is_retried_once() {
    let mock = serve(Box::new(|n, _| {
        if n == 0 {
            (200, completion("I think it is quite plausible.", None))
        } else {
            (
                200,
                completion("```json\n{\"PlausibilityScore\": 0.25}\n```", None),
            )
        }
    }));
    let evaluator = Evaluator::new(backend(&mock));
    let response = evaluator.evaluate(&plausibility_request()).unwrap();
    assert_eq!(response.scores["PlausibilityScore"], 0.25);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 2);
    let ledger = evaluator.ledger_snapshot();
    assert_eq!(ledger.total.llm_calls, 1);
    assert!(ledger.total.approximate_tokens);
    assert!(ledger.per_community.contains_key("Science"));
}

#[test]
fn persistent_failure_surfaces_after_two_attempts() {
    let mock = serve(Box::new(|_, _| (503, "busy".to_string())));
    let evaluator = Evaluator::new(backend(&mock));
    let err = evaluator.evaluate(&plausibility_request()).unwrap_err();
    assert!(matches!(err, EvaluatorError::RemoteUnavailable(_)), "{err}");
    assert_eq!(mock.requests.load(Ordering::SeqCst), 2);
}

#[test]
fn out_of_range_score_is_rejected() {
    let mock = serve(Box::new(|_, _| {
        (200, completion("{\"PlausibilityScore\": 1.7}", None))
    }));
    let evaluator = Evaluator::new(backend(&mock));
    let err = evaluator.evaluate(&plausibility_request()).unwrap_err();
    assert!(matches!(err, EvaluatorError::MalformedResponse(_)), "{err}");
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    drop(listener);
    let evaluator = Evaluator::new(RemoteBackend::new(RemoteConfig::new(&url, "m"), None).unwrap());
    let err = evaluator.evaluate(&plausibility_request()).unwrap_err();
    assert!(matches!(err, EvaluatorError::RemoteUnavailable(_)), "{err}");
}
