//! Chat-completion HTTP backend.
//!
//! Requests are rendered from prompt templates, POSTed as
//! `{"model", "messages", "temperature"}` and the reply content is parsed as
//! the strict JSON output format of the template. Each request is tried at
//! most twice: transport failures and malformed replies are both retried once.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::prompts::PromptTemplates;
use super::{
    keys, whitespace_tokens, EvaluationRequest, EvaluationResponse, EvaluatorBackend,
    EvaluatorError, RequestKind, Usage,
};

pub const API_KEY_ENV: &str = "MADD_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Directory with template overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_dir: Option<PathBuf>,
    /// Ask the model for belief decisions instead of drawing them locally.
    #[serde(default)]
    pub llm_belief_check: bool,
}

fn default_in_flight() -> usize {
    4
}

fn default_timeout() -> u64 {
    60
}

impl RemoteConfig {
    pub fn new(endpoint: &str, model: &str) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            max_in_flight: default_in_flight(),
            timeout_secs: default_timeout(),
            prompt_dir: None,
            llm_belief_check: false,
        }
    }
}

/// Counting semaphore bounding concurrent HTTP requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.cv.notify_one();
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    api_key: Option<String>,
    templates: PromptTemplates,
    agent: ureq::Agent,
    slots: Slots,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "***"))
            .finish_non_exhaustive()
    }
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig, api_key: Option<String>) -> Result<Self, EvaluatorError> {
        if config.endpoint.is_empty() || config.model.is_empty() {
            return Err(EvaluatorError::Config(
                "remote backend needs an endpoint and a model".into(),
            ));
        }
        let templates = match &config.prompt_dir {
            Some(dir) => PromptTemplates::from_dir(dir)?,
            None => PromptTemplates::default(),
        };
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            slots: Slots::new(config.max_in_flight),
            agent: ureq::Agent::new_with_config(agent_config),
            templates,
            api_key,
            config,
        })
    }

    /// Reads the API key from `MADD_LLM_API_KEY` if set.
    pub fn from_env(config: RemoteConfig) -> Result<Self, EvaluatorError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(config, key)
    }

    fn post(&self, prompt: &str) -> Result<String, EvaluatorError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        let _slot = self.slots.acquire();
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| EvaluatorError::RemoteUnavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| EvaluatorError::RemoteUnavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(EvaluatorError::RemoteUnavailable(format!(
                "HTTP {}: {}",
                status.as_u16(),
                truncate(&text, 200)
            )));
        }
        Ok(text)
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Message content and provider token counts from a chat-completion body.
pub fn parse_completion(body: &str) -> Result<(String, Option<(u64, u64)>), EvaluatorError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| EvaluatorError::MalformedResponse(format!("completion body: {e}")))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| EvaluatorError::MalformedResponse("no choices[0].message.content".into()))?
        .to_string();
    let usage = v.get("usage").and_then(|u| {
        Some((
            u.get("prompt_tokens")?.as_u64()?,
            u.get("completion_tokens")?.as_u64()?,
        ))
    });
    Ok((content, usage))
}

/// Extracts the JSON object from model output, tolerating code fences or
/// stray text around it.
fn json_object(content: &str) -> Result<Value, EvaluatorError> {
    let start = content.find('{');
    let end = content.rfind('}');
    let slice = match (start, end) {
        (Some(s), Some(e)) if e > s => &content[s..=e],
        _ => {
            return Err(EvaluatorError::MalformedResponse(
                "no JSON object in reply".into(),
            ))
        }
    };
    serde_json::from_str(slice)
        .map_err(|e| EvaluatorError::MalformedResponse(format!("reply JSON: {e}")))
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn in_range(key: &str, value: f64, (lo, hi): (f64, f64)) -> Result<f64, EvaluatorError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(value)
    } else {
        Err(EvaluatorError::MalformedResponse(format!(
            "`{key}` = {value} outside [{lo}, {hi}]"
        )))
    }
}

/// Parses the model's JSON reply for `request` into validated scores.
pub fn parse_scores(
    request: &EvaluationRequest,
    content: &str,
) -> Result<(BTreeMap<String, f64>, Option<String>), EvaluatorError> {
    let obj = json_object(content)?;
    let range = request.kind.score_range();
    let reasoning = obj
        .get("Reasoning")
        .and_then(Value::as_str)
        .map(str::to_string);
    let single = |key: &str| -> Result<BTreeMap<String, f64>, EvaluatorError> {
        let v = obj
            .get(key)
            .and_then(number)
            .ok_or_else(|| EvaluatorError::MalformedResponse(format!("missing numeric `{key}`")))?;
        Ok([(key.to_string(), in_range(key, v, range)?)].into())
    };
    let scores = match request.kind {
        RequestKind::InterestCommunity | RequestKind::TrustThreshold => {
            let list_key = if request.kind == RequestKind::InterestCommunity {
                "Interest Community Scores"
            } else {
                "Trust Threshold Scores"
            };
            let list = obj.get(list_key).and_then(Value::as_array).ok_or_else(|| {
                EvaluatorError::MalformedResponse(format!("missing `{list_key}`"))
            })?;
            let mut scores = BTreeMap::new();
            for entry in list {
                let name = entry
                    .get("Community")
                    .and_then(Value::as_str)
                    .ok_or_else(|| {
                        EvaluatorError::MalformedResponse("entry without Community".into())
                    })?;
                let raw = entry.get("Score").unwrap_or(&Value::Null);
                let value = match (number(raw), raw.as_str()) {
                    (Some(v), _) => v,
                    // No evidence of interest is the bottom of the scale.
                    (None, Some(s))
                        if request.kind == RequestKind::InterestCommunity
                            && s.trim().eq_ignore_ascii_case("insufficient data") =>
                    {
                        1.0
                    }
                    _ => {
                        return Err(EvaluatorError::MalformedResponse(format!(
                            "non-numeric score for `{name}`"
                        )))
                    }
                };
                scores.insert(name.to_string(), in_range(name, value, range)?);
            }
            for c in request.communities()? {
                if !scores.contains_key(&c) {
                    return Err(EvaluatorError::MalformedResponse(format!(
                        "community `{c}` missing from reply"
                    )));
                }
            }
            scores
        }
        RequestKind::Plausibility => single(keys::PLAUSIBILITY)?,
        RequestKind::Persuasiveness => single(keys::PERSUASIVENESS)?,
        RequestKind::BeliefCheck => {
            let v = obj.get(keys::BELIEF).unwrap_or(&Value::Null);
            let belief = match v {
                Value::Bool(b) => *b,
                Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
                    "yes" | "true" => true,
                    "no" | "false" => false,
                    _ => return Err(EvaluatorError::MalformedResponse(format!("Belief = {s}"))),
                },
                _ => return Err(EvaluatorError::MalformedResponse("missing `Belief`".into())),
            };
            [(keys::BELIEF.to_string(), if belief { 1.0 } else { 0.0 })].into()
        }
    };
    Ok((scores, reasoning))
}

impl EvaluatorBackend for RemoteBackend {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn max_in_flight(&self) -> usize {
        self.config.max_in_flight.max(1)
    }

    fn checks_belief(&self) -> bool {
        self.config.llm_belief_check
    }

    fn evaluate(&self, request: &EvaluationRequest) -> Result<EvaluationResponse, EvaluatorError> {
        let prompt = self.templates.render(request)?;
        let started = Instant::now();
        let mut usage = Usage {
            calls: 1,
            ..Usage::default()
        };
        let mut last_err = None;
        for attempt in 0..2 {
            let outcome = self.post(&prompt).and_then(|body| {
                let (content, provider) = parse_completion(&body)?;
                match provider {
                    Some((i, o)) => {
                        usage.tokens_in += i;
                        usage.tokens_out += o;
                    }
                    None => {
                        usage.tokens_in += whitespace_tokens(&prompt);
                        usage.tokens_out += whitespace_tokens(&content);
                        usage.approximate = true;
                    }
                }
                parse_scores(request, &content)
            });
            match outcome {
                Ok((scores, reasoning)) => {
                    usage.latency_us = started.elapsed().as_micros() as u64;
                    return Ok(EvaluationResponse {
                        scores,
                        reasoning,
                        usage,
                    });
                }
                Err(e) => {
                    log::warn!("remote evaluator attempt {} failed: {e}", attempt + 1);
                    last_err = Some(e);
                }
            }
        }
        Err(last_err.expect("two attempts made"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trust_request() -> EvaluationRequest {
        EvaluationRequest::new(RequestKind::TrustThreshold, vec![])
            .with_communities(&["Sports".into(), "Politics".into()])
    }

    #[test]
    fn parses_community_list() {
        let content = r#"```json
{"Trust Threshold Scores": [
 {"Community": "Sports", "Score": 0.7, "Reasoning": "a"},
 {"Community": "Politics", "Score": "0.35", "Reasoning": "b"}]}
```"#;
        let (scores, _) = parse_scores(&trust_request(), content).unwrap();
        assert_eq!(scores["Sports"], 0.7);
        assert_eq!(scores["Politics"], 0.35);
    }

    #[test]
    fn missing_community_is_malformed() {
        let content = r#"{"Trust Threshold Scores": [{"Community": "Sports", "Score": 0.7}]}"#;
        assert!(matches!(
            parse_scores(&trust_request(), content),
            Err(EvaluatorError::MalformedResponse(_))
        ));
    }

    #[test]
    fn insufficient_interest_data_maps_to_one() {
        let req = EvaluationRequest::new(RequestKind::InterestCommunity, vec![])
            .with_communities(&["Sports".into()]);
        let content = r#"{"Interest Community Scores": [{"Community": "Sports", "Score": "Insufficient Data"}]}"#;
        assert_eq!(parse_scores(&req, content).unwrap().0["Sports"], 1.0);
    }

    #[test]
    fn out_of_range_plausibility_is_malformed() {
        let req = EvaluationRequest::new(RequestKind::Plausibility, vec!["x".into()]);
        assert!(matches!(
            parse_scores(&req, r#"{"PlausibilityScore": 1.4}"#),
            Err(EvaluatorError::MalformedResponse(_))
        ));
    }

    #[test]
    fn persuasiveness_passes_through() {
        let req = EvaluationRequest::new(RequestKind::Persuasiveness, vec!["x".into()]);
        let (scores, reasoning) =
            parse_scores(&req, r#"{"Score": 0.55, "Reasoning": "clear source"}"#).unwrap();
        assert_eq!(scores[keys::PERSUASIVENESS], 0.55);
        assert_eq!(reasoning.as_deref(), Some("clear source"));
    }

    #[test]
    fn completion_envelope() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"{\"Score\":0.2}"}}],
                      "usage":{"prompt_tokens":12,"completion_tokens":5}}"#;
        let (content, usage) = parse_completion(body).unwrap();
        assert_eq!(content, "{\"Score\":0.2}");
        assert_eq!(usage, Some((12, 5)));
    }
}
