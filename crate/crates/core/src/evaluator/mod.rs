//! Scoring contract for everything that needs a judgement of text: interest
//! and trust-threshold scores for users, plausibility of disinformation,
//! persuasiveness of a message for a receiver, and optional belief checks.
//!
//! [`Evaluator`] wraps a backend, validates every response against the
//! documented ranges and meters usage into a [`ResourceLedger`]. Two backends
//! ship: [`synthetic::SyntheticBackend`] (seeded, offline, a pure function of
//! the request) and [`remote::RemoteBackend`] (chat-completion HTTP client).

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{ContentItem, ContentKind, Strategy};

pub mod prompts;
pub mod remote;
pub mod synthetic;

pub use remote::{RemoteBackend, RemoteConfig};
pub use synthetic::{SyntheticBackend, SyntheticConfig};

/// Score keys of single-valued responses.
pub mod keys {
    pub const PLAUSIBILITY: &str = "PlausibilityScore";
    pub const PERSUASIVENESS: &str = "Score";
    pub const BELIEF: &str = "Belief";
}

/// Context keys understood by the backends.
pub mod ctx {
    pub const COMMUNITY: &str = "community";
    pub const COMMUNITIES: &str = "communities";
    pub const HOME_COMMUNITY: &str = "home_community";
    pub const USER_ID: &str = "user_id";
    pub const DESCRIPTION: &str = "personal_description";
    pub const FOLLOWER_COUNT: &str = "follower_count";
    pub const FOLLOWING_COUNT: &str = "following_count";
    pub const POSTS: &str = "historical_posts";
    pub const RETWEETS: &str = "historical_retweets";
    pub const QUOTES: &str = "historical_quotes";
    pub const HISTORY: &str = "history_info";
    pub const CONTENT_KIND: &str = "content_kind";
    pub const STRATEGY: &str = "strategy";
    pub const TRUST_THRESHOLD: &str = "trust_threshold";
    pub const PLAUSIBILITY: &str = "plausibility";
}

/// Bucket for requests that name no community.
pub const UNATTRIBUTED: &str = "(unattributed)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluatorError {
    #[error("malformed evaluator response: {0}")]
    MalformedResponse(String),
    #[error("remote evaluator unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("score `{key}` = {value} outside [{lo}, {hi}]")]
    RangeViolation {
        key: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("evaluator configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    InterestCommunity,
    TrustThreshold,
    Plausibility,
    Persuasiveness,
    BeliefCheck,
}

impl RequestKind {
    /// Inclusive score range for this kind.
    pub fn score_range(self) -> (f64, f64) {
        match self {
            RequestKind::InterestCommunity => (1.0, 10.0),
            _ => (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationRequest {
    pub kind: RequestKind,
    pub subject_texts: Vec<String>,
    pub context: BTreeMap<String, String>,
}

impl EvaluationRequest {
    pub fn new(kind: RequestKind, subject_texts: Vec<String>) -> Self {
        Self {
            kind,
            subject_texts,
            context: BTreeMap::new(),
        }
    }

    pub fn with_context(mut self, key: &str, value: impl Into<String>) -> Self {
        self.context.insert(key.to_string(), value.into());
        self
    }

    pub fn with_communities(self, communities: &[String]) -> Self {
        let encoded = serde_json::to_string(communities).expect("strings serialize");
        self.with_context(ctx::COMMUNITIES, encoded)
    }

    pub fn context_value(&self, key: &str) -> Option<&str> {
        self.context.get(key).map(String::as_str)
    }

    /// Community list for per-community kinds.
    pub fn communities(&self) -> Result<Vec<String>, EvaluatorError> {
        let raw = self
            .context_value(ctx::COMMUNITIES)
            .ok_or_else(|| EvaluatorError::BadRequest("missing community list".into()))?;
        serde_json::from_str(raw)
            .map_err(|e| EvaluatorError::BadRequest(format!("bad community list: {e}")))
    }

    /// Keys that a valid response must carry.
    pub fn expected_keys(&self) -> Result<Vec<String>, EvaluatorError> {
        Ok(match self.kind {
            RequestKind::InterestCommunity | RequestKind::TrustThreshold => self.communities()?,
            RequestKind::Plausibility => vec![keys::PLAUSIBILITY.into()],
            RequestKind::Persuasiveness => vec![keys::PERSUASIVENESS.into()],
            RequestKind::BeliefCheck => vec![keys::BELIEF.into()],
        })
    }

    fn attribution(&self) -> &str {
        self.context_value(ctx::COMMUNITY).unwrap_or(UNATTRIBUTED)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Usage {
    pub calls: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub latency_us: u64,
    /// Token counts are whitespace approximations.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResponse {
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    pub usage: Usage,
}

impl EvaluationResponse {
    pub fn score(&self, key: &str) -> Result<f64, EvaluatorError> {
        self.scores
            .get(key)
            .copied()
            .ok_or_else(|| EvaluatorError::MalformedResponse(format!("missing score `{key}`")))
    }

    /// Checks presence and range of every expected score.
    pub fn validate(&self, request: &EvaluationRequest) -> Result<(), EvaluatorError> {
        let (lo, hi) = request.kind.score_range();
        for key in request.expected_keys()? {
            let value = self.score(&key)?;
            if !(lo..=hi).contains(&value) {
                return Err(EvaluatorError::RangeViolation { key, value, lo, hi });
            }
        }
        Ok(())
    }
}

/// Approximate token count.
pub fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// A scoring backend.
pub trait EvaluatorBackend: Send + Sync {
    fn name(&self) -> &'static str;

    fn evaluate(&self, request: &EvaluationRequest) -> Result<EvaluationResponse, EvaluatorError>;

    /// Upper bound on concurrent requests worth issuing.
    fn max_in_flight(&self) -> usize {
        1
    }

    /// Whether belief checks should be delegated to this backend.
    fn checks_belief(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub llm_calls: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub tokens: u64,
    pub wall_time_us: u64,
    pub approximate_tokens: bool,
}

impl LedgerEntry {
    fn add(&mut self, usage: &Usage) {
        self.llm_calls += usage.calls;
        self.tokens_in += usage.tokens_in;
        self.tokens_out += usage.tokens_out;
        self.tokens += usage.tokens_in + usage.tokens_out;
        self.wall_time_us += usage.latency_us;
        self.approximate_tokens |= usage.approximate;
    }

    fn merge(&mut self, other: &LedgerEntry) {
        self.llm_calls += other.llm_calls;
        self.tokens_in += other.tokens_in;
        self.tokens_out += other.tokens_out;
        self.tokens += other.tokens;
        self.wall_time_us += other.wall_time_us;
        self.approximate_tokens |= other.approximate_tokens;
    }

    fn minus(&self, earlier: &LedgerEntry) -> LedgerEntry {
        LedgerEntry {
            llm_calls: self.llm_calls - earlier.llm_calls,
            tokens_in: self.tokens_in - earlier.tokens_in,
            tokens_out: self.tokens_out - earlier.tokens_out,
            tokens: self.tokens - earlier.tokens,
            wall_time_us: self.wall_time_us - earlier.wall_time_us,
            approximate_tokens: self.approximate_tokens,
        }
    }
}

/// Calls, tokens and time per community plus the grand total.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub per_community: BTreeMap<String, LedgerEntry>,
    pub total: LedgerEntry,
}

impl ResourceLedger {
    pub fn record(&mut self, community: &str, usage: &Usage) {
        self.per_community
            .entry(community.to_string())
            .or_default()
            .add(usage);
        self.total.add(usage);
    }

    /// Usage accumulated after `earlier` was taken.
    pub fn since(&self, earlier: &ResourceLedger) -> ResourceLedger {
        let per_community = self
            .per_community
            .iter()
            .filter_map(|(k, now)| {
                let before = earlier.per_community.get(k).copied().unwrap_or_default();
                let d = now.minus(&before);
                (d.llm_calls > 0).then(|| (k.clone(), d))
            })
            .collect();
        ResourceLedger {
            per_community,
            total: self.total.minus(&earlier.total),
        }
    }

    /// Sum over per-community entries; equals `total` for any consistent ledger.
    pub fn summed(&self) -> LedgerEntry {
        let mut acc = LedgerEntry::default();
        for e in self.per_community.values() {
            acc.merge(e);
        }
        acc
    }
}

/// How to build an [`Evaluator`], as stored in the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum EvaluatorConfig {
    Synthetic(SyntheticConfig),
    Remote(RemoteConfig),
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        EvaluatorConfig::Synthetic(SyntheticConfig::default())
    }
}

/// Validating, metering front end over a backend.
pub struct Evaluator {
    backend: Box<dyn EvaluatorBackend>,
    ledger: Mutex<ResourceLedger>,
}

impl std::fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Evaluator")
            .field("backend", &self.backend.name())
            .finish_non_exhaustive()
    }
}

impl Evaluator {
    pub fn new(backend: impl EvaluatorBackend + 'static) -> Self {
        Self {
            backend: Box::new(backend),
            ledger: Mutex::new(ResourceLedger::default()),
        }
    }

    /// Synthetic backend with default distributions.
    pub fn synthetic(seed: u64) -> Self {
        Self::new(SyntheticBackend::new(SyntheticConfig::default(), seed))
    }

    /// Builds the configured backend. The synthetic backend is keyed by
    /// `seed`; the remote backend reads its key from `MADD_LLM_API_KEY`.
    pub fn from_config(config: &EvaluatorConfig, seed: u64) -> Result<Self, EvaluatorError> {
        Ok(match config {
            EvaluatorConfig::Synthetic(cfg) => Self::new(SyntheticBackend::new(cfg.clone(), seed)),
            EvaluatorConfig::Remote(cfg) => Self::new(RemoteBackend::from_env(cfg.clone())?),
        })
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn max_in_flight(&self) -> usize {
        self.backend.max_in_flight().max(1)
    }

    pub fn checks_belief(&self) -> bool {
        self.backend.checks_belief()
    }

    /// Runs one request. Each invocation counts as one call in the ledger,
    /// attributed to the request's `community` context entry.
    pub fn evaluate(
        &self,
        request: &EvaluationRequest,
    ) -> Result<EvaluationResponse, EvaluatorError> {
        let result = self
            .backend
            .evaluate(request)
            .and_then(|r| r.validate(request).map(|()| r));
        let usage = match &result {
            Ok(r) => Usage {
                calls: 1,
                ..r.usage
            },
            Err(_) => Usage {
                calls: 1,
                ..Usage::default()
            },
        };
        self.ledger
            .lock()
            .expect("ledger lock")
            .record(request.attribution(), &usage);
        result
    }

    pub fn ledger_snapshot(&self) -> ResourceLedger {
        self.ledger.lock().expect("ledger lock").clone()
    }

    /// Persuasiveness of `content` for a receiver with the given history
    /// summary, in [0, 1].
    pub fn persuasiveness(
        &self,
        content: &ContentItem,
        receiver_history: &str,
    ) -> Result<f64, EvaluatorError> {
        self.persuasiveness_of(
            &content.text,
            content.kind,
            content.strategy,
            &content.topic,
            receiver_history,
        )
    }

    pub(crate) fn persuasiveness_of(
        &self,
        text: &str,
        kind: ContentKind,
        strategy: Strategy,
        community: &str,
        receiver_history: &str,
    ) -> Result<f64, EvaluatorError> {
        let kind_tag = match kind {
            ContentKind::Disinformation => "disinformation",
            ContentKind::Correction => "correction",
        };
        let request = EvaluationRequest::new(RequestKind::Persuasiveness, vec![text.to_string()])
            .with_context(ctx::HISTORY, receiver_history)
            .with_context(ctx::CONTENT_KIND, kind_tag)
            .with_context(ctx::STRATEGY, strategy.as_str())
            .with_context(ctx::COMMUNITY, community);
        self.evaluate(&request)?.score(keys::PERSUASIVENESS)
    }
}
