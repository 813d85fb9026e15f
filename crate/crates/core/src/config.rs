//! Run parameters, user records and scenario loading.
//!
//! A scenario is one JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "communities": ["Entertainment", "Technology", "..."],
//!   "params": { "theta": 0.5, "total_steps": 72, "rng_seed": 7 },
//!   "users": [ { "user_id": "u1", "follower_count": 120, "activity_histogram": [0, 1, "..."] } ],
//!   "users_file": "users.csv",
//!   "content": [ { "content_id": "d-pol", "topic": "Politics", "kind": "disinformation", "text": "..." } ],
//!   "evaluator": { "backend": "synthetic" }
//! }
//! ```
//!
//! `users` and `users_file` are alternatives; a sidecar path is resolved
//! relative to the scenario file and may be JSON (an array of records) or CSV.
//! Omitted parameters take their defaults (see [`SimulationParams::default`]).

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{ContentItem, ContentKind, Strategy};
use crate::evaluator::EvaluatorConfig;
use crate::rng::sha256_hex;

/// Buckets in a user's activity histogram (hour of day).
pub const ACTIVITY_BUCKETS: usize = 24;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Json(String),
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("unsupported scenario version {0} (expected {SCENARIO_VERSION})")]
    UnsupportedVersion(u32),
    #[error("{field} = {value} violates {constraint}")]
    RangeViolation {
        field: String,
        value: String,
        constraint: String,
    },
    #[error("duplicate user_id `{0}`")]
    DuplicateUserId(String),
    #[error("duplicate community name `{0}`")]
    DuplicateCommunity(String),
    #[error("unknown community `{name}` referenced by {referenced_by}")]
    UnknownCommunity { name: String, referenced_by: String },
    #[error("invalid content item `{content_id}`: {reason}")]
    InvalidContent { content_id: String, reason: String },
    #[error("cannot parse users file {path}: {reason}")]
    UsersFile { path: PathBuf, reason: String },
}

impl From<Violation> for ScenarioError {
    fn from(v: Violation) -> Self {
        ScenarioError::RangeViolation {
            field: v.field,
            value: v.value,
            constraint: v.constraint,
        }
    }
}

/// Inclusive integer range, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct InclusiveRange {
    pub start: u32,
    pub end: u32,
}

impl InclusiveRange {
    pub const fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, v: u32) -> bool {
        self.start <= v && v <= self.end
    }

    /// Number of integers in the range (0 when reversed).
    pub fn len(&self) -> u32 {
        if self.end < self.start {
            0
        } else {
            self.end - self.start + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl From<[u32; 2]> for InclusiveRange {
    fn from([start, end]: [u32; 2]) -> Self {
        Self { start, end }
    }
}

impl From<InclusiveRange> for [u32; 2] {
    fn from(r: InclusiveRange) -> Self {
        [r.start, r.end]
    }
}

impl fmt::Display for InclusiveRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// Step windows during which legitimate bots may act, per intervention stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionWindows {
    pub early: InclusiveRange,
    pub mid: InclusiveRange,
    pub late: InclusiveRange,
}

impl Default for InterventionWindows {
    fn default() -> Self {
        Self {
            early: InclusiveRange::new(12, 72),
            mid: InclusiveRange::new(36, 72),
            late: InclusiveRange::new(48, 72),
        }
    }
}

/// Fixed truncated power-law parameters for the share-count term of the
/// dissemination tendency, bypassing the fit on the scenario's users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShareFitOverride {
    pub alpha: f64,
    pub lambda: f64,
    pub x_min: u64,
}

/// All run parameters. Field defaults follow the published parameter table
/// where it gives one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationParams {
    /// Weight of the power-law share term against the interest term.
    pub theta: f64,
    /// Repeated-exposure decay rate in the dissemination tendency.
    pub xi: f64,
    /// Balance between enhancement and decay in the trust update.
    pub gamma: f64,
    /// Rate of the enhancement (correction) term.
    pub beta: f64,
    /// Rate of the decay (disinformation) term.
    pub delta: f64,
    /// Community assignment threshold on the 1..=10 interest scale.
    pub tau: f64,
    /// Fully connected seed nodes per community.
    pub m0: usize,
    /// Edges added by each arriving node.
    pub m: usize,
    pub total_steps: u32,
    pub malicious_ratio: f64,
    pub legitimate_ratio: f64,
    /// Activation count range for malicious bots.
    pub malicious_freq_range: InclusiveRange,
    /// Activation count range for legitimate bots.
    pub legitimate_freq_range: InclusiveRange,
    pub intervention_windows: InterventionWindows,
    pub rng_seed: u64,
    /// Probability that a sharing user reposts rather than quotes.
    pub repost_probability: f64,
    /// Steps between recorded report points.
    pub record_cadence: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub share_fit: Option<ShareFitOverride>,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            theta: 0.5,
            xi: 0.1,
            gamma: 0.5,
            beta: 0.5,
            delta: 0.5,
            tau: 8.0,
            m0: 5,
            m: 2,
            total_steps: 72,
            malicious_ratio: 0.15,
            legitimate_ratio: 0.05,
            malicious_freq_range: InclusiveRange::new(1, 18),
            legitimate_freq_range: InclusiveRange::new(1, 12),
            intervention_windows: InterventionWindows::default(),
            rng_seed: 42,
            repost_probability: 0.7,
            record_cadence: 12,
            share_fit: None,
        }
    }
}

/// One failed parameter constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub value: String,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {} violates {}",
            self.field, self.value, self.constraint
        )
    }
}

/// Checks every parameter constraint. Returns an empty list iff all hold.
pub fn validate_params(p: &SimulationParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |ok: bool, field: &str, value: String, constraint: &str| {
        if !ok {
            out.push(Violation {
                field: field.to_string(),
                value,
                constraint: constraint.to_string(),
            });
        }
    };
    for (name, v) in [
        ("theta", p.theta),
        ("gamma", p.gamma),
        ("beta", p.beta),
        ("delta", p.delta),
    ] {
        check(
            v > 0.0 && v < 1.0,
            name,
            v.to_string(),
            &format!("{name} ∈ (0, 1)"),
        );
    }
    check(
        p.xi.is_finite() && p.xi >= 0.0,
        "xi",
        p.xi.to_string(),
        "xi ≥ 0",
    );
    check(
        (1.0..=10.0).contains(&p.tau),
        "tau",
        p.tau.to_string(),
        "tau ∈ [1, 10]",
    );
    check(p.m0 >= 2, "m0", p.m0.to_string(), "m0 ≥ 2");
    check(p.m >= 1, "m", p.m.to_string(), "m ≥ 1");
    check(p.m <= p.m0, "m", p.m.to_string(), "m ≤ m0");
    check(
        p.total_steps >= 1,
        "total_steps",
        p.total_steps.to_string(),
        "total_steps ≥ 1",
    );
    for (name, v) in [
        ("malicious_ratio", p.malicious_ratio),
        ("legitimate_ratio", p.legitimate_ratio),
    ] {
        check(
            (0.0..1.0).contains(&v),
            name,
            v.to_string(),
            &format!("{name} ∈ [0, 1)"),
        );
    }
    let ratio_sum = p.malicious_ratio + p.legitimate_ratio;
    check(
        ratio_sum < 1.0,
        "malicious_ratio + legitimate_ratio",
        ratio_sum.to_string(),
        "malicious_ratio + legitimate_ratio < 1",
    );
    for (name, r) in [
        ("malicious_freq_range", p.malicious_freq_range),
        ("legitimate_freq_range", p.legitimate_freq_range),
    ] {
        check(
            r.start >= 1 && r.start <= r.end,
            name,
            r.to_string(),
            "1 ≤ start ≤ end",
        );
    }
    let t = p.total_steps;
    for (name, w) in [
        ("intervention_windows.early", p.intervention_windows.early),
        ("intervention_windows.mid", p.intervention_windows.mid),
        ("intervention_windows.late", p.intervention_windows.late),
    ] {
        check(
            w.start >= 1 && w.start <= w.end && w.end <= t,
            name,
            w.to_string(),
            &format!("window ⊆ [1, total_steps = {t}]"),
        );
    }
    check(
        (0.0..=1.0).contains(&p.repost_probability),
        "repost_probability",
        p.repost_probability.to_string(),
        "repost_probability ∈ [0, 1]",
    );
    check(
        p.record_cadence >= 1,
        "record_cadence",
        p.record_cadence.to_string(),
        "record_cadence ≥ 1",
    );
    if let Some(fit) = p.share_fit {
        check(
            fit.alpha > 1.0,
            "share_fit.alpha",
            fit.alpha.to_string(),
            "alpha > 1",
        );
        check(
            fit.lambda >= 0.0 && fit.lambda.is_finite(),
            "share_fit.lambda",
            fit.lambda.to_string(),
            "lambda ≥ 0",
        );
        check(
            fit.x_min >= 1,
            "share_fit.x_min",
            fit.x_min.to_string(),
            "x_min ≥ 1",
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextKind {
    Post,
    Retweet,
    Quote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoricalText {
    pub kind: TextKind,
    pub text: String,
}

/// An ingested user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    pub user_id: String,
    pub follower_count: u64,
    #[serde(default)]
    pub following_count: u64,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub post_count: u64,
    #[serde(default)]
    pub retweet_count: u64,
    #[serde(default)]
    pub quote_count: u64,
    #[serde(default)]
    pub historical_texts: Vec<HistoricalText>,
    /// Activity counts per hour of day.
    pub activity_histogram: Vec<u64>,
    /// Community the user was sampled from, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home_community: Option<String>,
}

impl UserRecord {
    /// Total shares (retweets plus quotes).
    pub fn share_total(&self) -> u64 {
        self.retweet_count + self.quote_count
    }

    pub fn texts_of(&self, kind: TextKind) -> impl Iterator<Item = &str> {
        self.historical_texts
            .iter()
            .filter(move |t| t.kind == kind)
            .map(|t| t.text.as_str())
    }
}

/// A validated, immutable scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SimulationParams,
    pub users: Vec<UserRecord>,
    pub communities: Vec<String>,
    pub content: Vec<ContentItem>,
    pub evaluator: EvaluatorConfig,
}

#[derive(Serialize)]
struct ScenarioOut<'a> {
    version: u32,
    communities: &'a [String],
    params: &'a SimulationParams,
    users: &'a [UserRecord],
    content: &'a [ContentItem],
    evaluator: &'a EvaluatorConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioIn {
    version: u32,
    communities: Vec<String>,
    #[serde(default)]
    params: SimulationParams,
    #[serde(default)]
    users: Option<Vec<UserRecord>>,
    #[serde(default)]
    users_file: Option<PathBuf>,
    content: Vec<ContentItem>,
    #[serde(default)]
    evaluator: EvaluatorConfig,
}

/// CSV row for sidecar user files. Historical texts cannot be carried in CSV.
#[derive(Deserialize)]
struct UserCsvRow {
    user_id: String,
    follower_count: u64,
    following_count: u64,
    post_count: u64,
    retweet_count: u64,
    quote_count: u64,
    description: String,
    activity_histogram: String,
    #[serde(default)]
    home_community: Option<String>,
}

impl Scenario {
    /// Number of regular users.
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Number of communities.
    pub fn n_communities(&self) -> usize {
        self.communities.len()
    }

    pub fn community_index(&self, name: &str) -> Option<usize> {
        self.communities.iter().position(|c| c == name)
    }

    /// Canonical JSON with users embedded.
    pub fn to_json(&self) -> String {
        let out = ScenarioOut {
            version: SCENARIO_VERSION,
            communities: &self.communities,
            params: &self.params,
            users: &self.users,
            content: &self.content,
            evaluator: &self.evaluator,
        };
        serde_json::to_string_pretty(&out).expect("scenario serializes")
    }

    /// SHA-256 of the canonical JSON.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut s = self.clone();
        s.params.rng_seed = seed;
        s
    }

    /// Re-checks every invariant.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if let Some(v) = validate_params(&self.params).into_iter().next() {
            return Err(v.into());
        }
        if self.communities.is_empty() {
            return Err(ScenarioError::RangeViolation {
                field: "communities".into(),
                value: "[]".into(),
                constraint: "at least one community".into(),
            });
        }
        let mut names = BTreeSet::new();
        for c in &self.communities {
            if !names.insert(c.as_str()) {
                return Err(ScenarioError::DuplicateCommunity(c.clone()));
            }
        }
        let mut ids = BTreeSet::new();
        for (i, u) in self.users.iter().enumerate() {
            if !ids.insert(u.user_id.as_str()) {
                return Err(ScenarioError::DuplicateUserId(u.user_id.clone()));
            }
            if u.activity_histogram.len() != ACTIVITY_BUCKETS {
                return Err(ScenarioError::RangeViolation {
                    field: format!("users[{i}].activity_histogram"),
                    value: format!("{} entries", u.activity_histogram.len()),
                    constraint: format!("exactly {ACTIVITY_BUCKETS} entries"),
                });
            }
            if let Some(home) = &u.home_community {
                if !names.contains(home.as_str()) {
                    return Err(ScenarioError::UnknownCommunity {
                        name: home.clone(),
                        referenced_by: format!("user `{}`", u.user_id),
                    });
                }
            }
        }
        let mut content_ids = BTreeSet::new();
        for item in &self.content {
            if !content_ids.insert(item.content_id.as_str()) {
                return Err(ScenarioError::InvalidContent {
                    content_id: item.content_id.clone(),
                    reason: "duplicate content_id".into(),
                });
            }
            if !names.contains(item.topic.as_str()) {
                return Err(ScenarioError::UnknownCommunity {
                    name: item.topic.clone(),
                    referenced_by: format!("content `{}`", item.content_id),
                });
            }
            let invalid = |reason: &str| ScenarioError::InvalidContent {
                content_id: item.content_id.clone(),
                reason: reason.to_string(),
            };
            match item.kind {
                ContentKind::Disinformation if item.strategy != Strategy::None => {
                    return Err(invalid("disinformation must have strategy `none`"));
                }
                ContentKind::Correction if item.strategy == Strategy::None => {
                    return Err(invalid(
                        "corrections need a fact_based or narrative_based strategy",
                    ));
                }
                ContentKind::Correction if item.plausibility.is_some() => {
                    return Err(invalid("plausibility applies to disinformation only"));
                }
                _ => {}
            }
            if let Some(dp) = item.plausibility {
                if !(0.0..=1.0).contains(&dp) {
                    return Err(invalid("plausibility must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

fn map_json_error(e: serde_json::Error) -> ScenarioError {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            return ScenarioError::MissingField(rest[..end].to_string());
        }
    }
    ScenarioError::Json(msg)
}

/// Parses scenario JSON; `base_dir` resolves a relative `users_file`.
pub fn parse_scenario(bytes: &[u8], base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let raw: ScenarioIn = serde_json::from_slice(bytes).map_err(map_json_error)?;
    if raw.version != SCENARIO_VERSION {
        return Err(ScenarioError::UnsupportedVersion(raw.version));
    }
    let users = match (raw.users, raw.users_file) {
        (Some(users), None) => users,
        (None, Some(file)) => load_users_file(&base_dir.join(file))?,
        (Some(_), Some(_)) => {
            return Err(ScenarioError::Json(
                "`users` and `users_file` are mutually exclusive".into(),
            ))
        }
        (None, None) => return Err(ScenarioError::MissingField("users".into())),
    };
    let scenario = Scenario {
        params: raw.params,
        users,
        communities: raw.communities,
        content: raw.content,
        evaluator: raw.evaluator,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&bytes, base)
}

/// Reads user records from a JSON array or a CSV file (by extension).
pub fn load_users_file(path: &Path) -> Result<Vec<UserRecord>, ScenarioError> {
    let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return serde_json::from_slice(&bytes).map_err(map_json_error);
    }
    let bad = |reason: String| ScenarioError::UsersFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let mut users = Vec::new();
    for row in reader.deserialize::<UserCsvRow>() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let activity_histogram: Vec<u64> = serde_json::from_str(&row.activity_histogram)
            .map_err(|e| bad(format!("user `{}` activity_histogram: {e}", row.user_id)))?;
        users.push(UserRecord {
            user_id: row.user_id,
            follower_count: row.follower_count,
            following_count: row.following_count,
            description: row.description,
            post_count: row.post_count,
            retweet_count: row.retweet_count,
            quote_count: row.quote_count,
            historical_texts: Vec::new(),
            activity_histogram,
            home_community: row.home_community.filter(|h| !h.is_empty()),
        });
    }
    Ok(users)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn user(id: &str) -> serde_json::Value {
        json!({
            "user_id": id,
            "follower_count": 10,
            "retweet_count": 3,
            "quote_count": 2,
            "activity_histogram": vec![1; 24],
        })
    }

    fn base_doc() -> serde_json::Value {
        json!({
            "version": 1,
            "communities": ["Politics", "Sports"],
            "users": [user("a"), user("b")],
            "content": [
                {"content_id": "d1", "topic": "Politics", "kind": "disinformation", "text": "claim"},
                {"content_id": "c1", "topic": "Politics", "kind": "correction", "strategy": "fact_based", "text": "fact"}
            ]
        })
    }

    fn parse(doc: &serde_json::Value) -> Result<Scenario, ScenarioError> {
        parse_scenario(doc.to_string().as_bytes(), Path::new("."))
    }

    #[test]
    fn omitted_params_take_defaults() {
        let s = parse(&base_doc()).unwrap();
        assert_eq!(s.params.theta, 0.5);
        assert_eq!(s.params.xi, 0.1);
        assert_eq!(s.params.total_steps, 72);
        assert_eq!(
            s.params.intervention_windows.early,
            InclusiveRange::new(12, 72)
        );
    }

    #[test]
    fn defaults_are_valid() {
        assert!(validate_params(&SimulationParams::default()).is_empty());
    }

    #[test]
    fn m_above_m0_is_rejected() {
        let mut doc = base_doc();
        doc["params"] = json!({"m": 7, "m0": 5});
        match parse(&doc) {
            Err(ScenarioError::RangeViolation {
                field, constraint, ..
            }) => {
                assert_eq!(field, "m");
                assert_eq!(constraint, "m ≤ m0");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gamma_on_boundary_is_a_violation() {
        let p = SimulationParams {
            gamma: 1.0,
            ..Default::default()
        };
        let v = validate_params(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "gamma");
    }

    #[test]
    fn window_beyond_total_steps_is_a_violation() {
        let mut p = SimulationParams::default();
        p.intervention_windows.early = InclusiveRange::new(12, 80);
        let v = validate_params(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "intervention_windows.early");
    }

    #[test]
    fn bot_ratios_must_sum_below_one() {
        let p = SimulationParams {
            malicious_ratio: 0.6,
            legitimate_ratio: 0.4,
            ..Default::default()
        };
        let v = validate_params(&p);
        assert!(v
            .iter()
            .any(|v| v.field == "malicious_ratio + legitimate_ratio"));
    }

    #[test]
    fn duplicate_user_is_rejected() {
        let mut doc = base_doc();
        doc["users"] = json!([user("a"), user("a")]);
        assert!(matches!(parse(&doc), Err(ScenarioError::DuplicateUserId(id)) if id == "a"));
    }

    #[test]
    fn unknown_topic_is_rejected() {
        let mut doc = base_doc();
        doc["content"][0]["topic"] = json!("Cooking");
        assert!(
            matches!(parse(&doc), Err(ScenarioError::UnknownCommunity { name, .. }) if name == "Cooking")
        );
    }

    #[test]
    fn missing_field_is_named() {
        let mut doc = base_doc();
        doc.as_object_mut().unwrap().remove("communities");
        assert!(matches!(parse(&doc), Err(ScenarioError::MissingField(f)) if f == "communities"));
        let mut doc = base_doc();
        doc["users"][0]
            .as_object_mut()
            .unwrap()
            .remove("activity_histogram");
        assert!(
            matches!(parse(&doc), Err(ScenarioError::MissingField(f)) if f == "activity_histogram")
        );
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut doc = base_doc();
        doc["version"] = json!(2);
        assert!(matches!(
            parse(&doc),
            Err(ScenarioError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn correction_without_strategy_is_rejected() {
        let mut doc = base_doc();
        doc["content"][1]["strategy"] = json!("none");
        assert!(matches!(
            parse(&doc),
            Err(ScenarioError::InvalidContent { .. })
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let s = parse(&base_doc()).unwrap();
        let again = parse_scenario(s.to_json().as_bytes(), Path::new(".")).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.digest(), again.digest());
    }

    #[test]
    fn csv_sidecar_is_ingested() {
        let dir = tempfile::tempdir().unwrap();
        let hist = serde_json::to_string(&vec![2u64; 24]).unwrap();
        let mut w = csv::Writer::from_path(dir.path().join("users.csv")).unwrap();
        w.write_record([
            "user_id",
            "follower_count",
            "following_count",
            "post_count",
            "retweet_count",
            "quote_count",
            "description",
            "activity_histogram",
        ])
        .unwrap();
        w.write_record(["x", "5", "1", "2", "3", "4", "hi, there", &hist])
            .unwrap();
        w.flush().unwrap();
        let mut doc = base_doc();
        doc.as_object_mut().unwrap().remove("users");
        doc["users_file"] = json!("users.csv");
        std::fs::write(dir.path().join("s.json"), doc.to_string()).unwrap();
        let s = load_scenario(dir.path().join("s.json")).unwrap();
        assert_eq!(s.users.len(), 1);
        assert_eq!(s.users[0].share_total(), 7);
        assert_eq!(s.users[0].description, "hi, there");
        assert_eq!(s.users[0].activity_histogram, vec![2; 24]);
    }

    /// Every symbol the attribute, trust and network models consume is
    /// reachable from a loaded scenario.
    #[test]
    fn symbol_table_is_complete() {
        let s = parse(&base_doc()).unwrap();
        let p = &s.params;
        let u = &s.users[0];
        let symbols: Vec<(&str, f64)> = vec![
            ("theta", p.theta),
            ("xi", p.xi),
            ("gamma", p.gamma),
            ("beta", p.beta),
            ("delta", p.delta),
            ("tau", p.tau),
            ("m0", p.m0 as f64),
            ("m", p.m as f64),
            ("T", p.total_steps as f64),
            ("MR", p.malicious_ratio),
            ("LR", p.legitimate_ratio),
            ("MF", p.malicious_freq_range.end as f64),
            ("LF", p.legitimate_freq_range.end as f64),
            ("EI", p.intervention_windows.early.start as f64),
            ("MI", p.intervention_windows.mid.start as f64),
            ("LI", p.intervention_windows.late.start as f64),
            ("N", s.n_users() as f64),
            ("J", s.n_communities() as f64),
            ("f_u", u.follower_count as f64),
            ("x_u", u.share_total() as f64),
            ("AT", u.activity_histogram.iter().sum::<u64>() as f64),
            ("seed", p.rng_seed as f64),
        ];
        for (name, v) in symbols {
            assert!(v.is_finite(), "{name}");
        }
        // Disinformation topic and correction catalog.
        assert!(s
            .content
            .iter()
            .any(|c| c.kind == ContentKind::Disinformation));
        assert!(s.content.iter().any(|c| c.kind == ContentKind::Correction));
        assert!(s.community_index(&s.content[0].topic).is_some());
    }
}
