//! Offline backend. Every response is a pure function of the serialized
//! request and the seed, so runs are reproducible and calls may happen in any
//! order or concurrently.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    ctx, keys, whitespace_tokens, EvaluationRequest, EvaluationResponse, EvaluatorBackend,
    EvaluatorError, RequestKind, Usage,
};
use crate::rng::seed_from_bytes;

/// Distribution parameters of the synthetic backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub tt_mean: f64,
    /// Per-user offset shared by all of a user's communities.
    pub tt_user_std: f64,
    /// Independent per-community noise on top of the user offset.
    pub tt_community_std: f64,
    pub ic_home_mean: f64,
    pub ic_home_std: f64,
    pub ic_other_mean: f64,
    pub ic_other_std: f64,
    /// Added per mention of a community name in the user's texts, capped at two.
    pub ic_mention_boost: f64,
    pub fact_beta: [f64; 2],
    pub narrative_beta: [f64; 2],
    /// Corrections written by ordinary users (no strategy tag).
    pub debunk_beta: [f64; 2],
    pub disinformation_beta: [f64; 2],
    /// Shift applied to corrections with (+) or without (-) citation markers.
    pub citation_shift: f64,
    /// Multiplier for texts shorter than `short_text_words`.
    pub short_text_factor: f64,
    pub short_text_words: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            tt_mean: 0.5,
            tt_user_std: 0.12,
            tt_community_std: 0.09,
            ic_home_mean: 9.0,
            ic_home_std: 1.0,
            ic_other_mean: 1.5,
            ic_other_std: 1.5,
            ic_mention_boost: 2.5,
            fact_beta: [5.0, 3.0],
            narrative_beta: [4.0, 4.0],
            debunk_beta: [4.0, 4.0],
            disinformation_beta: [4.0, 4.0],
            citation_shift: 0.1,
            short_text_factor: 0.8,
            short_text_words: 6,
        }
    }
}

const CITATION_MARKERS: &[&str] = &[
    "http",
    "www.",
    "according to",
    "report",
    "study",
    "studies",
    "data",
    "statistics",
    "source",
    "official",
    "%",
];

const SENSATIONAL_MARKERS: &[&str] = &[
    "shocking",
    "secret",
    "they don't want",
    "wake up",
    "exposed",
    "100%",
    "guaranteed",
    "miracle",
    "everyone knows",
];

pub fn has_citation_marker(text: &str) -> bool {
    let lower = text.to_lowercase();
    CITATION_MARKERS.iter().any(|m| lower.contains(m))
}

#[derive(Debug, Clone)]
pub struct SyntheticBackend {
    config: SyntheticConfig,
    seed: u64,
}

impl SyntheticBackend {
    pub fn new(config: SyntheticConfig, seed: u64) -> Self {
        Self { config, seed }
    }

    fn stream(&self, request: &EvaluationRequest) -> ChaCha8Rng {
        let bytes = serde_json::to_vec(request).expect("request serializes");
        ChaCha8Rng::seed_from_u64(seed_from_bytes(self.seed, &bytes))
    }

    fn interest(
        &self,
        request: &EvaluationRequest,
        rng: &mut ChaCha8Rng,
    ) -> Result<BTreeMap<String, f64>, EvaluatorError> {
        let cfg = &self.config;
        let communities = request.communities()?;
        let corpus = user_corpus(request).to_lowercase();
        let mentions: Vec<usize> = communities
            .iter()
            .map(|c| corpus.matches(&c.to_lowercase()).count())
            .collect();
        let home = match request.context_value(ctx::HOME_COMMUNITY) {
            Some(h) => communities.iter().position(|c| c == h),
            None => None,
        }
        .or_else(|| {
            let (best, &count) = mentions
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
            (count > 0).then_some(best)
        })
        .unwrap_or_else(|| rng.random_range(0..communities.len().max(1)));

        let home_dist = normal(cfg.ic_home_mean, cfg.ic_home_std)?;
        let other_dist = normal(cfg.ic_other_mean, cfg.ic_other_std)?;
        Ok(communities
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let base = if i == home {
                    home_dist.sample(rng)
                } else {
                    other_dist.sample(rng)
                };
                let boost = cfg.ic_mention_boost * mentions[i].min(2) as f64;
                (c.clone(), (base + boost).round().clamp(1.0, 10.0))
            })
            .collect())
    }

    fn trust(
        &self,
        request: &EvaluationRequest,
        rng: &mut ChaCha8Rng,
    ) -> Result<BTreeMap<String, f64>, EvaluatorError> {
        let cfg = &self.config;
        let communities = request.communities()?;
        let offset = normal(0.0, cfg.tt_user_std)?.sample(rng);
        let noise = normal(0.0, cfg.tt_community_std)?;
        Ok(communities
            .into_iter()
            .map(|c| {
                let v = cfg.tt_mean + offset + noise.sample(rng);
                (c, v.clamp(0.0, 1.0))
            })
            .collect())
    }

    fn plausibility(&self, request: &EvaluationRequest, rng: &mut ChaCha8Rng) -> f64 {
        let text = request.subject_texts.join(" ");
        let lower = text.to_lowercase();
        let words = whitespace_tokens(&text) as f64;
        let mut score = 0.5;
        if lower.chars().any(|c| c.is_ascii_digit()) {
            score += 0.1;
        }
        if has_citation_marker(&text) {
            score += 0.1;
        }
        let sensational = SENSATIONAL_MARKERS
            .iter()
            .filter(|m| lower.contains(*m))
            .count();
        score -= 0.08 * sensational.min(3) as f64;
        score -= 0.04 * text.matches('!').count().min(3) as f64;
        if words < 8.0 {
            score -= 0.1;
        }
        score += rng.random_range(-0.05..=0.05);
        score.clamp(0.05, 0.95)
    }

    fn persuasiveness(
        &self,
        request: &EvaluationRequest,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, EvaluatorError> {
        let cfg = &self.config;
        let text = request.subject_texts.join(" ");
        if text.trim().is_empty() {
            return Ok(0.0);
        }
        let is_correction = request.context_value(ctx::CONTENT_KIND) == Some("correction");
        let shape = if is_correction {
            match request.context_value(ctx::STRATEGY) {
                Some("fact_based") => cfg.fact_beta,
                Some("narrative_based") => cfg.narrative_beta,
                _ => cfg.debunk_beta,
            }
        } else {
            cfg.disinformation_beta
        };
        let dist = Beta::new(shape[0], shape[1])
            .map_err(|e| EvaluatorError::Config(format!("beta shape {shape:?}: {e}")))?;
        let mut score = dist.sample(rng);
        if is_correction {
            if has_citation_marker(&text) {
                score += cfg.citation_shift;
            } else {
                score -= cfg.citation_shift;
            }
        }
        if (whitespace_tokens(&text) as usize) < cfg.short_text_words {
            score *= cfg.short_text_factor;
        }
        Ok(score.clamp(0.0, 1.0))
    }

    fn belief(
        &self,
        request: &EvaluationRequest,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, EvaluatorError> {
        let read = |key: &str| -> Result<f64, EvaluatorError> {
            request
                .context_value(key)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| EvaluatorError::BadRequest(format!("belief check needs `{key}`")))
        };
        let tt = read(ctx::TRUST_THRESHOLD)?;
        let dp = read(ctx::PLAUSIBILITY)?;
        let da = 1.0 - (1.0 - tt) * dp;
        Ok(if rng.random::<f64>() < 1.0 - da {
            1.0
        } else {
            0.0
        })
    }
}

fn normal(mean: f64, std: f64) -> Result<Normal<f64>, EvaluatorError> {
    Normal::new(mean, std)
        .map_err(|e| EvaluatorError::Config(format!("normal({mean}, {std}): {e}")))
}

fn user_corpus(request: &EvaluationRequest) -> String {
    let mut parts: Vec<&str> = request.subject_texts.iter().map(String::as_str).collect();
    for key in [ctx::DESCRIPTION, ctx::POSTS, ctx::RETWEETS, ctx::QUOTES] {
        if let Some(v) = request.context_value(key) {
            parts.push(v);
        }
    }
    parts.join("\n")
}

impl EvaluatorBackend for SyntheticBackend {
    fn name(&self) -> &'static str {
        "synthetic"
    }

    fn evaluate(&self, request: &EvaluationRequest) -> Result<EvaluationResponse, EvaluatorError> {
        let mut rng = self.stream(request);
        let scores = match request.kind {
            RequestKind::InterestCommunity => self.interest(request, &mut rng)?,
            RequestKind::TrustThreshold => self.trust(request, &mut rng)?,
            RequestKind::Plausibility => [(
                keys::PLAUSIBILITY.to_string(),
                self.plausibility(request, &mut rng),
            )]
            .into(),
            RequestKind::Persuasiveness => [(
                keys::PERSUASIVENESS.to_string(),
                self.persuasiveness(request, &mut rng)?,
            )]
            .into(),
            RequestKind::BeliefCheck => {
                [(keys::BELIEF.to_string(), self.belief(request, &mut rng)?)].into()
            }
        };
        let tokens_in = request
            .subject_texts
            .iter()
            .map(|t| whitespace_tokens(t))
            .chain(request.context.values().map(|v| whitespace_tokens(v)))
            .sum();
        let tokens_out = 8 * scores.len() as u64;
        Ok(EvaluationResponse {
            scores,
            reasoning: None,
            usage: Usage {
                calls: 1,
                tokens_in,
                tokens_out,
                latency_us: 0,
                approximate: true,
            },
        })
    }
}
