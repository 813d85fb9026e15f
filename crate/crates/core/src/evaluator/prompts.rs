//! Prompt templates for the remote backend. Templates are UTF-8 text with
//! `{placeholder}` slots; unknown braces (the JSON examples) are left alone.

use std::path::Path;

use super::{ctx, EvaluationRequest, EvaluatorError, RequestKind};

const INTEREST: &str = include_str!("../../prompts/interest_community.txt");
const TRUST: &str = include_str!("../../prompts/trust_threshold.txt");
const PLAUSIBILITY: &str = include_str!("../../prompts/plausibility.txt");
const PERSUASIVENESS: &str = include_str!("../../prompts/persuasiveness.txt");
const BELIEF: &str = include_str!("../../prompts/belief_check.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplates {
    pub interest_community: String,
    pub trust_threshold: String,
    pub plausibility: String,
    pub persuasiveness: String,
    pub belief_check: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            interest_community: INTEREST.into(),
            trust_threshold: TRUST.into(),
            plausibility: PLAUSIBILITY.into(),
            persuasiveness: PERSUASIVENESS.into(),
            belief_check: BELIEF.into(),
        }
    }
}

pub fn file_name(kind: RequestKind) -> &'static str {
    match kind {
        RequestKind::InterestCommunity => "interest_community.txt",
        RequestKind::TrustThreshold => "trust_threshold.txt",
        RequestKind::Plausibility => "plausibility.txt",
        RequestKind::Persuasiveness => "persuasiveness.txt",
        RequestKind::BeliefCheck => "belief_check.txt",
    }
}

impl PromptTemplates {
    /// Loads overrides from `dir`; kinds without a file keep the built-in text.
    pub fn from_dir(dir: &Path) -> Result<Self, EvaluatorError> {
        let mut t = Self::default();
        for kind in [
            RequestKind::InterestCommunity,
            RequestKind::TrustThreshold,
            RequestKind::Plausibility,
            RequestKind::Persuasiveness,
            RequestKind::BeliefCheck,
        ] {
            let path = dir.join(file_name(kind));
            if path.exists() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| EvaluatorError::Config(format!("{}: {e}", path.display())))?;
                *t.slot_mut(kind) = text;
            }
        }
        Ok(t)
    }

    fn slot_mut(&mut self, kind: RequestKind) -> &mut String {
        match kind {
            RequestKind::InterestCommunity => &mut self.interest_community,
            RequestKind::TrustThreshold => &mut self.trust_threshold,
            RequestKind::Plausibility => &mut self.plausibility,
            RequestKind::Persuasiveness => &mut self.persuasiveness,
            RequestKind::BeliefCheck => &mut self.belief_check,
        }
    }

    pub fn template(&self, kind: RequestKind) -> &str {
        match kind {
            RequestKind::InterestCommunity => &self.interest_community,
            RequestKind::TrustThreshold => &self.trust_threshold,
            RequestKind::Plausibility => &self.plausibility,
            RequestKind::Persuasiveness => &self.persuasiveness,
            RequestKind::BeliefCheck => &self.belief_check,
        }
    }

    pub fn render(&self, request: &EvaluationRequest) -> Result<String, EvaluatorError> {
        let subject = request.subject_texts.join("\n");
        let get = |key: &str| request.context_value(key).unwrap_or("(none)").to_string();
        let communities = match request.kind {
            RequestKind::InterestCommunity | RequestKind::TrustThreshold => {
                request.communities()?.join(", ")
            }
            _ => String::new(),
        };
        let slots: [(&str, String); 12] = [
            ("communities", communities),
            ("personal_description", get(ctx::DESCRIPTION)),
            ("follower_count", get(ctx::FOLLOWER_COUNT)),
            ("following_count", get(ctx::FOLLOWING_COUNT)),
            ("historical_posts", get(ctx::POSTS)),
            ("historical_retweets", get(ctx::RETWEETS)),
            ("historical_quotes", get(ctx::QUOTES)),
            ("history_info", get(ctx::HISTORY)),
            ("trust_threshold", get(ctx::TRUST_THRESHOLD)),
            ("plausibility", get(ctx::PLAUSIBILITY)),
            ("DisinformationText", subject.clone()),
            ("text_information", subject),
        ];
        let mut out = self.template(request.kind).to_string();
        for (name, value) in slots {
            out = out.replace(&format!("{{{name}}}"), &value);
        }
        Ok(out)
    }
}
