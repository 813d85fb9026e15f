//! Disinformation items, corrective content and intervention plans.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{InclusiveRange, SimulationParams};
use crate::evaluator::{EvaluationRequest, Evaluator, EvaluatorError, RequestKind};

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("no {strategy} correction available for topic `{topic}`")]
    NoCorrectionAvailable { topic: String, strategy: Strategy },
    #[error("`{0}` is not a disinformation item")]
    NotDisinformation(String),
    #[error("no disinformation item for topic `{0}`")]
    NoDisinformation(String),
    #[error("invalid intervention plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Evaluator(#[from] EvaluatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    Disinformation,
    Correction,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    None,
    FactBased,
    NarrativeBased,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::FactBased => "fact_based",
            Strategy::NarrativeBased => "narrative_based",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Strategy::None),
            "fact" | "fact_based" => Ok(Strategy::FactBased),
            "narrative" | "narrative_based" => Ok(Strategy::NarrativeBased),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// A disinformation or corrective message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentItem {
    pub content_id: String,
    /// Community name the item is about.
    pub topic: String,
    pub kind: ContentKind,
    #[serde(default)]
    pub strategy: Strategy,
    pub text: String,
    /// Plausibility in [0, 1]; disinformation only, filled by scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plausibility: Option<f64>,
}

impl ContentItem {
    pub fn disinformation(id: &str, topic: &str, text: &str) -> Self {
        Self {
            content_id: id.into(),
            topic: topic.into(),
            kind: ContentKind::Disinformation,
            strategy: Strategy::None,
            text: text.into(),
            plausibility: None,
        }
    }

    pub fn correction(id: &str, topic: &str, strategy: Strategy, text: &str) -> Self {
        Self {
            content_id: id.into(),
            topic: topic.into(),
            kind: ContentKind::Correction,
            strategy,
            text: text.into(),
            plausibility: None,
        }
    }
}

/// Scores the plausibility of a disinformation item and stores it on the item.
/// An item that already carries a score keeps it.
pub fn score_plausibility(
    item: &mut ContentItem,
    evaluator: &Evaluator,
) -> Result<f64, ContentError> {
    if item.kind != ContentKind::Disinformation {
        return Err(ContentError::NotDisinformation(item.content_id.clone()));
    }
    if let Some(dp) = item.plausibility {
        return Ok(dp);
    }
    let request = EvaluationRequest::new(RequestKind::Plausibility, vec![item.text.clone()])
        .with_context("community", &item.topic)
        .with_context("content_id", &item.content_id);
    let response = evaluator.evaluate(&request)?;
    let dp = response.score(crate::evaluator::keys::PLAUSIBILITY)?;
    item.plausibility = Some(dp);
    Ok(dp)
}

/// The correction of `strategy` for the topic of `disinfo`; lowest content id
/// wins when several exist.
pub fn correction_for<'a>(
    disinfo: &ContentItem,
    strategy: Strategy,
    catalog: &'a [ContentItem],
) -> Result<&'a ContentItem, ContentError> {
    catalog
        .iter()
        .filter(|c| {
            c.kind == ContentKind::Correction && c.strategy == strategy && c.topic == disinfo.topic
        })
        .min_by(|a, b| a.content_id.cmp(&b.content_id))
        .ok_or_else(|| ContentError::NoCorrectionAvailable {
            topic: disinfo.topic.clone(),
            strategy,
        })
}

/// The disinformation item for `topic` (lowest content id).
pub fn disinformation_for<'a>(
    topic: &str,
    catalog: &'a [ContentItem],
) -> Result<&'a ContentItem, ContentError> {
    catalog
        .iter()
        .filter(|c| c.kind == ContentKind::Disinformation && c.topic == topic)
        .min_by(|a, b| a.content_id.cmp(&b.content_id))
        .ok_or_else(|| ContentError::NoDisinformation(topic.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Early,
    Mid,
    Late,
    Control,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Early => "early",
            Stage::Mid => "mid",
            Stage::Late => "late",
            Stage::Control => "control",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "early" => Ok(Stage::Early),
            "mid" => Ok(Stage::Mid),
            "late" => Ok(Stage::Late),
            "control" => Ok(Stage::Control),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

/// When legitimate bots act and what they say.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionPlan {
    pub stage: Stage,
    pub window: InclusiveRange,
    pub strategy: Strategy,
}

impl InterventionPlan {
    /// No legitimate-bot activity.
    pub fn control() -> Self {
        Self {
            stage: Stage::Control,
            window: InclusiveRange::new(1, 0),
            strategy: Strategy::None,
        }
    }

    /// A plan whose window is the configured range for `stage`.
    pub fn new(
        stage: Stage,
        strategy: Strategy,
        params: &SimulationParams,
    ) -> Result<Self, ContentError> {
        let windows = &params.intervention_windows;
        let window = match stage {
            Stage::Control => {
                if strategy != Strategy::None {
                    return Err(ContentError::InvalidPlan(
                        "control plans carry no strategy".into(),
                    ));
                }
                return Ok(Self::control());
            }
            Stage::Early => windows.early,
            Stage::Mid => windows.mid,
            Stage::Late => windows.late,
        };
        if strategy == Strategy::None {
            return Err(ContentError::InvalidPlan(format!(
                "{stage} intervention needs a correction strategy"
            )));
        }
        Ok(Self {
            stage,
            window,
            strategy,
        })
    }

    pub fn is_control(&self) -> bool {
        self.stage == Stage::Control
    }

    /// Short label, e.g. `early_fact_based` or `control`.
    pub fn label(&self) -> String {
        if self.is_control() {
            "control".into()
        } else {
            format!("{}_{}", self.stage, self.strategy)
        }
    }
}

/// True iff the plan is not a control and `t` lies in its window.
pub fn is_intervention_active(plan: &InterventionPlan, t: u32) -> bool {
    !plan.is_control() && plan.window.contains(t)
}
