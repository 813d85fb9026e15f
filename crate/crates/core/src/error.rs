use thiserror::Error;

use crate::attributes::ProfileError;
use crate::config::ScenarioError;
use crate::content::ContentError;
use crate::engine::EngineError;
use crate::evaluator::EvaluatorError;
use crate::network::NetworkError;
use crate::powerlaw::FitError;
use crate::report::ReportError;

/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error(transparent)]
    Evaluator(#[from] EvaluatorError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl Error {
    /// True for problems with the inputs, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Scenario(_)
                | Error::Content(_)
                | Error::Network(NetworkError::InvalidParams { .. })
                | Error::Engine(
                    EngineError::UnknownTopic(_)
                        | EngineError::NoTopic
                        | EngineError::ScheduleConflict(_)
                        | EngineError::WindowTooSmall { .. }
                )
        )
    }
}
