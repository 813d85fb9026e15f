//! Seedable multi-agent simulator of disinformation dissemination and
//! correction.
//!
//! The pipeline is:
//!
//! 1. [`config::load_scenario`] reads and validates a scenario file.
//! 2. [`attributes::derive_profiles`] turns user records into agent profiles
//!    (interest, trust threshold, social influence, activation time) and adds
//!    malicious and legitimate bots.
//! 3. [`network::assign_communities`] and [`network::build_network`] grow a
//!    community-structured, influence-weighted scale-free graph.
//! 4. [`engine::run`] steps the simulation and returns a
//!    [`report::RunReport`] with susceptible/exposed/infected/uninfected
//!    ratios and trust-threshold statistics per community.
//!
//! Every stochastic step draws from a seeded stream, so a scenario, a seed and
//! an intervention plan fully determine the output when the synthetic
//! evaluator backend is used.

pub mod attributes;
pub mod cli;
pub mod config;
pub mod content;
pub mod dynamics;
pub mod engine;
pub mod evaluator;
pub mod network;
pub mod powerlaw;
pub mod report;
pub mod rng;
pub mod synth;

mod error;

pub use error::Error;

pub use attributes::{derive_profiles, AgentKind, AgentProfile, Population};
pub use config::{load_scenario, validate_params, Scenario, SimulationParams, UserRecord};
pub use content::{ContentItem, ContentKind, InterventionPlan, Stage, Strategy};
pub use engine::{run, RunOptions, Simulation};
pub use evaluator::Evaluator;
pub use network::{assign_communities, build_network, CommunityIndex, PropagationNetwork};
pub use powerlaw::{fit_truncated_power_law, PowerLawFit};
pub use report::{compare_interventions, ComparisonReport, RunReport};
