//! Time-stepped simulation of one disinformation item spreading through the
//! network, with optional corrective intervention by legitimate bots.
//!
//! Rounds are synchronous: everything sent during step `t` is delivered at
//! the end of `t` and can be acted on from `t + 1`. Every random draw comes
//! from a stream keyed by `(seed, purpose, agent, step, ...)`, so agent order
//! within a step does not affect the outcome.
//!
//! Per step:
//!
//! * Malicious bots of the topic community broadcast the disinformation on
//!   their scheduled steps; legitimate bots broadcast the plan's correction on
//!   scheduled steps inside the intervention window.
//! * A regular agent activates with its hourly probability. On activation it
//!   first folds pending receipts into its trust threshold, then looks at
//!   the latest item in its inbox and shares with probability equal to its
//!   dissemination tendency. Believers push the disinformation; everyone
//!   else relays corrections or, when the latest item is the disinformation,
//!   quotes it with a rebuttal.
//! * Receipt of the disinformation exposes the agent and draws belief
//!   (non-believers only). Receipt of a correction gives a believer a chance,
//!   equal to its discernment, to drop the belief.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attributes::{activation_probability, AgentKind, Population};
use crate::config::{Scenario, SimulationParams};
use crate::content::{
    correction_for, disinformation_for, is_intervention_active, score_plausibility, ContentError,
    ContentItem, ContentKind, InterventionPlan, Strategy,
};
use crate::dynamics::{believe_disinformation, discernment_ability, update_trust_from_sums};
use crate::evaluator::{
    ctx, keys, EvaluationRequest, Evaluator, EvaluatorError, RequestKind, ResourceLedger,
};
use crate::network::PropagationNetwork;
use crate::report::{mean_std, CommunitySeries, FinalStates, RunReport, StepPoint};
use crate::rng::{purpose, substream};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown topic community `{0}`")]
    UnknownTopic(String),
    #[error("scenario has no disinformation item")]
    NoTopic,
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error("bot schedule conflict: {0}")]
    ScheduleConflict(String),
    #[error("intervention window has {window} steps but legitimate bots need at least {min}")]
    WindowTooSmall { window: u32, min: u32 },
    #[error("network does not match population: {0}")]
    NetworkMismatch(String),
}

/// What a message carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The disinformation item, endorsed.
    Disinformation,
    /// The plan's correction item.
    Correction,
    /// A user's quote of the disinformation rebutting it.
    Debunk,
}

impl Variant {
    pub fn slot(self) -> usize {
        self as usize
    }

    fn is_corrective(self) -> bool {
        self != Variant::Disinformation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareMode {
    /// Scheduled bot post.
    Broadcast,
    Repost,
    Quote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareEvent {
    pub step: u32,
    pub agent: usize,
    pub variant: Variant,
    pub mode: ShareMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub step: u32,
    pub sender: usize,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentStatus {
    Susceptible,
    Exposed,
    InfectedSpreader,
    UninfectedSpreader,
}

/// Mutable per-agent state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentState {
    pub exposed: bool,
    pub believes: Option<bool>,
    /// Has pushed the disinformation.
    pub shared_disinformation: bool,
    /// Has relayed a correction or a debunk.
    pub shared_corrective: bool,
    /// Current trust threshold for the topic community.
    pub trust: f64,
    pending_corrective: f64,
    pending_disinformation: f64,
    pub inbox: Vec<Receipt>,
    pub outbox: Vec<(u32, Variant)>,
    /// Receipts per variant.
    pub exposures: [u32; 3],
    #[serde(skip)]
    persuasion: [Option<f64>; 3],
}

impl AgentState {
    fn new(trust: f64) -> Self {
        Self {
            exposed: false,
            believes: None,
            shared_disinformation: false,
            shared_corrective: false,
            trust,
            pending_corrective: 0.0,
            pending_disinformation: 0.0,
            inbox: Vec::new(),
            outbox: Vec::new(),
            exposures: [0; 3],
            persuasion: [None; 3],
        }
    }

    pub fn status(&self) -> AgentStatus {
        let believes = self.believes == Some(true);
        if !self.exposed {
            AgentStatus::Susceptible
        } else if believes && self.shared_disinformation {
            AgentStatus::InfectedSpreader
        } else if !believes && (self.shared_disinformation || self.shared_corrective) {
            AgentStatus::UninfectedSpreader
        } else {
            AgentStatus::Exposed
        }
    }
}

/// Activation steps of each scheduled bot, keyed by agent index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotSchedules {
    pub steps: BTreeMap<usize, BTreeSet<u32>>,
}

impl BotSchedules {
    pub fn of(&self, agent: usize) -> Option<&BTreeSet<u32>> {
        self.steps.get(&agent)
    }
}

fn sample_steps<R: Rng>(rng: &mut R, lo: u32, hi: u32, count: u32) -> BTreeSet<u32> {
    let len = (hi - lo + 1) as usize;
    index::sample(rng, len, (count as usize).min(len))
        .into_iter()
        .map(|i| lo + i as u32)
        .collect()
}

/// Draws activation steps for the bots of the topic community. Counts are
/// uniform in the configured frequency range (capped by the available steps);
/// steps are drawn without replacement from `[1, T]` for malicious bots and
/// from the intervention window for legitimate bots. Control plans leave
/// legitimate bots idle.
pub fn build_bot_schedules(
    population: &Population,
    params: &SimulationParams,
    plan: &InterventionPlan,
    topic: usize,
    seed: u64,
) -> Result<BotSchedules, EngineError> {
    let total = params.total_steps;
    let mut steps = BTreeMap::new();
    for agent in population.bots_of(AgentKind::MaliciousBot, topic) {
        let mut rng = substream(seed, &[purpose::SCHEDULE, agent as u64]);
        let r = params.malicious_freq_range;
        let count = rng.random_range(r.start..=r.end).min(total);
        steps.insert(agent, sample_steps(&mut rng, 1, total, count));
    }
    if !plan.is_control() {
        let lo = plan.window.start.max(1);
        let hi = plan.window.end.min(total);
        let window = if hi >= lo { hi - lo + 1 } else { 0 };
        let r = params.legitimate_freq_range;
        if r.start > window {
            return Err(EngineError::WindowTooSmall {
                window,
                min: r.start,
            });
        }
        for agent in population.bots_of(AgentKind::LegitimateBot, topic) {
            let mut rng = substream(seed, &[purpose::SCHEDULE, agent as u64]);
            let count = rng.random_range(r.start..=r.end).min(window);
            steps.insert(agent, sample_steps(&mut rng, lo, hi, count));
        }
    }
    Ok(BotSchedules { steps })
}

fn check_schedules(
    schedules: &BotSchedules,
    population: &Population,
    plan: &InterventionPlan,
    total: u32,
) -> Result<(), EngineError> {
    for (&agent, steps) in &schedules.steps {
        let kind = population
            .profiles
            .get(agent)
            .map(|p| p.kind)
            .ok_or_else(|| {
                EngineError::ScheduleConflict(format!("agent {agent} does not exist"))
            })?;
        if kind == AgentKind::Regular {
            return Err(EngineError::ScheduleConflict(format!(
                "agent {agent} is not a bot"
            )));
        }
        if steps.iter().any(|&t| t == 0 || t > total) {
            return Err(EngineError::ScheduleConflict(format!(
                "agent {agent} scheduled outside [1, {total}]"
            )));
        }
        if kind == AgentKind::LegitimateBot && !steps.is_empty() {
            if plan.is_control() {
                return Err(EngineError::ScheduleConflict(
                    "legitimate bots scheduled under a control plan".into(),
                ));
            }
            if steps.iter().any(|&t| !plan.window.contains(t)) {
                return Err(EngineError::ScheduleConflict(format!(
                    "legitimate bot {agent} scheduled outside the intervention window"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Topic community; defaults to the first community with a
    /// disinformation item.
    pub topic: Option<String>,
    pub record_trajectories: bool,
    /// Overrides `params.record_cadence`.
    pub record_cadence: Option<u32>,
    /// Replaces the generated bot schedules.
    pub schedules: Option<BotSchedules>,
}

/// First community, in scenario order, that has a disinformation item.
pub fn default_topic(scenario: &Scenario) -> Option<String> {
    scenario.communities.iter().find_map(|c| {
        scenario
            .content
            .iter()
            .any(|i| i.kind == ContentKind::Disinformation && &i.topic == c)
            .then(|| c.clone())
    })
}

/// A simulation in progress.
pub struct Simulation<'a> {
    params: SimulationParams,
    population: &'a Population,
    network: &'a PropagationNetwork,
    evaluator: &'a Evaluator,
    plan: InterventionPlan,
    seed: u64,
    digest: String,
    topic: usize,
    disinformation: ContentItem,
    correction: Option<ContentItem>,
    debunk_text: String,
    plausibility: Option<f64>,
    schedules: BotSchedules,
    cadence: u32,
    record_trajectories: bool,
    t: u32,
    agents: Vec<AgentState>,
    regular_members: Vec<Vec<usize>>,
    regular: Vec<usize>,
    share_log: Vec<ShareEvent>,
    recorded_steps: Vec<u32>,
    series: Vec<Vec<StepPoint>>,
    overall: Vec<StepPoint>,
    trajectories: Vec<Vec<f64>>,
    ledger_start: ResourceLedger,
    failure: Option<String>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        scenario: &Scenario,
        population: &'a Population,
        network: &'a PropagationNetwork,
        plan: InterventionPlan,
        evaluator: &'a Evaluator,
        options: RunOptions,
    ) -> Result<Self, EngineError> {
        let params = scenario.params.clone();
        let seed = params.rng_seed;
        let n = population.profiles.len();
        if network.n_nodes() != n {
            return Err(EngineError::NetworkMismatch(format!(
                "{} nodes for {n} agents",
                network.n_nodes()
            )));
        }
        if network.membership.n_communities() != population.communities.len() {
            return Err(EngineError::NetworkMismatch(
                "community count differs".into(),
            ));
        }
        let topic_name = match options.topic {
            Some(t) => t,
            None => default_topic(scenario).ok_or(EngineError::NoTopic)?,
        };
        let topic = population
            .communities
            .iter()
            .position(|c| *c == topic_name)
            .ok_or_else(|| EngineError::UnknownTopic(topic_name.clone()))?;
        let disinformation = disinformation_for(&topic_name, &scenario.content)?.clone();
        let correction = if plan.is_control() {
            None
        } else {
            Some(correction_for(&disinformation, plan.strategy, &scenario.content)?.clone())
        };
        let schedules = match options.schedules {
            Some(s) => {
                check_schedules(&s, population, &plan, params.total_steps)?;
                s
            }
            None => build_bot_schedules(population, &params, &plan, topic, seed)?,
        };
        let cadence = options
            .record_cadence
            .unwrap_or(params.record_cadence)
            .max(1);
        let agents = population
            .profiles
            .iter()
            .map(|p| AgentState::new(p.trust[topic]))
            .collect();
        let is_regular = |i: &usize| population.profiles[*i].kind == AgentKind::Regular;
        let regular_members = network
            .membership
            .members
            .iter()
            .map(|m| m.iter().copied().filter(is_regular).collect())
            .collect();
        let regular: Vec<usize> = (0..n).filter(is_regular).collect();
        let debunk_text = format!(
            "This is false, please don't spread it: \"{}\"",
            disinformation.text
        );
        let mut sim = Self {
            plausibility: disinformation.plausibility,
            params,
            population,
            network,
            evaluator,
            plan,
            seed,
            digest: scenario.digest(),
            topic,
            disinformation,
            correction,
            debunk_text,
            schedules,
            cadence,
            record_trajectories: options.record_trajectories,
            t: 0,
            agents,
            trajectories: vec![Vec::new(); regular.len()],
            regular_members,
            regular,
            share_log: Vec::new(),
            recorded_steps: Vec::new(),
            series: vec![Vec::new(); population.communities.len()],
            overall: Vec::new(),
            ledger_start: evaluator.ledger_snapshot(),
            failure: None,
        };
        sim.record();
        Ok(sim)
    }

    pub fn step_index(&self) -> u32 {
        self.t
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.params.total_steps || self.failure.is_some()
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn share_log(&self) -> &[ShareEvent] {
        &self.share_log
    }

    pub fn schedules(&self) -> &BotSchedules {
        &self.schedules
    }

    pub fn topic(&self) -> &str {
        &self.population.communities[self.topic]
    }

    /// The latest recorded network-wide point.
    pub fn last_point(&self) -> &StepPoint {
        self.overall.last().expect("step 0 is always recorded")
    }

    fn dp(&mut self) -> Result<f64, EvaluatorError> {
        if let Some(dp) = self.plausibility {
            return Ok(dp);
        }
        let dp = match score_plausibility(&mut self.disinformation, self.evaluator) {
            Ok(dp) => dp,
            Err(ContentError::Evaluator(e)) => return Err(e),
            Err(other) => return Err(EvaluatorError::BadRequest(other.to_string())),
        };
        self.plausibility = Some(dp);
        Ok(dp)
    }

    /// Advances one step. On evaluator failure the simulation stops and the
    /// error is kept for the report.
    pub fn step(&mut self) -> Result<(), EvaluatorError> {
        if self.is_finished() {
            return Ok(());
        }
        let result = self.advance();
        if let Err(e) = &result {
            self.failure = Some(format!("step {}: {e}", self.t + 1));
        }
        result
    }

    fn advance(&mut self) -> Result<(), EvaluatorError> {
        let t = self.t + 1;
        let dp = self.dp()?;
        let intervention_on = is_intervention_active(&self.plan, t);
        let mut outgoing: Vec<(usize, Variant)> = Vec::new();
        for agent in 0..self.agents.len() {
            let profile = &self.population.profiles[agent];
            match profile.kind {
                AgentKind::MaliciousBot | AgentKind::LegitimateBot => {
                    let schedule = self.schedules.of(agent);
                    if activation_probability(profile, t, schedule) < 1.0 {
                        continue;
                    }
                    let variant = if profile.kind == AgentKind::MaliciousBot {
                        Variant::Disinformation
                    } else if intervention_on {
                        Variant::Correction
                    } else {
                        continue;
                    };
                    self.share_log.push(ShareEvent {
                        step: t,
                        agent,
                        variant,
                        mode: ShareMode::Broadcast,
                    });
                    outgoing.push((agent, variant));
                }
                AgentKind::Regular => {
                    let mut rng =
                        substream(self.seed, &[purpose::ACTIVATE, agent as u64, u64::from(t)]);
                    if rng.random::<f64>() >= activation_probability(profile, t, None) {
                        continue;
                    }
                    self.fold_pending(agent);
                    if let Some((variant, mode)) = self.share_decision(agent, t) {
                        let st = &mut self.agents[agent];
                        st.outbox.push((t, variant));
                        if variant.is_corrective() {
                            st.shared_corrective = true;
                        } else {
                            st.shared_disinformation = true;
                        }
                        self.share_log.push(ShareEvent {
                            step: t,
                            agent,
                            variant,
                            mode,
                        });
                        outgoing.push((agent, variant));
                    }
                }
            }
        }
        for (sender, variant) in outgoing {
            for &receiver in self.network.neighbors(sender) {
                if self.population.profiles[receiver].kind == AgentKind::Regular {
                    self.receive(receiver, sender, variant, t, dp)?;
                }
            }
        }
        self.t = t;
        if t.is_multiple_of(self.cadence) || t == self.params.total_steps {
            self.record();
        }
        Ok(())
    }

    fn fold_pending(&mut self, agent: usize) {
        let p = &self.params;
        let st = &mut self.agents[agent];
        if st.pending_corrective > 0.0 || st.pending_disinformation > 0.0 {
            st.trust = update_trust_from_sums(
                st.trust,
                st.pending_corrective,
                st.pending_disinformation,
                p.gamma,
                p.beta,
                p.delta,
            );
            st.pending_corrective = 0.0;
            st.pending_disinformation = 0.0;
        }
    }

    /// What an active regular agent shares, if anything.
    fn share_decision(&self, agent: usize, t: u32) -> Option<(Variant, ShareMode)> {
        let st = &self.agents[agent];
        let latest = st.inbox.last()?.variant;
        let believer = st.believes == Some(true);
        let out = match (latest, believer) {
            (_, true) => Variant::Disinformation,
            (Variant::Disinformation, false) => Variant::Debunk,
            (v, false) => v,
        };
        if st.outbox.iter().any(|&(_, v)| v == out) {
            return None;
        }
        // Exposure count of the item the share is derived from.
        let source = if out == Variant::Debunk {
            Variant::Disinformation
        } else {
            out
        };
        let dt = self.population.profiles[agent].dissemination_tendency(
            self.topic,
            &self.params,
            st.exposures[source.slot()],
        );
        let mut rng = substream(self.seed, &[purpose::SHARE, agent as u64, u64::from(t)]);
        if rng.random::<f64>() >= dt {
            return None;
        }
        let mode =
            if out == Variant::Debunk || rng.random::<f64>() >= self.params.repost_probability {
                ShareMode::Quote
            } else {
                ShareMode::Repost
            };
        Some((out, mode))
    }

    fn variant_content(&self, variant: Variant) -> (&str, ContentKind, Strategy) {
        match variant {
            Variant::Disinformation => (
                &self.disinformation.text,
                ContentKind::Disinformation,
                Strategy::None,
            ),
            Variant::Correction => {
                let c = self
                    .correction
                    .as_ref()
                    .expect("corrections only flow under a plan");
                (&c.text, ContentKind::Correction, c.strategy)
            }
            Variant::Debunk => (&self.debunk_text, ContentKind::Correction, Strategy::None),
        }
    }

    fn persuasiveness(&mut self, receiver: usize, variant: Variant) -> Result<f64, EvaluatorError> {
        if let Some(f) = self.agents[receiver].persuasion[variant.slot()] {
            return Ok(f);
        }
        let (text, kind, strategy) = self.variant_content(variant);
        let f = self.evaluator.persuasiveness_of(
            text,
            kind,
            strategy,
            &self.population.communities[self.topic],
            &self.population.profiles[receiver].history,
        )?;
        self.agents[receiver].persuasion[variant.slot()] = Some(f);
        Ok(f)
    }

    fn sender_influence(&self, sender: usize) -> f64 {
        let p = &self.population.profiles[sender];
        if self.network.membership.is_member(sender, self.topic) {
            p.influence[self.topic]
        } else {
            p.max_influence()
        }
    }

    fn draw_belief(
        &self,
        receiver: usize,
        da: f64,
        rng: &mut impl Rng,
    ) -> Result<bool, EvaluatorError> {
        if !self.evaluator.checks_belief() {
            return Ok(believe_disinformation(da, rng));
        }
        let st = &self.agents[receiver];
        let request = EvaluationRequest::new(
            RequestKind::BeliefCheck,
            vec![self.disinformation.text.clone()],
        )
        .with_context(
            ctx::HISTORY,
            self.population.profiles[receiver].history.as_str(),
        )
        .with_context(ctx::TRUST_THRESHOLD, st.trust.to_string())
        .with_context(
            ctx::PLAUSIBILITY,
            self.plausibility.unwrap_or(0.0).to_string(),
        )
        .with_context(
            ctx::COMMUNITY,
            self.population.communities[self.topic].as_str(),
        );
        Ok(self.evaluator.evaluate(&request)?.score(keys::BELIEF)? >= 0.5)
    }

    fn receive(
        &mut self,
        receiver: usize,
        sender: usize,
        variant: Variant,
        t: u32,
        dp: f64,
    ) -> Result<(), EvaluatorError> {
        let f = self.persuasiveness(receiver, variant)?;
        let si = self.sender_influence(sender);
        // Keyed by the receipt itself so that paired runs share draws.
        let mut rng = substream(
            self.seed,
            &[
                purpose::RECEIVE,
                receiver as u64,
                u64::from(t),
                sender as u64,
                variant.slot() as u64,
            ],
        );
        let da = discernment_ability(self.agents[receiver].trust, dp);
        let believes = self.agents[receiver].believes;
        let new_belief = if variant.is_corrective() {
            match believes {
                Some(true) if rng.random::<f64>() < da => Some(false),
                other => other,
            }
        } else if believes == Some(true) {
            believes
        } else {
            Some(self.draw_belief(receiver, da, &mut rng)?)
        };
        let st = &mut self.agents[receiver];
        st.inbox.push(Receipt {
            step: t,
            sender,
            variant,
        });
        st.exposures[variant.slot()] += 1;
        st.believes = new_belief;
        if variant.is_corrective() {
            st.pending_corrective += si * f;
        } else {
            st.pending_disinformation += si * f;
            st.exposed = true;
        }
        Ok(())
    }

    fn point(&self, step: u32, members: &[usize]) -> StepPoint {
        if members.is_empty() {
            return StepPoint {
                step,
                sr: 1.0,
                er: 0.0,
                ir: 0.0,
                ur: 0.0,
                tt_mean: 0.0,
                tt_std: 0.0,
            };
        }
        let (mut exposed, mut infected, mut uninfected) = (0usize, 0usize, 0usize);
        let mut trust = Vec::with_capacity(members.len());
        for &i in members {
            let st = &self.agents[i];
            match st.status() {
                AgentStatus::Susceptible => {}
                AgentStatus::Exposed => exposed += 1,
                AgentStatus::InfectedSpreader => {
                    exposed += 1;
                    infected += 1;
                }
                AgentStatus::UninfectedSpreader => {
                    exposed += 1;
                    uninfected += 1;
                }
            }
            trust.push(st.trust);
        }
        let n = members.len() as f64;
        let (tt_mean, tt_std) = mean_std(&trust);
        StepPoint {
            step,
            sr: (members.len() - exposed) as f64 / n,
            er: exposed as f64 / n,
            ir: infected as f64 / n,
            ur: uninfected as f64 / n,
            tt_mean,
            tt_std,
        }
    }

    fn record(&mut self) {
        let t = self.t;
        self.recorded_steps.push(t);
        for c in 0..self.series.len() {
            let p = self.point(t, &self.regular_members[c]);
            self.series[c].push(p);
        }
        let p = self.point(t, &self.regular);
        self.overall.push(p);
        if self.record_trajectories {
            for (k, &i) in self.regular.iter().enumerate() {
                self.trajectories[k].push(self.agents[i].trust);
            }
        }
    }

    /// Checks the sharing rules over the whole log: regular agents only share
    /// after receiving something in an earlier step, bots only on schedule.
    pub fn check_share_log(&self) -> Result<(), String> {
        for e in &self.share_log {
            let kind = self.population.profiles[e.agent].kind;
            if kind == AgentKind::Regular {
                if !self.agents[e.agent].inbox.iter().any(|r| r.step < e.step) {
                    return Err(format!(
                        "agent {} shared at {} without a receipt",
                        e.agent, e.step
                    ));
                }
            } else if !self
                .schedules
                .of(e.agent)
                .is_some_and(|s| s.contains(&e.step))
            {
                return Err(format!("bot {} shared off schedule at {}", e.agent, e.step));
            }
        }
        Ok(())
    }

    /// Builds the report for the steps simulated so far.
    pub fn finish(self) -> RunReport {
        let ids = |status: AgentStatus| -> Vec<String> {
            self.regular
                .iter()
                .filter(|&&i| self.agents[i].status() == status)
                .map(|&i| self.population.profiles[i].agent_id.clone())
                .collect()
        };
        let final_states = FinalStates {
            susceptible: ids(AgentStatus::Susceptible),
            exposed: ids(AgentStatus::Exposed),
            infected_spreaders: ids(AgentStatus::InfectedSpreader),
            uninfected_spreaders: ids(AgentStatus::UninfectedSpreader),
        };
        let trajectories = self.record_trajectories.then(|| {
            self.regular
                .iter()
                .zip(&self.trajectories)
                .map(|(&i, tr)| (self.population.profiles[i].agent_id.clone(), tr.clone()))
                .collect()
        });
        RunReport {
            scenario_digest: self.digest,
            seed: self.seed,
            topic: self.population.communities[self.topic].clone(),
            plan: self.plan,
            communities: self.population.communities.clone(),
            recorded_steps: self.recorded_steps,
            series: self
                .population
                .communities
                .iter()
                .zip(self.series)
                .map(|(c, points)| CommunitySeries {
                    community: c.clone(),
                    points,
                })
                .collect(),
            overall: self.overall,
            trajectories,
            final_states,
            ledger: self.evaluator.ledger_snapshot().since(&self.ledger_start),
            complete: self.failure.is_none(),
            failure: self.failure,
        }
    }
}

/// Runs a whole simulation. Evaluator failures end the run early with an
/// incomplete report rather than an error.
pub fn run(
    scenario: &Scenario,
    population: &Population,
    network: &PropagationNetwork,
    plan: InterventionPlan,
    evaluator: &Evaluator,
    options: RunOptions,
) -> Result<RunReport, EngineError> {
    run_with_progress(
        scenario,
        population,
        network,
        plan,
        evaluator,
        options,
        &mut |_| {},
    )
}

/// Like [`run`], calling `progress` after every recorded step.
pub fn run_with_progress(
    scenario: &Scenario,
    population: &Population,
    network: &PropagationNetwork,
    plan: InterventionPlan,
    evaluator: &Evaluator,
    options: RunOptions,
    progress: &mut dyn FnMut(&StepPoint),
) -> Result<RunReport, EngineError> {
    let mut sim = Simulation::new(scenario, population, network, plan, evaluator, options)?;
    progress(sim.last_point());
    let mut recorded = 1;
    while !sim.is_finished() {
        if sim.step().is_err() {
            break;
        }
        if sim.recorded_steps.len() > recorded {
            recorded = sim.recorded_steps.len();
            progress(sim.last_point());
        }
    }
    Ok(sim.finish())
}
