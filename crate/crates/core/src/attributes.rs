//! Per-agent attributes: interest and trust scores from the evaluator, social
//! influence from follower counts, hourly activation from activity
//! histograms, and the share-count power-law term of the dissemination
//! tendency. Bots are added here with procedural attributes.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Scenario, SimulationParams, TextKind, UserRecord, ACTIVITY_BUCKETS};
use crate::dynamics;
use crate::evaluator::{ctx, EvaluationRequest, Evaluator, EvaluatorError, RequestKind};
use crate::network::{assign_communities, CommunityIndex};
use crate::powerlaw::{fit_truncated_power_law, PowerLawFit};
use crate::rng::{purpose, substream};

/// Share-count fit used when the scenario has too few users to fit and no
/// override is configured.
pub const FALLBACK_SHARE_FIT: (f64, f64, u64) = (1.146, 0.006, 16);

/// Interest score given to a bot for its own community and for the others.
const BOT_HOME_INTEREST: f64 = 10.0;
const BOT_OTHER_INTEREST: f64 = 1.0;

/// Texts per kind included in a history summary.
const SUMMARY_TEXTS: usize = 3;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("scoring user `{user_id}`: {source}")]
    Evaluator {
        user_id: String,
        #[source]
        source: EvaluatorError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Regular,
    MaliciousBot,
    LegitimateBot,
}

impl AgentKind {
    pub fn is_bot(self) -> bool {
        self != AgentKind::Regular
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: String,
    pub kind: AgentKind,
    /// Community index a bot belongs to, or the sampled-from community of a user.
    pub home_community: Option<usize>,
    pub follower_count: u64,
    /// Lifetime shares (reposts plus quotes).
    pub share_total: u64,
    /// Fitted share-count CDF at `share_total`.
    pub share_cdf: f64,
    /// Interest per community, 1..=10.
    pub interest: Vec<f64>,
    /// Initial trust threshold per community.
    pub trust: Vec<f64>,
    /// Social influence per community; 0 where not a member.
    pub influence: Vec<f64>,
    /// Activation probability per hour of day.
    pub activation: Vec<f64>,
    /// Short text summary of the user's history, used as receiver context.
    pub history: String,
}

impl AgentProfile {
    pub fn is_bot(&self) -> bool {
        self.kind.is_bot()
    }

    pub fn max_interest(&self) -> f64 {
        self.interest.iter().copied().fold(0.0, f64::max)
    }

    /// Largest influence over all communities.
    pub fn max_influence(&self) -> f64 {
        self.influence.iter().copied().fold(0.0, f64::max)
    }

    /// Sharing tendency in `community` after `exposures` receipts of an item.
    pub fn dissemination_tendency(
        &self,
        community: usize,
        params: &SimulationParams,
        exposures: u32,
    ) -> f64 {
        if self.is_bot() {
            return 1.0;
        }
        dynamics::dissemination_tendency(
            params.theta,
            self.share_cdf,
            self.interest[community],
            self.max_interest(),
            params.xi,
            exposures,
        )
    }
}

/// Probability that an agent acts at step `t` (1-based). Regular users use
/// their hourly profile; bots act exactly on their scheduled steps.
pub fn activation_probability(
    profile: &AgentProfile,
    t: u32,
    schedule: Option<&BTreeSet<u32>>,
) -> f64 {
    if profile.is_bot() {
        return match schedule {
            Some(s) if s.contains(&t) => 1.0,
            _ => 0.0,
        };
    }
    let bucket = (t.saturating_sub(1) as usize) % ACTIVITY_BUCKETS;
    profile.activation.get(bucket).copied().unwrap_or(0.0)
}

/// Normalizes an activity histogram to probabilities. All-zero gives zeros.
pub fn normalize_histogram(hist: &[u64]) -> Vec<f64> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return vec![0.0; hist.len()];
    }
    hist.iter().map(|&h| h as f64 / total as f64).collect()
}

/// Follower share of each member. The flag is set when every count is zero
/// and the uniform fallback was used.
pub fn social_influence(followers: &[u64]) -> (Vec<f64>, bool) {
    if followers.is_empty() {
        return (Vec::new(), false);
    }
    let total: f64 = followers.iter().map(|&f| f as f64).sum();
    if total == 0.0 {
        let u = 1.0 / followers.len() as f64;
        return (vec![u; followers.len()], true);
    }
    (followers.iter().map(|&f| f as f64 / total).collect(), false)
}

/// Where the share-count fit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSource {
    Fitted,
    Override,
    Fallback,
}

/// All agents of a scenario, regular users first in scenario order, then
/// bots grouped by community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub communities: Vec<String>,
    pub profiles: Vec<AgentProfile>,
    pub membership: CommunityIndex,
    pub share_fit: PowerLawFit,
    pub share_fit_source: FitSource,
    pub warnings: Vec<String>,
}

impl Population {
    pub fn n_regular(&self) -> usize {
        self.profiles.iter().filter(|p| !p.is_bot()).count()
    }

    pub fn index_of(&self, agent_id: &str) -> Option<usize> {
        self.profiles.iter().position(|p| p.agent_id == agent_id)
    }

    /// Agents of `kind` whose home is `community`.
    pub fn bots_of(&self, kind: AgentKind, community: usize) -> Vec<usize> {
        self.profiles
            .iter()
            .enumerate()
            .filter(|(_, p)| p.kind == kind && p.home_community == Some(community))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Compact history text used as receiver context for persuasiveness.
pub fn history_summary(user: &UserRecord) -> String {
    let mut parts = Vec::new();
    if !user.description.is_empty() {
        parts.push(format!("bio: {}", user.description));
    }
    for (kind, label) in [
        (TextKind::Post, "posts"),
        (TextKind::Retweet, "reposts"),
        (TextKind::Quote, "quotes"),
    ] {
        let texts: Vec<&str> = user.texts_of(kind).take(SUMMARY_TEXTS).collect();
        if !texts.is_empty() {
            parts.push(format!("{label}: {}", texts.join(" | ")));
        }
    }
    if parts.is_empty() {
        "no history".into()
    } else {
        parts.join("\n")
    }
}

fn user_request(kind: RequestKind, user: &UserRecord, communities: &[String]) -> EvaluationRequest {
    let join = |k: TextKind| {
        let texts: Vec<&str> = user.texts_of(k).collect();
        if texts.is_empty() {
            "(none)".to_string()
        } else {
            texts.join("\n")
        }
    };
    let mut req = EvaluationRequest::new(kind, Vec::new())
        .with_communities(communities)
        .with_context(ctx::USER_ID, user.user_id.as_str())
        .with_context(ctx::DESCRIPTION, user.description.as_str())
        .with_context(ctx::FOLLOWER_COUNT, user.follower_count.to_string())
        .with_context(ctx::FOLLOWING_COUNT, user.following_count.to_string())
        .with_context(ctx::POSTS, join(TextKind::Post))
        .with_context(ctx::RETWEETS, join(TextKind::Retweet))
        .with_context(ctx::QUOTES, join(TextKind::Quote));
    if let Some(home) = &user.home_community {
        req = req
            .with_context(ctx::HOME_COMMUNITY, home.as_str())
            .with_context(ctx::COMMUNITY, home.as_str());
    }
    req
}

fn scores_in_order(
    evaluator: &Evaluator,
    request: &EvaluationRequest,
    communities: &[String],
) -> Result<Vec<f64>, EvaluatorError> {
    let resp = evaluator.evaluate(request)?;
    communities.iter().map(|c| resp.score(c)).collect()
}

/// Applies `f` to every item with up to `workers` threads; results keep item
/// order and the first error by index wins.
fn ordered_map<T: Sync, R: Send, E: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> Result<R, E> + Sync,
) -> Result<Vec<R>, E> {
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let results: Vec<Vec<Result<R, E>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring worker panicked"))
            .collect()
    });
    results.into_iter().flatten().collect()
}

fn share_fit(scenario: &Scenario, warnings: &mut Vec<String>) -> (PowerLawFit, FitSource) {
    if let Some(o) = scenario.params.share_fit {
        return (
            PowerLawFit::new(o.alpha, o.lambda, o.x_min),
            FitSource::Override,
        );
    }
    let samples: Vec<u64> = scenario.users.iter().map(UserRecord::share_total).collect();
    match fit_truncated_power_law(&samples) {
        Ok(fit) => (fit, FitSource::Fitted),
        Err(e) => {
            let (a, l, x) = FALLBACK_SHARE_FIT;
            warnings.push(format!(
                "share-count fit failed ({e}); using alpha={a}, lambda={l}, x_min={x}"
            ));
            (PowerLawFit::new(a, l, x), FitSource::Fallback)
        }
    }
}

/// Builds every agent's attributes. Regular users cost two evaluator calls
/// each (interest and trust); bots are procedural.
pub fn derive_profiles(
    scenario: &Scenario,
    evaluator: &Evaluator,
) -> Result<Population, ProfileError> {
    let params = &scenario.params;
    let communities = &scenario.communities;
    let k = communities.len();
    let mut warnings = Vec::new();
    let (fit, fit_source) = share_fit(scenario, &mut warnings);

    let scored = ordered_map(&scenario.users, evaluator.max_in_flight(), |user| {
        let wrap = |source| ProfileError::Evaluator {
            user_id: user.user_id.clone(),
            source,
        };
        let interest = scores_in_order(
            evaluator,
            &user_request(RequestKind::InterestCommunity, user, communities),
            communities,
        )
        .map_err(wrap)?;
        let trust = scores_in_order(
            evaluator,
            &user_request(RequestKind::TrustThreshold, user, communities),
            communities,
        )
        .map_err(wrap)?;
        Ok((interest, trust))
    })?;

    let mut profiles: Vec<AgentProfile> = scenario
        .users
        .iter()
        .zip(scored)
        .map(|(user, (interest, trust))| AgentProfile {
            agent_id: user.user_id.clone(),
            kind: AgentKind::Regular,
            home_community: user
                .home_community
                .as_ref()
                .and_then(|h| communities.iter().position(|c| c == h)),
            follower_count: user.follower_count,
            share_total: user.share_total(),
            share_cdf: fit.cdf(user.share_total()),
            interest,
            trust,
            influence: vec![0.0; k],
            activation: normalize_histogram(&user.activity_histogram),
            history: history_summary(user),
        })
        .collect();

    let regular_membership = assign_communities(&profiles, params.tau, k);
    let mut rng = substream(params.rng_seed, &[purpose::PROFILES]);
    for (c, name) in communities.iter().enumerate() {
        let members = &regular_membership.members[c];
        if members.is_empty() {
            continue;
        }
        for (kind, ratio, prefix) in [
            (AgentKind::MaliciousBot, params.malicious_ratio, "mbot"),
            (AgentKind::LegitimateBot, params.legitimate_ratio, "lbot"),
        ] {
            let mut count = (ratio * members.len() as f64).round() as usize;
            if ratio > 0.0 {
                count = count.max(1);
            }
            for b in 0..count {
                let model = &profiles[members[rng.random_range(0..members.len())]];
                let (follower_count, share_total) = (model.follower_count, model.share_total);
                profiles.push(AgentProfile {
                    agent_id: format!("{prefix}-{name}-{b}"),
                    kind,
                    home_community: Some(c),
                    follower_count,
                    share_total,
                    share_cdf: 1.0,
                    interest: (0..k)
                        .map(|j| {
                            if j == c {
                                BOT_HOME_INTEREST
                            } else {
                                BOT_OTHER_INTEREST
                            }
                        })
                        .collect(),
                    trust: vec![1.0; k],
                    influence: vec![0.0; k],
                    activation: vec![0.0; ACTIVITY_BUCKETS],
                    history: format!("automated account in {name}"),
                });
            }
        }
    }

    let membership = assign_communities(&profiles, params.tau, k);
    for (c, members) in membership.members.iter().enumerate() {
        let followers: Vec<u64> = members
            .iter()
            .map(|&i| profiles[i].follower_count)
            .collect();
        let (si, uniform) = social_influence(&followers);
        if uniform {
            warnings.push(format!(
                "community `{}` has no followers; influence set uniform",
                communities[c]
            ));
        }
        for (&i, v) in members.iter().zip(si) {
            profiles[i].influence[c] = v;
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(Population {
        communities: communities.clone(),
        profiles,
        membership,
        share_fit: fit,
        share_fit_source: fit_source,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn regular(interest: Vec<f64>) -> AgentProfile {
        let k = interest.len();
        AgentProfile {
            agent_id: "u".into(),
            kind: AgentKind::Regular,
            home_community: None,
            follower_count: 10,
            share_total: 40,
            share_cdf: 0.8,
            interest,
            trust: vec![0.5; k],
            influence: vec![0.0; k],
            activation: vec![1.0 / 24.0; 24],
            history: String::new(),
        }
    }

    #[test]
    fn influence_examples() {
        let (si, flag) = social_influence(&[100, 300, 600]);
        assert!(!flag);
        assert!(
            (si[0] - 0.1).abs() < 1e-12
                && (si[1] - 0.3).abs() < 1e-12
                && (si[2] - 0.6).abs() < 1e-12
        );
        assert_eq!(social_influence(&[42]).0, vec![1.0]);
        assert_eq!(social_influence(&[0, 0]), (vec![0.5, 0.5], true));
    }

    #[test]
    fn histogram_normalization() {
        let mut hist = vec![0u64; 24];
        hist[0] = 2;
        hist[1] = 1;
        hist[2] = 1;
        let at = normalize_histogram(&hist);
        assert_eq!(&at[..4], &[0.5, 0.25, 0.25, 0.0]);
        assert!(normalize_histogram(&[0; 24]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn activation_follows_hour_of_day() {
        let mut p = regular(vec![9.0]);
        p.activation = vec![0.0; 24];
        p.activation[9] = 1.0;
        for t in 1..=72u32 {
            let expected = if (t - 1) % 24 == 9 { 1.0 } else { 0.0 };
            assert_eq!(activation_probability(&p, t, None), expected);
        }
        let uniform = regular(vec![9.0]);
        assert_eq!(activation_probability(&uniform, 5, None), 1.0 / 24.0);
    }

    #[test]
    fn bots_act_only_on_schedule() {
        let mut bot = regular(vec![10.0]);
        bot.kind = AgentKind::MaliciousBot;
        let schedule: BTreeSet<u32> = [3, 9].into();
        assert_eq!(activation_probability(&bot, 3, Some(&schedule)), 1.0);
        assert_eq!(activation_probability(&bot, 4, Some(&schedule)), 0.0);
        assert_eq!(
            bot.dissemination_tendency(0, &SimulationParams::default(), 50),
            1.0
        );
    }

    #[test]
    fn tendency_examples() {
        let params = SimulationParams::default();
        let p = regular(vec![9.0, 3.0]);
        assert!((p.dissemination_tendency(0, &params, 0) - 0.9).abs() < 1e-12);
        assert!(p.dissemination_tendency(0, &params, 200) < 1e-8);
        let interest_only = SimulationParams {
            theta: 0.0,
            ..params.clone()
        };
        let expected = (3.0 / 9.0) * (-0.1f64 * 4.0).exp();
        assert_eq!(p.dissemination_tendency(1, &interest_only, 4), expected);
    }

    proptest! {
        #[test]
        fn influence_sums_to_one(f in prop::collection::vec(0u64..1_000_000, 1..200)) {
            let (si, _) = social_influence(&f);
            let sum: f64 = si.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(si.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn tendency_monotone(ic_lo in 1.0..10.0f64, ic_hi in 1.0..10.0f64, n in 0u32..50) {
            let params = SimulationParams::default();
            let (lo, hi) = if ic_lo <= ic_hi { (ic_lo, ic_hi) } else { (ic_hi, ic_lo) };
            let a = regular(vec![lo, 10.0]);
            let b = regular(vec![hi, 10.0]);
            prop_assert!(a.dissemination_tendency(0, &params, n) <= b.dissemination_tendency(0, &params, n));
            prop_assert!(a.dissemination_tendency(0, &params, n + 1) <= a.dissemination_tendency(0, &params, n));
        }
    }
}
