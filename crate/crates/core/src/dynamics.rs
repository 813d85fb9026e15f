//! Individual-level quantities: trust-threshold updates from correction and
//! disinformation exposure, discernment ability, belief realization and the
//! dissemination tendency.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Inputs to one trust-threshold update. Neighbor lists hold
/// `(social influence of sender, persuasiveness of its message)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustUpdateInputs {
    pub current_tt: f64,
    pub corr_neighbors: Vec<(f64, f64)>,
    pub dis_neighbors: Vec<(f64, f64)>,
    pub gamma: f64,
    pub beta: f64,
    pub delta: f64,
}

fn weighted_sum(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|&(si, f)| si * f).sum()
}

/// Enhancement from corrective exposure with weighted sum `s`.
pub fn enhancement(gamma: f64, beta: f64, s: f64) -> f64 {
    gamma * -(-beta * s).exp_m1()
}

/// Decay from disinformation exposure with weighted sum `s`.
pub fn decay(gamma: f64, delta: f64, s: f64) -> f64 {
    (1.0 - gamma) * -(-delta * s).exp_m1()
}

/// Trust update from pre-aggregated weighted sums.
pub fn update_trust_from_sums(
    tt: f64,
    corr_sum: f64,
    dis_sum: f64,
    gamma: f64,
    beta: f64,
    delta: f64,
) -> f64 {
    (tt + enhancement(gamma, beta, corr_sum) - decay(gamma, delta, dis_sum)).clamp(0.0, 1.0)
}

/// Updated trust threshold, clipped to [0, 1].
pub fn update_trust(inputs: &TrustUpdateInputs) -> f64 {
    update_trust_from_sums(
        inputs.current_tt,
        weighted_sum(&inputs.corr_neighbors),
        weighted_sum(&inputs.dis_neighbors),
        inputs.gamma,
        inputs.beta,
        inputs.delta,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscernmentInputs {
    pub updated_tt: f64,
    pub plausibility: f64,
}

/// Probability of recognising the item as disinformation.
pub fn discernment_ability(updated_tt: f64, plausibility: f64) -> f64 {
    1.0 - (1.0 - updated_tt) * plausibility
}

pub fn discernment(inputs: &DiscernmentInputs) -> f64 {
    discernment_ability(inputs.updated_tt, inputs.plausibility)
}

/// Draws belief: true with probability `1 - da`.
pub fn believe_disinformation<R: Rng + ?Sized>(da: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < 1.0 - da
}

/// Sharing tendency of a regular user for one community, before and after
/// `n` repeated exposures. `share_cdf` is the fitted share-count CDF at the
/// user's share total; `ic_max` is the user's largest interest score.
pub fn dissemination_tendency(
    theta: f64,
    share_cdf: f64,
    ic: f64,
    ic_max: f64,
    xi: f64,
    n: u32,
) -> f64 {
    let interest = if ic_max > 0.0 { ic / ic_max } else { 0.0 };
    ((theta * share_cdf + (1.0 - theta) * interest) * (-xi * f64::from(n)).exp()).clamp(0.0, 1.0)
}
