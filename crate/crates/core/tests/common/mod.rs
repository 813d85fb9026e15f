#![allow(dead_code)]

use madd_core::synth::{generate, SynthConfig};
use madd_core::{
    build_network, derive_profiles, Evaluator, Population, PropagationNetwork, Scenario,
};

pub struct World {
    pub scenario: Scenario,
    pub population: Population,
    pub network: PropagationNetwork,
    pub evaluator: Evaluator,
}

pub fn world(cfg: &SynthConfig) -> World {
    let scenario = generate(cfg);
    let evaluator = Evaluator::synthetic(scenario.params.rng_seed);
    world_with(scenario, evaluator)
}

pub fn world_with(scenario: Scenario, evaluator: Evaluator) -> World {
    let population = derive_profiles(&scenario, &evaluator).expect("profiles");
    let network = build_network(
        &population.profiles,
        &population.membership,
        &scenario.params,
        scenario.params.rng_seed,
    )
    .expect("network");
    World {
        scenario,
        population,
        network,
        evaluator,
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
