//! Python bindings. Scenarios and reports cross the boundary as JSON strings.

use std::path::Path;

use madd_core::config::parse_scenario;
use madd_core::content::{InterventionPlan, Stage, Strategy};
use madd_core::synth::{generate, SynthConfig};
use madd_core::{
    build_network, derive_profiles, Error, Evaluator, RunOptions, Scenario, SimulationParams,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse(scenario_json: &str, seed: Option<u64>) -> PyResult<Scenario> {
    let s =
        parse_scenario(scenario_json.as_bytes(), Path::new(".")).map_err(|e| to_py(e.into()))?;
    Ok(match seed {
        Some(seed) => s.with_seed(seed),
        None => s,
    })
}

/// Default simulation parameters as JSON.
#[pyfunction]
fn default_params() -> String {
    serde_json::to_string(&SimulationParams::default()).expect("defaults serialize")
}

/// Synthetic scenario JSON; `preset` is "demo" or "six".
#[pyfunction]
#[pyo3(signature = (preset = "demo", seed = 42))]
fn synth_scenario(preset: &str, seed: u64) -> PyResult<String> {
    let cfg = match preset {
        "demo" => SynthConfig::uniform(3, 40, seed),
        "six" => SynthConfig::six_communities(seed),
        other => return Err(PyValueError::new_err(format!("unknown preset `{other}`"))),
    };
    Ok(generate(&cfg).to_json())
}

/// Validates a scenario and returns its digest.
#[pyfunction]
fn validate(scenario_json: &str) -> PyResult<String> {
    Ok(parse(scenario_json, None)?.digest())
}

/// Runs one simulation and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (scenario_json, stage = "control", strategy = None, seed = None, topic = None))]
fn run(
    scenario_json: &str,
    stage: &str,
    strategy: Option<&str>,
    seed: Option<u64>,
    topic: Option<String>,
) -> PyResult<String> {
    let scenario = parse(scenario_json, seed)?;
    let stage: Stage = stage.parse().map_err(PyValueError::new_err)?;
    let plan = if stage == Stage::Control {
        InterventionPlan::control()
    } else {
        let strategy: Strategy = strategy
            .ok_or_else(|| PyValueError::new_err("strategy is required for an intervention stage"))?
            .parse()
            .map_err(PyValueError::new_err)?;
        InterventionPlan::new(stage, strategy, &scenario.params).map_err(|e| to_py(e.into()))?
    };
    let seed = scenario.params.rng_seed;
    let evaluator =
        Evaluator::from_config(&scenario.evaluator, seed).map_err(|e| to_py(e.into()))?;
    let population = derive_profiles(&scenario, &evaluator).map_err(|e| to_py(e.into()))?;
    let network = build_network(
        &population.profiles,
        &population.membership,
        &scenario.params,
        seed,
    )
    .map_err(|e| to_py(e.into()))?;
    let options = RunOptions {
        topic,
        ..RunOptions::default()
    };
    let report = madd_core::run(&scenario, &population, &network, plan, &evaluator, options)
        .map_err(|e| to_py(e.into()))?;
    Ok(report.to_json())
}

#[pymodule]
fn madd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_params, m)?)?;
    m.add_function(wrap_pyfunction!(synth_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
