//! `madd` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input (arguments, scenario, plan),
//! 2 runtime failure (I/O, evaluator, incomplete run). Every file written
//! under `--out` is listed, with its SHA-256, in `manifest.json`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::attributes::derive_profiles;
use crate::config::{load_scenario, Scenario, SimulationParams};
use crate::content::{InterventionPlan, Stage, Strategy};
use crate::engine::{default_topic, run_with_progress, RunOptions};
use crate::evaluator::{Evaluator, EvaluatorConfig, RemoteConfig};
use crate::network::{
    build_network, community_overlap_matrix, degree_distribution, edge_densities,
};
use crate::report::{compare_interventions, RunReport};
use crate::rng::sha256_hex;
use crate::synth::{generate, SynthConfig};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "madd",
    version,
    about = "Multi-agent disinformation dissemination simulator"
)]
pub struct Cli {
    /// Print the default simulation parameters as JSON and exit.
    #[arg(long)]
    pub print_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file.
    Validate(ScenarioArgs),
    /// Derive agent profiles and write them to `profiles.json`.
    Profiles(ScenarioArgs),
    /// Build the propagation network and write it with summary statistics.
    Network(ScenarioArgs),
    /// Run one simulation.
    Run(RunArgs),
    /// Run control plus corrective strategies at one stage and compare them.
    Experiment(ExperimentArgs),
    /// Print the default simulation parameters.
    Defaults,
    /// Write a synthetic scenario.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Synthetic,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    Control,
    Early,
    Mid,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Fact,
    Narrative,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    /// Chat-completion endpoint for the remote backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    #[arg(long, value_enum, default_value = "control")]
    pub stage: StageArg,
    /// Required unless the stage is `control`; `both` is not allowed here.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Topic community; defaults to the first with a disinformation item.
    #[arg(long)]
    pub topic: Option<String>,
    #[arg(long)]
    pub record_cadence: Option<u32>,
    /// Include per-agent trust trajectories in the report.
    #[arg(long)]
    pub trajectories: bool,
    #[arg(long)]
    pub dump_profiles: bool,
    #[arg(long)]
    pub dump_network: bool,
    /// Suppress progress lines on stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    #[arg(long, value_enum)]
    pub stage: StageArg,
    #[arg(long, value_enum, default_value = "both")]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub topic: Option<String>,
    #[arg(long)]
    pub record_cadence: Option<u32>,
    #[arg(long)]
    pub dump_profiles: bool,
    #[arg(long)]
    pub dump_network: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Six communities, 689 users.
    Six,
    /// Three communities of 40 users.
    Demo,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "demo")]
    pub preset: Preset,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_validation() { 1 } else { 2 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

macro_rules! from_lib_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

from_lib_error!(
    crate::config::ScenarioError,
    crate::network::NetworkError,
    crate::content::ContentError,
    crate::evaluator::EvaluatorError,
    crate::attributes::ProfileError,
    crate::engine::EngineError,
    crate::report::ReportError
);

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

/// Collects the files written to an output directory.
struct OutDir {
    root: PathBuf,
    files: BTreeMap<String, ManifestEntry>,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    fn write(&mut self, rel: &str, body: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::runtime(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
        std::fs::write(&path, body)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.insert(
            rel.to_string(),
            ManifestEntry {
                path: rel.to_string(),
                bytes: body.len() as u64,
                sha256: sha256_hex(body),
            },
        );
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::runtime(format!("cannot serialize {rel}: {e}")))?;
        body.push(b'\n');
        self.write(rel, &body)
    }

    fn finish(self, command: &str, scenario: &Scenario) -> Result<(), CliError> {
        let manifest = json!({
            "command": command,
            "scenario_digest": scenario.digest(),
            "seed": scenario.params.rng_seed,
            "files": self.files.values().collect::<Vec<_>>(),
        });
        let mut body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        body.push(b'\n');
        let path = self.root.join("manifest.json");
        std::fs::write(&path, body)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
    }
}

fn load(args: &ScenarioArgs) -> Result<(Scenario, Evaluator), CliError> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario = scenario.with_seed(seed);
    }
    match args.backend {
        Some(Backend::Synthetic) => {
            if !matches!(scenario.evaluator, EvaluatorConfig::Synthetic(_)) {
                scenario.evaluator = EvaluatorConfig::default();
            }
        }
        Some(Backend::Remote) => {
            let mut cfg = match &scenario.evaluator {
                EvaluatorConfig::Remote(cfg) => cfg.clone(),
                EvaluatorConfig::Synthetic(_) => RemoteConfig::new("", ""),
            };
            if let Some(e) = &args.endpoint {
                cfg.endpoint = e.clone();
            }
            if let Some(m) = &args.model {
                cfg.model = m.clone();
            }
            if cfg.endpoint.is_empty() || cfg.model.is_empty() {
                return Err(CliError::invalid(
                    "remote backend needs --endpoint and --model (or a remote evaluator in the scenario)",
                ));
            }
            scenario.evaluator = EvaluatorConfig::Remote(cfg);
        }
        None => {}
    }
    let evaluator = Evaluator::from_config(&scenario.evaluator, scenario.params.rng_seed)?;
    Ok((scenario, evaluator))
}

fn plans(
    stage: StageArg,
    strategy: Option<StrategyArg>,
    params: &SimulationParams,
) -> Result<Vec<InterventionPlan>, CliError> {
    let stage = match stage {
        StageArg::Control => {
            if strategy.is_some() {
                return Err(CliError::invalid(
                    "--strategy does not apply to the control stage",
                ));
            }
            return Ok(vec![InterventionPlan::control()]);
        }
        StageArg::Early => Stage::Early,
        StageArg::Mid => Stage::Mid,
        StageArg::Late => Stage::Late,
    };
    let strategies = match strategy {
        None => {
            return Err(CliError::invalid(format!(
                "--strategy is required for the {stage} stage"
            )))
        }
        Some(StrategyArg::Fact) => vec![Strategy::FactBased],
        Some(StrategyArg::Narrative) => vec![Strategy::NarrativeBased],
        Some(StrategyArg::Both) => vec![Strategy::FactBased, Strategy::NarrativeBased],
    };
    strategies
        .into_iter()
        .map(|s| InterventionPlan::new(stage, s, params).map_err(CliError::from))
        .collect()
}

fn network_summary(
    net: &crate::network::PropagationNetwork,
    communities: &[String],
) -> serde_json::Value {
    let degrees = degree_distribution(net, 1);
    json!({
        "nodes": net.n_nodes(),
        "edges": net.n_edges(),
        "degree": degrees,
        "densities": edge_densities(net),
        "overlap": community_overlap_matrix(&net.membership),
        "communities": communities,
    })
}

fn emit(line: serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn cmd_validate(args: &ScenarioArgs) -> Result<(), CliError> {
    let (scenario, _) = load(args)?;
    println!(
        "OK: {} users, {} communities, {} content items, digest {}",
        scenario.n_users(),
        scenario.n_communities(),
        scenario.content.len(),
        scenario.digest()
    );
    Ok(())
}

fn cmd_profiles(args: &ScenarioArgs) -> Result<(), CliError> {
    let (scenario, evaluator) = load(args)?;
    let population = derive_profiles(&scenario, &evaluator)?;
    let mut out = OutDir::create(&args.out)?;
    out.write_json("profiles.json", &population)?;
    out.write_json("ledger.json", &evaluator.ledger_snapshot())?;
    out.finish("profiles", &scenario)
}

fn cmd_network(args: &ScenarioArgs) -> Result<(), CliError> {
    let (scenario, evaluator) = load(args)?;
    let population = derive_profiles(&scenario, &evaluator)?;
    let net = build_network(
        &population.profiles,
        &population.membership,
        &scenario.params,
        scenario.params.rng_seed,
    )?;
    let mut out = OutDir::create(&args.out)?;
    out.write_json("network.json", &net.to_json(&population.communities))?;
    out.write("edges.tsv", net.edge_list().as_bytes())?;
    out.write_json(
        "network_stats.json",
        &network_summary(&net, &population.communities),
    )?;
    out.finish("network", &scenario)
}

struct Prepared {
    scenario: Scenario,
    evaluator: Evaluator,
    population: crate::attributes::Population,
    network: crate::network::PropagationNetwork,
}

fn prepare(args: &ScenarioArgs, topic: &Option<String>) -> Result<Prepared, CliError> {
    let (scenario, evaluator) = load(args)?;
    if let Some(t) = topic {
        if scenario.community_index(t).is_none() {
            return Err(CliError::invalid(format!("unknown topic community `{t}`")));
        }
    } else if default_topic(&scenario).is_none() {
        return Err(CliError::invalid("scenario has no disinformation item"));
    }
    let population = derive_profiles(&scenario, &evaluator)?;
    let network = build_network(
        &population.profiles,
        &population.membership,
        &scenario.params,
        scenario.params.rng_seed,
    )?;
    Ok(Prepared {
        scenario,
        evaluator,
        population,
        network,
    })
}

fn write_dumps(
    out: &mut OutDir,
    p: &Prepared,
    profiles: bool,
    network: bool,
) -> Result<(), CliError> {
    if profiles {
        out.write_json("profiles.json", &p.population)?;
    }
    if network {
        out.write_json(
            "network.json",
            &p.network.to_json(&p.population.communities),
        )?;
        out.write("edges.tsv", p.network.edge_list().as_bytes())?;
    }
    Ok(())
}

fn write_report(out: &mut OutDir, dir: &str, report: &RunReport) -> Result<(), CliError> {
    let prefix = if dir.is_empty() {
        String::new()
    } else {
        format!("{dir}/")
    };
    let mut json = report.to_json().into_bytes();
    json.push(b'\n');
    out.write(&format!("{prefix}report.json"), &json)?;
    out.write(&format!("{prefix}report.csv"), report.to_csv().as_bytes())
}

fn incomplete(report: &RunReport) -> Option<CliError> {
    report
        .failure
        .as_ref()
        .map(|f| CliError::runtime(format!("run `{}` incomplete: {f}", report.plan.label())))
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let plans = plans(args.stage, args.strategy, &SimulationParams::default())?;
    if plans.len() != 1 {
        return Err(CliError::invalid(
            "`run` takes a single strategy; use `experiment` for both",
        ));
    }
    let p = prepare(&args.common, &args.topic)?;
    let plan = match args.stage {
        StageArg::Control => InterventionPlan::control(),
        _ => InterventionPlan::new(plans[0].stage, plans[0].strategy, &p.scenario.params)?,
    };
    let options = RunOptions {
        topic: args.topic.clone(),
        record_trajectories: args.trajectories,
        record_cadence: args.record_cadence,
        schedules: None,
    };
    let label = plan.label();
    let quiet = args.quiet;
    let report = run_with_progress(
        &p.scenario,
        &p.population,
        &p.network,
        plan,
        &p.evaluator,
        options,
        &mut |pt| {
            if !quiet {
                emit(json!({"event": "step", "run": label, "point": pt}));
            }
        },
    )?;
    let mut out = OutDir::create(&args.common.out)?;
    write_dumps(&mut out, &p, args.dump_profiles, args.dump_network)?;
    write_report(&mut out, "", &report)?;
    out.finish("run", &p.scenario)?;
    if let Some(e) = incomplete(&report) {
        return Err(e);
    }
    if !quiet {
        let last = report.final_overall().copied();
        emit(json!({"event": "done", "run": report.plan.label(), "final": last}));
    }
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    if args.stage == StageArg::Control {
        return Err(CliError::invalid(
            "experiment needs an early, mid or late stage",
        ));
    }
    let p = prepare(&args.common, &args.topic)?;
    let mut all = vec![InterventionPlan::control()];
    all.extend(plans(args.stage, Some(args.strategy), &p.scenario.params)?);
    let options = RunOptions {
        topic: args.topic.clone(),
        record_trajectories: false,
        record_cadence: args.record_cadence,
        schedules: None,
    };
    // Runs are independent; each gets its own evaluator so ledgers stay apart.
    let results: Vec<Result<RunReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = all
            .iter()
            .map(|&plan| {
                let options = options.clone();
                let p = &p;
                scope.spawn(move || -> Result<RunReport, CliError> {
                    let evaluator =
                        Evaluator::from_config(&p.scenario.evaluator, p.scenario.params.rng_seed)?;
                    Ok(run_with_progress(
                        &p.scenario,
                        &p.population,
                        &p.network,
                        plan,
                        &evaluator,
                        options,
                        &mut |_| {},
                    )?)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::runtime("run thread panicked")))
            })
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let comparison = compare_interventions(&reports)?;
    let mut out = OutDir::create(&args.common.out)?;
    write_dumps(&mut out, &p, args.dump_profiles, args.dump_network)?;
    for r in &reports {
        write_report(&mut out, &r.plan.label(), r)?;
        emit(json!({"event": "done", "run": r.plan.label(), "final": r.final_overall()}));
    }
    out.write_json("comparison.json", &comparison)?;
    out.finish("experiment", &p.scenario)?;
    match reports.iter().find_map(incomplete) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = match args.preset {
        Preset::Six => SynthConfig::six_communities(args.seed),
        Preset::Demo => SynthConfig::uniform(3, 40, args.seed),
    };
    let mut body = generate(&cfg).to_json().into_bytes();
    body.push(b'\n');
    match &args.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&body)
            .map_err(|e| CliError::runtime(e.to_string())),
    }
}

fn print_defaults() {
    let body =
        serde_json::to_string_pretty(&SimulationParams::default()).expect("defaults serialize");
    let _ = writeln!(std::io::stdout().lock(), "{body}");
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.print_defaults {
        print_defaults();
        return Ok(());
    }
    match &cli.command {
        None => Err(CliError::invalid("no command given; see --help")),
        Some(Command::Defaults) => {
            print_defaults();
            Ok(())
        }
        Some(Command::Validate(a)) => cmd_validate(a),
        Some(Command::Profiles(a)) => cmd_profiles(a),
        Some(Command::Network(a)) => cmd_network(a),
        Some(Command::Run(a)) => cmd_run(a),
        Some(Command::Experiment(a)) => cmd_experiment(a),
        Some(Command::Synth(a)) => cmd_synth(a),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
