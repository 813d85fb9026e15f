//! Run reports, CSV/JSON export and intervention comparisons.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{InterventionPlan, Strategy};
use crate::evaluator::ResourceLedger;

/// Tolerance used when re-validating ratio invariants on ingest.
const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("runs cannot be compared: {0}")]
    MismatchedRuns(String),
    #[error("community `{0}` is not in the report")]
    UnknownCommunity(String),
    #[error("report violates invariant: {0}")]
    InvalidReport(String),
    #[error("I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// State ratios and trust statistics at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPoint {
    pub step: u32,
    /// Never exposed to the disinformation.
    pub sr: f64,
    /// Exposed at least once.
    pub er: f64,
    /// Currently spreading while believing.
    pub ir: f64,
    /// Currently spreading while not believing.
    pub ur: f64,
    pub tt_mean: f64,
    /// Population standard deviation.
    pub tt_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySeries {
    pub community: String,
    pub points: Vec<StepPoint>,
}

/// Agent ids per state at the end of the run (regular agents only).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FinalStates {
    pub susceptible: Vec<String>,
    pub exposed: Vec<String>,
    pub infected_spreaders: Vec<String>,
    pub uninfected_spreaders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_digest: String,
    pub seed: u64,
    /// Community the disinformation is about.
    pub topic: String,
    pub plan: InterventionPlan,
    pub communities: Vec<String>,
    pub recorded_steps: Vec<u32>,
    pub series: Vec<CommunitySeries>,
    /// Ratios over all regular agents.
    pub overall: Vec<StepPoint>,
    /// Trust threshold per regular agent at each recorded step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<BTreeMap<String, Vec<f64>>>,
    pub final_states: FinalStates,
    /// Evaluator usage during this run.
    pub ledger: ResourceLedger,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

pub const CSV_HEADER: [&str; 8] = [
    "step",
    "community",
    "SR",
    "ER",
    "IR",
    "UR",
    "tt_mean",
    "tt_std",
];

impl RunReport {
    pub fn community_series(&self, community: &str) -> Result<&CommunitySeries, ReportError> {
        self.series
            .iter()
            .find(|s| s.community == community)
            .ok_or_else(|| ReportError::UnknownCommunity(community.to_string()))
    }

    pub fn final_overall(&self) -> Option<&StepPoint> {
        self.overall.last()
    }

    /// Checks the ratio invariants on every point.
    pub fn validate(&self) -> Result<(), ReportError> {
        let bad = |m: String| Err(ReportError::InvalidReport(m));
        let all = self
            .series
            .iter()
            .map(|s| (s.community.as_str(), &s.points))
            .chain(std::iter::once(("overall", &self.overall)));
        for (name, points) in all {
            let mut prev_er = 0.0;
            for p in points {
                let in_unit = [p.sr, p.er, p.ir, p.ur, p.tt_mean]
                    .iter()
                    .all(|v| (-RATIO_TOL..=1.0 + RATIO_TOL).contains(v));
                if !in_unit || p.tt_std < 0.0 {
                    return bad(format!("{name} step {}: value out of range", p.step));
                }
                if (p.sr + p.er - 1.0).abs() > RATIO_TOL {
                    return bad(format!("{name} step {}: SR + ER != 1", p.step));
                }
                if p.ir + p.ur > p.er + RATIO_TOL {
                    return bad(format!("{name} step {}: IR + UR > ER", p.step));
                }
                if p.er + RATIO_TOL < prev_er {
                    return bad(format!("{name} step {}: ER decreased", p.step));
                }
                prev_er = p.er;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let report: RunReport = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    /// Long-format CSV, one row per (community, recorded step).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for s in &self.series {
            for p in &s.points {
                w.write_record([
                    p.step.to_string(),
                    s.community.clone(),
                    p.sr.to_string(),
                    p.er.to_string(),
                    p.ir.to_string(),
                    p.ur.to_string(),
                    p.tt_mean.to_string(),
                    p.tt_std.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Writes `report.json` or CSV to `path` depending on `format`.
    pub fn export(&self, format: ExportFormat, path: &Path) -> Result<(), ReportError> {
        let body = match format {
            ExportFormat::Json => self.to_json(),
            ExportFormat::Csv => self.to_csv(),
        };
        std::fs::write(path, body).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

/// Parses CSV produced by [`RunReport::to_csv`] into per-community series.
pub fn series_from_csv(text: &str) -> Result<Vec<CommunitySeries>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(ReportError::InvalidReport(format!(
            "unexpected header {header:?}"
        )));
    }
    let mut out: Vec<CommunitySeries> = Vec::new();
    for row in r.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64, ReportError> {
            row[i]
                .parse()
                .map_err(|_| ReportError::InvalidReport(format!("bad number `{}`", &row[i])))
        };
        let point = StepPoint {
            step: row[0]
                .parse()
                .map_err(|_| ReportError::InvalidReport(format!("bad step `{}`", &row[0])))?,
            sr: num(2)?,
            er: num(3)?,
            ir: num(4)?,
            ur: num(5)?,
            tt_mean: num(6)?,
            tt_std: num(7)?,
        };
        match out.iter_mut().find(|s| s.community == row[1]) {
            Some(s) => s.points.push(point),
            None => out.push(CommunitySeries {
                community: row[1].to_string(),
                points: vec![point],
            }),
        }
    }
    Ok(out)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `(step, mean, std)` of the trust threshold for one community.
pub fn trust_trajectory_stats(
    report: &RunReport,
    community: &str,
) -> Result<Vec<(u32, f64, f64)>, ReportError> {
    Ok(report
        .community_series(community)?
        .points
        .iter()
        .map(|p| (p.step, p.tt_mean, p.tt_std))
        .collect())
}

/// Differences of one run against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDelta {
    pub label: String,
    pub strategy: Strategy,
    /// Per community: IR(run) - IR(baseline) at each recorded step.
    pub delta_ir: BTreeMap<String, Vec<f64>>,
    pub final_delta_ir: BTreeMap<String, f64>,
    pub peak_delta_ir: BTreeMap<String, f64>,
    /// Per community: final trust mean difference.
    pub final_delta_tt_mean: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario_digest: String,
    pub seed: u64,
    pub topic: String,
    pub baseline: String,
    pub recorded_steps: Vec<u32>,
    pub runs: Vec<RunDelta>,
}

fn check_pair(a: &RunReport, b: &RunReport) -> Result<(), ReportError> {
    if a.scenario_digest != b.scenario_digest {
        return Err(ReportError::MismatchedRuns(
            "scenario digests differ".into(),
        ));
    }
    if a.seed != b.seed {
        return Err(ReportError::MismatchedRuns(format!(
            "seeds {} and {}",
            a.seed, b.seed
        )));
    }
    if a.topic != b.topic {
        return Err(ReportError::MismatchedRuns("topics differ".into()));
    }
    if a.recorded_steps != b.recorded_steps {
        return Err(ReportError::MismatchedRuns("recorded steps differ".into()));
    }
    Ok(())
}

/// Differences of `run` against `baseline`, community by community.
pub fn compare_pair(baseline: &RunReport, run: &RunReport) -> Result<RunDelta, ReportError> {
    check_pair(baseline, run)?;
    let mut delta = RunDelta {
        label: run.plan.label(),
        strategy: run.plan.strategy,
        delta_ir: BTreeMap::new(),
        final_delta_ir: BTreeMap::new(),
        peak_delta_ir: BTreeMap::new(),
        final_delta_tt_mean: BTreeMap::new(),
    };
    for s in &run.series {
        let base = baseline.community_series(&s.community)?;
        let d: Vec<f64> = s
            .points
            .iter()
            .zip(&base.points)
            .map(|(p, q)| p.ir - q.ir)
            .collect();
        let peak = |pts: &[StepPoint]| pts.iter().map(|p| p.ir).fold(0.0, f64::max);
        delta
            .peak_delta_ir
            .insert(s.community.clone(), peak(&s.points) - peak(&base.points));
        delta
            .final_delta_ir
            .insert(s.community.clone(), d.last().copied().unwrap_or(0.0));
        let last_tt = |pts: &[StepPoint]| pts.last().map_or(0.0, |p| p.tt_mean);
        delta.final_delta_tt_mean.insert(
            s.community.clone(),
            last_tt(&s.points) - last_tt(&base.points),
        );
        delta.delta_ir.insert(s.community.clone(), d);
    }
    Ok(delta)
}

/// Compares every run against the first control run (or the first run if
/// there is no control). Needs at least two runs on the same scenario and
/// seed.
pub fn compare_interventions(reports: &[RunReport]) -> Result<ComparisonReport, ReportError> {
    if reports.len() < 2 {
        return Err(ReportError::MismatchedRuns("need at least two runs".into()));
    }
    let base_idx = reports
        .iter()
        .position(|r| r.plan.is_control())
        .unwrap_or(0);
    let baseline = &reports[base_idx];
    let runs = reports
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != base_idx)
        .map(|(_, r)| compare_pair(baseline, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonReport {
        scenario_digest: baseline.scenario_digest.clone(),
        seed: baseline.seed,
        topic: baseline.topic.clone(),
        baseline: baseline.plan.label(),
        recorded_steps: baseline.recorded_steps.clone(),
        runs,
    })
}
