use rayon::prelude::*;

use super::config::{BenchConfig, ScenarioData};
use super::stats::mean_std;
use crate::control::{closed_loop, tracking_controller, tracking_errors};
use crate::dynamics::{ground_truth_ltv, ScenarioKind, StateVec};
use crate::error::{Error, Result};
use crate::ident::{lti_model, tune, LtvModel, Method};
use crate::rng::derive_seed;

/// Controllers compared in the tracking table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Controller {
    Cosmic,
    Linearization,
    TimeInvariant,
}

impl Controller {
    pub const ALL: [Controller; 3] = [Controller::Cosmic, Controller::Linearization, Controller::TimeInvariant];

    pub fn name(self) -> &'static str {
        match self {
            Controller::Cosmic => "cosmic",
            Controller::Linearization => "linearization",
            Controller::TimeInvariant => "time-invariant",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingRow {
    pub scenario: ScenarioKind,
    pub controller: Controller,
    /// Over absolute position errors pooled across successful runs.
    pub mean: f64,
    pub std: f64,
    /// Per run `sqrt(sum_k e(k)^2) / N`, averaged over successful runs.
    pub rmse: f64,
    pub runs: usize,
    /// Runs that diverged or failed, with reasons.
    pub failures: Vec<String>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingReport {
    pub rows: Vec<TrackingRow>,
}

impl TrackingReport {
    pub fn get(&self, scenario: ScenarioKind, controller: Controller) -> Option<&TrackingRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.controller == controller)
    }
}

/// Per-run tracking RMSE column value.
pub fn run_rmse(errors: &[f64]) -> f64 {
    let n = errors.len().saturating_sub(1).max(1) as f64;
    errors.iter().map(|e| e * e).sum::<f64>().sqrt() / n
}

/// Closed-loop statistics of the controller designed on `model`.
pub fn evaluate_controller(
    cfg: &BenchConfig,
    data: &ScenarioData,
    controller: Controller,
    model: Result<LtvModel<f64>>,
    lambda: Option<f64>,
) -> TrackingRow {
    let spec = &data.spec;
    let reference = cfg.reference(spec.horizon);
    let mut row = TrackingRow {
        scenario: spec.kind,
        controller,
        mean: f64::NAN,
        std: f64::NAN,
        rmse: f64::NAN,
        runs: cfg.initial_conditions.len(),
        failures: Vec::new(),
        lambda,
    };
    let sched = match model.and_then(|m| tracking_controller(&m, &cfg.weights(), &reference)) {
        Ok(s) => s,
        Err(e) => {
            row.failures.push(format!("synthesis: {e}"));
            return row;
        }
    };
    let mut pooled = Vec::new();
    let mut rmses = Vec::new();
    for (i, x0) in cfg.initial_conditions.iter().enumerate() {
        // common random numbers: every controller sees the same plant noise
        let seed = derive_seed(cfg.scenario_seed(spec.kind, "control"), "run", i as u64);
        match closed_loop(spec, &sched, &reference, StateVec::new(x0[0], x0[1]), seed) {
            Ok(traj) => {
                let errs = tracking_errors(&traj, &reference);
                rmses.push(run_rmse(&errs));
                pooled.extend(errs);
            }
            Err(e) => row.failures.push(format!("run {i}: {e}")),
        }
    }
    if !pooled.is_empty() {
        let (mean, std) = mean_std(&pooled);
        row.mean = mean;
        row.std = std;
        row.rmse = mean_std(&rmses).0;
    }
    row
}

pub(crate) fn tuned_cosmic(cfg: &BenchConfig, data: &ScenarioData) -> (Result<LtvModel<f64>>, Option<f64>) {
    match tune(Method::Cosmic, &cfg.lambda_grid, &data.splits.train, &data.splits.validation) {
        Ok((lambda, model, _)) => (Ok(model), Some(lambda)),
        Err(e) => (Err(e), None),
    }
}

fn scenario_rows(cfg: &BenchConfig, data: &ScenarioData) -> Vec<TrackingRow> {
    Controller::ALL
        .par_iter()
        .map(|&c| {
            let (model, lambda) = match c {
                Controller::Cosmic => tuned_cosmic(cfg, data),
                Controller::Linearization => (ground_truth_ltv(&data.spec), None),
                Controller::TimeInvariant => (lti_model(&data.splits.train), None),
            };
            evaluate_controller(cfg, data, c, model, lambda)
        })
        .collect()
}

/// Tracking statistics for every scenario and controller.
pub fn run_control_benchmark(cfg: &BenchConfig) -> Result<TrackingReport> {
    cfg.validate()?;
    let rows: Vec<Vec<TrackingRow>> = cfg
        .scenarios
        .par_iter()
        .map(|&kind| Ok::<_, Error>(scenario_rows(cfg, &ScenarioData::build(cfg, kind)?)))
        .collect::<Result<_>>()?;
    Ok(TrackingReport {
        rows: rows.into_iter().flatten().collect(),
    })
}
