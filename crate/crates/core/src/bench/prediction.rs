use rayon::prelude::*;

use super::config::{BenchConfig, ScenarioData};
use super::stats::mean_std;
use crate::dynamics::{ground_truth_ltv, ScenarioKind};
use crate::error::Result;
use crate::ident::{per_trajectory_losses, tune, tvera_fit, LtvModel, Method};

/// Methods compared in the prediction table, in column order.
pub const PREDICTION_METHODS: [Method; 6] = [
    Method::Tvera,
    Method::LtvModels,
    Method::CosmicSingle,
    Method::Cosmic,
    Method::PerStep,
    Method::Linearization,
];

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub scenario: ScenarioKind,
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    /// Selected smoothing weight, for regularized methods.
    pub lambda: Option<f64>,
    pub trajectories: usize,
    /// Failure of this cell, if any.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionReport {
    pub rows: Vec<PredictionRow>,
}

impl PredictionReport {
    pub fn get(&self, scenario: ScenarioKind, method: Method) -> Option<&PredictionRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.method == method)
    }
}

/// A fitted model for one (scenario, method) cell.
pub struct FittedCell {
    pub method: Method,
    pub model: Result<LtvModel<f64>>,
    pub lambda: Option<f64>,
}

/// Fits `method` the way the benchmark does: tuned on validation when
/// regularized, TVERA on its own experiments, the linearization from the scenario.
pub fn fit_cell(cfg: &BenchConfig, data: &ScenarioData, method: Method) -> FittedCell {
    let (model, lambda) = match method {
        Method::Linearization => (ground_truth_ltv::<f64>(&data.spec), None),
        Method::Tvera => (data.tvera_experiments(cfg).and_then(|e| tvera_fit(&e, &cfg.tvera)), None),
        m if m.is_regularized() => match tune(m, &cfg.lambda_grid, &data.splits.train, &data.splits.validation) {
            Ok((lambda, model, _)) => (Ok(model), Some(lambda)),
            Err(e) => (Err(e), None),
        },
        m => (crate::ident::fit_method(m, 1.0, &data.splits.train), None),
    };
    FittedCell { method, model, lambda }
}

pub(crate) fn evaluate_cell(data: &ScenarioData, cell: &FittedCell) -> PredictionRow {
    let test = &data.splits.test.trajectories;
    let losses = cell
        .model
        .as_ref()
        .map_err(|e| e.to_string())
        .and_then(|m| per_trajectory_losses(m, test).map_err(|e| e.to_string()));
    let (mean, std, error) = match losses {
        Ok(l) => {
            let (m, s) = mean_std(&l);
            (m, s, None)
        }
        Err(e) => (f64::NAN, f64::NAN, Some(e)),
    };
    PredictionRow {
        scenario: data.spec.kind,
        method: cell.method,
        mean,
        std,
        lambda: cell.lambda,
        trajectories: test.len(),
        error,
    }
}

/// Fits every method on every configured scenario and scores it on the test split.
pub fn run_prediction_benchmark(cfg: &BenchConfig) -> Result<PredictionReport> {
    Ok(PredictionReport {
        rows: prediction_cells(cfg)?
            .into_iter()
            .flat_map(|(data, cells)| cells.iter().map(|c| evaluate_cell(&data, c)).collect::<Vec<_>>())
            .collect(),
    })
}

/// Data and fitted models per scenario, in configuration order.
pub fn prediction_cells(cfg: &BenchConfig) -> Result<Vec<(ScenarioData, Vec<FittedCell>)>> {
    cfg.validate()?;
    cfg.scenarios
        .par_iter()
        .map(|&kind| {
            let data = ScenarioData::build(cfg, kind)?;
            let cells = PREDICTION_METHODS
                .par_iter()
                .map(|&m| fit_cell(cfg, &data, m))
                .collect();
            Ok((data, cells))
        })
        .collect()
}
