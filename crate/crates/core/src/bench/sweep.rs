use rayon::prelude::*;

use super::config::{BenchConfig, ScenarioData};
use super::tracking::{evaluate_controller, Controller};
use crate::dynamics::ScenarioKind;
use crate::error::Result;
use crate::ident::{cosmic_fit, cosmic_objective, trajectory_prediction_loss, CosmicConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub fidelity: f64,
    pub smoothness: f64,
    /// Unweighted sum of squared step-to-step changes.
    pub variation: f64,
    pub validation_loss: f64,
    pub tracking_mean: f64,
    pub tracking_rmse: f64,
    pub error: Option<String>,
}

/// COSMIC fitted at each `lambda`: objective terms, validation loss and closed-loop tracking.
pub fn lambda_sweep(cfg: &BenchConfig, scenario: ScenarioKind, grid: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let data = ScenarioData::build(cfg, scenario)?;
    Ok(grid
        .par_iter()
        .map(|&lambda| {
            let mut row = SweepRow {
                lambda,
                fidelity: f64::NAN,
                smoothness: f64::NAN,
                variation: f64::NAN,
                validation_loss: f64::NAN,
                tracking_mean: f64::NAN,
                tracking_rmse: f64::NAN,
                error: None,
            };
            let fit = cosmic_fit(&data.splits.train, &CosmicConfig::new(lambda)).and_then(|m| {
                let parts = cosmic_objective(&m, &data.splits.train, lambda)?;
                let loss = trajectory_prediction_loss(&m, &data.splits.validation.trajectories)?;
                Ok((m, parts, loss))
            });
            match fit {
                Ok((model, parts, loss)) => {
                    row.fidelity = parts.fidelity;
                    row.smoothness = parts.smoothness;
                    row.variation = parts.variation;
                    row.validation_loss = loss;
                    let t = evaluate_controller(cfg, &data, Controller::Cosmic, Ok(model), Some(lambda));
                    row.tracking_mean = t.mean;
                    row.tracking_rmse = t.rmse;
                    if !t.failures.is_empty() {
                        row.error = Some(t.failures.join("; "));
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect())
}
