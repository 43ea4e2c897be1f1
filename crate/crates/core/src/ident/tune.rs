use rayon::prelude::*;

use super::cosmic::{cosmic_fit, CosmicConfig};
use super::lsq::{lti_model, perstep_ls_fit};
use super::ltvmodels::{ltvmodels_fit, LtvModelsConfig};
use super::model::{LtvModel, Method};
use super::predict::trajectory_prediction_loss;
use super::tvera::{tvera_fit, TveraConfig, TveraExperiments};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// The default smoothing grid, `1e-4 ..= 1e4`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 9)
}

/// Fits `method` on `train`; `lambda` is ignored by unregularized methods.
pub fn fit_method<T: Real>(method: Method, lambda: f64, train: &Dataset<T>) -> Result<LtvModel<T>> {
    match method {
        Method::Cosmic => cosmic_fit(train, &CosmicConfig::new(lambda)),
        Method::CosmicSingle => cosmic_fit(train, &CosmicConfig::single(lambda)),
        Method::LtvModels => {
            let first = train
                .trajectories
                .first()
                .ok_or_else(|| Error::Shape("empty dataset".into()))?;
            ltvmodels_fit(first, &LtvModelsConfig::new(lambda))
        }
        Method::PerStep => perstep_ls_fit(train),
        Method::Lti => lti_model(train),
        Method::Tvera => {
            let exps = TveraExperiments::from_dataset(train);
            let cfg = TveraConfig {
                order: train.state_dim(),
                free_experiments: exps.free.len().min(TveraConfig::default().free_experiments),
                forced_experiments: exps.forced.len().min(TveraConfig::default().forced_experiments),
                ..TveraConfig::default()
            };
            tvera_fit(&exps, &cfg)
        }
        Method::Linearization => Err(Error::Config(
            "the linearization is derived from a scenario, not fitted".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    /// Validation loss, when the fit succeeded.
    pub loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneReport {
    pub method: Method,
    pub points: Vec<GridPoint>,
    pub best: usize,
}

impl TuneReport {
    pub fn best_lambda(&self) -> f64 {
        self.points[self.best].lambda
    }
}

/// Grid search on the validation prediction loss; ties go to the larger `lambda`.
pub fn tune<T: Real>(
    method: Method,
    grid: &[f64],
    train: &Dataset<T>,
    validation: &Dataset<T>,
) -> Result<(f64, LtvModel<T>, TuneReport)> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let results: Vec<(GridPoint, Option<LtvModel<T>>)> = grid
        .par_iter()
        .map(|&lambda| {
            let outcome = fit_method(method, lambda, train)
                .and_then(|m| trajectory_prediction_loss(&m, &validation.trajectories).map(|l| (m, to_f64(l))));
            match outcome {
                Ok((m, loss)) => (
                    GridPoint {
                        lambda,
                        loss: Some(loss),
                        error: None,
                    },
                    Some(m),
                ),
                Err(e) => (
                    GridPoint {
                        lambda,
                        loss: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, (pt, _)) in results.iter().enumerate() {
        let Some(loss) = pt.loss.filter(|l| l.is_finite()) else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let (bl, bloss) = (results[b].0.lambda, results[b].0.loss.unwrap());
                if loss < bloss || (loss == bloss && pt.lambda > bl) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    let Some(best) = best else {
        return Err(Error::Tuning(
            results
                .iter()
                .map(|(pt, _)| {
                    format!(
                        "lambda = {:e}: {}",
                        pt.lambda,
                        pt.error.clone().unwrap_or_else(|| "non-finite loss".into())
                    )
                })
                .collect(),
        ));
    };
    let (points, mut models): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let model = models[best].take().expect("best point has a model");
    let lambda = points[best].lambda;
    Ok((lambda, model, TuneReport { method, points, best }))
}
