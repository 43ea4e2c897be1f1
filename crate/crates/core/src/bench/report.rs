use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::BenchConfig;
use super::ecdf::{ecdf_residuals, EcdfSeries};
use super::prediction::{evaluate_cell, prediction_cells, PredictionReport};
use super::sweep::{lambda_sweep, SweepRow};
use super::tracking::{run_control_benchmark, TrackingReport};
use crate::dynamics::ScenarioKind;
use crate::error::{Error, Result};
use crate::ident::Method;

/// Which artifacts a benchmark run produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Prediction,
    Control,
    Ecdf,
    Lambda,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Prediction => "prediction",
            Suite::Control => "control",
            Suite::Ecdf => "ecdf",
            Suite::Lambda => "lambda",
            Suite::All => "all",
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::Prediction, Suite::Control, Suite::Ecdf, Suite::Lambda, Suite::All]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// ECDFs of one scenario, one series per method.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioEcdf {
    pub scenario: ScenarioKind,
    pub series: Vec<(Method, EcdfSeries)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchOutputs {
    pub prediction: Option<PredictionReport>,
    pub tracking: Option<TrackingReport>,
    pub ecdf: Vec<ScenarioEcdf>,
    pub sweep: Option<(ScenarioKind, Vec<SweepRow>)>,
}

pub fn run_suite(cfg: &BenchConfig, suite: Suite) -> Result<BenchOutputs> {
    cfg.validate()?;
    let mut out = BenchOutputs::default();
    if suite.includes(Suite::Prediction) || suite.includes(Suite::Ecdf) {
        let cells = prediction_cells(cfg)?;
        if suite.includes(Suite::Prediction) {
            out.prediction = Some(PredictionReport {
                rows: cells
                    .iter()
                    .flat_map(|(data, cs)| cs.iter().map(|c| evaluate_cell(data, c)).collect::<Vec<_>>())
                    .collect(),
            });
        }
        if suite.includes(Suite::Ecdf) {
            for (data, cs) in &cells {
                let series = cs
                    .iter()
                    .filter_map(|c| {
                        let model = c.model.as_ref().ok()?;
                        ecdf_residuals(model, &data.splits.test.trajectories)
                            .ok()
                            .map(|e| (c.method, e))
                    })
                    .collect();
                out.ecdf.push(ScenarioEcdf {
                    scenario: data.spec.kind,
                    series,
                });
            }
        }
    }
    if suite.includes(Suite::Control) {
        out.tracking = Some(run_control_benchmark(cfg)?);
    }
    if suite.includes(Suite::Lambda) {
        out.sweep = Some((cfg.sweep_scenario, lambda_sweep(cfg, cfg.sweep_scenario, &cfg.lambda_grid)?));
    }
    Ok(out)
}

/// How the tracking RMSE column is computed.
pub const RMSE_DEFINITION: &str = "per run sqrt(sum_k e(k)^2) / N over k = 0..N, averaged over runs";

/// Run manifest: enough to regenerate every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub version: String,
    pub suite: Suite,
    pub rmse_definition: String,
    pub files: Vec<String>,
    pub config: BenchConfig,
}

impl BenchManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the CSV tables present in `outputs` plus `manifest.toml` into `dir`.
pub fn emit_report(outputs: &BenchOutputs, cfg: &BenchConfig, suite: Suite, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    if let Some(p) = &outputs.prediction {
        let path = dir.join("table1.csv");
        write_csv(
            &path,
            &["scenario", "method", "mean", "std", "lambda", "trajectories", "error"],
            p.rows.iter().map(|r| {
                vec![
                    r.scenario.name().to_string(),
                    r.method.name().to_string(),
                    num(r.mean),
                    num(r.std),
                    opt(r.lambda),
                    r.trajectories.to_string(),
                    r.error.clone().unwrap_or_default(),
                ]
            }),
        )?;
        files.push(path);
    }
    if let Some(t) = &outputs.tracking {
        let path = dir.join("table2.csv");
        write_csv(
            &path,
            &["scenario", "controller", "mean", "std", "rmse", "runs", "failed", "lambda", "failures"],
            t.rows.iter().map(|r| {
                vec![
                    r.scenario.name().to_string(),
                    r.controller.name().to_string(),
                    num(r.mean),
                    num(r.std),
                    num(r.rmse),
                    r.runs.to_string(),
                    r.failures.len().to_string(),
                    opt(r.lambda),
                    r.failures.join("; "),
                ]
            }),
        )?;
        files.push(path);
    }
    for e in &outputs.ecdf {
        let path = dir.join(format!("ecdf_{}.csv", e.scenario.name()));
        write_csv(
            &path,
            &["method", "value", "fraction"],
            e.series.iter().flat_map(|(m, s)| {
                s.values
                    .iter()
                    .zip(&s.fractions)
                    .map(|(v, f)| vec![m.name().to_string(), num(*v), num(*f)])
                    .collect::<Vec<_>>()
            }),
        )?;
        files.push(path);
    }
    if let Some((scenario, rows)) = &outputs.sweep {
        let path = dir.join("lambda_sweep.csv");
        write_csv(
            &path,
            &[
                "scenario",
                "lambda",
                "fidelity",
                "smoothness",
                "variation",
                "validation_loss",
                "tracking_mean",
                "tracking_rmse",
                "error",
            ],
            rows.iter().map(|r| {
                vec![
                    scenario.name().to_string(),
                    num(r.lambda),
                    num(r.fidelity),
                    num(r.smoothness),
                    num(r.variation),
                    num(r.validation_loss),
                    num(r.tracking_mean),
                    num(r.tracking_rmse),
                    r.error.clone().unwrap_or_default(),
                ]
            }),
        )?;
        files.push(path);
    }

    let manifest = BenchManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        suite,
        rmse_definition: RMSE_DEFINITION.to_string(),
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        config: cfg.clone(),
    };
    let path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(files)
}
