//! End-to-end benchmarks: prediction tables, tracking statistics, ECDFs and smoothing sweeps.

mod config;
mod ecdf;
mod prediction;
mod report;
mod stats;
mod sweep;
mod tracking;

pub use config::{BenchConfig, ScenarioData};
pub use ecdf::{ecdf_residuals, EcdfSeries};
pub use prediction::{fit_cell, prediction_cells, run_prediction_benchmark, FittedCell, PredictionReport, PredictionRow, PREDICTION_METHODS};
pub use report::{emit_report, run_suite, BenchManifest, BenchOutputs, ScenarioEcdf, Suite, RMSE_DEFINITION};
pub use stats::mean_std;
pub use sweep::{lambda_sweep, SweepRow};
pub use tracking::{evaluate_controller, run_control_benchmark, run_rmse, Controller, TrackingReport, TrackingRow};
