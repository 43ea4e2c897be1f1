//! System identification: COSMIC, LTVModels, TVERA and least-squares baselines.

mod blocktri;
mod cosmic;
mod lsq;
mod ltvmodels;
mod model;
mod precondition;
mod predict;
mod regress;
mod tune;
mod tvera;

pub use blocktri::{solve_chain, ChainFactor};
pub use cosmic::{cosmic_fit, cosmic_fit_trajectory, cosmic_objective, CosmicConfig, ObjectiveParts};
pub use lsq::{lti_fit, lti_model, perstep_ls_fit};
pub use ltvmodels::{
    block_soft_threshold, ltvmodels_fit, ltvmodels_fit_detailed, ltvmodels_objective, LtvModelsConfig, LtvModelsFit,
    LtvModelsSolver,
};
pub use model::{LtvModel, Method, Transform};
pub use precondition::{apply_transform, fit_transform, precondition, scale_model, unscale_model};
pub use predict::{per_trajectory_losses, predict_rollout, rollout_error, trajectory_prediction_loss};
pub use regress::{check_excitation, stack_regressors, ExcitationReport, RANK_TOL};
pub use tune::{default_lambda_grid, fit_method, log_grid, tune, GridPoint, TuneReport};
pub use tvera::{tvera_fit, tvera_hankel, TveraConfig, TveraExperiments, GAP_TOL};
