use serde::{Deserialize, Serialize};

use crate::control::{CostWeights, ReferenceSpec};
use crate::datagen::{build_dataset, build_tvera_experiments, DatasetConfig, DatasetSplits};
use crate::dynamics::{ScenarioKind, ScenarioSpec};
use crate::error::{Error, Result};
use crate::ident::{default_lambda_grid, TveraConfig, TveraExperiments};
use crate::rng::derive_seed;

/// Everything a benchmark run depends on besides the code itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    #[serde(with = "crate::datagen::seed_str")]
    pub master_seed: u64,
    pub scenarios: Vec<ScenarioKind>,
    pub dataset: DatasetConfig,
    pub lambda_grid: Vec<f64>,
    pub tvera: TveraConfig,
    pub q_x: f64,
    pub q_v: f64,
    pub r: f64,
    /// Position amplitude and switching period of the square-wave reference.
    pub reference_amplitude: f64,
    pub reference_period: f64,
    pub initial_conditions: Vec<[f64; 2]>,
    /// Scenario used by the smoothing-weight sweep.
    pub sweep_scenario: ScenarioKind,
}

impl BenchConfig {
    pub fn new(master_seed: u64) -> Self {
        BenchConfig {
            master_seed,
            scenarios: ScenarioKind::ALL.to_vec(),
            dataset: DatasetConfig::default(),
            lambda_grid: default_lambda_grid(),
            tvera: TveraConfig::default(),
            q_x: 1.0,
            q_v: 0.1,
            r: 1e-3,
            reference_amplitude: 1.0,
            reference_period: 2.0,
            initial_conditions: vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [2.0, 0.0]],
            sweep_scenario: ScenarioKind::Ltv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.tvera.validate()?;
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios selected".into()));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Config("lambda grid must be nonempty and positive".into()));
        }
        if self.initial_conditions.is_empty() {
            return Err(Error::Config("no initial conditions for control runs".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> CostWeights<f64> {
        CostWeights::position_velocity(self.q_x, self.q_v, self.r)
    }

    pub fn reference(&self, horizon: f64) -> ReferenceSpec {
        ReferenceSpec::alternating(self.reference_amplitude, self.reference_period, horizon)
    }

    pub fn scenario_seed(&self, kind: ScenarioKind, purpose: &str) -> u64 {
        derive_seed(self.master_seed, &format!("{purpose}:{}", kind.name()), 0)
    }
}

/// Generated data for one scenario.
pub struct ScenarioData {
    pub spec: ScenarioSpec,
    pub splits: DatasetSplits<f64>,
}

impl ScenarioData {
    pub fn build(cfg: &BenchConfig, kind: ScenarioKind) -> Result<Self> {
        let spec = ScenarioSpec::builtin(kind);
        let splits = build_dataset(&spec, &cfg.dataset, cfg.scenario_seed(kind, "dataset"))?;
        Ok(ScenarioData { spec, splits })
    }

    pub fn tvera_experiments(&self, cfg: &BenchConfig) -> Result<TveraExperiments<f64>> {
        build_tvera_experiments(
            &self.spec,
            &cfg.dataset,
            cfg.tvera.free_experiments,
            cfg.tvera.forced_experiments,
            cfg.scenario_seed(self.spec.kind, "tvera"),
        )
    }
}
