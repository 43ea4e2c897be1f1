use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::ScenarioSpec;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// States `x(0..=N)` and inputs `u(0..N)` of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<f64>,
    pub states: Vec<DVector<T>>,
    pub inputs: Vec<DVector<T>>,
    pub seed: u64,
    /// Whether measurement noise was added to `states`.
    pub noisy: bool,
}

impl<T: Real> Trajectory<T> {
    /// Number of transitions `N`.
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, |x| x.len())
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, |u| u.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.len() != self.inputs.len() + 1 {
            return Err(Error::Shape(format!(
                "{} states for {} inputs",
                self.states.len(),
                self.inputs.len()
            )));
        }
        if self.times.len() != self.states.len() {
            return Err(Error::Shape(format!(
                "{} time stamps for {} states",
                self.times.len(),
                self.states.len()
            )));
        }
        let (p, q) = (self.state_dim(), self.input_dim());
        if self.states.iter().any(|x| x.len() != p) || self.inputs.iter().any(|u| u.len() != q) {
            return Err(Error::Shape("ragged state or input vectors".into()));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Trajectory<U> {
        let conv = |v: &DVector<T>| v.map(|x| lit::<U>(to_f64(x)));
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(conv).collect(),
            inputs: self.inputs.iter().map(conv).collect(),
            seed: self.seed,
            noisy: self.noisy,
        }
    }
}

/// Chirp settings shared by a split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationMeta {
    pub amplitude: f64,
    pub w0: f64,
    pub w1: f64,
    pub noise_var: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T: Real> {
    pub split: Split,
    pub trajectories: Vec<Trajectory<T>>,
    pub excitation: ExcitationMeta,
    /// Variance of the additive measurement noise on states.
    pub measurement_noise_var: f64,
    /// Plant that produced the data, when it came from a simulation.
    pub scenario: Option<ScenarioSpec>,
    pub master_seed: u64,
    /// Number of trailing free-response (`u = 0`) trajectories.
    pub free_response: usize,
}

impl<T: Real> Dataset<T> {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.state_dim())
    }

    pub fn input_dim(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.input_dim())
    }

    /// Common number of transitions; errors on ragged data.
    pub fn steps(&self) -> Result<usize> {
        let first = self
            .trajectories
            .first()
            .ok_or_else(|| Error::Shape("empty dataset".into()))?;
        for t in &self.trajectories {
            t.validate()?;
            if t.steps() != first.steps() || t.state_dim() != first.state_dim() || t.input_dim() != first.input_dim() {
                return Err(Error::Shape("trajectories differ in length or dimension".into()));
            }
        }
        Ok(first.steps())
    }

    pub fn dt(&self) -> f64 {
        self.trajectories
            .first()
            .and_then(|t| t.times.get(1).zip(t.times.first()).map(|(b, a)| b - a))
            .unwrap_or(0.0)
    }

    /// Dataset restricted to the given trajectory indices.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            trajectories: indices.iter().map(|&i| self.trajectories[i].clone()).collect(),
            free_response: 0,
            ..self.clone()
        }
    }

    pub fn cast<U: Real>(&self) -> Dataset<U> {
        Dataset {
            split: self.split,
            trajectories: self.trajectories.iter().map(Trajectory::cast).collect(),
            excitation: self.excitation,
            measurement_noise_var: self.measurement_noise_var,
            scenario: self.scenario.clone(),
            master_seed: self.master_seed,
            free_response: self.free_response,
        }
    }
}
