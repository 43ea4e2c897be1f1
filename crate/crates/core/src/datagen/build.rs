use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::excitation::{chirp, ExcitationSpec};
use super::trajectory::{Dataset, ExcitationMeta, Split, Trajectory};
use crate::dynamics::{ScenarioSpec, StateVec};
use crate::error::{Error, Result};
use crate::ident::{predict_rollout, LtvModel, TveraExperiments};
use crate::rng::{derive_seed, substream, Rng};
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFrequencies {
    pub w0: f64,
    pub w1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Chirp amplitude (N).
    pub amplitude: f64,
    /// Variance of the chirp's additive input noise (N^2).
    pub chirp_noise_var: f64,
    pub train: SplitFrequencies,
    pub validation: SplitFrequencies,
    pub test: SplitFrequencies,
    pub train_count: usize,
    pub validation_count: usize,
    pub test_count: usize,
    /// Free-response trajectories appended to validation and test.
    pub free_response: usize,
    /// Variance of the measurement noise added to training states (m^2, m^2/s^2).
    pub measurement_noise_var: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            amplitude: 1.0,
            chirp_noise_var: 0.01,
            train: SplitFrequencies { w0: 0.5, w1: 8.0 },
            validation: SplitFrequencies { w0: 0.8, w1: 6.0 },
            test: SplitFrequencies { w0: 0.6, w1: 7.0 },
            train_count: 20,
            validation_count: 8,
            test_count: 8,
            free_response: 2,
            measurement_noise_var: 1e-6,
        }
    }
}

impl DatasetConfig {
    fn frequencies(&self, split: Split) -> SplitFrequencies {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }

    fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_count,
            Split::Validation => self.validation_count,
            Split::Test => self.test_count,
        }
    }

    pub fn excitation(&self, split: Split) -> ExcitationMeta {
        let f = self.frequencies(split);
        ExcitationMeta {
            amplitude: self.amplitude,
            w0: f.w0,
            w1: f.w1,
            noise_var: self.chirp_noise_var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_count == 0 || self.validation_count == 0 || self.test_count == 0 {
            return Err(Error::Config("every split needs at least one trajectory".into()));
        }
        let pairs = [self.train, self.validation, self.test];
        for (i, a) in pairs.iter().enumerate() {
            for b in &pairs[i + 1..] {
                if a == b {
                    return Err(Error::Config(format!(
                        "splits must use distinct chirp bands, ({}, {}) repeated",
                        a.w0, a.w1
                    )));
                }
            }
        }
        if !(self.measurement_noise_var >= 0.0) {
            return Err(Error::Config("measurement noise variance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplits<T: Real> {
    pub train: Dataset<T>,
    pub validation: Dataset<T>,
    pub test: Dataset<T>,
}

fn uniform_state(rng: &mut Rng) -> StateVec {
    StateVec::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

fn add_noise<T: Real>(traj: &mut Trajectory<T>, var: f64, mut rng: Rng) {
    if var > 0.0 {
        let normal = Normal::new(0.0, var.sqrt()).expect("finite standard deviation");
        for x in &mut traj.states {
            for v in x.iter_mut() {
                *v += lit::<T>(normal.sample(&mut rng));
            }
        }
    }
}

/// Simulates the three splits of the data collection protocol.
///
/// Every trajectory draws from its own seeded sub-stream, so the splits are
/// reproducible from `master_seed` and independent of evaluation order.
pub fn build_dataset(spec: &ScenarioSpec, cfg: &DatasetConfig, master_seed: u64) -> Result<DatasetSplits<f64>> {
    spec.validate()?;
    cfg.validate()?;
    let build = |split: Split| -> Result<Dataset<f64>> {
        let meta = cfg.excitation(split);
        let count = cfg.count(split);
        let free = if split == Split::Train { 0 } else { cfg.free_response };
        let tag = split.name();
        let trajectories = (0..count + free)
            .into_par_iter()
            .map(|i| {
                let forced = i < count;
                let seed = if forced {
                    derive_seed(master_seed, &format!("traj:{tag}"), i as u64)
                } else {
                    derive_seed(master_seed, &format!("free:{tag}"), (i - count) as u64)
                };
                let mut rng = substream(seed, "excite", 0);
                let x0 = uniform_state(&mut rng);
                let result = if forced {
                    let ex = ExcitationSpec {
                        amplitude: meta.amplitude,
                        w0: meta.w0,
                        w1: meta.w1,
                        duration: spec.horizon,
                        phase: rng.random_range(0.0..std::f64::consts::TAU),
                        noise_var: meta.noise_var,
                    };
                    ex.validate()?;
                    spec.simulate(x0, |t| chirp(&ex, t, &mut rng), seed)
                } else {
                    spec.simulate(x0, |_| 0.0, seed)
                };
                let mut traj = result.map_err(|e| Error::Trajectory { index: i, source: Box::new(e) })?;
                if split == Split::Train {
                    traj.noisy = true;
                    add_noise(&mut traj, cfg.measurement_noise_var, substream(master_seed, "noise:train", i as u64));
                }
                Ok(traj)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            split,
            trajectories,
            excitation: meta,
            measurement_noise_var: if split == Split::Train { cfg.measurement_noise_var } else { 0.0 },
            scenario: Some(spec.clone()),
            master_seed,
            free_response: free,
        })
    };
    Ok(DatasetSplits {
        train: build(Split::Train)?,
        validation: build(Split::Validation)?,
        test: build(Split::Test)?,
    })
}

/// Exact data generated by rolling out a discrete model under chirp inputs.
pub fn rollout_dataset<T: Real>(
    model: &LtvModel<T>,
    excitation: &ExcitationMeta,
    count: usize,
    split: Split,
    master_seed: u64,
) -> Result<Dataset<T>> {
    let (p, q, n) = (model.state_dim(), model.input_dim(), model.steps());
    let duration = n as f64 * model.dt;
    let trajectories = (0..count)
        .map(|i| {
            let seed = derive_seed(master_seed, "rollout", i as u64);
            let mut rng = substream(seed, "excite", 0);
            let x0 = DVector::from_fn(p, |_, _| lit::<T>(rng.random_range(-1.0..=1.0)));
            let chirps: Vec<ExcitationSpec> = (0..q)
                .map(|_| ExcitationSpec {
                    amplitude: excitation.amplitude,
                    w0: excitation.w0,
                    w1: excitation.w1,
                    duration,
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    noise_var: excitation.noise_var,
                })
                .collect();
            let inputs: Vec<DVector<T>> = (0..n)
                .map(|k| {
                    let t = k as f64 * model.dt;
                    DVector::from_fn(q, |j, _| lit::<T>(chirp(&chirps[j], t, &mut rng)))
                })
                .collect();
            let states = predict_rollout(model, &x0, &inputs)?;
            Ok(Trajectory {
                times: (0..=n).map(|k| k as f64 * model.dt).collect(),
                states,
                inputs,
                seed,
                noisy: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        split,
        trajectories,
        excitation: *excitation,
        measurement_noise_var: 0.0,
        scenario: None,
        master_seed,
        free_response: 0,
    })
}

/// Experiments for the Hankel-based realization: free responses from random
/// initial states and responses to white-noise inputs from rest, both with
/// training-grade measurement noise.
pub fn build_tvera_experiments(
    spec: &ScenarioSpec,
    cfg: &DatasetConfig,
    free: usize,
    forced: usize,
    master_seed: u64,
) -> Result<TveraExperiments<f64>> {
    spec.validate()?;
    let run = |i: usize| -> Result<Trajectory<f64>> {
        let is_free = i < free;
        let seed = derive_seed(master_seed, if is_free { "tvera:free" } else { "tvera:forced" }, i as u64);
        let mut rng = substream(seed, "excite", 0);
        let result = if is_free {
            let x0 = uniform_state(&mut rng);
            spec.simulate(x0, |_| 0.0, seed)
        } else {
            let normal = Normal::new(0.0, cfg.amplitude).map_err(|e| Error::Config(e.to_string()))?;
            spec.simulate(StateVec::zeros(), |_| normal.sample(&mut rng), seed)
        };
        let mut traj = result.map_err(|e| Error::Trajectory { index: i, source: Box::new(e) })?;
        traj.noisy = true;
        add_noise(&mut traj, cfg.measurement_noise_var, substream(master_seed, "noise:tvera", i as u64));
        Ok(traj)
    };
    let all = (0..free + forced).into_par_iter().map(run).collect::<Result<Vec<_>>>()?;
    let (free_runs, forced_runs) = all.split_at(free);
    Ok(TveraExperiments {
        free: free_runs.to_vec(),
        forced: forced_runs.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ScenarioKind;

    fn small() -> DatasetConfig {
        DatasetConfig {
            train_count: 3,
            validation_count: 4,
            test_count: 2,
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn counts_and_flags() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let d = build_dataset(&spec, &small(), 7).unwrap();
        assert_eq!(d.train.len(), 3);
        assert_eq!(d.validation.len(), 6);
        assert_eq!(d.test.len(), 4);
        assert!(d.train.trajectories.iter().all(|t| t.noisy));
        assert!(d.validation.trajectories.iter().chain(&d.test.trajectories).all(|t| !t.noisy));
        for ds in [&d.validation, &d.test] {
            let free = &ds.trajectories[ds.len() - 1];
            assert!(free.inputs.iter().all(|u| u[0] == 0.0));
            assert!(free.states[0].amax() > 0.0);
        }
        for t in d.train.trajectories.iter().chain(&d.test.trajectories) {
            assert_eq!(t.states.len(), t.inputs.len() + 1);
        }
    }

    #[test]
    fn zero_noise_train_equals_exact_simulation() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Nl);
        let noisy = build_dataset(&spec, &small(), 3).unwrap();
        let exact = build_dataset(&spec, &DatasetConfig { measurement_noise_var: 0.0, ..small() }, 3).unwrap();
        assert_ne!(noisy.train.trajectories[0].states, exact.train.trajectories[0].states);
        assert_eq!(noisy.train.trajectories[0].inputs, exact.train.trajectories[0].inputs);
        // validation and test never carry injected noise
        assert_eq!(noisy.validation, exact.validation);
        assert_eq!(noisy.test.trajectories, exact.test.trajectories);
        let diff = (&noisy.train.trajectories[1].states[10] - &exact.train.trajectories[1].states[10]).amax();
        assert!(diff > 0.0 && diff < 1e-2);
    }

    #[test]
    fn same_seed_same_dataset() {
        let spec = ScenarioSpec::builtin(ScenarioKind::MixedReconfig);
        assert_eq!(build_dataset(&spec, &small(), 9).unwrap(), build_dataset(&spec, &small(), 9).unwrap());
        assert_ne!(build_dataset(&spec, &small(), 9).unwrap(), build_dataset(&spec, &small(), 10).unwrap());
    }

    #[test]
    fn adding_trajectories_keeps_existing_ones() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let a = build_dataset(&spec, &small(), 5).unwrap();
        let b = build_dataset(&spec, &DatasetConfig { train_count: 5, ..small() }, 5).unwrap();
        assert_eq!(a.train.trajectories[..], b.train.trajectories[..3]);
    }

    #[test]
    fn repeated_bands_rejected() {
        let spec = ScenarioSpec::builtin(ScenarioKind::Ltv);
        let cfg = DatasetConfig { validation: small().train, ..small() };
        assert!(matches!(build_dataset(&spec, &cfg, 1), Err(Error::Config(_))));
        let cfg = DatasetConfig { test_count: 0, ..small() };
        assert!(build_dataset(&spec, &cfg, 1).is_err());
    }
}
