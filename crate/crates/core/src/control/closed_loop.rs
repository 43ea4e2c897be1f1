use nalgebra::DVector;

use super::lqr::GainSchedule;
use super::reference::ReferenceSpec;
use crate::datagen::Trajectory;
use crate::dynamics::{PlantStepper, ScenarioSpec, StateVec};
use crate::error::{Error, Result};

/// State norm treated as divergence.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Runs `u = -K_k (x - x_ref(k)) + u_ff(k)` on the simulated plant.
pub fn closed_loop(
    spec: &ScenarioSpec,
    sched: &GainSchedule<f64>,
    reference: &ReferenceSpec,
    x0: StateVec,
    seed: u64,
) -> Result<Trajectory<f64>> {
    spec.validate()?;
    reference.validate()?;
    let n = spec.steps();
    if sched.steps() != n {
        return Err(Error::Shape(format!(
            "schedule has {} steps, scenario has {n}",
            sched.steps()
        )));
    }
    if sched.state_dim() != 2 || sched.input_dim() != 1 {
        return Err(Error::Shape("the plant needs a 1 x 2 gain".into()));
    }
    let mut stepper = PlantStepper::new(spec, seed);
    let mut x = x0;
    let mut states = Vec::with_capacity(n + 1);
    let mut inputs = Vec::with_capacity(n);
    states.push(DVector::from_column_slice(x.as_slice()));
    for k in 0..n {
        let x_ref: DVector<f64> = reference.state_at(k, spec.dt, 2);
        let err = DVector::from_column_slice(x.as_slice()) - x_ref;
        let u = (-&sched.gains[k] * err + &sched.feedforward[k])[0];
        x = stepper.step(&x, u)?;
        let norm = x.norm();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Instability { step: k + 1, norm });
        }
        inputs.push(DVector::from_element(1, u));
        states.push(DVector::from_column_slice(x.as_slice()));
    }
    Ok(Trajectory {
        times: (0..=n).map(|k| spec.time(k)).collect(),
        states,
        inputs,
        seed,
        noisy: false,
    })
}

/// `|x1(k) - z_ref(k dt)|` for every stored state.
pub fn tracking_errors(traj: &Trajectory<f64>, reference: &ReferenceSpec) -> Vec<f64> {
    traj.states
        .iter()
        .zip(&traj.times)
        .map(|(x, t)| (x[0] - reference.position_at(*t)).abs())
        .collect()
}
