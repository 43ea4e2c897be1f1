use nalgebra::DVector;

use super::model::LtvModel;
use crate::datagen::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// `x(k+1) = A(k) x(k) + B(k) u(k)` from `x0`; returns `inputs.len() + 1` states.
pub fn predict_rollout<T: Real>(model: &LtvModel<T>, x0: &DVector<T>, inputs: &[DVector<T>]) -> Result<Vec<DVector<T>>> {
    if inputs.len() > model.steps() {
        return Err(Error::Shape(format!(
            "{} inputs exceed the model horizon of {}",
            inputs.len(),
            model.steps()
        )));
    }
    if x0.len() != model.state_dim() {
        return Err(Error::Shape(format!("x0 has {} entries, model has p = {}", x0.len(), model.state_dim())));
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for (k, u) in inputs.iter().enumerate() {
        if u.len() != model.input_dim() {
            return Err(Error::Shape(format!("input {k} has {} entries", u.len())));
        }
        let pair = &model.pairs[k];
        let next = &pair.a * &states[k] + &pair.b * u;
        states.push(next);
    }
    Ok(states)
}

/// `sqrt((1/N) sum_{k=1..N} |x_hat(k) - x(k)|^2)` for one trajectory.
pub fn rollout_error<T: Real>(model: &LtvModel<T>, traj: &Trajectory<T>) -> Result<T> {
    let n = traj.steps();
    if n == 0 {
        return Err(Error::Shape("trajectory has no transitions".into()));
    }
    let pred = predict_rollout(model, &traj.states[0], &traj.inputs)?;
    let sum = pred
        .iter()
        .zip(&traj.states)
        .skip(1)
        .fold(T::zero(), |acc, (a, b)| acc + (a - b).norm_squared());
    let loss = (sum / lit::<T>(n as f64)).sqrt();
    Ok(if loss.is_finite() { loss } else { lit(f64::INFINITY) })
}

pub fn per_trajectory_losses<T: Real>(model: &LtvModel<T>, trajectories: &[Trajectory<T>]) -> Result<Vec<T>> {
    trajectories.iter().map(|t| rollout_error(model, t)).collect()
}

/// Mean of [`rollout_error`] over a set of trajectories.
pub fn trajectory_prediction_loss<T: Real>(model: &LtvModel<T>, trajectories: &[Trajectory<T>]) -> Result<T> {
    if trajectories.is_empty() {
        return Err(Error::Shape("no trajectories to evaluate".into()));
    }
    let losses = per_trajectory_losses(model, trajectories)?;
    let sum = losses.iter().fold(T::zero(), |a, b| a + *b);
    Ok(sum / lit::<T>(losses.len() as f64))
}
