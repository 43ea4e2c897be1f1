use nalgebra::DMatrix;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// `V(k)` (rows `[x_l(k)^T u_l(k)^T]`) and `X'(k)` (rows `x_l(k+1)^T`).
pub fn stack_regressors<T: Real>(ds: &Dataset<T>, k: usize) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = ds.steps()?;
    if k >= n {
        return Err(Error::Shape(format!("step {k} out of range for {n} transitions")));
    }
    Ok(regressors_at(ds, k))
}

/// [`stack_regressors`] without the shape checks, for loops over a validated dataset.
pub(crate) fn regressors_at<T: Real>(ds: &Dataset<T>, k: usize) -> (DMatrix<T>, DMatrix<T>) {
    let (p, q, l) = (ds.state_dim(), ds.input_dim(), ds.len());
    let mut v = DMatrix::zeros(l, p + q);
    let mut next = DMatrix::zeros(l, p);
    for (row, traj) in ds.trajectories.iter().enumerate() {
        v.view_mut((row, 0), (1, p)).copy_from(&traj.states[k].transpose());
        v.view_mut((row, p), (1, q)).copy_from(&traj.inputs[k].transpose());
        next.view_mut((row, 0), (1, p)).copy_from(&traj.states[k + 1].transpose());
    }
    (v, next)
}

/// All `[x^T u^T]` rows of the dataset, over every step and trajectory.
pub(crate) fn pooled_regressors<T: Real>(ds: &Dataset<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = ds.steps()?;
    let (p, q, l) = (ds.state_dim(), ds.input_dim(), ds.len());
    let mut v = DMatrix::zeros(l * n, p + q);
    let mut next = DMatrix::zeros(l * n, p);
    for k in 0..n {
        let (vk, xk) = regressors_at(ds, k);
        v.view_mut((k * l, 0), (l, p + q)).copy_from(&vk);
        next.view_mut((k * l, 0), (l, p)).copy_from(&xk);
    }
    Ok((v, next))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationReport {
    pub rank: usize,
    pub required: usize,
    pub satisfied: bool,
    /// Singular values of the pooled regressor matrix, descending.
    pub singular_values: Vec<f64>,
}

/// Numerical rank from singular values: count above `RANK_TOL * max`.
pub(crate) fn numerical_rank<T: Real>(singular_values: &[T]) -> usize {
    let max = singular_values.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if max <= T::zero() {
        return 0;
    }
    let tol = max * lit::<T>(RANK_TOL);
    singular_values.iter().filter(|s| **s > tol).count()
}

/// Checks that the pooled `[x^T u^T]` vectors span `R^(p+q)`.
pub fn check_excitation<T: Real>(ds: &Dataset<T>) -> Result<ExcitationReport> {
    let (v, _) = pooled_regressors(ds)?;
    let required = v.ncols();
    // same singular values as V, at (p+q)x(p+q) cost
    let r = v.qr().r();
    let mut sv: Vec<T> = r.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let rank = numerical_rank(&sv);
    Ok(ExcitationReport {
        rank,
        required,
        satisfied: rank == required,
        singular_values: sv.iter().map(|s| crate::scalar::to_f64(*s)).collect(),
    })
}
