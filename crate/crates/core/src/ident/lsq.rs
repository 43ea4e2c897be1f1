use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::model::{LtvModel, Method};
use super::regress::{pooled_regressors, regressors_at, RANK_TOL};
use crate::datagen::Dataset;
use crate::dynamics::MatrixPair;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// `argmin |V C - Y|_F` by thin QR; errors if `V` lacks full column rank.
pub(crate) fn qr_least_squares<T: Real>(v: &DMatrix<T>, y: &DMatrix<T>) -> Result<DMatrix<T>> {
    let cols = v.ncols();
    if v.nrows() < cols {
        return Err(Error::Identifiability {
            rank: v.nrows(),
            required: cols,
        });
    }
    let qr = v.clone().qr();
    let r = qr.r();
    let diag: Vec<T> = (0..cols).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let rank = diag.iter().filter(|d| **d > max * lit::<T>(RANK_TOL)).count();
    if max <= T::zero() || rank < cols {
        return Err(Error::Identifiability { rank, required: cols });
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))
}

/// Independent least squares at every step.
pub fn perstep_ls_fit<T: Real>(ds: &Dataset<T>) -> Result<LtvModel<T>> {
    let n = ds.steps()?;
    let p = ds.state_dim();
    let cs = (0..n)
        .map(|k| {
            let (v, next) = regressors_at(ds, k);
            qr_least_squares(&v, &next)
        })
        .collect::<Result<Vec<_>>>()?;
    LtvModel::from_stacked(&cs, p, ds.dt(), Method::PerStep, BTreeMap::new())
}

/// One `(A, B)` fitted to all transitions pooled.
pub fn lti_fit<T: Real>(ds: &Dataset<T>) -> Result<MatrixPair<T>> {
    let (v, next) = pooled_regressors(ds)?;
    let c = qr_least_squares(&v, &next)?;
    let p = ds.state_dim();
    let q = ds.input_dim();
    MatrixPair::new(
        c.view((0, 0), (p, p)).transpose(),
        c.view((p, 0), (q, p)).transpose(),
    )
}

/// [`lti_fit`] repeated over the dataset horizon.
pub fn lti_model<T: Real>(ds: &Dataset<T>) -> Result<LtvModel<T>> {
    LtvModel::constant(lti_fit(ds)?, ds.steps()?, ds.dt(), Method::Lti)
}
