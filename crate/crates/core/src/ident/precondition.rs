use nalgebra::{DMatrix, DVector};

use crate::datagen::Dataset;
use crate::dynamics::MatrixPair;
use crate::error::{Error, Result};
use crate::ident::model::{LtvModel, Transform};
use crate::scalar::{lit, Real};

/// Below this standard deviation a channel is treated as constant.
const MIN_STD: f64 = 1e-12;

fn channel_scales<T: Real>(values: impl Iterator<Item = DVector<T>>, dim: usize, degenerate: &mut bool) -> DVector<T> {
    let mut count = 0usize;
    let mut sum = DVector::<T>::zeros(dim);
    let mut sq = DVector::<T>::zeros(dim);
    for v in values {
        sum += &v;
        sq += v.component_mul(&v);
        count += 1;
    }
    let n = lit::<T>(count.max(1) as f64);
    DVector::from_iterator(
        dim,
        (0..dim).map(|i| {
            let mean = sum[i] / n;
            let var = (sq[i] / n - mean * mean).max(T::zero());
            let std = var.sqrt();
            if std > lit(MIN_STD) {
                T::one() / std
            } else {
                *degenerate = true;
                T::one()
            }
        }),
    )
}

/// Per-channel standard deviation of the training data, inverted.
/// Zero-variance channels keep scale 1 and flag the transform as degenerate.
pub fn fit_transform<T: Real>(ds: &Dataset<T>) -> Result<Transform<T>> {
    if ds.is_empty() {
        return Err(Error::Precondition("no trajectories to precondition".into()));
    }
    let (p, q) = (ds.state_dim(), ds.input_dim());
    let mut degenerate = false;
    let state_scales = channel_scales(
        ds.trajectories.iter().flat_map(|t| t.states.iter().cloned()),
        p,
        &mut degenerate,
    );
    let input_scales = channel_scales(
        ds.trajectories.iter().flat_map(|t| t.inputs.iter().cloned()),
        q,
        &mut degenerate,
    );
    if degenerate {
        log::warn!("zero-variance channel in training data; its scale is left at 1");
    }
    Ok(Transform {
        state_scales,
        input_scales,
        degenerate,
    })
}

/// Applies a transform to every trajectory.
pub fn apply_transform<T: Real>(ds: &Dataset<T>, tr: &Transform<T>) -> Result<Dataset<T>> {
    if tr.state_scales.len() != ds.state_dim() || tr.input_scales.len() != ds.input_dim() {
        return Err(Error::Shape("transform does not match dataset dimensions".into()));
    }
    let mut out = ds.clone();
    for traj in &mut out.trajectories {
        for x in &mut traj.states {
            x.component_mul_assign(&tr.state_scales);
        }
        for u in &mut traj.inputs {
            u.component_mul_assign(&tr.input_scales);
        }
    }
    Ok(out)
}

/// Scales the dataset to unit per-channel standard deviation.
pub fn precondition<T: Real>(ds: &Dataset<T>) -> Result<(Dataset<T>, Transform<T>)> {
    let tr = fit_transform(ds)?;
    Ok((apply_transform(ds, &tr)?, tr))
}

fn map_pairs<T: Real>(
    model: &LtvModel<T>,
    tr: &Transform<T>,
    f: impl Fn(&MatrixPair<T>, &DMatrix<T>, &DMatrix<T>, &DMatrix<T>, &DMatrix<T>) -> MatrixPair<T>,
) -> Result<LtvModel<T>> {
    if tr.state_scales.len() != model.state_dim() || tr.input_scales.len() != model.input_dim() {
        return Err(Error::Shape("transform does not match model dimensions".into()));
    }
    let sx = DMatrix::from_diagonal(&tr.state_scales);
    let sx_inv = DMatrix::from_diagonal(&tr.state_scales.map(|v| T::one() / v));
    let su = DMatrix::from_diagonal(&tr.input_scales);
    let su_inv = DMatrix::from_diagonal(&tr.input_scales.map(|v| T::one() / v));
    let mut out = model.clone();
    out.pairs = model.pairs.iter().map(|p| f(p, &sx, &sx_inv, &su, &su_inv)).collect();
    Ok(out)
}

/// Maps a model fitted on scaled data back to original units:
/// `A = S_x^-1 A~ S_x`, `B = S_x^-1 B~ S_u`.
pub fn unscale_model<T: Real>(model: &LtvModel<T>, tr: &Transform<T>) -> Result<LtvModel<T>> {
    map_pairs(model, tr, |p, sx, sx_inv, su, _| MatrixPair {
        a: sx_inv * &p.a * sx,
        b: sx_inv * &p.b * su,
    })
}

/// Inverse of [`unscale_model`].
pub fn scale_model<T: Real>(model: &LtvModel<T>, tr: &Transform<T>) -> Result<LtvModel<T>> {
    map_pairs(model, tr, |p, sx, sx_inv, _, su_inv| MatrixPair {
        a: sx * &p.a * sx_inv,
        b: sx * &p.b * su_inv,
    })
}
