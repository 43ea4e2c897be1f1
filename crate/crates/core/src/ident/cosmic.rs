use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::blocktri::solve_chain;
use super::model::{LtvModel, Method};
use super::precondition::{apply_transform, precondition, scale_model, unscale_model};
use super::regress::{check_excitation, regressors_at};
use crate::datagen::{Dataset, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosmicConfig {
    pub lambda: f64,
    /// Fit on the first trajectory only.
    pub single_trajectory: bool,
    /// Standardize channels before solving.
    pub precondition: bool,
}

impl CosmicConfig {
    pub fn new(lambda: f64) -> Self {
        CosmicConfig {
            lambda,
            single_trajectory: false,
            precondition: true,
        }
    }

    pub fn single(lambda: f64) -> Self {
        CosmicConfig {
            single_trajectory: true,
            ..Self::new(lambda)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Closed-form minimizer of
/// `(1/2N) sum_k |V(k) C(k) - X'(k)|^2 + (lambda/2) sum_k |C(k) - C(k-1)|^2`.
pub fn cosmic_fit<T: Real>(ds: &Dataset<T>, cfg: &CosmicConfig) -> Result<LtvModel<T>> {
    cfg.validate()?;
    let single;
    let ds = if cfg.single_trajectory {
        if ds.is_empty() {
            return Err(Error::Shape("empty dataset".into()));
        }
        single = ds.subset(&[0]);
        &single
    } else {
        ds
    };
    let report = check_excitation(ds)?;
    if !report.satisfied {
        return Err(Error::Identifiability {
            rank: report.rank,
            required: report.required,
        });
    }

    let (work, transform) = if cfg.precondition {
        let (scaled, tr) = precondition(ds)?;
        (scaled, Some(tr))
    } else {
        (ds.clone(), None)
    };
    let n = work.steps()?;
    let p = work.state_dim();
    let inv_n = lit::<T>(1.0 / n as f64);
    let mut gram = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for k in 0..n {
        let (v, next) = regressors_at(&work, k);
        let vt = v.transpose();
        gram.push(&vt * &v * inv_n);
        rhs.push(vt * next * inv_n);
    }
    let couplings = vec![lit::<T>(cfg.lambda); n - 1];
    let cs = solve_chain(&gram, &rhs, &couplings)?;
    if cs.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("non-finite COSMIC solution".into()));
    }

    let method = if cfg.single_trajectory {
        Method::CosmicSingle
    } else {
        Method::Cosmic
    };
    let mut hyper = BTreeMap::new();
    hyper.insert("lambda".to_string(), cfg.lambda);
    let mut model = LtvModel::from_stacked(&cs, p, ds.dt(), method, hyper)?;
    if let Some(tr) = transform {
        model = unscale_model(&model, &tr)?;
        model.preconditioning = Some(tr);
    }
    Ok(model)
}

/// [`cosmic_fit`] on one trajectory.
pub fn cosmic_fit_trajectory<T: Real>(traj: &Trajectory<T>, meta: &Dataset<T>, cfg: &CosmicConfig) -> Result<LtvModel<T>> {
    let ds = Dataset {
        trajectories: vec![traj.clone()],
        free_response: 0,
        ..meta.clone()
    };
    cosmic_fit(&ds, &CosmicConfig { single_trajectory: true, ..*cfg })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveParts {
    pub total: f64,
    pub fidelity: f64,
    /// `(lambda/2) * variation`.
    pub smoothness: f64,
    /// `sum_k |C(k) - C(k-1)|_F^2`, without the weight.
    pub variation: f64,
}

/// The COSMIC objective, split into its two terms.
///
/// A model that records a preconditioning transform is evaluated in the
/// coordinates it was solved in.
pub fn cosmic_objective<T: Real>(model: &LtvModel<T>, ds: &Dataset<T>, lambda: f64) -> Result<ObjectiveParts> {
    let n = ds.steps()?;
    if n != model.steps() {
        return Err(Error::Shape(format!("model has {} steps, data has {n}", model.steps())));
    }
    let (model, ds) = match &model.preconditioning {
        Some(tr) => (scale_model(model, tr)?, apply_transform(ds, tr)?),
        None => (model.clone(), ds.clone()),
    };
    let mut fidelity = 0.0;
    let mut smoothness = 0.0;
    let mut prev: Option<DMatrix<T>> = None;
    for k in 0..n {
        let (v, next) = regressors_at(&ds, k);
        let c = model.stacked(k);
        fidelity += to_f64((v * &c - next).norm_squared());
        if let Some(prev) = prev {
            smoothness += to_f64((&c - prev).norm_squared());
        }
        prev = Some(c);
    }
    let variation = smoothness;
    let fidelity = fidelity / (2.0 * n as f64);
    let smoothness = 0.5 * lambda * variation;
    Ok(ObjectiveParts {
        total: fidelity + smoothness,
        fidelity,
        smoothness,
        variation,
    })
}
