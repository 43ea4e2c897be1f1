//! Eigensystem realization for time-varying systems with full-state output.
//!
//! Markov parameters `h(j, i) = C(j) Phi(j, i+1) B(i)` and transitions
//! `Phi(j, s)` are regressed from an ensemble of experiments. For each step a
//! generalized Hankel matrix
//!
//! ```text
//! H(k)  = [ Phi(j, s) | h(j, k-1) | ... | h(j, s) ],   j = k .. k+a-1
//! ```
//!
//! factors as `O_k R_k`. The shifted matrix with rows `j = k+1 ..` equals
//! `O_{k+1} A(k) R_k`, which gives `A(k)` in the frame of the factorization;
//! the first block row of `O_k` is that frame's output map, used to return
//! every step to state coordinates.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use super::lsq::qr_least_squares;
use super::model::{LtvModel, Method};
use crate::datagen::{Dataset, Trajectory};
use crate::dynamics::MatrixPair;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Relative gap below which a Hankel factorization is rejected.
pub const GAP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct TveraExperiments<T: Real> {
    /// Unforced runs from nonzero initial conditions.
    pub free: Vec<Trajectory<T>>,
    /// Runs under random input from zero initial conditions.
    pub forced: Vec<Trajectory<T>>,
}

impl<T: Real> TveraExperiments<T> {
    /// Splits a dataset by whether a trajectory's input is identically zero.
    pub fn from_dataset(ds: &Dataset<T>) -> Self {
        let (free, forced) = ds
            .trajectories
            .iter()
            .cloned()
            .partition(|t| t.inputs.iter().all(|u| u.iter().all(|v| *v == T::zero())));
        TveraExperiments { free, forced }
    }

    fn all(&self) -> Vec<&Trajectory<T>> {
        self.free.iter().chain(&self.forced).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TveraConfig {
    /// Block rows of each Hankel matrix.
    pub block_rows: usize,
    /// Past inputs used as Hankel columns.
    pub block_cols: usize,
    /// Realization order; must equal the state dimension.
    pub order: usize,
    pub free_experiments: usize,
    pub forced_experiments: usize,
}

impl Default for TveraConfig {
    fn default() -> Self {
        TveraConfig {
            block_rows: 2,
            block_cols: 2,
            order: 2,
            free_experiments: 10,
            forced_experiments: 10,
        }
    }
}

impl TveraConfig {
    /// Experiments needed for every transition/Markov regression to be determined.
    pub fn required_experiments(&self, p: usize, q: usize) -> usize {
        p + (self.block_rows + self.block_cols) * q
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.block_rows == 0 || self.block_cols == 0 {
            return Err(Error::Config("TVERA order and block sizes must be at least 1".into()));
        }
        Ok(())
    }
}

struct Regressions<'a, T: Real> {
    exps: Vec<&'a Trajectory<T>>,
    p: usize,
    q: usize,
    cache: HashMap<(usize, usize), DMatrix<T>>,
}

impl<T: Real> Regressions<'_, T> {
    /// `Theta` with `y(j) = Theta [y(s); u(s); ...; u(j-1)]`.
    fn theta(&mut self, s: usize, j: usize) -> Result<&DMatrix<T>> {
        if !self.cache.contains_key(&(s, j)) {
            let (p, q) = (self.p, self.q);
            let cols = p + (j - s) * q;
            let mut v = DMatrix::zeros(self.exps.len(), cols);
            let mut y = DMatrix::zeros(self.exps.len(), p);
            for (r, e) in self.exps.iter().enumerate() {
                v.view_mut((r, 0), (1, p)).copy_from(&e.states[s].transpose());
                for i in s..j {
                    v.view_mut((r, p + (i - s) * q), (1, q)).copy_from(&e.inputs[i].transpose());
                }
                y.view_mut((r, 0), (1, p)).copy_from(&e.states[j].transpose());
            }
            let theta = qr_least_squares(&v, &y)
                .map_err(|e| Error::IllPosed {
                    step: j,
                    reason: format!("Markov regression from {s}: {e}"),
                })?
                .transpose();
            self.cache.insert((s, j), theta);
        }
        Ok(&self.cache[&(s, j)])
    }

    /// Hankel block with rows `j in rows`, columns `[Phi(j,s) | h(j,k-1) .. h(j,s)]`.
    fn hankel(&mut self, k: usize, s: usize, rows: std::ops::Range<usize>) -> Result<DMatrix<T>> {
        let (p, q) = (self.p, self.q);
        let cols = p + (k - s) * q;
        let mut h = DMatrix::zeros(rows.len() * p, cols);
        for (r, j) in rows.enumerate() {
            let theta = self.theta(s, j)?.clone();
            h.view_mut((r * p, 0), (p, p)).copy_from(&theta.view((0, 0), (p, p)));
            for (c, i) in (s..k).rev().enumerate() {
                h.view_mut((r * p, p + c * q), (p, q))
                    .copy_from(&theta.view((0, p + (i - s) * q), (p, q)));
            }
        }
        Ok(h)
    }
}

struct Factors<T: Real> {
    obs: DMatrix<T>,
    obs_pinv: DMatrix<T>,
    ctrb: DMatrix<T>,
    ctrb_pinv: DMatrix<T>,
}

fn factorize<T: Real>(h: DMatrix<T>, order: usize, step: usize) -> Result<Factors<T>> {
    if h.nrows().min(h.ncols()) < order {
        return Err(Error::IllPosed {
            step,
            reason: format!("{}x{} Hankel matrix cannot have rank {order}", h.nrows(), h.ncols()),
        });
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let sv = &svd.singular_values;
    let top = sv[0];
    let last = sv[order - 1];
    if !(last > top * lit::<T>(GAP_TOL)) {
        return Err(Error::IllPosed {
            step,
            reason: format!("singular value {order} is {last} against a largest of {top}"),
        });
    }
    let root = DMatrix::from_diagonal(&sv.rows(0, order).map(|v| v.sqrt()));
    let root_inv = DMatrix::from_diagonal(&sv.rows(0, order).map(|v| T::one() / v.sqrt()));
    let un = u.columns(0, order);
    let vn = vt.rows(0, order);
    Ok(Factors {
        obs: un * &root,
        obs_pinv: &root_inv * un.transpose(),
        ctrb: &root * vn,
        ctrb_pinv: vn.transpose() * &root_inv,
    })
}

/// Realizes `(A(k), B(k))` from free and forced experiments.
pub fn tvera_fit<T: Real>(exps: &TveraExperiments<T>, cfg: &TveraConfig) -> Result<LtvModel<T>> {
    cfg.validate()?;
    let all = exps.all();
    let first = all
        .first()
        .ok_or_else(|| Error::Precondition("no TVERA experiments".into()))?;
    let (p, q, n) = (first.state_dim(), first.input_dim(), first.steps());
    for t in &all {
        t.validate()?;
        if t.steps() != n || t.state_dim() != p || t.input_dim() != q {
            return Err(Error::Shape("TVERA experiments differ in length or dimension".into()));
        }
    }
    if cfg.order != p {
        return Err(Error::Config(format!(
            "full-state realization needs order = p = {p}, got {}",
            cfg.order
        )));
    }
    let required = cfg.required_experiments(p, q);
    if exps.free.len() < cfg.free_experiments.max(p)
        || exps.forced.len() < cfg.forced_experiments
        || all.len() < required
    {
        return Err(Error::Precondition(format!(
            "TVERA needs at least {} free and {} forced experiments ({} in total); got {} and {}",
            cfg.free_experiments.max(p),
            cfg.forced_experiments,
            required,
            exps.free.len(),
            exps.forced.len()
        )));
    }
    if n == 0 {
        return Err(Error::Shape("experiments have no transitions".into()));
    }

    let mut reg = Regressions {
        exps: all.clone(),
        p,
        q,
        cache: HashMap::new(),
    };
    let (alpha, beta) = (cfg.block_rows, cfg.block_cols);
    let start = |k: usize| k - k.min(beta);
    let depth = |k: usize| alpha.min(n - k + 1);

    let mut factors = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = start(k);
        let h = reg.hankel(k, s, k..k + depth(k))?;
        factors.push(factorize(h, p, k)?);
    }
    let frames: Vec<DMatrix<T>> = factors.iter().map(|f| f.obs.rows(0, p).into_owned()).collect();
    let frame_inv: Vec<DMatrix<T>> = frames
        .iter()
        .enumerate()
        .map(|(k, c)| {
            c.clone().try_inverse().ok_or_else(|| Error::IllPosed {
                step: k,
                reason: "output map of the realization is singular".into(),
            })
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let s = start(k);
        let shifted = reg.hankel(k, s, k + 1..k + 1 + depth(k + 1))?;
        let a_hat = &factors[k + 1].obs_pinv * shifted * &factors[k].ctrb_pinv;
        let b_hat = factors[k + 1].ctrb.columns(p, q).into_owned();
        pairs.push(MatrixPair::new(
            &frames[k + 1] * a_hat * &frame_inv[k],
            &frames[k + 1] * b_hat,
        )?);
    }
    let dt = first.times.get(1).map_or(0.0, |t1| t1 - first.times[0]);
    let mut hyper = BTreeMap::new();
    hyper.insert("block_rows".to_string(), alpha as f64);
    hyper.insert("block_cols".to_string(), beta as f64);
    LtvModel::new(pairs, dt, Method::Tvera, hyper)
}

/// Hankel matrix `H(k)` as used by [`tvera_fit`], for inspection.
pub fn tvera_hankel<T: Real>(exps: &TveraExperiments<T>, cfg: &TveraConfig, k: usize) -> Result<DMatrix<T>> {
    let all = exps.all();
    let first = all
        .first()
        .ok_or_else(|| Error::Precondition("no TVERA experiments".into()))?;
    let (p, q, n) = (first.state_dim(), first.input_dim(), first.steps());
    if k > n {
        return Err(Error::Shape(format!("step {k} beyond horizon {n}")));
    }
    let mut reg = Regressions {
        exps: all,
        p,
        q,
        cache: HashMap::new(),
    };
    let s = k - k.min(cfg.block_cols);
    reg.hankel(k, s, k..k + cfg.block_rows.min(n - k + 1))
}
