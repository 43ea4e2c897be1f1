use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::blocktri::{solve_chain, ChainFactor};
use super::model::{LtvModel, Method};
use crate::datagen::Trajectory;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Iterative scheme used for the non-smooth problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LtvModelsSolver {
    /// Majorize each group norm by a quadratic at the current iterate and
    /// solve the resulting chain exactly. Never increases the objective.
    #[default]
    Reweighted,
    /// ADMM on `z_t = C_{t+1} - C_t` with a block soft-threshold step.
    Admm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LtvModelsConfig {
    pub lambda: f64,
    pub max_iterations: usize,
    /// ADMM penalty; also the coupling of the reweighted solver's starting point.
    pub rho: f64,
    /// Relative objective change that ends the iteration.
    pub tolerance: f64,
    pub solver: LtvModelsSolver,
}

impl LtvModelsConfig {
    pub fn new(lambda: f64) -> Self {
        LtvModelsConfig {
            lambda,
            max_iterations: 2000,
            rho: 1.0,
            tolerance: 1e-8,
            solver: LtvModelsSolver::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }
}

/// `max(0, 1 - tau/|v|) v`, the proximal map of `tau |.|_2`.
pub fn block_soft_threshold<T: Real>(v: &DMatrix<T>, tau: T) -> DMatrix<T> {
    let norm = v.norm();
    if norm <= tau {
        DMatrix::zeros(v.nrows(), v.ncols())
    } else {
        v * (T::one() - tau / norm)
    }
}

#[derive(Clone, Debug)]
pub struct LtvModelsFit<T: Real> {
    pub model: LtvModel<T>,
    pub iterations: usize,
    /// Objective at every iterate, starting with the first.
    pub objective_history: Vec<f64>,
}

/// `sum_t |C_t^T v_t - y_t|^2 + lambda sum_t |C_{t+1} - C_t|_F`.
pub fn ltvmodels_objective<T: Real>(cs: &[DMatrix<T>], regressors: &[DVector<T>], targets: &[DVector<T>], lambda: f64) -> f64 {
    let fit: f64 = cs
        .iter()
        .zip(regressors.iter().zip(targets))
        .map(|(c, (v, y))| to_f64((c.tr_mul(v) - y).norm_squared()))
        .sum();
    let tv: f64 = cs.windows(2).map(|w| to_f64((&w[1] - &w[0]).norm())).sum();
    fit + lambda * tv
}

/// Floor on a difference norm when forming reweighting couplings.
const REWEIGHT_FLOOR: f64 = 1e-16;

struct Problem<T: Real> {
    regressors: Vec<DVector<T>>,
    targets: Vec<DVector<T>>,
    gram: Vec<DMatrix<T>>,
    data_rhs: Vec<DMatrix<T>>,
    p: usize,
}

impl<T: Real> Problem<T> {
    fn new(traj: &Trajectory<T>) -> Self {
        let n = traj.steps();
        let (p, q) = (traj.state_dim(), traj.input_dim());
        let regressors: Vec<DVector<T>> = (0..n)
            .map(|k| {
                let mut v = DVector::zeros(p + q);
                v.rows_mut(0, p).copy_from(&traj.states[k]);
                v.rows_mut(p, q).copy_from(&traj.inputs[k]);
                v
            })
            .collect();
        let targets: Vec<DVector<T>> = traj.states[1..].to_vec();
        let two = lit::<T>(2.0);
        let gram = regressors.iter().map(|v| v * v.transpose() * two).collect();
        let data_rhs = regressors
            .iter()
            .zip(&targets)
            .map(|(v, y)| v * y.transpose() * two)
            .collect();
        Problem {
            regressors,
            targets,
            gram,
            data_rhs,
            p,
        }
    }

    fn objective(&self, cs: &[DMatrix<T>], lambda: f64) -> f64 {
        ltvmodels_objective(cs, &self.regressors, &self.targets, lambda)
    }
}

fn small_change(history: &[f64], obj: f64, tol: f64) -> bool {
    history
        .last()
        .is_some_and(|prev| (prev - obj).abs() <= tol * obj.abs().max(1.0))
}

/// Returns the final iterate, iteration count and convergence flag.
fn solve_reweighted<T: Real>(
    prob: &Problem<T>,
    cfg: &LtvModelsConfig,
    history: &mut Vec<f64>,
) -> Result<(Vec<DMatrix<T>>, usize, bool)> {
    let n = prob.gram.len();
    let mut cs = solve_chain(&prob.gram, &prob.data_rhs, &vec![lit::<T>(cfg.rho); n - 1])?;
    history.push(prob.objective(&cs, cfg.lambda));
    let lambda = lit::<T>(cfg.lambda);
    let floor = lit::<T>(REWEIGHT_FLOOR);
    for it in 1..=cfg.max_iterations {
        // lambda |d| <= lambda (|d|^2 / 2a + a / 2), tight at |d| = a
        let couplings: Vec<T> = cs.windows(2).map(|w| lambda / (&w[1] - &w[0]).norm().max(floor)).collect();
        cs = solve_chain(&prob.gram, &prob.data_rhs, &couplings)?;
        let obj = prob.objective(&cs, cfg.lambda);
        if !obj.is_finite() {
            return Err(Error::Numerical("LTVModels iterate diverged".into()));
        }
        let done = small_change(history, obj, cfg.tolerance);
        history.push(obj);
        if done {
            return Ok((cs, it, true));
        }
    }
    Ok((cs, cfg.max_iterations, false))
}

fn solve_admm<T: Real>(
    prob: &Problem<T>,
    cfg: &LtvModelsConfig,
    history: &mut Vec<f64>,
) -> Result<(Vec<DMatrix<T>>, usize, bool)> {
    let n = prob.gram.len();
    let (d, p) = (prob.regressors[0].len(), prob.p);
    let rho = lit::<T>(cfg.rho);
    let tau = lit::<T>(cfg.lambda / cfg.rho);
    let factor = ChainFactor::new(&prob.gram, &vec![rho; n - 1])?;
    let mut z = vec![DMatrix::<T>::zeros(d, p); n - 1];
    let mut w = vec![DMatrix::<T>::zeros(d, p); n - 1];
    for it in 1..=cfg.max_iterations {
        // C update: rhs_t = 2 v_t y_t^T + rho (a_{t-1} - a_t), a = z - w
        let a: Vec<DMatrix<T>> = z.iter().zip(&w).map(|(z, w)| z - w).collect();
        let rhs: Vec<DMatrix<T>> = (0..n)
            .map(|t| {
                let mut r = prob.data_rhs[t].clone();
                if t > 0 {
                    r += &a[t - 1] * rho;
                }
                if t + 1 < n {
                    r -= &a[t] * rho;
                }
                r
            })
            .collect();
        let cs = factor.solve(&rhs)?;

        let mut primal = T::zero();
        let mut diff_norm = T::zero();
        for t in 0..n - 1 {
            let diff = &cs[t + 1] - &cs[t];
            z[t] = block_soft_threshold(&(&diff + &w[t]), tau);
            let r = diff.clone() - &z[t];
            primal += r.norm_squared();
            diff_norm += diff.norm_squared();
            w[t] += r;
        }

        let obj = prob.objective(&cs, cfg.lambda);
        if !obj.is_finite() {
            return Err(Error::Numerical("LTVModels iterate diverged".into()));
        }
        let feasible = to_f64(primal.sqrt()) <= cfg.tolerance.sqrt() * to_f64(diff_norm.sqrt()).max(1.0);
        let done = small_change(history, obj, cfg.tolerance) && feasible;
        history.push(obj);
        if done || it == cfg.max_iterations {
            return Ok((cs, it, done));
        }
    }
    unreachable!("max_iterations >= 1 is validated")
}

/// Group-lasso smoothed fit to a single trajectory.
pub fn ltvmodels_fit_detailed<T: Real>(traj: &Trajectory<T>, cfg: &LtvModelsConfig) -> Result<LtvModelsFit<T>> {
    cfg.validate()?;
    traj.validate()?;
    if traj.steps() < 2 {
        return Err(Error::Shape("LTVModels needs at least two transitions".into()));
    }
    let prob = Problem::new(traj);
    let mut history = Vec::new();
    let (cs, iterations, converged) = match cfg.solver {
        LtvModelsSolver::Reweighted => solve_reweighted(&prob, cfg, &mut history)?,
        LtvModelsSolver::Admm => solve_admm(&prob, cfg, &mut history)?,
    };

    let mut hyper = BTreeMap::new();
    hyper.insert("lambda".to_string(), cfg.lambda);
    let dt = traj.times.get(1).map_or(0.0, |t1| t1 - traj.times[0]);
    let mut model = LtvModel::from_stacked(&cs, prob.p, dt, Method::LtvModels, hyper)?;
    model.converged = converged;
    if !converged {
        log::warn!("LTVModels stopped at the iteration cap ({})", cfg.max_iterations);
    }
    Ok(LtvModelsFit {
        model,
        iterations,
        objective_history: history,
    })
}

pub fn ltvmodels_fit<T: Real>(traj: &Trajectory<T>, cfg: &LtvModelsConfig) -> Result<LtvModel<T>> {
    ltvmodels_fit_detailed(traj, cfg).map(|f| f.model)
}
