#![allow(dead_code)]

use std::collections::BTreeMap;

use ltvid::control::CostWeights;
use ltvid::datagen::{rollout_dataset, Dataset, ExcitationMeta, Split, Trajectory};
use ltvid::dynamics::MatrixPair;
use ltvid::ident::{cosmic_objective, predict_rollout, stack_regressors, LtvModel, Method, TveraExperiments};
use ltvid::rng::substream;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn excitation() -> ExcitationMeta {
    ExcitationMeta {
        amplitude: 1.0,
        w0: 0.5,
        w1: 8.0,
        noise_var: 0.01,
    }
}

pub fn lti_pair() -> MatrixPair<f64> {
    MatrixPair::new(
        DMatrix::from_row_slice(2, 2, &[0.99, 0.02, -0.03, 0.97]),
        DMatrix::from_row_slice(2, 1, &[0.0002, 0.02]),
    )
    .unwrap()
}

pub fn const_model(steps: usize) -> LtvModel<f64> {
    LtvModel::constant(lti_pair(), steps, 0.02, Method::Linearization).unwrap()
}

/// Exact chirp-driven rollouts of `model`.
pub fn exact_data(model: &LtvModel<f64>, count: usize, seed: u64) -> Dataset<f64> {
    rollout_dataset(model, &excitation(), count, Split::Train, seed).unwrap()
}

/// A random model whose matrices drift smoothly, for solver checks.
pub fn random_ltv(steps: usize, seed: u64) -> LtvModel<f64> {
    let mut rng = substream(seed, "model", 0);
    let base = lti_pair();
    let da = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.02..0.02));
    let db = DMatrix::from_fn(2, 1, |_, _| rng.random_range(-0.01..0.01));
    let pairs = (0..steps)
        .map(|k| {
            let s = (k as f64 * 0.05).sin();
            MatrixPair::new(&base.a + &da * s, &base.b + &db * s).unwrap()
        })
        .collect();
    LtvModel::new(pairs, 0.02, Method::Linearization, BTreeMap::new()).unwrap()
}

/// Free responses from random states and white-noise responses from rest.
pub fn exact_tvera_experiments(model: &LtvModel<f64>, free: usize, forced: usize, seed: u64) -> TveraExperiments<f64> {
    let n = model.steps();
    let (p, q) = (model.state_dim(), model.input_dim());
    let make = |x0: DVector<f64>, inputs: Vec<DVector<f64>>| Trajectory {
        times: (0..=n).map(|k| k as f64 * model.dt).collect(),
        states: predict_rollout(model, &x0, &inputs).unwrap(),
        inputs,
        seed,
        noisy: false,
    };
    let mut rng = substream(seed, "tvera", 0);
    let free = (0..free)
        .map(|_| {
            let x0 = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
            make(x0, vec![DVector::zeros(q); n])
        })
        .collect();
    let forced = (0..forced)
        .map(|_| {
            let inputs = (0..n)
                .map(|_| DVector::from_fn(q, |_, _| StandardNormal.sample(&mut rng)))
                .collect();
            make(DVector::zeros(p), inputs)
        })
        .collect();
    TveraExperiments { free, forced }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Largest elementwise difference between two models.
pub fn model_diff(a: &LtvModel<f64>, b: &LtvModel<f64>) -> f64 {
    a.pairs
        .iter()
        .zip(&b.pairs)
        .map(|(x, y)| max_abs_diff(&x.a, &y.a).max(max_abs_diff(&x.b, &y.b)))
        .fold(0.0, f64::max)
}

/// Minimizes the COSMIC objective as one stacked least-squares problem.
pub fn dense_cosmic(ds: &ltvid::DatasetF64, lambda: f64) -> Vec<DMatrix<f64>> {
    let n = ds.steps().unwrap();
    let (p, q, l) = (ds.state_dim(), ds.input_dim(), ds.len());
    let d = p + q;
    let rows = n * l + (n - 1) * d;
    let mut big = DMatrix::zeros(rows, n * d);
    let mut rhs = DMatrix::zeros(rows, p);
    let w = (1.0 / n as f64).sqrt();
    for k in 0..n {
        let (v, next) = stack_regressors(ds, k).unwrap();
        big.view_mut((k * l, k * d), (l, d)).copy_from(&(v * w));
        rhs.view_mut((k * l, 0), (l, p)).copy_from(&(next * w));
    }
    let s = lambda.sqrt();
    for k in 1..n {
        let r = n * l + (k - 1) * d;
        for i in 0..d {
            big[(r + i, k * d + i)] = s;
            big[(r + i, (k - 1) * d + i)] = -s;
        }
    }
    let sol = big.svd(true, true).solve(&rhs, 1e-14).unwrap();
    (0..n).map(|k| sol.view((k * d, 0), (d, p)).into_owned()).collect()
}


/// Central-difference gradient of the objective over every model entry.
pub fn fd_gradient_inf_norm(model: &LtvModel<f64>, ds: &ltvid::DatasetF64, lambda: f64) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..model.steps() {
        for which in 0..2 {
            let (r, c) = if which == 0 {
                model.pairs[k].a.shape()
            } else {
                model.pairs[k].b.shape()
            };
            for i in 0..r {
                for j in 0..c {
                    let eval = |delta: f64| {
                        let mut m = model.clone();
                        let target = if which == 0 { &mut m.pairs[k].a } else { &mut m.pairs[k].b };
                        target[(i, j)] += delta;
                        cosmic_objective(&m, ds, lambda).unwrap().total
                    };
                    let g = (eval(h) - eval(-h)) / (2.0 * h);
                    worst = worst.max(g.abs());
                }
            }
        }
    }
    worst
}


pub fn scalar_traj(states: &[f64], inputs: &[f64]) -> Trajectory<f64> {
    Trajectory {
        times: (0..states.len()).map(|k| k as f64).collect(),
        states: states.iter().map(|s| DVector::from_element(1, *s)).collect(),
        inputs: inputs.iter().map(|u| DVector::from_element(1, *u)).collect(),
        seed: 0,
        noisy: false,
    }
}


pub fn scalar_weights(q: f64, r: f64, h: f64) -> CostWeights<f64> {
    CostWeights {
        q: DMatrix::from_element(1, 1, q),
        r: DMatrix::from_element(1, 1, r),
        h: DMatrix::from_element(1, 1, h),
    }
}

pub fn scalar_model(a: f64, b: f64, steps: usize) -> LtvModel<f64> {
    LtvModel::constant(
        MatrixPair::new(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)).unwrap(),
        steps,
        1.0,
        Method::Lti,
    )
    .unwrap()
}


/// Iterates `P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA` to its fixed point.
pub fn dare_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &CostWeights<f64>) -> DMatrix<f64> {
    let mut p = w.q.clone();
    for _ in 0..200_000 {
        let s = &w.r + b.transpose() * &p * b;
        let next = &w.q + a.transpose() * &p * a
            - a.transpose() * &p * b * s.try_inverse().unwrap() * b.transpose() * &p * a;
        let done = (&next - &p).amax() < 1e-15 * p.amax();
        p = next;
        if done {
            break;
        }
    }
    (&w.r + b.transpose() * &p * b).try_inverse().unwrap() * b.transpose() * &p * a
}

/// `count` trajectories of uniform random states and inputs, for solver checks.
pub fn random_dataset(steps: usize, count: usize, seed: u64) -> Dataset<f64> {
    let mut rng = substream(seed, "dense", 0);
    let trajectories = (0..count)
        .map(|_| Trajectory {
            times: (0..=steps).map(|k| k as f64).collect(),
            states: (0..=steps).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0))).collect(),
            inputs: (0..steps).map(|_| DVector::from_fn(1, |_, _| rng.random_range(-1.0..1.0))).collect(),
            seed,
            noisy: false,
        })
        .collect();
    Dataset {
        trajectories,
        ..exact_data(&const_model(1), 1, 0)
    }
}

/// Exact rollouts of `model` from uniform random states under white-noise inputs.
pub fn white_noise_data(model: &LtvModel<f64>, count: usize, seed: u64) -> Dataset<f64> {
    let n = model.steps();
    let (p, q) = (model.state_dim(), model.input_dim());
    let mut rng = substream(seed, "white", 0);
    let trajectories = (0..count)
        .map(|_| {
            let x0 = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
            let inputs: Vec<DVector<f64>> = (0..n)
                .map(|_| DVector::from_fn(q, |_, _| StandardNormal.sample(&mut rng)))
                .collect();
            Trajectory {
                times: (0..=n).map(|k| k as f64 * model.dt).collect(),
                states: predict_rollout(model, &x0, &inputs).unwrap(),
                inputs,
                seed,
                noisy: false,
            }
        })
        .collect();
    Dataset {
        trajectories,
        ..exact_data(&const_model(1), 1, 0)
    }
}
