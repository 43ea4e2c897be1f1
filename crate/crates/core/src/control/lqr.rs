use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::reference::ReferenceSpec;
use super::weights::CostWeights;
use crate::error::{Error, Result};
use crate::ident::{LtvModel, Method};
use crate::scalar::{lit, to_f64, Real};

/// Time-varying feedback gains with feedforward, `u = -K_k (x - x_ref) + u_ff(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GainSchedule<T: Real> {
    /// `K_k`, `q x p`, for `k = 0..N-1`.
    pub gains: Vec<DMatrix<T>>,
    pub feedforward: Vec<DVector<T>>,
    /// Cost-to-go matrices `P_0..P_N`.
    pub cost_to_go: Vec<DMatrix<T>>,
    pub dt: f64,
    /// Method of the model the schedule was designed on.
    pub source: Method,
    pub hyperparameters: BTreeMap<String, f64>,
}

impl<T: Real> GainSchedule<T> {
    pub fn steps(&self) -> usize {
        self.gains.len()
    }

    pub fn state_dim(&self) -> usize {
        self.gains[0].ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.gains[0].nrows()
    }

    pub fn with_feedforward(mut self, feedforward: Vec<DVector<T>>) -> Result<Self> {
        if feedforward.len() != self.steps() || feedforward.iter().any(|u| u.len() != self.input_dim()) {
            return Err(Error::Shape("feedforward does not match the schedule".into()));
        }
        self.feedforward = feedforward;
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.gains
            .iter()
            .chain(&self.cost_to_go)
            .all(|m| m.iter().all(|v| v.is_finite()))
            && self.feedforward.iter().all(|u| u.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Real>(&self) -> GainSchedule<U> {
        let m = |x: &DMatrix<T>| x.map(|v| lit::<U>(to_f64(v)));
        GainSchedule {
            gains: self.gains.iter().map(m).collect(),
            feedforward: self.feedforward.iter().map(|u| u.map(|v| lit::<U>(to_f64(v)))).collect(),
            cost_to_go: self.cost_to_go.iter().map(m).collect(),
            dt: self.dt,
            source: self.source,
            hyperparameters: self.hyperparameters.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        let row_major = |m: &DMatrix<T>| -> Vec<f64> {
            (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| to_f64(m[(i, j)])))
                .collect()
        };
        let file = ScheduleFile {
            p: self.state_dim(),
            q: self.input_dim(),
            n: self.steps(),
            dt: self.dt,
            method: self.source,
            k: self.gains.iter().map(row_major).collect(),
            u_ff: self
                .feedforward
                .iter()
                .map(|u| u.iter().map(|v| to_f64(*v)).collect())
                .collect(),
            p_matrices: self.cost_to_go.iter().map(row_major).collect(),
            hyperparameters: self.hyperparameters.clone(),
        };
        toml::to_string(&file).expect("schedule serializes")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        let f: ScheduleFile = toml::from_str(text).map_err(|e| e.to_string())?;
        if f.n == 0 || f.k.len() != f.n || f.u_ff.len() != f.n {
            return Err(format!("expected {} gains and feedforward entries", f.n));
        }
        let conv = |v: &[f64]| v.iter().map(|x| lit::<T>(*x)).collect::<Vec<_>>();
        let mat = |v: &Vec<f64>, r: usize, c: usize| -> std::result::Result<DMatrix<T>, String> {
            if v.len() != r * c {
                return Err(format!("expected {} entries, found {}", r * c, v.len()));
            }
            Ok(DMatrix::from_row_slice(r, c, &conv(v)))
        };
        Ok(GainSchedule {
            gains: f.k.iter().map(|k| mat(k, f.q, f.p)).collect::<std::result::Result<_, _>>()?,
            feedforward: f
                .u_ff
                .iter()
                .map(|u| {
                    if u.len() == f.q {
                        Ok(DVector::from_vec(conv(u)))
                    } else {
                        Err(format!("feedforward entry has {} values, expected {}", u.len(), f.q))
                    }
                })
                .collect::<std::result::Result<_, _>>()?,
            cost_to_go: f
                .p_matrices
                .iter()
                .map(|m| mat(m, f.p, f.p))
                .collect::<std::result::Result<_, _>>()?,
            dt: f.dt,
            source: f.method,
            hyperparameters: f.hyperparameters,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::parse(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    p: usize,
    q: usize,
    n: usize,
    dt: f64,
    method: Method,
    /// Row-major `K_k`.
    k: Vec<Vec<f64>>,
    u_ff: Vec<Vec<f64>>,
    /// Row-major `P_k`, `k = 0..N`.
    p_matrices: Vec<Vec<f64>>,
    hyperparameters: BTreeMap<String, f64>,
}

/// Finite-horizon LQR by backward dynamic programming:
///
/// ```text
/// K_k = (R + B^T P_{k+1} B)^-1 B^T P_{k+1} A
/// P_k = Q + K_k^T R K_k + (A - B K_k)^T P_{k+1} (A - B K_k),   P_N = H
/// ```
///
/// The feedforward is left at zero; see [`feedforward`].
pub fn lqr_ltv<T: Real>(model: &LtvModel<T>, w: &CostWeights<T>) -> Result<GainSchedule<T>> {
    w.validate()?;
    let (p, q, n) = (model.state_dim(), model.input_dim(), model.steps());
    if w.q.nrows() != p || w.r.nrows() != q {
        return Err(Error::Shape(format!(
            "weights are for p = {}, q = {}, model has p = {p}, q = {q}",
            w.q.nrows(),
            w.r.nrows()
        )));
    }
    let half = lit::<T>(0.5);
    let mut cost_to_go = vec![DMatrix::zeros(p, p); n + 1];
    let mut gains = vec![DMatrix::zeros(q, p); n];
    cost_to_go[n] = w.h.clone();
    for k in (0..n).rev() {
        let (a, b) = (&model.pairs[k].a, &model.pairs[k].b);
        let next = &cost_to_go[k + 1];
        let bt_p = b.transpose() * next;
        let lhs = &w.r + &bt_p * b;
        let gain = lhs.lu().solve(&(bt_p * a)).ok_or_else(|| Error::Synthesis {
            step: k,
            reason: "R + B^T P B is singular".into(),
        })?;
        let closed = a - b * &gain;
        let pk = &w.q + gain.transpose() * &w.r * &gain + closed.transpose() * next * &closed;
        let pk = (&pk + pk.transpose()) * half;
        if pk.iter().chain(gain.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Synthesis {
                step: k,
                reason: "non-finite Riccati iterate".into(),
            });
        }
        gains[k] = gain;
        cost_to_go[k] = pk;
    }
    Ok(GainSchedule {
        gains,
        feedforward: vec![DVector::zeros(q); n],
        cost_to_go,
        dt: model.dt,
        source: model.method,
        hyperparameters: model.hyperparameters.clone(),
    })
}

/// `u_ff(k) = argmin_u |x_ref(k+1) - A(k) x_ref(k) - B(k) u|` (minimum-norm when `B(k)` is rank deficient).
pub fn feedforward<T: Real>(model: &LtvModel<T>, reference: &ReferenceSpec) -> Result<Vec<DVector<T>>> {
    reference.validate()?;
    let (p, n) = (model.state_dim(), model.steps());
    (0..n)
        .map(|k| {
            let (a, b) = (&model.pairs[k].a, &model.pairs[k].b);
            let target = reference.state_at::<T>(k + 1, model.dt, p) - a * reference.state_at::<T>(k, model.dt, p);
            b.clone()
                .svd(true, true)
                .solve(&target, lit(1e-12))
                .map_err(|e| Error::Synthesis {
                    step: k,
                    reason: e.to_string(),
                })
        })
        .collect()
}

/// Gains and feedforward for tracking `reference` on `model`.
pub fn tracking_controller<T: Real>(
    model: &LtvModel<T>,
    w: &CostWeights<T>,
    reference: &ReferenceSpec,
) -> Result<GainSchedule<T>> {
    lqr_ltv(model, w)?.with_feedforward(feedforward(model, reference)?)
}
