use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::MatrixPair;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Which procedure produced a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cosmic,
    CosmicSingle,
    #[serde(rename = "ltvmodels")]
    LtvModels,
    Tvera,
    #[serde(rename = "perstep")]
    PerStep,
    Lti,
    Linearization,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Cosmic,
        Method::CosmicSingle,
        Method::LtvModels,
        Method::Tvera,
        Method::PerStep,
        Method::Lti,
        Method::Linearization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cosmic => "cosmic",
            Method::CosmicSingle => "cosmic-single",
            Method::LtvModels => "ltvmodels",
            Method::Tvera => "tvera",
            Method::PerStep => "perstep",
            Method::Lti => "lti",
            Method::Linearization => "linearization",
        }
    }

    /// Whether the method takes the smoothing weight `lambda`.
    pub fn is_regularized(self) -> bool {
        matches!(self, Method::Cosmic | Method::CosmicSingle | Method::LtvModels)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-channel multipliers applied to the data before a fit:
/// `x_scaled = diag(state_scales) x`, `u_scaled = diag(input_scales) u`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transform<T: Real> {
    pub state_scales: DVector<T>,
    pub input_scales: DVector<T>,
    /// Set when some channel had zero variance and kept scale 1.
    pub degenerate: bool,
}

impl<T: Real> Transform<T> {
    pub fn identity(p: usize, q: usize) -> Self {
        Transform {
            state_scales: DVector::from_element(p, T::one()),
            input_scales: DVector::from_element(q, T::one()),
            degenerate: false,
        }
    }
}

/// Time-indexed `(A(k), B(k))`, `k = 0..N-1`, with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct LtvModel<T: Real> {
    pub pairs: Vec<MatrixPair<T>>,
    pub dt: f64,
    pub method: Method,
    pub hyperparameters: BTreeMap<String, f64>,
    pub preconditioning: Option<Transform<T>>,
    /// False when an iterative fit stopped at its iteration cap.
    pub converged: bool,
}

impl<T: Real> LtvModel<T> {
    pub fn new(
        pairs: Vec<MatrixPair<T>>,
        dt: f64,
        method: Method,
        hyperparameters: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::Shape("a model needs at least one step".into()))?;
        let (p, q) = (first.state_dim(), first.input_dim());
        for (k, pair) in pairs.iter().enumerate() {
            if !pair.a.is_square() || pair.a.nrows() != p || pair.b.nrows() != p || pair.b.ncols() != q {
                return Err(Error::Shape(format!("step {k} does not match p = {p}, q = {q}")));
            }
        }
        Ok(LtvModel {
            pairs,
            dt,
            method,
            hyperparameters,
            preconditioning: None,
            converged: true,
        })
    }

    /// The same pair repeated over `steps` steps.
    pub fn constant(pair: MatrixPair<T>, steps: usize, dt: f64, method: Method) -> Result<Self> {
        Self::new(vec![pair; steps], dt, method, BTreeMap::new())
    }

    pub fn steps(&self) -> usize {
        self.pairs.len()
    }

    pub fn state_dim(&self) -> usize {
        self.pairs[0].state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.pairs[0].input_dim()
    }

    pub fn lambda(&self) -> Option<f64> {
        self.hyperparameters.get("lambda").copied()
    }

    /// `C(k) = [A(k)^T; B(k)^T]`, shape `(p+q) x p`.
    pub fn stacked(&self, k: usize) -> DMatrix<T> {
        let pair = &self.pairs[k];
        let (p, q) = (pair.state_dim(), pair.input_dim());
        let mut c = DMatrix::zeros(p + q, p);
        c.view_mut((0, 0), (p, p)).copy_from(&pair.a.transpose());
        c.view_mut((p, 0), (q, p)).copy_from(&pair.b.transpose());
        c
    }

    pub(crate) fn from_stacked(
        cs: &[DMatrix<T>],
        p: usize,
        dt: f64,
        method: Method,
        hyperparameters: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let pairs = cs
            .iter()
            .map(|c| {
                let q = c.nrows() - p;
                MatrixPair::new(
                    c.view((0, 0), (p, p)).transpose(),
                    c.view((p, 0), (q, p)).transpose(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs, dt, method, hyperparameters)
    }

    pub fn is_finite(&self) -> bool {
        self.pairs
            .iter()
            .all(|p| p.a.iter().chain(p.b.iter()).all(|v| v.is_finite()))
    }

    pub fn cast<U: Real>(&self) -> LtvModel<U> {
        LtvModel {
            pairs: self.pairs.iter().map(MatrixPair::cast).collect(),
            dt: self.dt,
            method: self.method,
            hyperparameters: self.hyperparameters.clone(),
            preconditioning: self.preconditioning.as_ref().map(|t| Transform {
                state_scales: t.state_scales.map(|v| lit(to_f64(v))),
                input_scales: t.input_scales.map(|v| lit(to_f64(v))),
                degenerate: t.degenerate,
            }),
            converged: self.converged,
        }
    }

    pub fn to_toml(&self) -> String {
        let (p, q) = (self.state_dim(), self.input_dim());
        let row_major = |m: &DMatrix<T>| -> Vec<f64> {
            (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| to_f64(m[(i, j)])))
                .collect()
        };
        let file = ModelFile {
            p,
            q,
            n: self.steps(),
            dt: self.dt,
            method: self.method,
            converged: self.converged,
            a: self.pairs.iter().map(|s| row_major(&s.a)).collect(),
            b: self.pairs.iter().map(|s| row_major(&s.b)).collect(),
            hyperparameters: self.hyperparameters.clone(),
            preconditioning: self.preconditioning.as_ref().map(|t| PreconditioningFile {
                state_scales: t.state_scales.iter().map(|v| to_f64(*v)).collect(),
                input_scales: t.input_scales.iter().map(|v| to_f64(*v)).collect(),
                degenerate: t.degenerate,
            }),
        };
        toml::to_string(&file).expect("model serializes")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        let f: ModelFile = toml::from_str(text).map_err(|e| e.to_string())?;
        if f.a.len() != f.n || f.b.len() != f.n {
            return Err(format!("expected {} steps, found {} A and {} B blocks", f.n, f.a.len(), f.b.len()));
        }
        let pairs = f
            .a
            .iter()
            .zip(&f.b)
            .enumerate()
            .map(|(k, (a, b))| {
                if a.len() != f.p * f.p || b.len() != f.p * f.q {
                    return Err(format!("step {k} has the wrong number of entries"));
                }
                let conv = |v: &[f64]| v.iter().map(|x| lit::<T>(*x)).collect::<Vec<_>>();
                Ok(MatrixPair {
                    a: DMatrix::from_row_slice(f.p, f.p, &conv(a)),
                    b: DMatrix::from_row_slice(f.p, f.q, &conv(b)),
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let mut model = LtvModel::new(pairs, f.dt, f.method, f.hyperparameters).map_err(|e| e.to_string())?;
        model.converged = f.converged;
        model.preconditioning = f.preconditioning.map(|t| Transform {
            state_scales: DVector::from_iterator(t.state_scales.len(), t.state_scales.iter().map(|v| lit(*v))),
            input_scales: DVector::from_iterator(t.input_scales.len(), t.input_scales.iter().map(|v| lit(*v))),
            degenerate: t.degenerate,
        });
        Ok(model)
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
struct ModelFile {
    p: usize,
    q: usize,
    n: usize,
    dt: f64,
    method: Method,
    converged: bool,
    /// Row-major `A(k)`, one array per step.
    a: Vec<Vec<f64>>,
    /// Row-major `B(k)`, one array per step.
    b: Vec<Vec<f64>>,
    hyperparameters: BTreeMap<String, f64>,
    preconditioning: Option<PreconditioningFile>,
}

#[derive(Serialize, Deserialize)]
struct PreconditioningFile {
    state_scales: Vec<f64>,
    input_scales: Vec<f64>,
    degenerate: bool,
}
