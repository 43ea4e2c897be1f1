use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Constant stage and terminal costs of the tracking LQR.
#[derive(Clone, Debug, PartialEq)]
pub struct CostWeights<T: Real> {
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
    /// Terminal state cost.
    pub h: DMatrix<T>,
}

impl<T: Real> CostWeights<T> {
    /// `Q = diag(q_x, q_v)`, `R = [r]`, `H = Q` for the position/velocity plant.
    pub fn position_velocity(q_x: f64, q_v: f64, r: f64) -> Self {
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![lit(q_x), lit(q_v)]));
        CostWeights {
            h: q.clone(),
            q,
            r: DMatrix::from_element(1, 1, lit(r)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.q.nrows();
        if !self.q.is_square() || !self.h.is_square() || self.h.nrows() != p || !self.r.is_square() {
            return Err(Error::Shape("Q, H must be p x p and R q x q".into()));
        }
        for (name, m) in [("Q", &self.q), ("H", &self.h)] {
            if !is_symmetric(m) {
                return Err(Error::Config(format!("{name} is not symmetric")));
            }
            let min = m.clone().symmetric_eigenvalues().min();
            if min < lit(-1e-12) {
                return Err(Error::Config(format!("{name} is not positive semidefinite")));
            }
        }
        if !is_symmetric(&self.r) || self.r.clone().cholesky().is_none() {
            return Err(Error::Config("R is not positive definite".into()));
        }
        Ok(())
    }
}

impl Default for CostWeights<f64> {
    fn default() -> Self {
        Self::position_velocity(1.0, 0.1, 1e-3)
    }
}

fn is_symmetric<T: Real>(m: &DMatrix<T>) -> bool {
    let scale = m.amax().max(T::one());
    (m - m.transpose()).amax() <= scale * lit(1e-12)
}
