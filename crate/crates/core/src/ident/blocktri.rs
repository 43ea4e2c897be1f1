//! Block-tridiagonal systems arising from first-difference smoothing.
//!
//! Solves, for `C_0..C_{N-1}`,
//!
//! ```text
//! G_k C_k + l_k (C_k - C_{k-1}) + l_{k+1} (C_k - C_{k+1}) = R_k
//! ```
//!
//! with `l_0 = l_N = 0`. The forward sweep keeps the Schur complements in the
//! form `S_k = G_k + l_k (S_{k-1} + l_k I)^-1 S_{k-1}`, which never subtracts
//! nearly equal quantities, so large `l` does not lose precision.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Factorization of the chain for fixed `G` and couplings; reusable across right-hand sides.
pub struct ChainFactor<T: Real> {
    /// Cholesky of `S_k + l_{k+1} I` for `k < N-1`.
    links: Vec<Cholesky<T, Dyn>>,
    /// Cholesky of `S_{N-1}`.
    last: Cholesky<T, Dyn>,
    couplings: Vec<T>,
}

fn sym<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    (&m + m.transpose()) * lit::<T>(0.5)
}

impl<T: Real> ChainFactor<T> {
    /// `couplings[k]` links `C_k` and `C_{k+1}`; there are `N-1` of them.
    pub fn new(gram: &[DMatrix<T>], couplings: &[T]) -> Result<Self> {
        let n = gram.len();
        if n == 0 {
            return Err(Error::Shape("empty chain".into()));
        }
        if couplings.len() + 1 != n {
            return Err(Error::Shape(format!("{} couplings for {n} blocks", couplings.len())));
        }
        let d = gram[0].nrows();
        let eye = DMatrix::<T>::identity(d, d);
        let mut links = Vec::with_capacity(n - 1);
        let mut s = sym(gram[0].clone());
        for k in 1..n {
            let l = couplings[k - 1];
            let chol = (&s + &eye * l)
                .cholesky()
                .ok_or_else(|| Error::Numerical(format!("block {} is not positive definite", k - 1)))?;
            let solved = chol.solve(&s);
            s = sym(&gram[k] + solved * l);
            links.push(chol);
        }
        let last = s
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("block {} is not positive definite", n - 1)))?;
        Ok(ChainFactor {
            links,
            last,
            couplings: couplings.to_vec(),
        })
    }

    pub fn solve(&self, rhs: &[DMatrix<T>]) -> Result<Vec<DMatrix<T>>> {
        let n = self.links.len() + 1;
        if rhs.len() != n {
            return Err(Error::Shape(format!("{} right-hand sides for {n} blocks", rhs.len())));
        }
        let mut reduced = Vec::with_capacity(n);
        reduced.push(rhs[0].clone());
        for k in 1..n {
            let prev = self.links[k - 1].solve(&reduced[k - 1]);
            reduced.push(&rhs[k] + prev * self.couplings[k - 1]);
        }
        let mut out = vec![DMatrix::zeros(0, 0); n];
        out[n - 1] = self.last.solve(&reduced[n - 1]);
        for k in (0..n - 1).rev() {
            let r = &reduced[k] + &out[k + 1] * self.couplings[k];
            out[k] = self.links[k].solve(&r);
        }
        Ok(out)
    }
}

/// One-shot factor and solve.
pub fn solve_chain<T: Real>(gram: &[DMatrix<T>], rhs: &[DMatrix<T>], couplings: &[T]) -> Result<Vec<DMatrix<T>>> {
    ChainFactor::new(gram, couplings)?.solve(rhs)
}
