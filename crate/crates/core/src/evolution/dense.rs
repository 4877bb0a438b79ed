//! Dense-diagonalisation propagator; the reference route for small systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::SparseHamiltonian;
use crate::linalg::C64;

pub const MAX_DENSE_DIMENSION: usize = 4096;

#[derive(Clone, Debug)]
pub struct DenseEigen {
    evals: DVector<f64>,
    evecs: DMatrix<f64>,
}

impl DenseEigen {
    pub fn new(h: &SparseHamiltonian) -> Result<Self> {
        if h.dimension() > MAX_DENSE_DIMENSION {
            return Err(Error::Size(format!(
                "dense diagonalisation limited to dimension {MAX_DENSE_DIMENSION}, got {}",
                h.dimension()
            )));
        }
        let eig = h.to_dense().symmetric_eigen();
        Ok(Self { evals: eig.eigenvalues, evecs: eig.eigenvectors })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.evals
    }

    pub fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let n = psi.len();
        // c = Vᵀψ, then ψ(t) = V e^{-iΛt} c
        let mut c = vec![C64::new(0.0, 0.0); n];
        for (k, ck) in c.iter_mut().enumerate() {
            let col = self.evecs.column(k);
            let proj: C64 = col.iter().zip(psi).map(|(v, a)| a * *v).sum();
            *ck = proj * C64::from_polar(1.0, -self.evals[k] * t);
        }
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (k, ck) in c.iter().enumerate() {
            let col = self.evecs.column(k);
            out.iter_mut().zip(col.iter()).for_each(|(o, v)| *o += ck * *v);
        }
        out
    }

    /// Full propagator matrix e^{-iHt}.
    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let n = self.evals.len();
        let phases: Vec<C64> = self.evals.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        DMatrix::from_fn(n, n, |r, c| {
            (0..n).map(|k| phases[k] * (self.evecs[(r, k)] * self.evecs[(c, k)])).sum()
        })
    }
}
