//! Lanczos approximation of e^{-iHt}ψ with adaptive sub-stepping.
//!
//! Each sub-step builds an m-dimensional Krylov basis once, then picks the
//! longest step τ whose a-posteriori error estimate
//! `β_m τ |[e^{-iTτ}]_{m,1}|` stays below `tol · τ / t`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::SparseHamiltonian;
use crate::linalg::C64;

const MAX_SUBSTEPS: usize = 1_000_000;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct KrylovBasis {
    vectors: Vec<Vec<C64>>,
    /// eigenvalues / eigenvectors of the tridiagonal projection
    evals: Vec<f64>,
    evecs: DMatrix<f64>,
    /// β_m, the residual coupling out of the subspace (0 on breakdown)
    beta_out: f64,
}

impl KrylovBasis {
    fn build(h: &SparseHamiltonian, v0: &[C64], m: usize, exec: Execution) -> Self {
        let n = v0.len();
        let scale = h.spectral_bound().max(f64::MIN_POSITIVE);
        let beta0 = norm(v0);
        let mut vectors = vec![v0.iter().map(|x| x / beta0).collect::<Vec<_>>()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut w = vec![C64::new(0.0, 0.0); n];
        let mut beta_out = 0.0;
        for j in 0..m.min(n) {
            h.apply(&vectors[j], &mut w, exec);
            alpha.push(dot(&vectors[j], &w).re);
            // full re-orthogonalisation (twice) keeps V unitary to round-off
            for _ in 0..2 {
                for v in &vectors {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            if b <= 1e-13 * scale {
                beta_out = 0.0;
                break;
            }
            if j + 1 == m.min(n) {
                beta_out = b;
                break;
            }
            beta.push(b);
            vectors.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        vectors.truncate(k);
        Self { vectors, evals: eig.eigenvalues.iter().copied().collect(), evecs: eig.eigenvectors, beta_out }
    }

    /// e^{-iTτ} e_1
    fn propagate(&self, tau: f64) -> Vec<C64> {
        let k = self.evals.len();
        (0..k)
            .map(|r| {
                (0..k)
                    .map(|c| C64::from_polar(self.evecs[(r, c)] * self.evecs[(0, c)], -self.evals[c] * tau))
                    .sum()
            })
            .collect()
    }
}

pub fn expm_krylov(
    h: &SparseHamiltonian,
    psi: &[C64],
    t: f64,
    m: usize,
    tol: f64,
    exec: Execution,
) -> Result<Vec<C64>> {
    let total = t.abs();
    let mut v = psi.to_vec();
    if total == 0.0 || norm(&v) == 0.0 {
        return Ok(v);
    }
    let sign = t.signum();
    let mut remaining = total;
    let mut tau = total;
    let mut steps = 0;
    while remaining > 0.0 {
        steps += 1;
        if steps > MAX_SUBSTEPS {
            return Err(Error::Numerical {
                message: format!("Krylov did not finish within {MAX_SUBSTEPS} sub-steps"),
                residual: remaining / total,
            });
        }
        let beta0 = norm(&v);
        let basis = KrylovBasis::build(h, &v, m, exec);
        tau = (tau * 2.0).min(remaining);
        let mut y = basis.propagate(sign * tau);
        let mut err = basis.beta_out * tau * y.last().map_or(0.0, |z| z.norm());
        let mut halvings = 0;
        while err > tol * tau / total {
            halvings += 1;
            if halvings > 60 {
                return Err(Error::Numerical {
                    message: format!("Krylov step did not converge at dimension {m}"),
                    residual: err,
                });
            }
            tau *= 0.5;
            y = basis.propagate(sign * tau);
            err = basis.beta_out * tau * y.last().map_or(0.0, |z| z.norm());
        }
        if basis.beta_out == 0.0 {
            // invariant subspace: the step is exact for any τ
            tau = remaining;
            y = basis.propagate(sign * tau);
        }
        let mut next = vec![C64::new(0.0, 0.0); v.len()];
        for (coef, vec) in y.iter().zip(&basis.vectors) {
            let c = coef * beta0;
            next.iter_mut().zip(vec).for_each(|(x, b)| *x += c * b);
        }
        v = next;
        remaining -= tau;
        if remaining < 1e-15 * total {
            remaining = 0.0;
        }
    }
    Ok(v)
}
