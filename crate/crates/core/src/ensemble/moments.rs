use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::binomial;
use crate::linalg::{eigvalsh, kron, trace_norm_distance, CMat, C64, ZERO};

use super::ProjectedEnsemble;

/// Largest moment matrix side (d^k) that is built densely.
pub const MAX_MOMENT_DIMENSION: usize = 64;

/// Σ_z p(z) ρ(z)^{⊗k}.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    pub k: usize,
    pub d: usize,
    pub matrix: CMat,
}

impl MomentMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() < 1e-9
    }

    pub fn normalized(&self) -> Self {
        let t = self.trace();
        Self { k: self.k, d: self.d, matrix: &self.matrix / C64::new(t, 0.0) }
    }
}

fn moment_side(d: usize, k: usize) -> Result<usize> {
    if k == 0 || d < 2 {
        return Err(Error::param(format!("moment needs k >= 1 and d >= 2, got k={k}, d={d}")));
    }
    match d.checked_pow(k as u32) {
        Some(side) if side <= MAX_MOMENT_DIMENSION => Ok(side),
        _ => Err(Error::Size(format!("{d}^{k} exceeds the moment-matrix limit {MAX_MOMENT_DIMENSION}"))),
    }
}

fn tensor_power(rho: &CMat, k: usize) -> CMat {
    (1..k).fold(rho.clone(), |acc, _| kron(&acc, rho))
}

pub fn kth_moment(ens: &ProjectedEnsemble, k: usize, exec: Execution) -> Result<MomentMatrix> {
    let side = moment_side(ens.dim(), k)?;
    let entries = ens.entries();
    let matrix = exec.chunked_reduce(
        entries.len(),
        64,
        || CMat::from_element(side, side, ZERO),
        |acc, i| *acc += tensor_power(&entries[i].rho, k) * C64::new(entries[i].p, 0.0),
        |acc, part| *acc += part,
    );
    Ok(MomentMatrix { k, d: ens.dim(), matrix })
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Operator permuting the k tensor factors of (C^d)^{⊗k}: factor i moves to
/// position `perm[i]`. Factor 0 is the most significant digit.
pub fn permutation_operator(d: usize, k: usize, perm: &[usize]) -> Result<CMat> {
    let side = moment_side(d, k)?;
    if perm.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: perm.len() });
    }
    let mut out = CMat::from_element(side, side, ZERO);
    let mut digits = vec![0; k];
    let mut moved = vec![0; k];
    for col in 0..side {
        let mut c = col;
        for i in (0..k).rev() {
            digits[i] = c % d;
            c /= d;
        }
        for i in 0..k {
            moved[perm[i]] = digits[i];
        }
        let row = moved.iter().fold(0, |acc, &x| acc * d + x);
        out[(row, col)] = C64::new(1.0, 0.0);
    }
    Ok(out)
}

/// k-th moment of Haar-random pure states in dimension d: the projector onto
/// the symmetric subspace divided by its dimension binom(d+k−1, k).
pub fn haar_moment(d: usize, k: usize) -> Result<MomentMatrix> {
    let side = moment_side(d, k)?;
    let perms = permutations(k);
    let mut sym = CMat::from_element(side, side, ZERO);
    for p in &perms {
        sym += permutation_operator(d, k, p)?;
    }
    let scale = 1.0 / (perms.len() as f64 * binomial(d + k - 1, k) as f64);
    Ok(MomentMatrix { k, d, matrix: sym * C64::new(scale, 0.0) })
}

/// ½‖a − b‖₁.
pub fn trace_distance(a: &MomentMatrix, b: &MomentMatrix) -> Result<f64> {
    if a.matrix.shape() != b.matrix.shape() {
        return Err(Error::DimensionMismatch { expected: a.matrix.nrows(), found: b.matrix.nrows() });
    }
    Ok(trace_norm_distance(&a.matrix, &b.matrix))
}

/// −Tr ρ ln ρ in nats.
pub fn von_neumann_entropy(rho: &CMat) -> Result<f64> {
    let vals = eigvalsh(rho);
    if let Some(&v) = vals.iter().find(|&&v| v < -1e-9) {
        return Err(Error::Numerical { message: "density matrix has a negative eigenvalue".into(), residual: v });
    }
    Ok(vals.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum())
}

pub fn moment_entropy(m: &MomentMatrix) -> Result<f64> {
    von_neumann_entropy(&m.matrix)
}
