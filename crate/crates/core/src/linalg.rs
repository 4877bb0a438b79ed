//! Small dense complex linear algebra used by the analysis layer.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let herm = hermitize(m);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// (M + M†)/2; removes round-off anti-Hermitian parts before eigensolves.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Tr(ρ²) for Hermitian ρ, computed without forming the product.
pub fn purity(rho: &CMat) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// |ψ⟩⟨ψ|
pub fn outer(psi: &[C64]) -> CMat {
    let n = psi.len();
    CMat::from_fn(n, n, |r, c| psi[r] * psi[c].conj())
}

/// Nearest unit-trace PSD matrix by eigenvalue clipping with water-filling
/// (Smolin-Gambetta-Smith): negative eigenvalues are zeroed and the deficit
/// is spread equally over the surviving ones, repeating until all are ≥ 0.
pub fn project_psd_unit_trace(m: &CMat) -> CMat {
    let (vals, vecs) = eigh(m);
    let tr: f64 = vals.iter().sum();
    let d = vals.len();
    // descending, normalised to trace one
    let mu: Vec<f64> = vals.iter().rev().map(|v| v / tr).collect();
    let mut lambda = vec![0.0; d];
    let mut acc = 0.0;
    let mut i = d;
    while i > 0 && mu[i - 1] + acc / i as f64 <= 0.0 {
        acc += mu[i - 1];
        i -= 1;
    }
    for j in 0..i {
        lambda[j] = mu[j] + acc / i as f64;
    }
    let mut out = CMat::zeros(d, d);
    for (j, &l) in lambda.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let col = vecs.column(d - 1 - j);
        out += (&col * col.adjoint()) * C64::new(l, 0.0);
    }
    hermitize(&out)
}

/// ½‖a − b‖₁ for Hermitian a, b.
pub fn trace_norm_distance(a: &CMat, b: &CMat) -> f64 {
    0.5 * eigvalsh(&(a - b)).iter().map(|v| v.abs()).sum::<f64>()
}

/// Pauli matrices I, X, Y, Z.
pub fn pauli(index: usize) -> CMat {
    let i = C64::new(0.0, 1.0);
    match index {
        0 => CMat::identity(2, 2),
        1 => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMat::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        3 => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {index} out of range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_projection_fixes_small_negative_eigenvalue() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.6, 0.0),
            C64::new(0.5, 0.0),
            C64::new(-0.1, 0.0),
            C64::new(0.0, 0.0),
        ]));
        let p = project_psd_unit_trace(&m);
        let ev = eigvalsh(&p);
        assert!(ev.iter().all(|&v| v >= -1e-12), "{ev:?}");
        assert!((trace(&p).re - 1.0).abs() < 1e-12);
        // SGS: -0.1 is spread over the three remaining eigenvalues first,
        // which pushes the zero eigenvalue negative, so it is dropped too.
        let mut ev = ev;
        ev.sort_by(|a, b| b.total_cmp(a));
        assert!((ev[0] - 0.55).abs() < 1e-12, "{ev:?}");
        assert!((ev[1] - 0.45).abs() < 1e-12, "{ev:?}");
    }

    #[test]
    fn psd_projection_leaves_valid_state_alone() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let rho = outer(&psi);
        let p = project_psd_unit_trace(&rho);
        assert!((&p - &rho).norm() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let m = CMat::from_fn(3, 3, |r, c| {
            if r == c {
                C64::new(r as f64, 0.0)
            } else if r < c {
                C64::new(0.3, 0.1 * (r + c) as f64)
            } else {
                C64::new(0.3, -0.1 * (r + c) as f64)
            }
        });
        let (vals, vecs) = eigh(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            vals.iter().map(|&v| C64::new(v, 0.0)),
        ));
        let rec = &vecs * d * vecs.adjoint();
        assert!((rec - m).norm() < 1e-12);
    }
}
