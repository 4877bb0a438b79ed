//! Chebyshev expansion of e^{-iHt}.
//!
//! With H̃ = H / a and a ≥ ‖H‖ (Gershgorin), the propagator is
//! `e^{-iHt} = Σ_k (2 - δ_k0) (-i)^k J_k(a t) T_k(H̃)`. The Hamiltonians here
//! have zero diagonal, so the spectrum is centred on zero and no shift is needed.

use crate::exec::Execution;
use crate::lattice::SparseHamiltonian;
use crate::linalg::C64;

/// Bessel functions J_0(x) … J_n(x) for x ≥ 0 by Miller's backward recurrence,
/// normalised with J_0 + 2 Σ J_2k = 1.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite());
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = n.max(x.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // `cur` now holds J_{k-1}
        if k - 1 <= n {
            out[k - 1] = cur;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Precomputed expansion for a fixed (H, t) pair; cheap to apply repeatedly.
#[derive(Clone, Debug)]
pub struct ChebyshevPropagator {
    scale: f64,
    coeffs: Vec<C64>,
}

impl ChebyshevPropagator {
    pub fn new(h: &SparseHamiltonian, t: f64, tol: f64) -> Self {
        let scale = h.spectral_bound();
        let x = scale * t.abs();
        if x == 0.0 {
            return Self { scale, coeffs: vec![C64::new(1.0, 0.0)] };
        }
        let n_max = (x + 10.0 * x.cbrt() + 60.0).ceil() as usize;
        let j = bessel_j_sequence(x, n_max);
        // J_k decays super-exponentially once k > x; stop when two successive
        // terms are negligible.
        let cutoff = tol * 1e-3;
        let mut order = n_max;
        for k in (x.floor() as usize)..n_max {
            if j[k].abs() < cutoff && j[k + 1].abs() < cutoff {
                order = k;
                break;
            }
        }
        let sign = t.signum();
        let coeffs = (0..=order)
            .map(|k| {
                let phase = match k % 4 {
                    0 => C64::new(1.0, 0.0),
                    1 => C64::new(0.0, -sign),
                    2 => C64::new(-1.0, 0.0),
                    _ => C64::new(0.0, sign),
                };
                let w = if k == 0 { 1.0 } else { 2.0 };
                phase * (w * j[k])
            })
            .collect();
        Self { scale, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn apply(&self, h: &SparseHamiltonian, psi: &[C64], exec: Execution) -> Vec<C64> {
        let n = psi.len();
        let mut out: Vec<C64> = psi.iter().map(|a| a * self.coeffs[0]).collect();
        if self.coeffs.len() == 1 {
            return out;
        }
        let inv = 1.0 / self.scale;
        let mut prev = psi.to_vec();
        let mut cur = vec![C64::new(0.0, 0.0); n];
        h.apply(&prev, &mut cur, exec);
        cur.iter_mut().for_each(|v| *v *= inv);
        for (o, c) in out.iter_mut().zip(&cur) {
            *o += c * self.coeffs[1];
        }
        let mut next = vec![C64::new(0.0, 0.0); n];
        for &coef in &self.coeffs[2..] {
            h.apply(&cur, &mut next, exec);
            for i in 0..n {
                next[i] = next[i] * (2.0 * inv) - prev[i];
                out[i] += next[i] * coef;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        out
    }
}
