use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::purity;

use super::ProjectedEnsemble;

/// Probability-weighted mean of −ln Tr ρ_A(z_B)².
pub fn avg_entropy(ens: &ProjectedEnsemble) -> f64 {
    let total = ens.total_probability();
    if total <= 0.0 {
        return 0.0;
    }
    ens.entries().iter().map(|e| -e.p * purity(&e.rho).min(1.0).ln()).sum::<f64>() / total
}

/// Least-squares line Ē = E₀·t/τ + offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageFit {
    pub e0: f64,
    pub tau: f64,
    pub slope: f64,
    pub offset: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Root-mean-square residual.
    pub residual: f64,
    pub r_squared: f64,
}

/// Fit over the points with `window.0 ≤ t ≤ window.1` (all points if `None`).
pub fn fit_leakage(times: &[f64], values: &[f64], e0: f64, window: Option<(f64, f64)>) -> Result<LeakageFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    if !(e0 > 0.0) {
        return Err(Error::Fit(format!("E0 must be positive, got {e0}")));
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, _)| **t >= lo && **t <= hi).map(|(t, v)| (*t, *v)).collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!("{} points in the fit window, need at least 3", pts.len())));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stv: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let svv: f64 = pts.iter().map(|p| (p.1 - mv).powi(2)).sum();
    if stt <= 0.0 {
        return Err(Error::Fit("all fit times coincide".into()));
    }
    let slope = stv / stt;
    if !(slope > 0.0) {
        return Err(Error::Fit(format!("non-increasing entropy (slope {slope:.3e}) gives no positive lifetime")));
    }
    let offset = mv - slope * mt;
    let sse: f64 = pts.iter().map(|p| (p.1 - offset - slope * p.0).powi(2)).sum();
    let r_squared = if svv > 0.0 { 1.0 - sse / svv } else { 1.0 };
    let window = (pts[0].0, pts[pts.len() - 1].0);
    Ok(LeakageFit {
        e0,
        tau: e0 / slope,
        slope,
        offset,
        window,
        points: pts.len(),
        residual: (sse / n).sqrt(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{EnsembleEntry, SourceTag};
    use crate::linalg::{CMat, C64};

    #[test]
    fn exact_line_recovers_tau() {
        let e0 = std::f64::consts::LN_2;
        let tau = 1e-6;
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 50e-9).collect();
        let v: Vec<f64> = t.iter().map(|t| e0 * t / tau + 0.01).collect();
        let fit = fit_leakage(&t, &v, e0, None).unwrap();
        assert!((fit.tau / tau - 1.0).abs() < 1e-12);
        assert!((fit.offset - 0.01).abs() < 1e-12);
        assert!(fit.residual < 1e-15 && (fit.r_squared - 1.0).abs() < 1e-12);
        let win = fit_leakage(&t, &v, e0, Some((100e-9, 300e-9))).unwrap();
        assert_eq!(win.points, 5);
    }

    #[test]
    fn degenerate_windows() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let v = [0.0, 1.0, 2.0, 3.0];
        assert!(fit_leakage(&t, &v, 1.0, Some((0.5, 1.5))).is_err());
        assert!(fit_leakage(&[1.0; 4], &v, 1.0, None).is_err());
        assert!(fit_leakage(&t, &[3.0, 2.0, 1.0, 0.0], 1.0, None).is_err());
    }

    #[test]
    fn mixed_entries_entropy() {
        let half = CMat::identity(2, 2) * C64::new(0.5, 0.0);
        let entries = (0..3).map(|i| EnsembleEntry { z_b: i, p: 1.0 / 3.0, rho: half.clone() }).collect();
        let ens = ProjectedEnsemble::new(vec![0], 3, 2, entries, SourceTag::TrajectoryAvg).unwrap();
        assert!((avg_entropy(&ens) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
