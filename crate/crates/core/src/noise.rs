//! Gaussian dephasing noise ξ_j(t) with white or 1/f spectra, and
//! calibration of the noise strength against a single-qubit Ramsey T2*.
//!
//! Spectral densities are two-sided: `⟨ξ(0)ξ(t)⟩ = ∫ dω/2π S(ω) e^{-iωt}`
//! with `S = W` (white) or `S = A/|ω|` (1/f, between the cutoffs).

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_ONE_OVER_F_LOW_CUT_HZ: f64 = 1e-3;
pub const DEFAULT_ONE_OVER_F_HIGH_CUT_HZ: f64 = 1e5;
pub const DEFAULT_WHITE_HIGH_CUT_HZ: f64 = 1e9;
pub const DEFAULT_HARMONICS: usize = 256;
pub const MIN_HARMONICS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    OneOverF { low_cut_hz: f64, high_cut_hz: f64 },
}

impl NoiseKind {
    pub fn one_over_f_default() -> Self {
        NoiseKind::OneOverF { low_cut_hz: DEFAULT_ONE_OVER_F_LOW_CUT_HZ, high_cut_hz: DEFAULT_ONE_OVER_F_HIGH_CUT_HZ }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::OneOverF { .. } => "one_over_f",
        }
    }
}

/// Per-site noise strengths: W_j in rad²/s (white) or A_j in rad² (1/f).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub strengths: Vec<f64>,
    #[serde(default = "default_white_cut")]
    pub white_high_cut_hz: f64,
    #[serde(default = "default_harmonics")]
    pub harmonics: usize,
}

fn default_white_cut() -> f64 {
    DEFAULT_WHITE_HIGH_CUT_HZ
}

fn default_harmonics() -> usize {
    DEFAULT_HARMONICS
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, strengths: Vec<f64>) -> Result<Self> {
        let spec = Self { kind, strengths, white_high_cut_hz: DEFAULT_WHITE_HIGH_CUT_HZ, harmonics: DEFAULT_HARMONICS };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(kind: NoiseKind, n_sites: usize, strength: f64) -> Result<Self> {
        Self::new(kind, vec![strength; n_sites])
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.strengths.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::param(format!("noise strength must be finite and >= 0, got {s}")));
        }
        if let NoiseKind::OneOverF { low_cut_hz, high_cut_hz } = self.kind {
            if !(low_cut_hz > 0.0 && low_cut_hz < high_cut_hz && high_cut_hz.is_finite()) {
                return Err(Error::param(format!(
                    "1/f cutoffs need 0 < low < high, got {low_cut_hz} / {high_cut_hz}"
                )));
            }
            if self.harmonics < MIN_HARMONICS {
                return Err(Error::param(format!(
                    "1/f synthesis needs at least {MIN_HARMONICS} harmonics, got {}",
                    self.harmonics
                )));
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.strengths.len()
    }
}

/// Sampled ξ_j at the midpoints `(k + ½) dt` of a uniform grid, rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseTrajectory {
    n_sites: usize,
    dt: f64,
    n_steps: usize,
    /// step-major: `samples[k * n_sites + j]`
    samples: Vec<f64>,
    seed: u64,
}

impl NoiseTrajectory {
    pub fn zeros(n_sites: usize, dt: f64, n_steps: usize) -> Self {
        Self { n_sites, dt, n_steps, samples: vec![0.0; n_sites * n_steps], seed: 0 }
    }

    /// Build from explicit per-step samples (`samples[k][j]`).
    pub fn from_samples(dt: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        let n_steps = samples.len();
        let n_sites = samples.first().map_or(0, |s| s.len());
        if samples.iter().any(|s| s.len() != n_sites) {
            return Err(Error::param("ragged noise samples"));
        }
        Ok(Self { n_sites, dt, n_steps, samples: samples.concat(), seed: 0 })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn span(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn step_samples(&self, k: usize) -> &[f64] {
        &self.samples[k * self.n_sites..(k + 1) * self.n_sites]
    }

    pub fn site_series(&self, j: usize) -> Vec<f64> {
        (0..self.n_steps).map(|k| self.samples[k * self.n_sites + j]).collect()
    }
}

/// Random-phase harmonic representation of one 1/f realisation.
///
/// The band `[low, high]` is cut into log-spaced cells; each cell becomes one
/// cosine at the cell's geometric centre carrying the cell's full two-sided
/// power `2 ∫_cell A/ω dω/2π = A ln(ω_hi/ω_lo)/π`, i.e. amplitude
/// `√(2 A ln(ω_hi/ω_lo)/π)`.
#[derive(Clone, Debug)]
pub struct Harmonics {
    omega: Vec<f64>,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
}

impl Harmonics {
    fn draw(strength: f64, low_hz: f64, high_hz: f64, count: usize, rng: &mut ChaCha8Rng) -> Self {
        let (lo, hi) = (TAU * low_hz, TAU * high_hz);
        let step = (hi / lo).ln() / count as f64;
        let omega = (0..count).map(|m| lo * ((m as f64 + 0.5) * step).exp()).collect();
        let amp = (2.0 * strength * step / PI).sqrt();
        let phase = (0..count).map(|_| rng.random::<f64>() * TAU).collect();
        Self { omega, amplitude: vec![amp; count], phase }
    }

    /// ξ at `t0, t0 + dt, …` (n points). Phasors are rotated incrementally
    /// and re-anchored periodically to bound round-off drift.
    fn values(&self, t0: f64, dt: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for m in 0..self.omega.len() {
            let (w, a, p) = (self.omega[m], self.amplitude[m], self.phase[m]);
            let rot = num_complex::Complex64::from_polar(1.0, w * dt);
            let mut z = num_complex::Complex64::new(0.0, 0.0);
            for (k, o) in out.iter_mut().enumerate() {
                if k % 512 == 0 {
                    z = num_complex::Complex64::from_polar(a, w * (t0 + k as f64 * dt) + p);
                } else {
                    z *= rot;
                }
                *o += z.re;
            }
        }
        out
    }

    /// φ(t) = ∫₀ᵗ ξ, exactly.
    fn integrated(&self, times: &[f64]) -> Vec<f64> {
        times
            .iter()
            .map(|&t| {
                (0..self.omega.len())
                    .map(|m| {
                        let (w, p) = (self.omega[m], self.phase[m]);
                        self.amplitude[m] * ((w * t + p).sin() - p.sin()) / w
                    })
                    .sum()
            })
            .collect()
    }
}

/// Draw one realisation covering `[0, span]` on a grid of step `dt`.
///
/// White noise is i.i.d. Gaussian per step with variance `W/dt` (band-limited
/// by the step). 1/f noise is a random-phase harmonic sum over the full band,
/// so components slower than `1/span` appear as quasi-static offsets.
pub fn sample_trajectory(spec: &NoiseSpec, dt: f64, span: f64, seed: u64) -> Result<NoiseTrajectory> {
    spec.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if !(span > 0.0) {
        return Err(Error::param(format!("trajectory span must be positive, got {span}")));
    }
    let n_steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let n_sites = spec.n_sites();
    let mut samples = vec![0.0; n_steps * n_sites];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (j, &strength) in spec.strengths.iter().enumerate() {
        let series: Vec<f64> = match spec.kind {
            NoiseKind::White => {
                let sd = (strength / dt).sqrt();
                (0..n_steps).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
            }
            NoiseKind::OneOverF { low_cut_hz, high_cut_hz } => {
                Harmonics::draw(strength, low_cut_hz, high_cut_hz, spec.harmonics, &mut rng).values(0.5 * dt, dt, n_steps)
            }
        };
        for (k, v) in series.into_iter().enumerate() {
            samples[k * n_sites + j] = v;
        }
    }
    Ok(NoiseTrajectory { n_sites, dt, n_steps, samples, seed })
}

/// Monte-Carlo Ramsey experiment on one qubit: accumulated phases φ(t) of
/// many unit-strength realisations. Scaling to strength `s` multiplies every
/// phase by √s.
#[derive(Clone, Debug)]
pub struct RamseyEnsemble {
    times: Vec<f64>,
    /// trajectory-major unit-strength phases
    phases: Vec<f64>,
    trajectories: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RamseyOptions {
    pub trajectories: usize,
    pub grid_points: usize,
    pub seed: u64,
    pub harmonics: usize,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        Self { trajectories: 8000, grid_points: 200, seed: 0x5eed, harmonics: DEFAULT_HARMONICS }
    }
}

impl RamseyEnsemble {
    pub fn simulate(kind: NoiseKind, window: f64, opts: &RamseyOptions, exec: Execution) -> Result<Self> {
        if !(window > 0.0) || opts.grid_points < 2 || opts.trajectories == 0 {
            return Err(Error::param("Ramsey window, grid and trajectory count must be positive"));
        }
        let n = opts.grid_points;
        let dt = window / n as f64;
        let times: Vec<f64> = (1..=n).map(|i| i as f64 * dt).collect();
        let per_traj = exec.map(opts.trajectories, |r| {
            let seed = opts.seed.wrapping_add(r as u64);
            match kind {
                NoiseKind::White => {
                    let spec = NoiseSpec { kind, strengths: vec![1.0], white_high_cut_hz: DEFAULT_WHITE_HIGH_CUT_HZ, harmonics: opts.harmonics };
                    let traj = sample_trajectory(&spec, dt, window, seed).expect("validated above");
                    let mut acc = 0.0;
                    traj.site_series(0)
                        .into_iter()
                        .map(|xi| {
                            acc += xi * dt;
                            acc
                        })
                        .collect::<Vec<_>>()
                }
                NoiseKind::OneOverF { low_cut_hz, high_cut_hz } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    Harmonics::draw(1.0, low_cut_hz, high_cut_hz, opts.harmonics, &mut rng).integrated(&times)
                }
            }
        });
        Ok(Self { times, phases: per_traj.concat(), trajectories: opts.trajectories })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// |⟨e^{iφ(t)}⟩| on the time grid.
    pub fn coherence(&self, strength: f64) -> Vec<f64> {
        let n = self.times.len();
        let scale = strength.sqrt();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for r in 0..self.trajectories {
            for i in 0..n {
                let (s, c) = (scale * self.phases[r * n + i]).sin_cos();
                re[i] += c;
                im[i] += s;
            }
        }
        let norm = self.trajectories as f64;
        re.iter().zip(&im).map(|(a, b)| (a * a + b * b).sqrt() / norm).collect()
    }

    /// First time the coherence drops to 1/e (linear interpolation), if any.
    pub fn t2star(&self, strength: f64) -> Option<f64> {
        let c = self.coherence(strength);
        let target = (-1.0f64).exp();
        let mut prev_t = 0.0;
        let mut prev_c = 1.0;
        for (&t, &v) in self.times.iter().zip(&c) {
            if v <= target {
                return Some(prev_t + (prev_c - target) / (prev_c - v) * (t - prev_t));
            }
            prev_t = t;
            prev_c = v;
        }
        None
    }
}

/// Quasi-static estimate of the strength giving a 1/e decay at `t2star`.
pub fn initial_strength_guess(kind: NoiseKind, t2star: f64) -> f64 {
    match kind {
        NoiseKind::White => 2.0 / t2star,
        NoiseKind::OneOverF { low_cut_hz, high_cut_hz } => {
            // Var φ ≈ t² (A/π) ln(high/low), and the decay is e^{-Var/2}
            2.0 * PI / (t2star * t2star * (high_cut_hz / low_cut_hz).ln())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationOptions {
    pub ramsey: RamseyOptions,
    /// Relative width of the final bisection bracket.
    pub tolerance: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { ramsey: RamseyOptions::default(), tolerance: 0.02 }
    }
}

/// Strength (W or A) for which the Monte-Carlo Ramsey decay first crosses
/// 1/e at `t2star`, by bisection on log(strength).
pub fn calibrate_from_t2star(
    kind: NoiseKind,
    t2star: f64,
    ramsey_window: f64,
    opts: &CalibrationOptions,
    exec: Execution,
) -> Result<f64> {
    if !(t2star > 0.0) || !t2star.is_finite() {
        return Err(Error::param(format!("target T2* must be positive, got {t2star}")));
    }
    if !(ramsey_window > t2star) {
        return Err(Error::param("Ramsey window must exceed the target T2*"));
    }
    let ensemble = RamseyEnsemble::simulate(kind, ramsey_window, &opts.ramsey, exec)?;
    // Later crossing = weaker noise; no crossing counts as +inf.
    let crossing = |s: f64| ensemble.t2star(s).unwrap_or(f64::INFINITY);
    let guess = initial_strength_guess(kind, t2star);
    let (mut lo, mut hi) = (guess / 30.0, guess * 30.0);
    if !(crossing(lo) > t2star && crossing(hi) < t2star) {
        return Err(Error::Calibration(format!(
            "bracket [{lo:.3e}, {hi:.3e}] does not straddle T2* = {t2star:.3e} s"
        )));
    }
    while hi / lo > 1.0 + opts.tolerance {
        let mid = (lo * hi).sqrt();
        if crossing(mid) > t2star {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_strength_gives_zero_trajectory() {
        for kind in [NoiseKind::White, NoiseKind::one_over_f_default()] {
            let spec = NoiseSpec::uniform(kind, 3, 0.0).unwrap();
            let traj = sample_trajectory(&spec, 1e-9, 1e-7, 7).unwrap();
            assert!(traj.samples.iter().all(|&v| v == 0.0));
            assert_eq!(traj.n_steps(), 100);
        }
    }

    #[test]
    fn same_seed_same_bits() {
        for kind in [NoiseKind::White, NoiseKind::one_over_f_default()] {
            let spec = NoiseSpec::uniform(kind, 2, 1e6).unwrap();
            let a = sample_trajectory(&spec, 1e-9, 5e-8, 42).unwrap();
            let b = sample_trajectory(&spec, 1e-9, 5e-8, 42).unwrap();
            let c = sample_trajectory(&spec, 1e-9, 5e-8, 43).unwrap();
            assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert_ne!(a, c);
        }
    }

    #[test]
    fn invalid_parameters() {
        let spec = NoiseSpec::uniform(NoiseKind::White, 1, 1.0).unwrap();
        assert!(sample_trajectory(&spec, 0.0, 1.0, 0).is_err());
        assert!(sample_trajectory(&spec, 1e-9, -1.0, 0).is_err());
        assert!(NoiseSpec::uniform(NoiseKind::White, 1, -1.0).is_err());
        assert!(NoiseSpec::uniform(NoiseKind::OneOverF { low_cut_hz: 10.0, high_cut_hz: 1.0 }, 1, 1.0).is_err());
        let mut few = NoiseSpec::uniform(NoiseKind::one_over_f_default(), 1, 1.0).unwrap();
        few.harmonics = 10;
        assert!(sample_trajectory(&few, 1e-9, 1e-6, 0).is_err());
    }

    #[test]
    fn harmonic_phases_integrate_consistently() {
        // ∫ξ from the sampled midpoint series matches the closed form
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = Harmonics::draw(1e11, 1e-3, 1e5, 256, &mut rng);
        let dt = 1e-9;
        let xi = h.values(0.5 * dt, dt, 2000);
        let riemann: f64 = xi.iter().sum::<f64>() * dt;
        let exact = h.integrated(&[2000.0 * dt])[0];
        assert!((riemann - exact).abs() < 1e-6 * exact.abs().max(1e-3), "{riemann} vs {exact}");
    }

    #[test]
    fn white_coherence_follows_closed_form() {
        // ⟨e^{iφ}⟩ = e^{-Wt/2} for white dephasing
        let opts = RamseyOptions { trajectories: 4000, grid_points: 50, seed: 1, ..Default::default() };
        let ens = RamseyEnsemble::simulate(NoiseKind::White, 2e-6, &opts, Execution::Serial).unwrap();
        let w = 2e6;
        for (t, c) in ens.times().iter().zip(ens.coherence(w)) {
            let expect = (-w * t / 2.0).exp();
            assert!((c - expect).abs() < 5.0 / (4000f64).sqrt(), "t={t} c={c} expect={expect}");
        }
    }

    #[test]
    fn calibrated_strength_decreases_with_t2star() {
        let opts = CalibrationOptions {
            ramsey: RamseyOptions { trajectories: 2000, grid_points: 120, seed: 9, ..Default::default() },
            tolerance: 0.02,
        };
        let mut last = f64::INFINITY;
        for t2 in [0.5e-6, 1e-6, 2e-6, 4e-6] {
            let w = calibrate_from_t2star(NoiseKind::White, t2, 3.0 * t2, &opts, Execution::Serial).unwrap();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn calibration_rejects_bad_targets() {
        let opts = CalibrationOptions::default();
        assert!(calibrate_from_t2star(NoiseKind::White, 0.0, 1e-6, &opts, Execution::Serial).is_err());
        assert!(calibrate_from_t2star(NoiseKind::White, 1e-6, 0.5e-6, &opts, Execution::Serial).is_err());
    }
}
