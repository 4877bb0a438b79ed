//! Pure-state time evolution: noiseless propagation by Krylov, Chebyshev or
//! dense diagonalisation, and a second-order split-step integrator for the
//! dephasing Hamiltonian `H + ½ Σ_j ξ_j(t) σᶻ_j`.

mod chebyshev;
mod dense;
mod krylov;
mod state;

pub use chebyshev::{bessel_j_sequence, ChebyshevPropagator};
pub use dense::{DenseEigen, MAX_DENSE_DIMENSION};
pub use krylov::expm_krylov;
pub use state::{
    basis_strings, neel_pattern, parse_pattern, prepare_product_state, xy_checkerboard_pattern, CheckpointHeader,
    SiteState, StateVector,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::SparseHamiltonian;
use crate::linalg::C64;
use crate::noise::NoiseTrajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Krylov,
    #[default]
    Chebyshev,
    DenseEig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub method: Method,
    /// Split-step size for noisy evolution, seconds.
    pub trotter_dt: f64,
    pub krylov_dim: usize,
    pub tolerance: f64,
    pub exec: Execution,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { method: Method::Chebyshev, trotter_dt: 0.1e-9, krylov_dim: 30, tolerance: 1e-12, exec: Execution::default() }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.trotter_dt > 0.0) || !self.trotter_dt.is_finite() {
            return Err(Error::param(format!("trotter_dt must be positive, got {}", self.trotter_dt)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.krylov_dim < 2 {
            return Err(Error::param("krylov_dim must be at least 2"));
        }
        Ok(())
    }
}

fn check_basis(psi: &StateVector, h: &SparseHamiltonian) -> Result<()> {
    if psi.basis() != h.basis() {
        return Err(Error::param(format!("state basis {} does not match Hamiltonian basis {}", psi.basis(), h.basis())));
    }
    Ok(())
}

/// e^{-iHt}|ψ⟩
pub fn evolve(psi: &StateVector, h: &SparseHamiltonian, t: f64, cfg: &EvolutionConfig) -> Result<StateVector> {
    cfg.validate()?;
    check_basis(psi, h)?;
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let amps = match cfg.method {
        Method::Krylov => expm_krylov(h, psi.amplitudes(), t, cfg.krylov_dim, cfg.tolerance, cfg.exec)?,
        Method::Chebyshev => ChebyshevPropagator::new(h, t, cfg.tolerance).apply(h, psi.amplitudes(), cfg.exec),
        Method::DenseEig => DenseEigen::new(h)?.evolve(psi.amplitudes(), t),
    };
    StateVector::new(psi.basis(), amps)
}

/// One application of e^{-iH dt} for a fixed dt.
enum StepPropagator {
    Chebyshev(ChebyshevPropagator),
    Krylov { dim: usize, tol: f64 },
    Dense(DMatrix<C64>),
}

impl StepPropagator {
    fn new(h: &SparseHamiltonian, dt: f64, cfg: &EvolutionConfig) -> Result<Self> {
        Ok(match cfg.method {
            Method::Chebyshev => StepPropagator::Chebyshev(ChebyshevPropagator::new(h, dt, cfg.tolerance * 1e-3)),
            Method::Krylov => StepPropagator::Krylov { dim: cfg.krylov_dim, tol: cfg.tolerance * 1e-3 },
            Method::DenseEig => StepPropagator::Dense(DenseEigen::new(h)?.propagator(dt)),
        })
    }

    fn apply(&self, h: &SparseHamiltonian, psi: &[C64], dt: f64, exec: Execution) -> Result<Vec<C64>> {
        Ok(match self {
            StepPropagator::Chebyshev(p) => p.apply(h, psi, exec),
            StepPropagator::Krylov { dim, tol } => expm_krylov(h, psi, dt, *dim, *tol, exec)?,
            StepPropagator::Dense(u) => {
                let n = psi.len();
                (0..n).map(|r| (0..n).map(|c| u[(r, c)] * psi[c]).sum()).collect()
            }
        })
    }
}

/// Strang-split integrator for `H + ½ Σ_j ξ_j(t) σᶻ_j` along one noise
/// trajectory. Each step applies half of the diagonal phase, a full `H` step,
/// then the other half, with ξ held at the step midpoint value.
///
/// σᶻ|0⟩ = +|0⟩, so a basis string `s` picks up the energy
/// `½ Σ_j (1 - 2 s_j) ξ_j`.
pub struct NoisyEvolver<'a> {
    h: &'a SparseHamiltonian,
    traj: &'a NoiseTrajectory,
    cfg: EvolutionConfig,
    prop: StepPropagator,
    strings: Vec<u64>,
    step: usize,
}

impl<'a> NoisyEvolver<'a> {
    pub fn new(h: &'a SparseHamiltonian, traj: &'a NoiseTrajectory, cfg: &EvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        let n_sites = h.basis().n_sites();
        if traj.n_sites() != n_sites {
            return Err(Error::param(format!(
                "trajectory has {} sites, Hamiltonian has {n_sites}",
                traj.n_sites()
            )));
        }
        if (traj.dt() - cfg.trotter_dt).abs() > 1e-9 * cfg.trotter_dt {
            return Err(Error::param(format!(
                "trajectory step {} s differs from trotter_dt {} s",
                traj.dt(),
                cfg.trotter_dt
            )));
        }
        Ok(Self {
            h,
            traj,
            cfg: cfg.clone(),
            prop: StepPropagator::new(h, cfg.trotter_dt, cfg)?,
            strings: basis_strings(h.basis()),
            step: 0,
        })
    }

    /// Elapsed time, seconds.
    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.trotter_dt
    }

    /// Number of steps needed to reach `t` from zero; `t` must sit on the grid.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        let dt = self.cfg.trotter_dt;
        let n = (t / dt).round();
        if t < 0.0 || (n * dt - t).abs() > 1e-6 * dt {
            return Err(Error::param(format!("time {t:e} s is not a multiple of trotter_dt {dt:e} s")));
        }
        Ok(n as usize)
    }

    /// Step `psi` forward from the current time to `t`.
    pub fn advance_to(&mut self, psi: &mut StateVector, t: f64) -> Result<()> {
        check_basis(psi, self.h)?;
        let target = self.steps_for(t)?;
        if target < self.step {
            return Err(Error::param(format!("cannot step backwards to {t:e} s")));
        }
        if target > self.traj.n_steps() {
            return Err(Error::param(format!(
                "trajectory covers {} steps, {target} requested",
                self.traj.n_steps()
            )));
        }
        let dt = self.cfg.trotter_dt;
        let n_sites = self.traj.n_sites();
        let mut half = vec![C64::new(0.0, 0.0); psi.dimension()];
        while self.step < target {
            let xi = self.traj.step_samples(self.step);
            let total: f64 = xi.iter().sum();
            for (h, &s) in half.iter_mut().zip(&self.strings) {
                let mut excited = 0.0;
                let mut rest = s;
                while rest != 0 {
                    excited += xi[rest.trailing_zeros() as usize];
                    rest &= rest - 1;
                }
                let energy = 0.5 * (total - 2.0 * excited);
                *h = C64::from_polar(1.0, -energy * dt * 0.5);
            }
            debug_assert!(self.strings.iter().all(|s| s >> n_sites == 0));
            let amps = psi.amplitudes_mut();
            amps.iter_mut().zip(&half).for_each(|(a, p)| *a *= p);
            let mut next = self.prop.apply(self.h, amps, dt, self.cfg.exec)?;
            next.iter_mut().zip(&half).for_each(|(a, p)| *a *= p);
            amps.copy_from_slice(&next);
            self.step += 1;
        }
        Ok(())
    }
}

/// Evolve under one noise realisation from 0 to `t`.
pub fn evolve_noisy(
    psi: &StateVector,
    h: &SparseHamiltonian,
    traj: &NoiseTrajectory,
    t: f64,
    cfg: &EvolutionConfig,
) -> Result<StateVector> {
    let mut evolver = NoisyEvolver::new(h, traj, cfg)?;
    let mut out = psi.clone();
    evolver.advance_to(&mut out, t)?;
    Ok(out)
}
