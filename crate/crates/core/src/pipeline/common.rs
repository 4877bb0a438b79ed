use crate::error::{Error, Result};
use crate::evolution::{
    evolve, neel_pattern, parse_pattern, prepare_product_state, xy_checkerboard_pattern, EvolutionConfig,
    NoisyEvolver, SiteState, StateVector,
};
use crate::exec::Execution;
use crate::lattice::{build_hamiltonian, BasisTag, LatticeSpec, SparseHamiltonian};
use crate::noise::{calibrate_from_t2star, sample_trajectory, CalibrationOptions, NoiseSpec, NoiseTrajectory, RamseyOptions};

use super::config::{ExperimentConfig, NoiseConfig};

/// Trajectories per work chunk; fixed so results do not depend on the
/// number of workers.
const TRAJECTORY_CHUNK: usize = 8;

/// SplitMix64 finaliser over (base, stream); decorrelates derived seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x6a09_e667_f3bc_c909);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub struct System {
    pub spec: LatticeSpec,
    pub h: SparseHamiltonian,
    pub psi0: StateVector,
    /// Charge of the initial state when it lies in one sector.
    pub excitations: Option<usize>,
}

impl System {
    pub fn n_sites(&self) -> usize {
        self.spec.n_sites()
    }

    pub fn basis(&self) -> BasisTag {
        self.h.basis()
    }
}

pub fn initial_pattern(text: &str, n_sites: usize) -> Result<Vec<SiteState>> {
    let pattern = match text {
        "neel" => neel_pattern(n_sites),
        "xy_checkerboard" => xy_checkerboard_pattern(n_sites),
        other => parse_pattern(other)?,
    };
    if pattern.len() != n_sites {
        return Err(Error::Config {
            path: "initial_pattern".into(),
            message: format!("pattern has {} sites, lattice has {n_sites}", pattern.len()),
        });
    }
    Ok(pattern)
}

/// Lattice, Hamiltonian and initial state; a sector basis is used whenever
/// the initial state is a computational basis state.
pub fn build_system(cfg: &ExperimentConfig) -> Result<System> {
    let spec = cfg.lattice.to_spec()?;
    let n = spec.n_sites();
    let pattern = initial_pattern(cfg.initial_pattern.as_deref().unwrap_or("neel"), n)?;
    let classical = pattern.iter().all(|s| matches!(s, SiteState::Zero | SiteState::One));
    let excitations = classical.then(|| pattern.iter().filter(|s| **s == SiteState::One).count());
    let h = build_hamiltonian(&spec, excitations)?;
    let psi0 = prepare_product_state(&pattern, h.basis())?;
    Ok(System { spec, h, psi0, excitations })
}

/// Noiseless states at each time (seconds), evolved incrementally.
pub fn exact_states(sys: &System, times: &[f64], evo: &EvolutionConfig) -> Result<Vec<StateVector>> {
    let mut out = Vec::with_capacity(times.len());
    let mut psi = sys.psi0.clone();
    let mut now = 0.0;
    for &t in times {
        psi = evolve(&psi, &sys.h, t - now, evo)?;
        now = t;
        out.push(psi.clone());
    }
    Ok(out)
}

/// Noise strength for one entry, calibrating against T2* when requested.
pub fn resolve_strength(nc: &NoiseConfig, cfg: &ExperimentConfig, exec: Execution) -> Result<f64> {
    match (nc.strength, nc.t2star_us) {
        (Some(s), _) => Ok(s),
        (None, Some(t2_us)) => {
            let t2 = t2_us * 1e-6;
            let opts = CalibrationOptions {
                ramsey: RamseyOptions {
                    trajectories: cfg.calibration.trajectories,
                    grid_points: cfg.calibration.grid_points,
                    seed: derive_seed(cfg.seed, 0xca1b),
                    ..Default::default()
                },
                ..Default::default()
            };
            calibrate_from_t2star(nc.kind(), t2, t2 * cfg.calibration.window_factor, &opts, exec)
        }
        (None, None) => Err(Error::Config { path: "noise".into(), message: "no strength or t2star_us".into() }),
    }
}

/// Sum of independent realisations of every spec. The first spec uses
/// `seed` directly.
pub fn combined_trajectory(specs: &[NoiseSpec], dt: f64, span: f64, seed: u64) -> Result<NoiseTrajectory> {
    let mut parts = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| sample_trajectory(spec, dt, span, if i == 0 { seed } else { derive_seed(seed, i as u64) }));
    let first = parts.next().ok_or_else(|| Error::param("no noise specs"))??;
    let rest = parts.collect::<Result<Vec<_>>>()?;
    if rest.is_empty() {
        return Ok(first);
    }
    let steps = (0..first.n_steps())
        .map(|k| {
            let mut row = first.step_samples(k).to_vec();
            for r in &rest {
                row.iter_mut().zip(r.step_samples(k)).for_each(|(a, b)| *a += b);
            }
            row
        })
        .collect();
    NoiseTrajectory::from_samples(dt, steps)
}

/// Run `n_traj` noisy trajectories (seed = `seed + r`) and hand the state at
/// every requested time to `visit`. Partial results are merged in
/// trajectory order.
#[allow(clippy::too_many_arguments)]
pub fn trajectory_sweep<A, I, V, M>(
    sys: &System,
    specs: &[NoiseSpec],
    times: &[f64],
    evo: &EvolutionConfig,
    n_traj: usize,
    seed: u64,
    exec: Execution,
    init: I,
    visit: V,
    merge: M,
) -> Result<A>
where
    A: Send,
    I: Fn() -> Result<A> + Sync + Send,
    V: Fn(&mut A, usize, &StateVector) -> Result<()> + Sync + Send,
    M: Fn(&mut A, A),
{
    let span = times.last().copied().unwrap_or(0.0).max(evo.trotter_dt);
    let run_one = |acc: &mut A, r: usize| -> Result<()> {
        let traj = combined_trajectory(specs, evo.trotter_dt, span, seed.wrapping_add(r as u64))?;
        let mut evolver = NoisyEvolver::new(&sys.h, &traj, evo)?;
        let mut psi = sys.psi0.clone();
        for (i, &t) in times.iter().enumerate() {
            evolver.advance_to(&mut psi, t)?;
            visit(acc, i, &psi)?;
        }
        Ok(())
    };
    exec.chunked_reduce(
        n_traj,
        TRAJECTORY_CHUNK,
        &init,
        |acc: &mut Result<A>, r| {
            if let Ok(a) = acc {
                if let Err(e) = run_one(a, r) {
                    *acc = Err(e);
                }
            }
        },
        |acc, part| match (acc.as_mut(), part) {
            (Ok(a), Ok(p)) => merge(a, p),
            (Ok(_), Err(e)) => *acc = Err(e),
            (Err(_), _) => {}
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::BTreeSet<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 100);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn patterns() {
        assert_eq!(initial_pattern("neel", 4).unwrap(), neel_pattern(4));
        assert!(initial_pattern("0101", 5).is_err());
        assert_eq!(initial_pattern("01", 2).unwrap(), vec![SiteState::One, SiteState::Zero]);
    }
}
