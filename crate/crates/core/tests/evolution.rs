use deeptherm_core::evolution::{
    evolve, evolve_noisy, neel_pattern, prepare_product_state, xy_checkerboard_pattern, EvolutionConfig, Method,
    SiteState, StateVector,
};
use deeptherm_core::lattice::{build_hamiltonian, BasisTag, LatticeSpec, DEFAULT_COUPLING};
use deeptherm_core::linalg::{CMat, C64};
use deeptherm_core::noise::NoiseTrajectory;
use deeptherm_core::stats::excitation_density;
use nalgebra::DVector;
use proptest::prelude::*;

const NS: f64 = 1e-9;

fn pauli(c: char) -> CMat {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    match c {
        'X' => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => CMat::identity(2, 2),
    }
}

/// Operator acting as `op` on `site`; site i is bit i, so the leftmost
/// Kronecker factor is the highest site.
fn on_site(op: &CMat, site: usize, n: usize) -> CMat {
    let id = pauli('I');
    (0..n).rev().fold(CMat::identity(1, 1), |acc, j| acc.kronecker(if j == site { op } else { &id }))
}

/// J/2 (XX + YY) on every nearest-neighbour bond of an open rows×cols grid.
fn dense_xy(rows: usize, cols: usize, j: f64) -> CMat {
    let n = rows * cols;
    let mut h = CMat::zeros(1 << n, 1 << n);
    let mut bond = |a: usize, b: usize| {
        for p in ['X', 'Y'] {
            h += on_site(&pauli(p), a, n) * on_site(&pauli(p), b, n) * C64::new(j / 2.0, 0.0);
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            let s = r * cols + c;
            if c + 1 < cols {
                bond(s, s + 1);
            }
            if r + 1 < rows {
                bond(s, s + cols);
            }
        }
    }
    h
}

fn product_state(pattern: &[SiteState]) -> DVector<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let single = |s: &SiteState| match s {
        SiteState::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        SiteState::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        SiteState::XPlus => [C64::new(h, 0.0), C64::new(h, 0.0)],
        SiteState::YPlus => [C64::new(h, 0.0), C64::new(0.0, h)],
    };
    let n = pattern.len();
    DVector::from_fn(1 << n, |idx, _| (0..n).map(|i| single(&pattern[i])[(idx >> i) & 1]).product())
}

fn oracle(rows: usize, cols: usize, pattern: &[SiteState], t: f64) -> DVector<C64> {
    let h = dense_xy(rows, cols, DEFAULT_COUPLING);
    let u = (h * C64::new(0.0, -t)).exp();
    u * product_state(pattern)
}

fn distance(a: &StateVector, b: &DVector<C64>) -> f64 {
    let full = a.to_full();
    full.amplitudes().iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn all_methods_match_pade_oracle_on_2x3() {
    let pattern = xy_checkerboard_pattern(6);
    let expected = oracle(2, 3, &pattern, 500.0 * NS);
    let spec = LatticeSpec::with_default_coupling(2, 3).unwrap();
    let h = build_hamiltonian(&spec, None).unwrap();
    let psi = prepare_product_state(&pattern, h.basis()).unwrap();
    for method in [Method::Krylov, Method::Chebyshev, Method::DenseEig] {
        let cfg = EvolutionConfig { method, ..Default::default() };
        let out = evolve(&psi, &h, 500.0 * NS, &cfg).unwrap();
        assert!(distance(&out, &expected) < 1e-9, "{method:?}: {}", distance(&out, &expected));
    }
}

#[test]
fn sector_evolution_embeds_into_full_space() {
    let pattern = neel_pattern(6);
    let expected = oracle(3, 2, &pattern, 123.0 * NS);
    let spec = LatticeSpec::with_default_coupling(3, 2).unwrap();
    let h = build_hamiltonian(&spec, Some(3)).unwrap();
    assert_eq!(h.basis(), BasisTag::Sector { n_sites: 6, excitations: 3 });
    let psi = prepare_product_state(&pattern, h.basis()).unwrap();
    let out = evolve(&psi, &h, 123.0 * NS, &EvolutionConfig::default()).unwrap();
    assert!(distance(&out, &expected) < 1e-9);
}

#[test]
fn zero_noise_trajectory_matches_noiseless_evolution() {
    let spec = LatticeSpec::with_default_coupling(2, 2).unwrap();
    let h = build_hamiltonian(&spec, None).unwrap();
    let psi = prepare_product_state(&xy_checkerboard_pattern(4), h.basis()).unwrap();
    let cfg = EvolutionConfig::default();
    let traj = NoiseTrajectory::zeros(4, cfg.trotter_dt, 1000);
    let noisy = evolve_noisy(&psi, &h, &traj, 100.0 * NS, &cfg).unwrap();
    let clean = evolve(&psi, &h, 100.0 * NS, &cfg).unwrap();
    assert!(noisy.overlap(&clean).unwrap() > 1.0 - 1e-10);
}

#[test]
fn static_field_gives_known_phase_on_single_site() {
    // One isolated site under constant ξ: |+⟩ → (e^{-iξt/2}|0⟩ + e^{iξt/2}|1⟩)/√2.
    let spec = LatticeSpec::with_default_coupling(1, 1).unwrap();
    let h = build_hamiltonian(&spec, None).unwrap();
    let psi = prepare_product_state(&[SiteState::XPlus], h.basis()).unwrap();
    let cfg = EvolutionConfig { method: Method::DenseEig, ..Default::default() };
    let xi = 3.0e6;
    let traj = NoiseTrajectory::from_samples(cfg.trotter_dt, vec![vec![xi]; 500]).unwrap();
    let out = evolve_noisy(&psi, &h, &traj, 50.0 * NS, &cfg).unwrap();
    let a = out.amplitudes();
    let phase = (a[1] / a[0]).arg();
    assert!((phase - xi * 50.0 * NS).abs() < 1e-9, "{phase}");
}

#[test]
fn split_step_converges_at_second_order() {
    let spec = LatticeSpec::with_default_coupling(2, 2).unwrap();
    let h = build_hamiltonian(&spec, None).unwrap();
    let psi = prepare_product_state(&xy_checkerboard_pattern(4), h.basis()).unwrap();
    // ξ_j(t) = a_j cos(ω t), sampled at step midpoints
    let field = |dt: f64, steps: usize| {
        let rows = (0..steps)
            .map(|k| {
                let t = (k as f64 + 0.5) * dt;
                (0..4).map(|j| 2.0e7 * (j as f64 + 1.0) * (3.0e7 * t).cos()).collect()
            })
            .collect();
        NoiseTrajectory::from_samples(dt, rows).unwrap()
    };
    let t = 40.0 * NS;
    let run = |dt: f64| {
        let steps = (t / dt).round() as usize;
        let cfg = EvolutionConfig { trotter_dt: dt, method: Method::DenseEig, ..Default::default() };
        evolve_noisy(&psi, &h, &field(dt, steps), t, &cfg).unwrap()
    };
    let reference = run(0.0125 * NS);
    let err = |s: &StateVector| {
        s.amplitudes().iter().zip(reference.amplitudes()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    };
    let (coarse, fine) = (err(&run(0.4 * NS)), err(&run(0.2 * NS)));
    let order = (coarse / fine).log2();
    assert!(order > 1.7 && order < 2.4, "observed order {order}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn krylov_and_chebyshev_agree_with_oracle(rows in 1usize..=2, cols in 2usize..=4, t_ns in 0.0f64..600.0, seed in 0u8..4) {
        let n = rows * cols;
        let pattern: Vec<SiteState> = (0..n)
            .map(|i| [SiteState::Zero, SiteState::One, SiteState::XPlus, SiteState::YPlus][(i + seed as usize) % 4])
            .collect();
        let expected = oracle(rows, cols, &pattern, t_ns * NS);
        let spec = LatticeSpec::with_default_coupling(rows, cols).unwrap();
        let h = build_hamiltonian(&spec, None).unwrap();
        let psi = prepare_product_state(&pattern, h.basis()).unwrap();
        for method in [Method::Krylov, Method::Chebyshev] {
            let out = evolve(&psi, &h, t_ns * NS, &EvolutionConfig { method, ..Default::default() }).unwrap();
            prop_assert!(distance(&out, &expected) < 1e-9);
        }
    }

    #[test]
    fn norm_and_charge_are_conserved(t_ns in 0.0f64..500.0, k in 0usize..=6) {
        let spec = LatticeSpec::with_default_coupling(2, 3).unwrap();
        let h = build_hamiltonian(&spec, None).unwrap();
        let pattern: Vec<SiteState> = (0..6).map(|i| if i < k { SiteState::One } else { SiteState::Zero }).collect();
        let psi = prepare_product_state(&pattern, h.basis()).unwrap();
        let out = evolve(&psi, &h, t_ns * NS, &EvolutionConfig::default()).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let charge: f64 = excitation_density(&out).iter().sum();
        prop_assert!((charge - k as f64).abs() < 1e-10);
    }

    #[test]
    fn evolution_composes(t1 in 0.0f64..200.0, t2 in 0.0f64..200.0) {
        let spec = LatticeSpec::with_default_coupling(2, 2).unwrap();
        let h = build_hamiltonian(&spec, Some(2)).unwrap();
        let psi = prepare_product_state(&neel_pattern(4), h.basis()).unwrap();
        let cfg = EvolutionConfig::default();
        let a = evolve(&evolve(&psi, &h, t1 * NS, &cfg).unwrap(), &h, t2 * NS, &cfg).unwrap();
        let b = evolve(&psi, &h, (t1 + t2) * NS, &cfg).unwrap();
        prop_assert!(a.overlap(&b).unwrap() > 1.0 - 1e-12);
    }
}
