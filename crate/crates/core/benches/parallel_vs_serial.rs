use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deeptherm_core::ensemble::{exact_ensemble, kth_moment};
use deeptherm_core::evolution::{evolve, neel_pattern, prepare_product_state, EvolutionConfig};
use deeptherm_core::lattice::{build_hamiltonian, LatticeSpec};
use deeptherm_core::linalg::C64;
use deeptherm_core::pipeline::{self, ExperimentConfig, RunOptions};
use deeptherm_core::Execution;

const MODES: [Execution; 2] = [Execution::Serial, Execution::Parallel];

fn matvec(c: &mut Criterion) {
    let spec = LatticeSpec::with_default_coupling(4, 4).unwrap();
    let h = build_hamiltonian(&spec, Some(8)).unwrap();
    let x = vec![C64::new(1.0, 0.5); h.dimension()];
    let mut out = vec![C64::new(0.0, 0.0); h.dimension()];
    let mut group = c.benchmark_group("matvec_4x4_sector");
    for exec in MODES {
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| b.iter(|| h.apply(&x, &mut out, exec)));
    }
    group.finish();
}

fn moments(c: &mut Criterion) {
    let spec = LatticeSpec::with_default_coupling(4, 4).unwrap();
    let h = build_hamiltonian(&spec, Some(8)).unwrap();
    let psi = prepare_product_state(&neel_pattern(16), h.basis()).unwrap();
    let psi = evolve(&psi, &h, 306e-9, &EvolutionConfig::default()).unwrap();
    let ens = exact_ensemble(&psi, &[5, 6], 0.0).unwrap();
    let mut group = c.benchmark_group("third_moment_4x4");
    for exec in MODES {
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| b.iter(|| kth_moment(&ens, 3, exec).unwrap()));
    }
    group.finish();
}

fn trajectories(c: &mut Criterion) {
    let text = r#"{"experiment": "ergodicity", "lattice": {"rows": 2, "cols": 3}, "times_ns": [10, 20],
        "mode": "noisy", "noise": [{"kind": "white", "strength": 2e6}], "trajectories": 32}"#;
    let dir = tempfile::tempdir().unwrap();
    let mut group = c.benchmark_group("noisy_pipeline_2x3");
    group.sample_size(10);
    for exec in MODES {
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| {
                let mut cfg = ExperimentConfig::from_json_str(text, std::path::Path::new("bench")).unwrap();
                cfg.output_dir = dir.path().join(format!("{exec:?}"));
                pipeline::run(cfg, None, RunOptions { exec, workers: None }).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, matvec, moments, trajectories);
criterion_main!(benches);
