use serde_json::json;

use crate::ensemble::{
    avg_entropy, bloch_vector, exact_ensemble, haar_moment, kth_moment, moment_entropy, shot_ensemble, trace_distance,
    EnsembleAccumulator, MomentMatrix, PostSelection, ProjectedEnsemble, SourceTag, MAX_MOMENT_DIMENSION,
};
use crate::error::Result;
use crate::evolution::StateVector;
use crate::exec::Execution;
use crate::lattice::format_bits;
use crate::measurement::{mitigate_counts, sample_shots, BasisLabel, ConfusionMatrix, MitigationMode};

use super::common::{build_system, derive_seed, exact_states, resolve_strength, trajectory_sweep, System};
use super::config::{ExperimentConfig, Mode};
use super::output::{num, time_label, OutputDir};

fn shot_ensemble_at(sys: &System, psi: &StateVector, cfg: &ExperimentConfig, time_index: usize) -> Result<ProjectedEnsemble> {
    let n = sys.n_sites();
    let confusion = match &cfg.readout {
        Some(r) => ConfusionMatrix::uniform(n, r.f00, r.f11)?,
        None => ConfusionMatrix::ideal(n),
    };
    let mode = if cfg.readout.is_some() { cfg.mitigation } else { MitigationMode::None };
    let tables = BasisLabel::all()
        .iter()
        .enumerate()
        .map(|(b, basis)| {
            let seed = derive_seed(cfg.seed, (time_index * 16 + b) as u64);
            let raw = sample_shots(psi, *basis, cfg.subsystem(), cfg.shots_per_basis, cfg.readout.as_ref().map(|_| &confusion), seed)?;
            mitigate_counts(&raw, &confusion, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    shot_ensemble(&tables, cfg.subsystem(), cfg.selection_threshold)
}

fn ensembles(sys: &System, cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<ProjectedEnsemble>> {
    let evo = cfg.evolution.to_config(exec);
    let times_s: Vec<f64> = cfg.times().iter().map(|t| t * 1e-9).collect();
    let a = cfg.subsystem();
    match cfg.mode() {
        Mode::Exact => exact_states(sys, &times_s, &evo)?.iter().map(|psi| exact_ensemble(psi, a, cfg.p_floor)).collect(),
        Mode::Shots => exact_states(sys, &times_s, &evo)?
            .iter()
            .enumerate()
            .map(|(i, psi)| shot_ensemble_at(sys, psi, cfg, i))
            .collect(),
        Mode::Noisy => {
            let specs = cfg
                .noise
                .iter()
                .map(|nc| nc.spec_with_strength(sys.n_sites(), resolve_strength(nc, cfg, exec)?))
                .collect::<Result<Vec<_>>>()?;
            let accs = trajectory_sweep(
                sys,
                &specs,
                &times_s,
                &evo,
                cfg.trajectories,
                cfg.seed,
                exec,
                || times_s.iter().map(|_| EnsembleAccumulator::new(sys.basis(), a)).collect::<Result<Vec<_>>>(),
                |acc, i, psi| acc[i].add(psi, 1.0),
                |acc, part| acc.iter_mut().zip(part).for_each(|(x, y)| x.merge(y)),
            )?;
            accs.iter().map(|acc| acc.finish(cfg.p_floor, SourceTag::TrajectoryAvg)).collect()
        }
    }
}

fn moment_json(m: &MomentMatrix, t_ns: f64) -> serde_json::Value {
    let side = m.matrix.nrows();
    let re: Vec<Vec<f64>> = (0..side).map(|i| (0..side).map(|j| m.matrix[(i, j)].re).collect()).collect();
    let im: Vec<Vec<f64>> = (0..side).map(|i| (0..side).map(|j| m.matrix[(i, j)].im).collect()).collect();
    json!({ "t_ns": t_ns, "k": m.k, "d": m.d, "re": re, "im": im })
}

pub fn run(cfg: &ExperimentConfig, exec: Execution, out: &mut OutputDir) -> Result<serde_json::Value> {
    let sys = build_system(cfg)?;
    let ens_t = ensembles(&sys, cfg, exec)?;
    // Conditional states of a two-site A with one excitation left over.
    let selection = match sys.excitations {
        Some(k) if k >= 1 && cfg.subsystem().len() == 2 => Some(PostSelection::single_excitation(k - 1)),
        _ => None,
    };
    let n_b = sys.n_sites() - cfg.subsystem().len();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let times = cfg.times();
    for (ti, (&t_ns, raw)) in times.iter().zip(&ens_t).enumerate() {
        let entropy = avg_entropy(raw);
        let (ens, kept) = match &selection {
            Some(sel) => {
                let kept: f64 = raw
                    .entries()
                    .iter()
                    .filter(|e| sel.zb_weight.is_none_or(|w| e.z_b.count_ones() as usize == w))
                    .map(|e| e.p)
                    .sum();
                (raw.post_select(sel)?, kept)
            }
            None => (raw.renormalized(), raw.total_probability()),
        };
        let d = ens.dim();
        let mut per_k = Vec::new();
        for k in 1..=cfg.max_moment {
            if d.checked_pow(k as u32).is_none_or(|side| side > MAX_MOMENT_DIMENSION) {
                log::warn!("skipping k = {k}: {d}^{k} exceeds the moment-matrix limit");
                break;
            }
            if ens.is_empty() {
                break;
            }
            let m = kth_moment(&ens, k, exec)?;
            let haar = haar_moment(d, k)?;
            let delta = trace_distance(&m, &haar)?;
            let s = moment_entropy(&m)?;
            let ratio = s / ((k + 1) as f64).ln();
            rows.push(vec![num(t_ns), k.to_string(), num(delta), num(s), num(ratio), num(entropy), num(kept)]);
            per_k.push(json!({ "k": k, "delta": delta, "s_ratio": ratio }));
            if ti + 1 == times.len() && (k == 2 || k == 3) {
                out.write_json(&format!("moment_k{k}.json"), &moment_json(&m, t_ns))?;
            }
        }
        if cfg.snapshots().contains(&t_ns) {
            let label = time_label(t_ns);
            out.write_json(&format!("ensemble_t{label}.json"), &raw.to_json())?;
            if d == 2 {
                let bloch: Vec<Vec<String>> = ens
                    .entries()
                    .iter()
                    .map(|e| {
                        let [x, y, z] = bloch_vector(&e.rho);
                        vec![num(t_ns), format_bits(e.z_b, n_b), num(e.p), num(x), num(y), num(z)]
                    })
                    .collect();
                out.write_csv(&format!("bloch_t{label}.csv"), &["t_ns", "zB", "p", "x", "y", "z"], &bloch)?;
            }
        }
        series.push(json!({ "t_ns": t_ns, "avg_entropy": entropy, "kept_probability": kept, "entries": ens.len(), "moments": per_k }));
    }
    out.write_csv(
        "moments.csv",
        &["t_ns", "k", "delta_k", "s_k", "s_k_ratio", "avg_entropy", "kept_probability"],
        &rows,
    )?;
    let summary = json!({ "post_selected": selection.is_some(), "series": series });
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}
