use std::collections::BTreeMap;

use serde_json::json;

use crate::error::Result;
use crate::evolution::{basis_strings, StateVector};
use crate::exec::Execution;
use crate::lattice::{format_bits, Bits, SectorBasis};
use crate::measurement::{mitigate_counts, sample_shots, Axis, BasisLabel, ConfusionMatrix, MitigationMode};
use crate::stats::{conditional_probability_weighted, excitation_density_weighted, porter_thomas_test};

use super::common::{build_system, derive_seed, exact_states, resolve_strength, trajectory_sweep, System};
use super::config::{ExperimentConfig, Mode};
use super::output::{num, time_label, OutputDir};

/// Distribution over computational basis strings at one time.
type Weights = BTreeMap<Bits, f64>;

fn weights_of(psi: &StateVector) -> Weights {
    psi.strings().into_iter().zip(psi.amplitudes().iter().map(|a| a.norm_sqr())).collect()
}

fn shot_weights(sys: &System, psi: &StateVector, cfg: &ExperimentConfig, time_index: usize) -> Result<Weights> {
    let n = sys.n_sites();
    let confusion = match &cfg.readout {
        Some(r) => ConfusionMatrix::uniform(n, r.f00, r.f11)?,
        None => ConfusionMatrix::ideal(n),
    };
    let zz = BasisLabel::new(Axis::Z, Axis::Z);
    let seed = derive_seed(cfg.seed, time_index as u64);
    let table = sample_shots(psi, zz, &[0, 1], cfg.shots_per_basis, cfg.readout.as_ref().map(|_| &confusion), seed)?;
    let mode = if cfg.readout.is_some() { cfg.mitigation } else { MitigationMode::None };
    Ok(mitigate_counts(&table, &confusion, mode)?.counts)
}

pub fn run(cfg: &ExperimentConfig, exec: Execution, out: &mut OutputDir) -> Result<serde_json::Value> {
    let sys = build_system(cfg)?;
    let evo = cfg.evolution.to_config(exec);
    let n = sys.n_sites();
    let times_s: Vec<f64> = cfg.times().iter().map(|t| t * 1e-9).collect();
    let weights: Vec<Weights> = match cfg.mode() {
        Mode::Exact => exact_states(&sys, &times_s, &evo)?.iter().map(weights_of).collect(),
        Mode::Shots => {
            let states = exact_states(&sys, &times_s, &evo)?;
            states.iter().enumerate().map(|(i, psi)| shot_weights(&sys, psi, cfg, i)).collect::<Result<_>>()?
        }
        Mode::Noisy => {
            let specs = cfg
                .noise
                .iter()
                .map(|nc| nc.spec_with_strength(n, resolve_strength(nc, cfg, exec)?))
                .collect::<Result<Vec<_>>>()?;
            let strings = basis_strings(sys.basis());
            let dim = strings.len();
            let sums = trajectory_sweep(
                &sys,
                &specs,
                &times_s,
                &evo,
                cfg.trajectories,
                cfg.seed,
                exec,
                || Ok(vec![vec![0.0; dim]; times_s.len()]),
                |acc, i, psi| {
                    acc[i].iter_mut().zip(psi.amplitudes()).for_each(|(w, a)| *w += a.norm_sqr());
                    Ok(())
                },
                |acc, part| {
                    for (a, p) in acc.iter_mut().zip(part) {
                        a.iter_mut().zip(p).for_each(|(x, y)| *x += y);
                    }
                },
            )?;
            sums.into_iter().map(|w| strings.iter().copied().zip(w).collect()).collect()
        }
    };

    let sector = sys.excitations.map(|k| SectorBasis::enumerate(n, k)).transpose()?;
    let subsystem = cfg.subsystem();
    let z_a = if subsystem.len() == 2 { 0b10 } else { 1 };
    let mut density_rows = Vec::new();
    let mut ks_rows = Vec::new();
    let mut snapshots = Vec::new();
    for (t_ns, w) in cfg.times().iter().zip(&weights) {
        for (j, v) in excitation_density_weighted(w.iter().map(|(s, p)| (*s, *p)), n).into_iter().enumerate() {
            density_rows.push(vec![num(*t_ns), j.to_string(), num(v)]);
        }
        // probabilities over the accessible space, renormalised onto it
        let probs: Vec<f64> = match &sector {
            Some(sec) => sec.states().iter().map(|s| w.get(s).copied().unwrap_or(0.0)).collect(),
            None => (0..1u64 << n).map(|s| w.get(&s).copied().unwrap_or(0.0)).collect(),
        };
        let mass: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.iter().map(|p| p / mass).collect();
        let pt = porter_thomas_test(&probs, probs.len())?;
        ks_rows.push(vec![num(*t_ns), num(pt.ks), num(pt.ks_real), num(pt.histogram.fitted_rate)]);
        if cfg.snapshots().contains(t_ns) {
            let label = time_label(*t_ns);
            let dp: Vec<Vec<String>> = pt.histogram.scaled.iter().map(|x| vec![num(*t_ns), num(*x)]).collect();
            out.write_csv(&format!("porter_thomas_t{label}.csv"), &["t_ns", "Dp_value"], &dp)?;
            let bins: Vec<Vec<String>> = pt
                .histogram
                .edges
                .windows(2)
                .zip(&pt.histogram.density)
                .map(|(e, d)| vec![num(*t_ns), num(e[0]), num(e[1]), num(*d)])
                .collect();
            out.write_csv(&format!("histogram_t{label}.csv"), &["t_ns", "bin_lo", "bin_hi", "density"], &bins)?;
            let cond = conditional_probability_weighted(w.iter().map(|(s, p)| (*s, *p)), subsystem, n, z_a, cfg.p_floor);
            let nb = n - subsystem.len();
            let rows: Vec<Vec<String>> =
                cond.entries.iter().map(|(z, pb, pc)| vec![num(*t_ns), format_bits(*z, nb), num(*pb), num(*pc)]).collect();
            out.write_csv(&format!("conditional_t{label}.csv"), &["t_ns", "zB", "p_zB", "p_cond"], &rows)?;
            // half-filling z_B: one excitation left for A
            let focus = match sys.excitations {
                Some(k) if k >= 1 && subsystem.len() == 2 => cond.with_zb_weight(k - 1),
                _ => cond,
            };
            snapshots.push(json!({
                "t_ns": t_ns,
                "ks": pt.ks,
                "ks_real": pt.ks_real,
                "conditional_mean": focus.mean(),
                "conditional_std": focus.std_dev(),
                "conditional_count": focus.entries.len(),
            }));
        }
    }
    out.write_csv("densities.csv", &["t_ns", "site", "n_j"], &density_rows)?;
    out.write_csv("porter_thomas_ks.csv", &["t_ns", "ks", "ks_real", "fitted_rate"], &ks_rows)?;
    let summary = json!({ "dimension": sector.as_ref().map_or(1usize << n, |s| s.len()), "snapshots": snapshots });
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}
