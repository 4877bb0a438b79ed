use serde_json::json;

use crate::ensemble::{avg_entropy, exact_ensemble, fit_leakage, EnsembleAccumulator, LeakageFit, SourceTag};
use crate::error::{Error, Result};
use crate::exec::Execution;

use super::common::{build_system, exact_states, resolve_strength, trajectory_sweep, System};
use super::config::{ExperimentConfig, NoiseConfig};
use super::output::{num, OutputDir};

/// Trajectory-averaged Ē_A(t) for one noise entry.
pub fn entropy_curve(sys: &System, nc: &NoiseConfig, strength: f64, cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<f64>> {
    let evo = cfg.evolution.to_config(exec);
    let times_s: Vec<f64> = cfg.times().iter().map(|t| t * 1e-9).collect();
    let a = cfg.subsystem();
    let spec = nc.spec_with_strength(sys.n_sites(), strength)?;
    let accs = trajectory_sweep(
        sys,
        std::slice::from_ref(&spec),
        &times_s,
        &evo,
        cfg.trajectories,
        cfg.seed,
        exec,
        || times_s.iter().map(|_| EnsembleAccumulator::new(sys.basis(), a)).collect::<Result<Vec<_>>>(),
        |acc, i, psi| acc[i].add(psi, 1.0),
        |acc, part| acc.iter_mut().zip(part).for_each(|(x, y)| x.merge(y)),
    )?;
    accs.iter().map(|acc| Ok(avg_entropy(&acc.finish(cfg.p_floor, SourceTag::TrajectoryAvg)?))).collect()
}

fn fit_json(fit: &LeakageFit) -> serde_json::Value {
    json!({
        "tau_us": fit.tau * 1e6,
        "slope_per_us": fit.slope * 1e-6,
        "offset": fit.offset,
        "window_ns": [fit.window.0 * 1e9, fit.window.1 * 1e9],
        "points": fit.points,
        "rms_residual": fit.residual,
        "r_squared": fit.r_squared,
    })
}

pub fn run(cfg: &ExperimentConfig, exec: Execution, out: &mut OutputDir) -> Result<serde_json::Value> {
    let sys = build_system(cfg)?;
    let mut labels: Vec<&str> = cfg.noise.iter().map(|nc| nc.label()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config { path: "noise".into(), message: "each noise kind may appear once".into() });
    }
    let times_s: Vec<f64> = cfg.times().iter().map(|t| t * 1e-9).collect();
    let window = cfg.fit_window_ns.map(|(lo, hi)| (lo * 1e-9, hi * 1e-9));
    let mut curves = Vec::new();
    if cfg.noise.is_empty() {
        let evo = cfg.evolution.to_config(exec);
        let values = exact_states(&sys, &times_s, &evo)?
            .iter()
            .map(|psi| Ok(avg_entropy(&exact_ensemble(psi, cfg.subsystem(), cfg.p_floor)?)))
            .collect::<Result<Vec<_>>>()?;
        curves.push(("none", None, values));
    }
    for nc in &cfg.noise {
        let strength = resolve_strength(nc, cfg, exec)?;
        log::info!("{}: strength {strength:e}", nc.label());
        curves.push((nc.label(), Some(strength), entropy_curve(&sys, nc, strength, cfg, exec)?));
    }
    let mut fits = serde_json::Map::new();
    let mut taus = std::collections::BTreeMap::new();
    for (label, strength, values) in &curves {
        let rows: Vec<Vec<String>> = cfg.times().iter().zip(values).map(|(t, v)| vec![num(*t), num(*v)]).collect();
        out.write_csv(&format!("entropy_{label}.csv"), &["t_ns", "avg_entropy"], &rows)?;
        let entry = match fit_leakage(&times_s, values, cfg.e0, window) {
            Ok(fit) => {
                taus.insert(*label, fit.tau);
                let mut v = fit_json(&fit);
                v["strength"] = json!(strength);
                v
            }
            Err(e) => {
                log::warn!("{label}: {e}");
                json!({ "strength": strength, "error": e.to_string() })
            }
        };
        fits.insert(label.to_string(), entry);
    }
    let ratio = match (taus.get("one_over_f"), taus.get("white")) {
        (Some(a), Some(b)) => Some(a / b),
        _ => None,
    };
    let summary = json!({ "e0": cfg.e0, "fits": fits, "tau_ratio_one_over_f_to_white": ratio });
    out.write_json("fit.json", &summary)?;
    Ok(summary)
}
