use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, Method};
use crate::exec::Execution;
use crate::lattice::LatticeConfig;
use crate::measurement::{ConfusionMatrix, MitigationMode};
use crate::noise::{
    NoiseKind, NoiseSpec, DEFAULT_HARMONICS, DEFAULT_ONE_OVER_F_HIGH_CUT_HZ, DEFAULT_ONE_OVER_F_LOW_CUT_HZ,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Ergodicity,
    DeepThermalization,
    Leakage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Shots,
    Noisy,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "shots" => Ok(Mode::Shots),
            "noisy" => Ok(Mode::Noisy),
            other => Err(Error::param(format!("unknown mode {other:?} (exact, shots, noisy)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindName {
    White,
    OneOverF,
}

/// `{kind, t2star_us | strength, low_cut_hz, high_cut_hz}`; strength is W in
/// rad²/s (white) or A in rad² (1/f).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2star_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(default = "default_low_cut")]
    pub low_cut_hz: f64,
    #[serde(default = "default_high_cut")]
    pub high_cut_hz: f64,
}

fn default_low_cut() -> f64 {
    DEFAULT_ONE_OVER_F_LOW_CUT_HZ
}

fn default_high_cut() -> f64 {
    DEFAULT_ONE_OVER_F_HIGH_CUT_HZ
}

impl NoiseConfig {
    pub fn kind(&self) -> NoiseKind {
        match self.kind {
            NoiseKindName::White => NoiseKind::White,
            NoiseKindName::OneOverF => NoiseKind::OneOverF { low_cut_hz: self.low_cut_hz, high_cut_hz: self.high_cut_hz },
        }
    }

    pub fn label(&self) -> &'static str {
        self.kind().label()
    }

    pub fn spec_with_strength(&self, n_sites: usize, strength: f64) -> Result<NoiseSpec> {
        let mut spec = NoiseSpec::uniform(self.kind(), n_sites, strength)?;
        spec.harmonics = DEFAULT_HARMONICS;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSettings {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_trotter_dt_ns")]
    pub trotter_dt_ns: f64,
    #[serde(default = "default_krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_trotter_dt_ns() -> f64 {
    0.1
}

fn default_krylov_dim() -> usize {
    30
}

fn default_tolerance() -> f64 {
    1e-12
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            method: Method::default(),
            trotter_dt_ns: default_trotter_dt_ns(),
            krylov_dim: default_krylov_dim(),
            tolerance: default_tolerance(),
        }
    }
}

impl EvolutionSettings {
    pub fn to_config(&self, exec: Execution) -> EvolutionConfig {
        EvolutionConfig {
            method: self.method,
            trotter_dt: self.trotter_dt_ns * 1e-9,
            krylov_dim: self.krylov_dim,
            tolerance: self.tolerance,
            exec,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    pub f00: f64,
    pub f11: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self { f00: 0.996, f11: 0.975 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    #[serde(default = "default_calibration_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_calibration_grid")]
    pub grid_points: usize,
    /// Ramsey window as a multiple of the target T2*.
    #[serde(default = "default_window_factor")]
    pub window_factor: f64,
}

fn default_calibration_trajectories() -> usize {
    8000
}

fn default_calibration_grid() -> usize {
    200
}

fn default_window_factor() -> f64 {
    3.0
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            trajectories: default_calibration_trajectories(),
            grid_points: default_calibration_grid(),
            window_factor: default_window_factor(),
        }
    }
}

/// One run of an experiment family. Missing fields take the defaults below;
/// the fully resolved form is written next to the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_lattice")]
    pub lattice: LatticeConfig,
    /// `neel`, `xy_checkerboard`, or an explicit string such as `0101…`
    /// (first character = highest site; `x`/`y` for X+/Y+).
    #[serde(default)]
    pub initial_pattern: Option<String>,
    #[serde(default)]
    pub times_ns: Option<Vec<f64>>,
    /// Times at which Bloch coordinates, histograms and ensembles are written.
    #[serde(default)]
    pub snapshot_times_ns: Option<Vec<f64>>,
    #[serde(default)]
    pub subsystem_a: Option<Vec<usize>>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "default_shots")]
    pub shots_per_basis: u64,
    #[serde(default)]
    pub noise: Vec<NoiseConfig>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub mitigation: MitigationMode,
    #[serde(default = "default_readout")]
    pub readout: Option<ReadoutConfig>,
    #[serde(default = "default_threshold")]
    pub selection_threshold: f64,
    #[serde(default = "default_p_floor")]
    pub p_floor: f64,
    #[serde(default = "default_max_k")]
    pub max_moment: usize,
    #[serde(default)]
    pub fit_window_ns: Option<(f64, f64)>,
    #[serde(default = "default_e0")]
    pub e0: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub evolution: EvolutionSettings,
    #[serde(default)]
    pub calibration: CalibrationSettings,
}

fn default_lattice() -> LatticeConfig {
    LatticeConfig { rows: 4, cols: 4, j_default_mhz: 4.0, j_overrides: Vec::new() }
}

fn default_shots() -> u64 {
    200_000
}

fn default_trajectories() -> usize {
    16
}

fn default_readout() -> Option<ReadoutConfig> {
    Some(ReadoutConfig::default())
}

fn default_threshold() -> f64 {
    crate::measurement::DEFAULT_SELECTION_THRESHOLD
}

fn default_p_floor() -> f64 {
    crate::ensemble::DEFAULT_P_FLOOR
}

fn default_max_k() -> usize {
    4
}

fn default_e0() -> f64 {
    std::f64::consts::LN_2
}

fn default_seed() -> u64 {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// {2, 50, 306} ns plus a 20-point grid 25, 50, …, 500 ns.
pub fn default_time_grid() -> Vec<f64> {
    let mut t: Vec<f64> = (1..=20).map(|i| 25.0 * i as f64).collect();
    t.extend([2.0, 306.0]);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// 0, 10, …, 500 ns for leakage runs, which fit from t = 0.
pub fn default_leakage_grid() -> Vec<f64> {
    (0..=50).map(|i| 10.0 * i as f64).collect()
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config { path: origin.display().to_string(), message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, path)
    }

    fn n_sites(&self) -> usize {
        self.lattice.rows * self.lattice.cols
    }

    /// Fill every optional field with its experiment-specific default and
    /// check consistency.
    pub fn resolve(mut self) -> Result<Self> {
        let (rows, cols) = (self.lattice.rows, self.lattice.cols);
        let leakage = self.experiment == ExperimentKind::Leakage;
        if self.initial_pattern.is_none() {
            self.initial_pattern = Some(if leakage { "xy_checkerboard" } else { "neel" }.to_string());
        }
        if self.times_ns.is_none() {
            self.times_ns = Some(if leakage { default_leakage_grid() } else { default_time_grid() });
        }
        if self.snapshot_times_ns.is_none() {
            let times = self.times_ns.as_ref().expect("set above");
            let snaps = [2.0, 50.0, 306.0].into_iter().filter(|t| times.contains(t)).collect::<Vec<_>>();
            self.snapshot_times_ns = Some(if snaps.is_empty() { vec![*times.last().unwrap_or(&0.0)] } else { snaps });
        }
        if self.subsystem_a.is_none() {
            self.subsystem_a = Some(if leakage {
                vec![(rows / 2) * cols + cols / 2]
            } else if cols >= 2 {
                // horizontal bulk pair near the centre
                let (r, c) = ((rows - 1) / 2, ((cols - 1) / 2).min(cols - 2));
                vec![r * cols + c, r * cols + c + 1]
            } else if rows >= 2 {
                let r = ((rows - 1) / 2).min(rows - 2);
                vec![r, r + 1]
            } else {
                vec![0]
            });
        }
        if self.mode.is_none() {
            self.mode = Some(if leakage { Mode::Noisy } else { Mode::Exact });
        }
        if leakage && self.fit_window_ns.is_none() {
            self.fit_window_ns = Some((0.0, 200.0));
        }
        self.validate()?;
        Ok(self)
    }

    fn invalid(&self, field: &str, message: impl std::fmt::Display) -> Error {
        Error::Config { path: field.to_string(), message: message.to_string() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        self.lattice.to_spec().map_err(|e| self.invalid("lattice", e))?;
        let times = self.times_ns.as_deref().unwrap_or_default();
        if times.is_empty() {
            return Err(self.invalid("times_ns", "time grid is empty"));
        }
        if let Some(w) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(self.invalid("times_ns", format!("not strictly increasing at index {}", w + 1)));
        }
        if times[0] < 0.0 {
            return Err(self.invalid("times_ns", "negative time"));
        }
        for t in self.snapshot_times_ns.as_deref().unwrap_or_default() {
            if !times.contains(t) {
                return Err(self.invalid("snapshot_times_ns", format!("{t} ns is not on the time grid")));
            }
        }
        let a = self.subsystem_a.as_deref().unwrap_or_default();
        let distinct = a.len() < 2 || a[0] != a[1];
        if !(matches!(a.len(), 1 | 2) && distinct && a.iter().all(|&j| j < n)) {
            return Err(self.invalid("subsystem_a", format!("need one or two distinct sites below {n}, got {a:?}")));
        }
        let mode = self.mode.unwrap_or(Mode::Exact);
        if mode == Mode::Noisy && self.trajectories == 0 {
            return Err(self.invalid("trajectories", "noisy mode needs at least one trajectory"));
        }
        if self.experiment == ExperimentKind::Leakage && mode != Mode::Noisy {
            return Err(self.invalid("mode", "leakage benchmark runs in noisy mode"));
        }
        if mode == Mode::Noisy && self.experiment != ExperimentKind::Leakage && self.noise.is_empty() {
            return Err(self.invalid("noise", "noisy mode needs a noise entry"));
        }
        if mode == Mode::Shots {
            if self.shots_per_basis == 0 {
                return Err(self.invalid("shots_per_basis", "must be positive"));
            }
            if n < 2 {
                return Err(self.invalid("lattice", "shot simulation needs at least two sites"));
            }
            if self.experiment == ExperimentKind::DeepThermalization && a.len() != 2 {
                return Err(self.invalid("subsystem_a", "shot tomography needs two sites"));
            }
        }
        for (i, nc) in self.noise.iter().enumerate() {
            let field = format!("noise[{i}]");
            match (nc.t2star_us, nc.strength) {
                (Some(t), None) if t > 0.0 => {}
                (None, Some(s)) if s >= 0.0 => {}
                _ => return Err(self.invalid(&field, "give exactly one of t2star_us (> 0) or strength (>= 0)")),
            }
            nc.spec_with_strength(n, 0.0).map_err(|e| self.invalid(&field, e))?;
        }
        if let Some(r) = &self.readout {
            ConfusionMatrix::uniform(n, r.f00, r.f11).map_err(|e| self.invalid("readout", e))?;
        }
        if !(1..=6).contains(&self.max_moment) {
            return Err(self.invalid("max_moment", "must be between 1 and 6"));
        }
        if let Some((lo, hi)) = self.fit_window_ns {
            if !(hi > lo) {
                return Err(self.invalid("fit_window_ns", "window end must exceed its start"));
            }
        }
        if !(self.e0 > 0.0) {
            return Err(self.invalid("e0", "must be positive"));
        }
        if !(self.p_floor >= 0.0) {
            return Err(self.invalid("p_floor", "must be non-negative"));
        }
        self.evolution.to_config(Execution::Serial).validate().map_err(|e| self.invalid("evolution", e))?;
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        self.times_ns.as_deref().unwrap_or_default()
    }

    pub fn snapshots(&self) -> &[f64] {
        self.snapshot_times_ns.as_deref().unwrap_or_default()
    }

    pub fn subsystem(&self) -> &[usize] {
        self.subsystem_a.as_deref().unwrap_or_default()
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_for_fig_setups() {
        let cfg = ExperimentConfig::from_json_str(r#"{"experiment": "deep_thermalization"}"#, Path::new("x"))
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg.subsystem(), &[5, 6]);
        assert_eq!(cfg.times().len(), 22);
        assert_eq!(cfg.snapshots(), &[2.0, 50.0, 306.0]);
        let leak = ExperimentConfig::from_json_str(
            r#"{"experiment": "leakage", "lattice": {"rows": 3, "cols": 3}}"#,
            Path::new("x"),
        )
        .unwrap()
        .resolve()
        .unwrap();
        assert_eq!(leak.subsystem(), &[4]);
        assert_eq!(leak.initial_pattern.as_deref(), Some("xy_checkerboard"));
        assert_eq!(leak.mode(), Mode::Noisy);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = ExperimentConfig::from_json_str(
            r#"{"experiment": "ergodicity", "times_ns": [5, 3]}"#,
            Path::new("x"),
        )
        .unwrap()
        .resolve()
        .unwrap_err();
        assert!(bad.to_string().contains("times_ns"), "{bad}");
        let syntax = ExperimentConfig::from_json_str("{\n\"experiment\": \"ergodicity\",\n\"bogus\": 1}", Path::new("cfg.json"))
            .unwrap_err();
        assert!(syntax.to_string().contains("line 3"), "{syntax}");
        let noise = ExperimentConfig::from_json_str(
            r#"{"experiment": "leakage", "noise": [{"kind": "white"}]}"#,
            Path::new("x"),
        )
        .unwrap()
        .resolve()
        .unwrap_err();
        assert!(noise.to_string().contains("noise[0]"), "{noise}");
    }
}
