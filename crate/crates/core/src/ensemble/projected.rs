use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{basis_strings, StateVector};
use crate::lattice::{format_bits, gather_bits, parse_bits, BasisTag, Bits};
use crate::linalg::{CMat, C64, ZERO};
use crate::measurement::{probability_of, select_bitstrings, tomo_reconstruct, ShotTable};

pub const DEFAULT_P_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    ExactPure,
    TrajectoryAvg,
    Shots,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEntry {
    /// Outcome on B, packed so that the lowest B site is bit 0.
    pub z_b: Bits,
    pub p: f64,
    pub rho: CMat,
}

/// Weighted conditional states {(z_B, p(z_B), ρ_A(z_B))}.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedEnsemble {
    subsystem: Vec<usize>,
    n_sites: usize,
    dim: usize,
    entries: Vec<EnsembleEntry>,
    source: SourceTag,
}

/// Sites of B: everything outside A, ascending.
fn complement(subsystem: &[usize], n_sites: usize) -> Vec<usize> {
    (0..n_sites).filter(|j| !subsystem.contains(j)).collect()
}

fn check_subsystem(subsystem: &[usize], n_sites: usize) -> Result<()> {
    let ok = matches!(subsystem.len(), 1 | 2)
        && subsystem.iter().all(|&j| j < n_sites)
        && (subsystem.len() == 1 || subsystem[0] != subsystem[1]);
    if ok {
        Ok(())
    } else {
        Err(Error::param(format!("subsystem A must be one or two distinct sites below {n_sites}, got {subsystem:?}")))
    }
}

/// Row index of a basis string within A: `A[0]` is the most significant bit.
fn a_index(s: Bits, subsystem: &[usize]) -> usize {
    subsystem.iter().fold(0, |acc, &j| (acc << 1) | ((s >> j) & 1) as usize)
}

impl ProjectedEnsemble {
    pub fn new(
        subsystem: Vec<usize>,
        n_sites: usize,
        dim: usize,
        entries: Vec<EnsembleEntry>,
        source: SourceTag,
    ) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| e.rho.nrows() != dim || e.rho.ncols() != dim || !(e.p >= 0.0)) {
            return Err(Error::param(format!(
                "ensemble entry z_B={} has p={} and a {}x{} matrix, expected {dim}x{dim}",
                e.z_b,
                e.p,
                e.rho.nrows(),
                e.rho.ncols()
            )));
        }
        Ok(Self { subsystem, n_sites, dim, entries, source })
    }

    pub fn subsystem(&self) -> &[usize] {
        &self.subsystem
    }

    pub fn complement(&self) -> Vec<usize> {
        complement(&self.subsystem, self.n_sites)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    pub fn source(&self) -> SourceTag {
        self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.p).sum()
    }

    /// Copy with probabilities rescaled to sum to one.
    pub fn renormalized(&self) -> Self {
        let total = self.total_probability();
        let mut out = self.clone();
        if total > 0.0 {
            out.entries.iter_mut().for_each(|e| e.p /= total);
        }
        out
    }

    /// Restrict to the z_B and the A-subspace selected by `sel`, renormalising
    /// each kept state and the probabilities.
    pub fn post_select(&self, sel: &PostSelection) -> Result<Self> {
        if sel.keep.is_empty() || sel.keep.iter().any(|&i| i >= self.dim) {
            return Err(Error::param(format!("projector indices {:?} invalid for dimension {}", sel.keep, self.dim)));
        }
        let r = sel.keep.len();
        let mut entries = Vec::new();
        for e in &self.entries {
            if sel.zb_weight.is_some_and(|w| e.z_b.count_ones() as usize != w) {
                continue;
            }
            let sub = CMat::from_fn(r, r, |i, j| e.rho[(sel.keep[i], sel.keep[j])]);
            let tr = sub.trace().re;
            if tr <= 1e-12 {
                log::warn!("dropping z_B={} with vanishing weight {tr:.2e} in the projected subspace", e.z_b);
                continue;
            }
            entries.push(EnsembleEntry { z_b: e.z_b, p: e.p, rho: sub / C64::new(tr, 0.0) });
        }
        let out = Self { subsystem: self.subsystem.clone(), n_sites: self.n_sites, dim: r, entries, source: self.source };
        Ok(out.renormalized())
    }

    pub fn to_json(&self) -> EnsembleFile {
        let nb = self.n_sites - self.subsystem.len();
        EnsembleFile {
            subsystem: self.subsystem.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryFile {
                    z_b: format_bits(e.z_b, nb),
                    p: e.p,
                    rho_re: (0..self.dim).map(|i| (0..self.dim).map(|j| e.rho[(i, j)].re).collect()).collect(),
                    rho_im: (0..self.dim).map(|i| (0..self.dim).map(|j| e.rho[(i, j)].im).collect()).collect(),
                })
                .collect(),
            source_tag: self.source,
        }
    }

    pub fn from_json(file: &EnsembleFile) -> Result<Self> {
        let first = file.entries.first().ok_or_else(|| Error::param("ensemble file has no entries"))?;
        let dim = first.rho_re.len();
        let n_sites = file.subsystem.len() + first.z_b.len();
        let mut entries = Vec::with_capacity(file.entries.len());
        for e in &file.entries {
            let ok = e.z_b.len() + file.subsystem.len() == n_sites
                && e.rho_re.len() == dim
                && e.rho_im.len() == dim
                && e.rho_re.iter().chain(&e.rho_im).all(|row| row.len() == dim);
            if !ok {
                return Err(Error::param(format!("malformed ensemble entry {}", e.z_b)));
            }
            let rho = CMat::from_fn(dim, dim, |i, j| C64::new(e.rho_re[i][j], e.rho_im[i][j]));
            entries.push(EnsembleEntry { z_b: parse_bits(&e.z_b)?, p: e.p, rho });
        }
        Self::new(file.subsystem.clone(), n_sites, dim, entries, file.source_tag)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub subsystem: Vec<usize>,
    pub entries: Vec<EntryFile>,
    pub source_tag: SourceTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryFile {
    #[serde(rename = "zB")]
    pub z_b: String,
    pub p: f64,
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
}

/// Which z_B to keep and which A basis states span the kept subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSelection {
    pub zb_weight: Option<usize>,
    pub keep: Vec<usize>,
}

impl PostSelection {
    /// Two-site A with one excitation: z_B of the given weight, subspace
    /// spanned by |01⟩ and |10⟩ (in that order).
    pub fn single_excitation(zb_weight: usize) -> Self {
        Self { zb_weight: Some(zb_weight), keep: vec![0b01, 0b10] }
    }
}

/// Bloch vector of a 2×2 density matrix; north pole = first basis state.
pub fn bloch_vector(rho: &CMat) -> [f64; 3] {
    let c = rho[(0, 1)];
    [2.0 * c.re, -2.0 * c.im, (rho[(0, 0)] - rho[(1, 1)]).re]
}

/// Streaming builder: accumulates Σ w·|v⟩⟨v| per z_B over many states that
/// share one basis, where |v⟩ is the unnormalised conditional vector of A.
#[derive(Clone, Debug)]
pub struct EnsembleAccumulator {
    subsystem: Vec<usize>,
    n_sites: usize,
    dim: usize,
    basis: BasisTag,
    z_values: Vec<Bits>,
    /// basis position → (z_B slot, row in A)
    layout: Vec<(usize, usize)>,
    weight: f64,
    p_sum: Vec<f64>,
    /// slot-major d×d blocks, row-major
    m_sum: Vec<C64>,
}

impl EnsembleAccumulator {
    pub fn new(basis: BasisTag, subsystem: &[usize]) -> Result<Self> {
        let n_sites = basis.n_sites();
        check_subsystem(subsystem, n_sites)?;
        let b_sites = complement(subsystem, n_sites);
        let strings = basis_strings(basis);
        let mut slots: BTreeMap<Bits, usize> = strings.iter().map(|&s| (gather_bits(s, &b_sites), 0)).collect();
        for (i, slot) in slots.values_mut().enumerate() {
            *slot = i;
        }
        let layout = strings.iter().map(|&s| (slots[&gather_bits(s, &b_sites)], a_index(s, subsystem))).collect();
        let dim = 1 << subsystem.len();
        let n_slots = slots.len();
        Ok(Self {
            subsystem: subsystem.to_vec(),
            n_sites,
            dim,
            basis,
            z_values: slots.into_keys().collect(),
            layout,
            weight: 0.0,
            p_sum: vec![0.0; n_slots],
            m_sum: vec![ZERO; n_slots * dim * dim],
        })
    }

    pub fn add(&mut self, psi: &StateVector, weight: f64) -> Result<()> {
        if psi.basis() != self.basis {
            return Err(Error::param(format!("state basis {} differs from accumulator basis {}", psi.basis(), self.basis)));
        }
        let d = self.dim;
        let mut vecs = vec![ZERO; self.z_values.len() * d];
        for (&(slot, a), &amp) in self.layout.iter().zip(psi.amplitudes()) {
            vecs[slot * d + a] = amp;
        }
        for (slot, v) in vecs.chunks(d).enumerate() {
            let p: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            if p == 0.0 {
                continue;
            }
            self.p_sum[slot] += weight * p;
            let block = &mut self.m_sum[slot * d * d..(slot + 1) * d * d];
            for i in 0..d {
                for j in 0..d {
                    block[i * d + j] += v[i] * v[j].conj() * weight;
                }
            }
        }
        self.weight += weight;
        Ok(())
    }

    /// Fold a later accumulator (same basis and subsystem) into this one.
    pub fn merge(&mut self, other: EnsembleAccumulator) {
        assert_eq!(self.layout.len(), other.layout.len(), "merging accumulators over different bases");
        self.weight += other.weight;
        self.p_sum.iter_mut().zip(other.p_sum).for_each(|(a, b)| *a += b);
        self.m_sum.iter_mut().zip(other.m_sum).for_each(|(a, b)| *a += b);
    }

    pub fn finish(&self, p_floor: f64, source: SourceTag) -> Result<ProjectedEnsemble> {
        if self.weight <= 0.0 {
            return Err(Error::param("no states were accumulated"));
        }
        let d = self.dim;
        let entries = self
            .z_values
            .iter()
            .enumerate()
            .filter(|(slot, _)| self.p_sum[*slot] / self.weight >= p_floor && self.p_sum[*slot] > 0.0)
            .map(|(slot, &z_b)| {
                let block = &self.m_sum[slot * d * d..(slot + 1) * d * d];
                let norm = C64::new(self.p_sum[slot], 0.0);
                EnsembleEntry { z_b, p: self.p_sum[slot] / self.weight, rho: CMat::from_row_slice(d, d, block) / norm }
            })
            .collect();
        ProjectedEnsemble::new(self.subsystem.clone(), self.n_sites, d, entries, source)
    }
}

/// Conditional pure states of A for every z_B with p(z_B) ≥ `p_floor`.
pub fn exact_ensemble(psi: &StateVector, subsystem: &[usize], p_floor: f64) -> Result<ProjectedEnsemble> {
    let mut acc = EnsembleAccumulator::new(psi.basis(), subsystem)?;
    acc.add(psi, 1.0)?;
    acc.finish(p_floor, SourceTag::ExactPure)
}

/// Ensemble of a trajectory mixture: p(z_B) is the weighted mean of the
/// per-trajectory probabilities and ρ_A(z_B) the probability-weighted mean of
/// the conditional states.
pub fn trajectory_ensemble(states: &[(StateVector, f64)], subsystem: &[usize], p_floor: f64) -> Result<ProjectedEnsemble> {
    let (first, _) = states.first().ok_or_else(|| Error::param("trajectory ensemble needs at least one state"))?;
    let mut acc = EnsembleAccumulator::new(first.basis(), subsystem)?;
    for (psi, w) in states {
        acc.add(psi, *w)?;
    }
    acc.finish(p_floor, SourceTag::TrajectoryAvg)
}

/// Ensemble reconstructed from nine-basis shot tables: z_B passing the count
/// threshold in every basis, with tomographic conditional states. The
/// probabilities of discarded outcomes are missing, so Σp ≤ 1.
pub fn shot_ensemble(tables: &[ShotTable], subsystem: &[usize], threshold: f64) -> Result<ProjectedEnsemble> {
    let n_sites = tables.first().ok_or_else(|| Error::param("no shot tables"))?.n_qubits;
    check_subsystem(subsystem, n_sites)?;
    if subsystem.len() != 2 {
        return Err(Error::param("shot tomography needs a two-site subsystem"));
    }
    let b_sites = complement(subsystem, n_sites);
    let entries = select_bitstrings(tables, &b_sites, threshold)
        .into_iter()
        .map(|z_b| {
            let tomo = tomo_reconstruct(tables, subsystem, &b_sites, z_b, threshold)?;
            Ok(EnsembleEntry { z_b, p: probability_of(z_b, tables, &b_sites), rho: tomo.rho })
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectedEnsemble::new(subsystem.to_vec(), n_sites, 4, entries, SourceTag::Shots)
}
