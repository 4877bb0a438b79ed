use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{BasisLabel, ShotTable};
use crate::error::{Error, Result};
use crate::lattice::{gather_bits, Bits};
use crate::linalg::{hermitize, kron, pauli, project_psd_unit_trace, CMat, ZERO};

pub const DEFAULT_SELECTION_THRESHOLD: f64 = 80.0;

/// Reconstructed conditional state of A for one outcome z_B.
#[derive(Clone, Debug, Serialize)]
pub struct TomogramA {
    pub z_b: Bits,
    #[serde(skip)]
    pub rho: CMat,
    /// Conditional counts per basis.
    pub support: Vec<(BasisLabel, f64)>,
}

fn marginal_b(table: &ShotTable, subsystem_b: &[usize]) -> BTreeMap<Bits, f64> {
    let mut out = BTreeMap::new();
    for (&s, &c) in &table.counts {
        *out.entry(gather_bits(s, subsystem_b)).or_insert(0.0) += c;
    }
    out
}

/// Outcomes z_B (packed over `subsystem_b`) whose marginal count reaches
/// `threshold` in every table.
pub fn select_bitstrings(tables: &[ShotTable], subsystem_b: &[usize], threshold: f64) -> Vec<Bits> {
    if tables.is_empty() {
        return Vec::new();
    }
    let marginals: Vec<_> = tables.iter().map(|t| marginal_b(t, subsystem_b)).collect();
    let observed: BTreeSet<Bits> = marginals
        .iter()
        .flat_map(|m| m.iter().filter(|(_, c)| **c > 0.0).map(|(z, _)| *z))
        .collect();
    observed
        .into_iter()
        .filter(|z| marginals.iter().all(|m| m.get(z).copied().unwrap_or(0.0) >= threshold))
        .collect()
}

/// Fraction of all shots, pooled over bases, whose B-part equals `z_b`.
pub fn probability_of(z_b: Bits, tables: &[ShotTable], subsystem_b: &[usize]) -> f64 {
    let total: f64 = tables.iter().map(|t| t.total()).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let hits: f64 = tables
        .iter()
        .flat_map(|t| t.counts.iter())
        .filter(|(s, _)| gather_bits(**s, subsystem_b) == z_b)
        .map(|(_, c)| c)
        .sum();
    hits / total
}

/// Linear-inversion tomography of A conditioned on z_B, projected onto the
/// nearest unit-trace PSD matrix. Row index of ρ is `2·bit(A[0]) + bit(A[1])`.
pub fn tomo_reconstruct(
    tables: &[ShotTable],
    subsystem_a: &[usize],
    subsystem_b: &[usize],
    z_b: Bits,
    threshold: f64,
) -> Result<TomogramA> {
    let [a0, a1] = match *subsystem_a {
        [a0, a1] => [a0, a1],
        _ => return Err(Error::param("tomography needs a two-site subsystem")),
    };
    let eig = |bit: u64| if bit == 0 { 1.0 } else { -1.0 };
    let mut corr = [[0.0f64; 4]; 4];
    corr[0][0] = 1.0;
    let (mut first, mut first_n, mut second, mut second_n) = ([0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4]);
    let mut support = Vec::with_capacity(9);
    for basis in BasisLabel::all() {
        let table = tables
            .iter()
            .find(|t| t.basis == basis)
            .ok_or_else(|| Error::Reconstruction(format!("no shot table for basis {basis}")))?;
        let (mut n, mut s0, mut s1, mut s01) = (0.0, 0.0, 0.0, 0.0);
        for (&s, &c) in &table.counts {
            if gather_bits(s, subsystem_b) != z_b {
                continue;
            }
            let (l0, l1) = (eig((s >> a0) & 1), eig((s >> a1) & 1));
            n += c;
            s0 += c * l0;
            s1 += c * l1;
            s01 += c * l0 * l1;
        }
        if n <= 0.0 || n < threshold {
            return Err(Error::Reconstruction(format!(
                "basis {basis} has {n} conditional counts, below threshold {threshold}"
            )));
        }
        let (p, q) = (basis.axes[0].pauli_index(), basis.axes[1].pauli_index());
        corr[p][q] = s01 / n;
        first[p] += s0;
        first_n[p] += n;
        second[q] += s1;
        second_n[q] += n;
        support.push((basis, n));
    }
    for p in 1..4 {
        corr[p][0] = first[p] / first_n[p];
        corr[0][p] = second[p] / second_n[p];
    }
    let mut rho = CMat::from_element(4, 4, ZERO);
    for (p, row) in corr.iter().enumerate() {
        for (q, &c) in row.iter().enumerate() {
            rho += kron(&pauli(p), &pauli(q)) * crate::linalg::C64::new(0.25 * c, 0.0);
        }
    }
    Ok(TomogramA { z_b, rho: project_psd_unit_trace(&hermitize(&rho)), support })
}
