//! Square-lattice geometry, U(1) charge sectors and the sparse XY Hamiltonian
//!
//! Conventions used throughout the crate:
//! - sites are numbered row-major, `site = row * cols + col`;
//! - bit `i` of a basis string is the state of site `i` (1 = excited);
//! - strings are printed most-significant site first, so the first character
//!   of `"0101"` is site 3.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::C64;

pub type Bits = u64;

/// Largest lattice handled by the sector machinery.
pub const MAX_SITES: usize = 24;

/// Default nearest-neighbour coupling, 2π × 4 MHz in rad/s.
pub const DEFAULT_COUPLING: f64 = 2.0 * PI * 4.0e6;

pub fn mhz_to_rad_per_s(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

/// Geometry plus the coupling of every nearest-neighbour bond (rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    rows: usize,
    cols: usize,
    couplings: BTreeMap<(usize, usize), f64>,
}

impl LatticeSpec {
    /// All bonds set to `coupling`.
    pub fn uniform(rows: usize, cols: usize, coupling: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Spec(format!("lattice must be non-empty, got {rows}x{cols}")));
        }
        if rows * cols > MAX_SITES {
            return Err(Error::Spec(format!(
                "{rows}x{cols} lattice exceeds {MAX_SITES} sites"
            )));
        }
        if !coupling.is_finite() {
            return Err(Error::Spec("coupling must be finite".into()));
        }
        let mut couplings = BTreeMap::new();
        for r in 0..rows {
            for c in 0..cols {
                let s = r * cols + c;
                if c + 1 < cols {
                    couplings.insert((s, s + 1), coupling);
                }
                if r + 1 < rows {
                    couplings.insert((s, s + cols), coupling);
                }
            }
        }
        Ok(Self { rows, cols, couplings })
    }

    pub fn with_default_coupling(rows: usize, cols: usize) -> Result<Self> {
        Self::uniform(rows, cols, DEFAULT_COUPLING)
    }

    /// Override one bond. Fails unless `(i, j)` are nearest neighbours.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let key = (i.min(j), i.max(j));
        if !self.couplings.contains_key(&key) {
            return Err(Error::Spec(format!(
                "sites ({i}, {j}) are not nearest neighbours on a {}x{} lattice",
                self.rows, self.cols
            )));
        }
        if !value.is_finite() {
            return Err(Error::Spec(format!("coupling for ({i}, {j}) is not finite")));
        }
        self.couplings.insert(key, value);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    /// Bonds `(i, j, J_ij)` with `i < j`, in ascending order.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<f64> {
        self.couplings.get(&(i.min(j), i.max(j))).copied()
    }
}

/// JSON form: `{rows, cols, j_default_mhz, j_overrides: [{i, j, mhz}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_j_mhz")]
    pub j_default_mhz: f64,
    #[serde(default)]
    pub j_overrides: Vec<CouplingOverride>,
}

fn default_j_mhz() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingOverride {
    pub i: usize,
    pub j: usize,
    pub mhz: f64,
}

impl LatticeConfig {
    pub fn to_spec(&self) -> Result<LatticeSpec> {
        let mut spec = LatticeSpec::uniform(self.rows, self.cols, mhz_to_rad_per_s(self.j_default_mhz))?;
        for o in &self.j_overrides {
            spec.set_coupling(o.i, o.j, mhz_to_rad_per_s(o.mhz))?;
        }
        Ok(spec)
    }
}

/// Which Hilbert space a vector or operator lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisTag {
    Full { n_sites: usize },
    Sector { n_sites: usize, excitations: usize },
}

impl BasisTag {
    pub fn n_sites(&self) -> usize {
        match *self {
            BasisTag::Full { n_sites } | BasisTag::Sector { n_sites, .. } => n_sites,
        }
    }

    pub fn dimension(&self) -> usize {
        match *self {
            BasisTag::Full { n_sites } => 1usize << n_sites,
            BasisTag::Sector { n_sites, excitations } => binomial(n_sites, excitations) as usize,
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisTag::Full { n_sites } => write!(f, "full({n_sites})"),
            BasisTag::Sector { n_sites, excitations } => write!(f, "sector({n_sites},{excitations})"),
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Format the low `n` bits of `s`, most significant first.
pub fn format_bits(s: Bits, n: usize) -> String {
    (0..n).rev().map(|i| if s >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Inverse of [`format_bits`].
/// Pack the bits of `s` at `sites` into a compact string; `sites[0]` becomes bit 0.
pub fn gather_bits(s: Bits, sites: &[usize]) -> Bits {
    sites.iter().enumerate().fold(0, |acc, (k, &site)| acc | (((s >> site) & 1) << k))
}

/// Inverse of [`gather_bits`] onto an otherwise-zero string.
pub fn scatter_bits(compact: Bits, sites: &[usize]) -> Bits {
    sites.iter().enumerate().fold(0, |acc, (k, &site)| acc | (((compact >> k) & 1) << site))
}

pub fn parse_bits(text: &str) -> Result<Bits> {
    if text.is_empty() || text.len() > 64 {
        return Err(Error::param(format!("bad bit-string length {}", text.len())));
    }
    text.chars().try_fold(0, |acc: Bits, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        _ => Err(Error::param(format!("bad bit-string character {ch:?} in {text:?}"))),
    })
}

/// All N-bit strings of Hamming weight k, ascending, with an O(N) rank.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    n_sites: usize,
    excitations: usize,
    states: Vec<Bits>,
    /// binom[n][k] for the combinatorial-number-system rank
    binom: Vec<Vec<u64>>,
}

impl SectorBasis {
    pub fn enumerate(n_sites: usize, excitations: usize) -> Result<Self> {
        if n_sites > MAX_SITES || excitations > n_sites {
            return Err(Error::param(format!(
                "sector ({n_sites}, {excitations}) requires 0 <= k <= N <= {MAX_SITES}"
            )));
        }
        let count = binomial(n_sites, excitations) as usize;
        let mut states = Vec::with_capacity(count);
        if excitations == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks fixed-weight integers in increasing order.
            let mut s: Bits = (1 << excitations) - 1;
            let limit: Bits = 1 << n_sites;
            while s < limit {
                states.push(s);
                let c = s & s.wrapping_neg();
                let r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len(), count);
        let binom = (0..=n_sites)
            .map(|n| (0..=excitations).map(|k| binomial(n, k)).collect())
            .collect();
        Ok(Self { n_sites, excitations, states, binom })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn excitations(&self) -> usize {
        self.excitations
    }

    pub fn states(&self) -> &[Bits] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::Sector { n_sites: self.n_sites, excitations: self.excitations }
    }

    /// Index of `s` in [`Self::states`], or `None` if `s` is outside the sector.
    pub fn rank(&self, s: Bits) -> Option<usize> {
        if s >> self.n_sites != 0 || s.count_ones() as usize != self.excitations {
            return None;
        }
        // colex rank: Σ_i binom(c_i, i) over set-bit positions c_1 < c_2 < ...
        let mut rank = 0u64;
        let mut rest = s;
        let mut i = 1;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rank += self.binom[c][i];
            rest &= rest - 1;
            i += 1;
        }
        Some(rank as usize)
    }
}

/// Hopping Hamiltonian in coordinate form plus a CSR copy for mat-vecs.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    dimension: usize,
    basis: BasisTag,
    terms: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    /// Build from a term list; duplicates are summed and zeros dropped.
    pub fn from_terms(basis: BasisTag, mut terms: Vec<(usize, usize, f64)>) -> Result<Self> {
        let dimension = basis.dimension();
        if let Some(&(r, c, _)) = terms.iter().find(|&&(r, c, _)| r >= dimension || c >= dimension) {
            return Err(Error::param(format!("term ({r}, {c}) outside dimension {dimension}")));
        }
        terms.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(terms.len());
        for (r, c, v) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        let mut row_ptr = vec![0usize; dimension + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dimension {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = merged.iter().map(|t| t.1 as u32).collect();
        let vals = merged.iter().map(|t| t.2).collect();
        Ok(Self { dimension, basis, terms: merged, row_ptr, cols, vals })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn terms(&self) -> &[(usize, usize, f64)] {
        &self.terms
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Gershgorin bound on the spectral radius (max absolute row sum).
    pub fn spectral_bound(&self) -> f64 {
        (0..self.dimension)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().map(|&c| c as usize).zip(self.vals[span].iter().copied())
    }

    /// out = H x
    pub fn apply(&self, x: &[C64], out: &mut [C64], exec: Execution) {
        assert_eq!(x.len(), self.dimension);
        assert_eq!(out.len(), self.dimension);
        // Rayon overhead dominates on small vectors.
        let exec = if self.dimension < 4096 { Execution::Serial } else { exec };
        exec.for_each_row(out, |r, o| {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            let (mut re, mut im) = (0.0, 0.0);
            for (&c, &v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                let a = x[c as usize];
                re += a.re * v;
                im += a.im * v;
            }
            *o = C64::new(re, im);
        });
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dimension, self.dimension);
        for &(r, c, v) in &self.terms {
            m[(r, c)] += v;
        }
        m
    }
}

/// `H = Σ_<ij> J_ij (σ⁺_i σ⁻_j + h.c.)`, on the full space or on the sector
/// with `excitations` quanta.
pub fn build_hamiltonian(spec: &LatticeSpec, excitations: Option<usize>) -> Result<SparseHamiltonian> {
    let n = spec.n_sites();
    let bonds: Vec<(usize, usize, f64)> = spec.bonds().collect();
    let mut terms = Vec::new();
    match excitations {
        None => {
            let tag = BasisTag::Full { n_sites: n };
            for s in 0..(1 as Bits) << n {
                push_hops(s, &bonds, |t, j| terms.push((t as usize, s as usize, j)));
            }
            SparseHamiltonian::from_terms(tag, terms)
        }
        Some(k) => {
            let basis = SectorBasis::enumerate(n, k)?;
            for (col, &s) in basis.states().iter().enumerate() {
                push_hops(s, &bonds, |t, j| {
                    let row = basis.rank(t).expect("hopping conserves the excitation number");
                    terms.push((row, col, j));
                });
            }
            SparseHamiltonian::from_terms(basis.tag(), terms)
        }
    }
}

fn push_hops(s: Bits, bonds: &[(usize, usize, f64)], mut emit: impl FnMut(Bits, f64)) {
    for &(i, j, coupling) in bonds {
        if (s >> i & 1) != (s >> j & 1) {
            emit(s ^ (1 << i) ^ (1 << j), coupling);
        }
    }
}
