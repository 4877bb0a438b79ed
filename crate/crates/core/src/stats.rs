//! Ergodicity diagnostics: excitation densities, bit-string probability
//! statistics against Porter-Thomas, and conditional probabilities.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::evolution::StateVector;
use crate::lattice::{gather_bits, Bits, SectorBasis};
use crate::linalg::C64;
use crate::measurement::ShotTable;

/// ⟨σ⁺_j σ⁻_j⟩ per site.
pub fn excitation_density(psi: &StateVector) -> Vec<f64> {
    let weights = psi.strings().into_iter().zip(psi.amplitudes().iter().map(|a| a.norm_sqr()));
    excitation_density_weighted(weights, psi.n_sites())
}

/// Excitation densities of a distribution over basis strings (weights are
/// normalised internally).
pub fn excitation_density_weighted(weights: impl Iterator<Item = (Bits, f64)>, n_sites: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_sites];
    let mut total = 0.0;
    for (s, p) in weights {
        total += p;
        for (j, o) in out.iter_mut().enumerate() {
            if (s >> j) & 1 == 1 {
                *o += p;
            }
        }
    }
    if total > 0.0 {
        out.iter_mut().for_each(|o| *o /= total);
    }
    out
}

/// |⟨s|ψ⟩|² for every string of the given charge sector, in sector order.
pub fn sector_probabilities(psi: &StateVector, excitations: usize) -> Result<Vec<f64>> {
    let sector = SectorBasis::enumerate(psi.n_sites(), excitations)?;
    if psi.basis() == sector.tag() {
        return Ok(psi.amplitudes().iter().map(|a| a.norm_sqr()).collect());
    }
    let full = psi.to_full();
    Ok(sector.states().iter().map(|&s| full.amplitudes()[s as usize].norm_sqr()).collect())
}

/// Normalised Gaussian random vector: a Haar-random pure state.
pub fn haar_random_state<R: Rng>(d: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> =
        (0..d).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

/// CDF of the square of a unit-variance real Gaussian (χ² with one degree
/// of freedom): the Porter-Thomas law for real amplitudes.
pub fn chi2_1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf((x / 2.0).sqrt())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityHistogram {
    pub dimension: usize,
    /// D·p for every string, in input order.
    pub scaled: Vec<f64>,
    /// Log-spaced bin edges in D·p.
    pub edges: Vec<f64>,
    /// Empirical density per bin.
    pub density: Vec<f64>,
    /// Decay rate r of a least-squares fit ln P = ln r − r·x over occupied bins.
    pub fitted_rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PorterThomasReport {
    pub histogram: ProbabilityHistogram,
    /// KS distance of D·p against Exp(1).
    pub ks: f64,
    /// KS distance of D·p against the real-amplitude law χ²₁.
    pub ks_real: f64,
}

pub const HISTOGRAM_BINS: usize = 30;

/// Compare D·p against Exp(1). `probs` must hold one probability per string
/// of the D-dimensional accessible space.
pub fn porter_thomas_test(probs: &[f64], dimension: usize) -> Result<PorterThomasReport> {
    if probs.len() != dimension || dimension == 0 {
        return Err(Error::param(format!("{} probabilities given for a {dimension}-dimensional space", probs.len())));
    }
    let d = dimension as f64;
    let scaled: Vec<f64> = probs.iter().map(|p| p * d).collect();
    let histogram = histogram(&scaled, dimension);
    Ok(PorterThomasReport { ks: ks_statistic(&scaled, exp1_cdf), ks_real: ks_statistic(&scaled, chi2_1_cdf), histogram })
}

fn histogram(scaled: &[f64], dimension: usize) -> ProbabilityHistogram {
    let max = scaled.iter().cloned().fold(0.0, f64::max).max(1e-2);
    let lo = 1e-3_f64.min(max / 10.0);
    let (l0, l1) = (lo.ln(), (max * (1.0 + 1e-12)).ln());
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|i| (l0 + (l1 - l0) * i as f64 / HISTOGRAM_BINS as f64).exp()).collect();
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &x in scaled {
        if x >= lo {
            let pos = ((x.ln() - l0) / (l1 - l0) * HISTOGRAM_BINS as f64) as usize;
            counts[pos.min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    let n = scaled.len() as f64;
    let density: Vec<f64> = counts.iter().zip(edges.windows(2)).map(|(&c, w)| c as f64 / (n * (w[1] - w[0]))).collect();
    // weighted least squares of ln density vs bin centre, weights = counts
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&c, w), &rho) in counts.iter().zip(edges.windows(2)).zip(&density) {
        if c == 0 {
            continue;
        }
        let (x, y, wt) = (0.5 * (w[0] + w[1]), rho.ln(), c as f64);
        sw += wt;
        sx += wt * x;
        sy += wt * y;
        sxx += wt * x * x;
        sxy += wt * x * y;
    }
    let denom = sw * sxx - sx * sx;
    let fitted_rate = if denom > 0.0 { -(sw * sxy - sx * sy) / denom } else { f64::NAN };
    ProbabilityHistogram { dimension, scaled: scaled.to_vec(), edges, density, fitted_rate }
}

/// p(z_A | z_B) across outcomes of B.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalDistribution {
    /// Outcome on A as `2·bit(A[0]) + bit(A[1])` (or `bit(A[0])` for one site).
    pub z_a: usize,
    /// (z_B, p(z_B), p(z_A | z_B)) for every retained z_B.
    pub entries: Vec<(Bits, f64, f64)>,
}

impl ConditionalDistribution {
    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum::<f64>() / self.entries.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.entries.iter().map(|e| (e.2 - m).powi(2)).sum::<f64>() / self.entries.len() as f64).sqrt()
    }

    /// Keep only z_B of a given Hamming weight.
    pub fn with_zb_weight(&self, weight: usize) -> Self {
        let entries = self.entries.iter().copied().filter(|e| e.0.count_ones() as usize == weight).collect();
        Self { z_a: self.z_a, entries }
    }
}

fn a_index(s: Bits, subsystem: &[usize]) -> usize {
    subsystem.iter().fold(0, |acc, &j| (acc << 1) | ((s >> j) & 1) as usize)
}

fn complement(subsystem: &[usize], n: usize) -> Vec<usize> {
    (0..n).filter(|j| !subsystem.contains(j)).collect()
}

/// p(z_A | z_B) from a (not necessarily normalised) distribution over basis
/// strings; z_B with p(z_B) < `min_p` are skipped.
pub fn conditional_probability_weighted(
    weights: impl Iterator<Item = (Bits, f64)>,
    subsystem: &[usize],
    n_sites: usize,
    z_a: usize,
    min_p: f64,
) -> ConditionalDistribution {
    let b = complement(subsystem, n_sites);
    let mut joint: std::collections::BTreeMap<Bits, (f64, f64)> = Default::default();
    let mut total = 0.0;
    for (s, w) in weights {
        let e = joint.entry(gather_bits(s, &b)).or_insert((0.0, 0.0));
        e.0 += w;
        if a_index(s, subsystem) == z_a {
            e.1 += w;
        }
        total += w;
    }
    let entries = joint
        .into_iter()
        .filter(|(_, (pb, _))| *pb > 0.0 && pb / total >= min_p)
        .map(|(z, (pb, pab))| (z, pb / total, pab / pb))
        .collect();
    ConditionalDistribution { z_a, entries }
}

pub fn conditional_probability(psi: &StateVector, subsystem: &[usize], z_a: usize, p_floor: f64) -> ConditionalDistribution {
    let weights = psi.strings().into_iter().zip(psi.amplitudes().iter().map(|a| a.norm_sqr()));
    conditional_probability_weighted(weights, subsystem, psi.n_sites(), z_a, p_floor)
}

/// Same from Z-basis counts (every site read in Z); z_B with fewer than
/// `min_count` shots are skipped.
pub fn conditional_probability_from_counts(
    table: &ShotTable,
    subsystem: &[usize],
    z_a: usize,
    min_count: f64,
) -> ConditionalDistribution {
    let total = table.total();
    let min_p = if total > 0.0 { min_count / total } else { 0.0 };
    conditional_probability_weighted(table.counts.iter().map(|(s, c)| (*s, *c)), subsystem, table.n_qubits, z_a, min_p)
}
