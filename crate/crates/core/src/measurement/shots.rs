use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Axis, BasisLabel, ConfusionMatrix, MitigationMode};
use crate::error::{Error, Result};
use crate::evolution::StateVector;
use crate::lattice::{format_bits, parse_bits, Bits};
use crate::linalg::C64;

/// Bit-string counts for one readout basis over all N qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotTable {
    pub basis: BasisLabel,
    pub n_qubits: usize,
    pub counts: BTreeMap<Bits, f64>,
}

impl ShotTable {
    pub fn new(basis: BasisLabel, n_qubits: usize) -> Self {
        Self { basis, n_qubits, counts: BTreeMap::new() }
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    pub fn count(&self, s: Bits) -> f64 {
        self.counts.get(&s).copied().unwrap_or(0.0)
    }
}

fn check_pair(sites: &[usize], n: usize) -> Result<[usize; 2]> {
    match *sites {
        [a, b] if a != b && a < n && b < n => Ok([a, b]),
        _ => Err(Error::param(format!("subsystem A must be two distinct sites below {n}, got {sites:?}"))),
    }
}

fn apply_single_qubit(amps: &mut [C64], site: usize, u: [[C64; 2]; 2]) {
    let bit = 1usize << site;
    for s in 0..amps.len() {
        if s & bit == 0 {
            let (a, b) = (amps[s], amps[s | bit]);
            amps[s] = u[0][0] * a + u[0][1] * b;
            amps[s | bit] = u[1][0] * a + u[1][1] * b;
        }
    }
}

/// Full-space amplitudes after the pre-readout rotations of `basis` on A.
///
/// X is read out after R_y(−π/2), Y after R_x(+π/2); both map the +1
/// eigenstate to |0⟩.
pub fn rotate_to_basis(psi: &StateVector, basis: BasisLabel, subsystem_a: &[usize]) -> Result<Vec<C64>> {
    let sites = check_pair(subsystem_a, psi.n_sites())?;
    let mut amps = psi.to_full().into_amplitudes();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let re = |x: f64| C64::new(x, 0.0);
    for (axis, site) in basis.axes.into_iter().zip(sites) {
        let u = match axis {
            Axis::Z => continue,
            Axis::X => [[re(h), re(h)], [re(-h), re(h)]],
            Axis::Y => [[re(h), C64::new(0.0, -h)], [C64::new(0.0, -h), re(h)]],
        };
        apply_single_qubit(&mut amps, site, u);
    }
    Ok(amps)
}

/// Draw `shots` joint readouts of every qubit in the given basis.
pub fn sample_shots(
    psi: &StateVector,
    basis: BasisLabel,
    subsystem_a: &[usize],
    shots: u64,
    confusion: Option<&ConfusionMatrix>,
    seed: u64,
) -> Result<ShotTable> {
    if shots == 0 {
        return Err(Error::param("shot count must be positive"));
    }
    let n = psi.n_sites();
    if let Some(c) = confusion {
        if c.n_qubits() != n {
            return Err(Error::DimensionMismatch { expected: n, found: c.n_qubits() });
        }
    }
    let amps = rotate_to_basis(psi, basis, subsystem_a)?;
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::param(format!("cannot sample state: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = ShotTable::new(basis, n);
    for _ in 0..shots {
        let mut s = dist.sample(&mut rng) as Bits;
        if let Some(c) = confusion {
            for j in 0..n {
                let keep = if (s >> j) & 1 == 0 { c.f00(j) } else { c.f11(j) };
                if rng.random::<f64>() >= keep {
                    s ^= 1 << j;
                }
            }
        }
        *table.counts.entry(s).or_insert(0.0) += 1.0;
    }
    Ok(table)
}

/// Correct counts for readout error. The correction is applied to the dense
/// distribution over all 2^N strings; negative entries are clipped and the
/// result rescaled to the original total.
pub fn mitigate_counts(table: &ShotTable, confusion: &ConfusionMatrix, mode: MitigationMode) -> Result<ShotTable> {
    if confusion.n_qubits() != table.n_qubits {
        return Err(Error::DimensionMismatch { expected: table.n_qubits, found: confusion.n_qubits() });
    }
    let n = table.n_qubits;
    let factors = match mode {
        MitigationMode::None => return Ok(table.clone()),
        MitigationMode::AsWritten => (0..n).map(|j| confusion.factor(j)).collect::<Vec<_>>(),
        MitigationMode::Inverse => (0..n).map(|j| confusion.inverse_factor(j)).collect::<Result<Vec<_>>>()?,
    };
    let total = table.total();
    let mut dense = vec![0.0; 1usize << n];
    for (&s, &c) in &table.counts {
        dense[s as usize] = c;
    }
    ConfusionMatrix::apply_factors(&mut dense, &factors);
    dense.iter_mut().for_each(|v| *v = v.max(0.0));
    let kept: f64 = dense.iter().sum();
    if !(kept > 0.0) {
        return Err(Error::Mitigation("all mitigated counts are non-positive".into()));
    }
    let scale = total / kept;
    let counts = dense
        .into_iter()
        .enumerate()
        .filter(|(_, v)| *v > 0.0)
        .map(|(s, v)| (s as Bits, v * scale))
        .collect();
    Ok(ShotTable { basis: table.basis, n_qubits: n, counts })
}

/// CSV with columns `basis,bitstring,count`.
pub fn write_shot_tables(path: &Path, tables: &[ShotTable]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["basis", "bitstring", "count"])?;
    for t in tables {
        for (&s, &c) in &t.counts {
            w.write_record([t.basis.to_string(), format_bits(s, t.n_qubits), c.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_shot_tables(path: &Path) -> Result<Vec<ShotTable>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut tables: Vec<ShotTable> = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let bad = |msg: String| Error::Config { path: path.display().to_string(), message: format!("row {}: {msg}", line + 2) };
        if record.len() != 3 {
            return Err(bad(format!("expected 3 columns, found {}", record.len())));
        }
        let basis: BasisLabel = record[0].parse().map_err(|e: Error| bad(e.to_string()))?;
        let bits = record[1].trim();
        let s = parse_bits(bits).map_err(|e| bad(e.to_string()))?;
        let count: f64 = record[2].trim().parse().map_err(|e| bad(format!("bad count: {e}")))?;
        if !(count >= 0.0) {
            return Err(bad(format!("negative count {count}")));
        }
        let idx = match tables.iter().position(|t| t.basis == basis) {
            Some(i) => i,
            None => {
                tables.push(ShotTable::new(basis, bits.len()));
                tables.len() - 1
            }
        };
        if tables[idx].n_qubits != bits.len() {
            return Err(bad("bit-string length differs from earlier rows".into()));
        }
        *tables[idx].counts.entry(s).or_insert(0.0) += count;
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{prepare_product_state, SiteState};
    use crate::lattice::BasisTag;

    fn product(states: &[SiteState]) -> StateVector {
        prepare_product_state(states, BasisTag::Full { n_sites: states.len() }).unwrap()
    }

    #[test]
    fn zero_state_in_zz_is_deterministic() {
        let psi = product(&[SiteState::Zero; 4]);
        let t = sample_shots(&psi, "ZZ".parse().unwrap(), &[1, 2], 500, None, 1).unwrap();
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.count(0), 500.0);
    }

    #[test]
    fn eigenstates_read_plus_one() {
        let psi = product(&[SiteState::XPlus, SiteState::YPlus, SiteState::Zero]);
        let t = sample_shots(&psi, "XY".parse().unwrap(), &[0, 1], 200, None, 2).unwrap();
        assert_eq!(t.count(0), 200.0);
        // reversed assignment: site 0 read in Y is random
        let t = sample_shots(&psi, "YX".parse().unwrap(), &[0, 1], 2000, None, 2).unwrap();
        let ones: f64 = t.counts.iter().filter(|(s, _)| *s & 1 == 1).map(|(_, c)| c).sum();
        assert!((ones / 2000.0 - 0.5).abs() < 5.0 * 0.5 / 2000f64.sqrt());
    }

    #[test]
    fn mitigation_example_single_qubit() {
        let c = ConfusionMatrix::uniform(1, 0.9, 0.9).unwrap();
        let mut t = ShotTable::new("ZZ".parse().unwrap(), 1);
        t.counts.insert(0, 90.0);
        t.counts.insert(1, 10.0);
        let m = mitigate_counts(&t, &c, MitigationMode::Inverse).unwrap();
        assert!((m.count(0) - 100.0).abs() < 1e-9);
        assert!(m.count(1).abs() < 1e-9);
        let w = mitigate_counts(&t, &c, MitigationMode::AsWritten).unwrap();
        assert!((w.count(0) - 82.0).abs() < 1e-9);
        assert!((w.count(1) - 18.0).abs() < 1e-9);
    }

    #[test]
    fn ideal_confusion_is_identity() {
        let psi = product(&[SiteState::XPlus; 3]);
        let t = sample_shots(&psi, "XZ".parse().unwrap(), &[0, 2], 300, None, 5).unwrap();
        let c = ConfusionMatrix::ideal(3);
        for mode in [MitigationMode::Inverse, MitigationMode::AsWritten, MitigationMode::None] {
            let m = mitigate_counts(&t, &c, mode).unwrap();
            assert_eq!(m.counts.len(), t.counts.len());
            for (s, v) in &t.counts {
                assert!((m.count(*s) - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_roundtrip() {
        let psi = product(&[SiteState::XPlus, SiteState::One, SiteState::YPlus]);
        let tables: Vec<ShotTable> = ["XX", "ZY"]
            .iter()
            .map(|b| sample_shots(&psi, b.parse().unwrap(), &[0, 2], 100, None, 3).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shots.csv");
        write_shot_tables(&path, &tables).unwrap();
        assert_eq!(read_shot_tables(&path).unwrap(), tables);
    }

    #[test]
    fn bad_subsystem_rejected() {
        let psi = product(&[SiteState::Zero; 3]);
        assert!(sample_shots(&psi, "ZZ".parse().unwrap(), &[0], 10, None, 0).is_err());
        assert!(sample_shots(&psi, "ZZ".parse().unwrap(), &[1, 1], 10, None, 0).is_err());
        assert!(sample_shots(&psi, "ZZ".parse().unwrap(), &[0, 3], 10, None, 0).is_err());
        assert!(sample_shots(&psi, "ZZ".parse().unwrap(), &[0, 1], 0, None, 0).is_err());
    }
}
