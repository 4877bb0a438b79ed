use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BasisTag, Bits, SectorBasis};
use crate::linalg::C64;

/// Single-site preparation for product states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteState {
    Zero,
    One,
    /// +1 eigenstate of σˣ
    XPlus,
    /// +1 eigenstate of σʸ
    YPlus,
}

impl SiteState {
    fn amplitudes(self) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            SiteState::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            SiteState::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            SiteState::XPlus => [C64::new(h, 0.0), C64::new(h, 0.0)],
            SiteState::YPlus => [C64::new(h, 0.0), C64::new(0.0, h)],
        }
    }
}

/// Parse a pattern such as `"0101"` or `"xyxy"`; the first character is the
/// highest-numbered site. The result is indexed by site.
pub fn parse_pattern(text: &str) -> Result<Vec<SiteState>> {
    let mut sites: Vec<SiteState> = text
        .chars()
        .map(|ch| match ch.to_ascii_lowercase() {
            '0' => Ok(SiteState::Zero),
            '1' => Ok(SiteState::One),
            'x' | '+' => Ok(SiteState::XPlus),
            'y' => Ok(SiteState::YPlus),
            other => Err(Error::param(format!("unknown site state {other:?} in pattern {text:?}"))),
        })
        .collect::<Result<_>>()?;
    sites.reverse();
    Ok(sites)
}

/// `|0101…01⟩` printed form: site 0 excited, alternating.
pub fn neel_pattern(n_sites: usize) -> Vec<SiteState> {
    (0..n_sites).map(|j| if j % 2 == 0 { SiteState::One } else { SiteState::Zero }).collect()
}

/// `⊗_{j even} |X+⟩ ⊗_{j odd} |Y+⟩`
pub fn xy_checkerboard_pattern(n_sites: usize) -> Vec<SiteState> {
    (0..n_sites).map(|j| if j % 2 == 0 { SiteState::XPlus } else { SiteState::YPlus }).collect()
}

/// Amplitudes over a full space or a fixed-charge sector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: BasisTag,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: BasisTag, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dimension() {
            return Err(Error::DimensionMismatch { expected: basis.dimension(), found: amps.len() });
        }
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn dimension(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::param(format!("basis mismatch: {} vs {}", self.basis, other.basis)));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// |⟨self|other⟩|²
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Bit-string of every basis index, in index order.
    pub fn strings(&self) -> Vec<Bits> {
        basis_strings(self.basis)
    }

    /// Embed into the full 2^N space.
    pub fn to_full(&self) -> StateVector {
        match self.basis {
            BasisTag::Full { .. } => self.clone(),
            BasisTag::Sector { n_sites, .. } => {
                let mut amps = vec![C64::new(0.0, 0.0); 1 << n_sites];
                for (s, a) in self.strings().into_iter().zip(&self.amps) {
                    amps[s as usize] = *a;
                }
                StateVector { basis: BasisTag::Full { n_sites }, amps }
            }
        }
    }

    /// ⟨ψ|H|ψ⟩
    pub fn expectation(&self, h: &crate::lattice::SparseHamiltonian) -> Result<f64> {
        if h.basis() != self.basis {
            return Err(Error::param(format!("basis mismatch: {} vs {}", h.basis(), self.basis)));
        }
        let mut hx = vec![C64::new(0.0, 0.0); self.dimension()];
        h.apply(&self.amps, &mut hx, crate::exec::Execution::Serial);
        Ok(self.amps.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum())
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let header = CheckpointHeader { basis_tag: self.basis, dimension: self.dimension() };
        let header_path = header_path(path);
        fs::write(&header_path, serde_json::to_vec_pretty(&header)?).map_err(|e| Error::io(&header_path, e))?;
        let mut bytes = Vec::with_capacity(16 * self.amps.len());
        for a in &self.amps {
            bytes.extend_from_slice(&a.re.to_le_bytes());
            bytes.extend_from_slice(&a.im.to_le_bytes());
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let header_path = header_path(path);
        let header: CheckpointHeader =
            serde_json::from_slice(&fs::read(&header_path).map_err(|e| Error::io(&header_path, e))?)?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != 16 * header.dimension {
            return Err(Error::DimensionMismatch { expected: 16 * header.dimension, found: bytes.len() });
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                C64::new(re, im)
            })
            .collect();
        StateVector::new(header.basis_tag, amps)
    }
}

/// JSON side-car written next to a binary checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub basis_tag: BasisTag,
    pub dimension: usize,
}

fn header_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn basis_strings(basis: BasisTag) -> Vec<Bits> {
    match basis {
        BasisTag::Full { n_sites } => (0..(1 as Bits) << n_sites).collect(),
        BasisTag::Sector { n_sites, excitations } => SectorBasis::enumerate(n_sites, excitations)
            .expect("a constructed tag is always a valid sector")
            .states()
            .to_vec(),
    }
}

/// Normalised product state over `pattern` (indexed by site).
pub fn prepare_product_state(pattern: &[SiteState], basis: BasisTag) -> Result<StateVector> {
    if pattern.len() != basis.n_sites() {
        return Err(Error::param(format!(
            "pattern has {} sites, basis has {}",
            pattern.len(),
            basis.n_sites()
        )));
    }
    match basis {
        BasisTag::Sector { n_sites, excitations } => {
            let mut s: Bits = 0;
            for (j, p) in pattern.iter().enumerate() {
                match p {
                    SiteState::Zero => {}
                    SiteState::One => s |= 1 << j,
                    _ => {
                        return Err(Error::Encoding(format!(
                            "site {j} is a superposition of charge sectors; use the full basis"
                        )))
                    }
                }
            }
            if s.count_ones() as usize != excitations {
                return Err(Error::Encoding(format!(
                    "pattern has {} excitations, sector expects {excitations}",
                    s.count_ones()
                )));
            }
            let sector = SectorBasis::enumerate(n_sites, excitations)?;
            let mut amps = vec![C64::new(0.0, 0.0); sector.len()];
            amps[sector.rank(s).expect("weight checked")] = C64::new(1.0, 0.0);
            StateVector::new(basis, amps)
        }
        BasisTag::Full { n_sites } => {
            let local: Vec<[C64; 2]> = pattern.iter().map(|p| p.amplitudes()).collect();
            let amps = (0..(1 as Bits) << n_sites)
                .map(|s| (0..n_sites).map(|j| local[j][(s >> j & 1) as usize]).product())
                .collect();
            StateVector::new(basis, amps)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, LatticeSpec};

    #[test]
    fn neel_is_single_sector_vector() {
        let tag = BasisTag::Sector { n_sites: 16, excitations: 8 };
        let psi = prepare_product_state(&parse_pattern("0101010101010101").unwrap(), tag).unwrap();
        assert_eq!(psi.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
        assert_eq!(neel_pattern(16), parse_pattern("0101010101010101").unwrap());
        let h = build_hamiltonian(&LatticeSpec::with_default_coupling(4, 4).unwrap(), Some(8)).unwrap();
        assert_eq!(psi.expectation(&h).unwrap(), 0.0);
    }

    #[test]
    fn x_plus_pair_is_uniform() {
        let psi =
            prepare_product_state(&[SiteState::XPlus, SiteState::XPlus], BasisTag::Full { n_sites: 2 }).unwrap();
        for a in psi.amplitudes() {
            assert!((a - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn superposition_in_sector_is_rejected() {
        let tag = BasisTag::Sector { n_sites: 2, excitations: 1 };
        assert!(matches!(
            prepare_product_state(&[SiteState::XPlus, SiteState::Zero], tag),
            Err(Error::Encoding(_))
        ));
        assert!(matches!(
            prepare_product_state(&[SiteState::One, SiteState::One], tag),
            Err(Error::Encoding(_))
        ));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.bin");
        let psi = prepare_product_state(&xy_checkerboard_pattern(3), BasisTag::Full { n_sites: 3 }).unwrap();
        psi.save_checkpoint(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 8 * 16);
        let back = StateVector::load_checkpoint(&path).unwrap();
        assert_eq!(back, psi);
    }

    #[test]
    fn sector_embedding() {
        let tag = BasisTag::Sector { n_sites: 4, excitations: 2 };
        let psi = prepare_product_state(&parse_pattern("0110").unwrap(), tag).unwrap();
        let full = psi.to_full();
        assert_eq!(full.amplitudes()[0b0110], C64::new(1.0, 0.0));
        assert!((full.norm() - 1.0).abs() < 1e-15);
    }
}
