use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Product-form readout transition matrix.
///
/// Per-qubit factor, column = prepared state, row = reported outcome:
/// `[[F00, 1 - F11], [1 - F00, F11]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    f00: Vec<f64>,
    f11: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn new(f00: Vec<f64>, f11: Vec<f64>) -> Result<Self> {
        if f00.len() != f11.len() {
            return Err(Error::DimensionMismatch { expected: f00.len(), found: f11.len() });
        }
        if let Some(f) = f00.iter().chain(&f11).find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::param(format!("readout fidelity {f} outside [0, 1]")));
        }
        Ok(Self { f00, f11 })
    }

    pub fn uniform(n_qubits: usize, f00: f64, f11: f64) -> Result<Self> {
        Self::new(vec![f00; n_qubits], vec![f11; n_qubits])
    }

    pub fn ideal(n_qubits: usize) -> Self {
        Self { f00: vec![1.0; n_qubits], f11: vec![1.0; n_qubits] }
    }

    pub fn n_qubits(&self) -> usize {
        self.f00.len()
    }

    pub fn f00(&self, j: usize) -> f64 {
        self.f00[j]
    }

    pub fn f11(&self, j: usize) -> f64 {
        self.f11[j]
    }

    pub fn factor(&self, j: usize) -> [[f64; 2]; 2] {
        [[self.f00[j], 1.0 - self.f11[j]], [1.0 - self.f00[j], self.f11[j]]]
    }

    pub fn inverse_factor(&self, j: usize) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.factor(j);
        let det = a * d - b * c;
        if det.abs() < 1e-12 {
            return Err(Error::Mitigation(format!(
                "readout factor of qubit {j} is singular (F00 + F11 = 1)"
            )));
        }
        Ok([[d / det, -b / det], [-c / det, a / det]])
    }

    /// Apply one 2×2 matrix per qubit to a dense vector over all 2^N strings.
    pub(crate) fn apply_factors(dist: &mut [f64], factors: &[[[f64; 2]; 2]]) {
        for (j, m) in factors.iter().enumerate() {
            let bit = 1usize << j;
            for s in 0..dist.len() {
                if s & bit == 0 {
                    let (a, b) = (dist[s], dist[s | bit]);
                    dist[s] = m[0][0] * a + m[0][1] * b;
                    dist[s | bit] = m[1][0] * a + m[1][1] * b;
                }
            }
        }
    }
}

/// How measured counts are corrected for readout error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MitigationMode {
    None,
    /// `m̃ = F·m`, the correction formula taken literally.
    AsWritten,
    /// `m̃ = F⁻¹·m`.
    #[default]
    Inverse,
}

impl fmt::Display for MitigationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MitigationMode::None => "none",
            MitigationMode::AsWritten => "as-written",
            MitigationMode::Inverse => "inverse",
        })
    }
}

impl FromStr for MitigationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(MitigationMode::None),
            "as-written" | "as_written" => Ok(MitigationMode::AsWritten),
            "inverse" => Ok(MitigationMode::Inverse),
            other => Err(Error::param(format!("unknown mitigation mode {other:?}"))),
        }
    }
}
