//! Simulated joint single-shot readout, readout-error mitigation and
//! two-qubit conditional tomography.

mod confusion;
mod shots;
mod tomography;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use confusion::{ConfusionMatrix, MitigationMode};
pub use shots::{
    mitigate_counts, read_shot_tables, rotate_to_basis, sample_shots, write_shot_tables, ShotTable,
};
pub use tomography::{probability_of, select_bitstrings, tomo_reconstruct, TomogramA, DEFAULT_SELECTION_THRESHOLD};

/// Single-qubit readout axis. Outcome 0 corresponds to eigenvalue +1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli_index(self) -> usize {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        }
    }

    fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Readout bases of the two sites of A; `axes[0]` acts on `A[0]`.
/// Every other site is read out in Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub axes: [Axis; 2],
}

impl BasisLabel {
    pub const fn new(a: Axis, b: Axis) -> Self {
        Self { axes: [a, b] }
    }

    /// XX, XY, XZ, YX, …, ZZ.
    pub fn all() -> [BasisLabel; 9] {
        let ax = [Axis::X, Axis::Y, Axis::Z];
        std::array::from_fn(|i| BasisLabel::new(ax[i / 3], ax[i % 3]))
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.axes[0].letter(), self.axes[1].letter())
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |c: char| match c {
            'X' | 'x' => Ok(Axis::X),
            'Y' | 'y' => Ok(Axis::Y),
            'Z' | 'z' => Ok(Axis::Z),
            other => Err(Error::param(format!("invalid basis letter {other:?} in {s:?}"))),
        };
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 2 {
            return Err(Error::param(format!("basis label must have two letters, got {s:?}")));
        }
        Ok(BasisLabel::new(parse(chars[0])?, parse(chars[1])?))
    }
}

impl Serialize for BasisLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BasisLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
