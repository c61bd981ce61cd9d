//! Published witness matrices bundled as witness files.
//!
//! Each file stores the Hermitian part (W + W†)/2 of the printed matrix; the
//! printed entries are rounded, so some are slightly non-Hermitian.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::{parse_witness, KeyValues};
use crate::witness::WitnessOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reference {
    /// Two-qubit witness trained on Bell-diagonal states.
    W1,
    /// Three-qubit witness trained on GHZ Werner states.
    Wghz,
    /// Three-qubit witness reported to detect the edge state.
    Ew22,
    /// Four-qubit witness trained on GHZ Werner states.
    W4,
    /// Four-qubit witness trained on GHZ₃ ⊗ qubit Werner states.
    Wghzq,
}

impl Reference {
    pub const ALL: [Reference; 5] = [
        Reference::W1,
        Reference::Wghz,
        Reference::Ew22,
        Reference::W4,
        Reference::Wghzq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Reference::W1 => "w1",
            Reference::Wghz => "wghz",
            Reference::Ew22 => "ew22",
            Reference::W4 => "w4",
            Reference::Wghzq => "wghzq",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Reference::W1 => include_str!("../data/w1.witness"),
            Reference::Wghz => include_str!("../data/wghz.witness"),
            Reference::Ew22 => include_str!("../data/ew22.witness"),
            Reference::W4 => include_str!("../data/w4.witness"),
            Reference::Wghzq => include_str!("../data/wghzq.witness"),
        }
    }

    pub fn load(self) -> Result<(WitnessOperator, KeyValues)> {
        parse_witness(self.text())
    }

    pub fn witness(self) -> Result<WitnessOperator> {
        Ok(self.load()?.0)
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown reference {s:?}")))
    }
}
