use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::linalg::{c, C64};
use crate::error::Error;

/// One of the six tomographic polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl PolLabel {
    /// Measurement order used for the 36 channels: `HH, HV, HD, ..., LL`.
    pub const ALL: [PolLabel; 6] = [
        PolLabel::H,
        PolLabel::V,
        PolLabel::D,
        PolLabel::A,
        PolLabel::R,
        PolLabel::L,
    ];

    /// Jones vector `(H, V)` components.
    pub fn jones(self) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            PolLabel::H => [c(1.0, 0.0), c(0.0, 0.0)],
            PolLabel::V => [c(0.0, 0.0), c(1.0, 0.0)],
            PolLabel::D => [c(s, 0.0), c(s, 0.0)],
            PolLabel::A => [c(s, 0.0), c(-s, 0.0)],
            PolLabel::R => [c(s, 0.0), c(0.0, s)],
            PolLabel::L => [c(s, 0.0), c(0.0, -s)],
        }
    }

    /// Index of the measurement basis: 0 rectilinear, 1 diagonal, 2 circular.
    pub fn basis(self) -> usize {
        match self {
            PolLabel::H | PolLabel::V => 0,
            PolLabel::D | PolLabel::A => 1,
            PolLabel::R | PolLabel::L => 2,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            PolLabel::H => 'H',
            PolLabel::V => 'V',
            PolLabel::D => 'D',
            PolLabel::A => 'A',
            PolLabel::R => 'R',
            PolLabel::L => 'L',
        }
    }

    /// All 36 ordered pairs in channel order.
    pub fn pairs() -> impl Iterator<Item = (PolLabel, PolLabel)> {
        Self::ALL
            .into_iter()
            .flat_map(|a| Self::ALL.into_iter().map(move |b| (a, b)))
    }

    /// Channel name such as `"RL"`.
    pub fn channel_name(a: PolLabel, b: PolLabel) -> String {
        format!("{}{}", a.as_char(), b.as_char())
    }
}

impl fmt::Display for PolLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for PolLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" => Ok(PolLabel::H),
            "V" => Ok(PolLabel::V),
            "D" => Ok(PolLabel::D),
            "A" => Ok(PolLabel::A),
            "R" => Ok(PolLabel::R),
            "L" => Ok(PolLabel::L),
            other => Err(Error::Parse(format!("unknown polarization label {other:?}"))),
        }
    }
}
