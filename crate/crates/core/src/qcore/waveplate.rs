use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;
use super::linalg::{c, kron2, Mat2, Mat4};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveplateKind {
    Half,
    Quarter,
}

/// Jones matrix of a half- or quarter-wave plate with its fast axis at `angle`.
pub fn waveplate_unitary(kind: WaveplateKind, angle: f64) -> Mat2 {
    match kind {
        WaveplateKind::Half => {
            let (s, co) = (2.0 * angle).sin_cos();
            Mat2::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0))
        }
        WaveplateKind::Quarter => {
            let (s, co) = angle.sin_cos();
            let (s2, c2) = (s * s, co * co);
            let off = c(1.0, -1.0) * ((2.0 * angle).sin() / 2.0);
            Mat2::new(c(c2, s2), off, off, c(s2, c2))
        }
    }
}

/// Linear retarder with fast axis `theta` and retardance `phi`:
/// `R(θ) diag(e^{−iφ/2}, e^{iφ/2}) R(−θ)`. `phi = 0` is the identity.
pub fn general_waveplate(theta: f64, phi: f64) -> Mat2 {
    let (s, co) = theta.sin_cos();
    let rot = Mat2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0));
    let d = Mat2::new(c(0.0, -phi / 2.0).exp(), c(0.0, 0.0), c(0.0, 0.0), c(0.0, phi / 2.0).exp());
    rot * d * rot.transpose()
}

/// Angles of a local unitary `U(θ1, φ1) ⊗ U(θ2, φ2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalUnitaryParams {
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
}

impl LocalUnitaryParams {
    pub const IDENTITY: Self = Self { theta1: 0.0, phi1: 0.0, theta2: 0.0, phi2: 0.0 };

    /// Builds parameters with every angle wrapped into `[0, 2π)`.
    pub fn new(theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> Result<Self> {
        let angles = [theta1, phi1, theta2, phi2];
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain(format!("non-finite angle in {angles:?}")));
        }
        let w = |a: f64| {
            let r = a.rem_euclid(TAU);
            if r >= TAU { 0.0 } else { r }
        };
        Ok(Self { theta1: w(theta1), phi1: w(phi1), theta2: w(theta2), phi2: w(phi2) })
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta1, self.phi1, self.theta2, self.phi2]
    }
}

/// `U1 ⊗ U2` for the given parameters.
pub fn local_unitary(u: &LocalUnitaryParams) -> Mat4 {
    kron2(&general_waveplate(u.theta1, u.phi1), &general_waveplate(u.theta2, u.phi2))
}

pub fn local_rotate(rho: &DensityMatrix, u: &LocalUnitaryParams) -> DensityMatrix {
    rho.conjugate_by(&local_unitary(u))
}
