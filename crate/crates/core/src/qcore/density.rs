use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::linalg::{c, eigh4, hermitize4, kron2, sqrtm_psd4, trace4, Mat2, Mat4, C64};
use super::pol::PolLabel;
use super::state::TwoQubitState;
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

/// Two-qubit density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Mat4);

impl DensityMatrix {
    /// Validates `m` against the density-matrix invariants and stores its
    /// Hermitian part.
    pub fn new(m: Mat4) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let skew = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if skew > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {skew:e})")));
        }
        let h = hermitize4(&m);
        let tr = trace4(&h).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let (vals, _) = eigh4(&h);
        if vals[0] < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {:e})",
                vals[0]
            )));
        }
        Ok(Self(h))
    }

    /// Hermitizes and trace-normalizes a positive semidefinite operator, e.g.
    /// an un-normalized sum of weighted states.
    pub fn from_unnormalized(m: Mat4) -> Result<Self> {
        let h = hermitize4(&m);
        let tr = trace4(&h).re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize trace {tr}")));
        }
        Self::new(h.unscale(tr))
    }

    pub fn from_pure(psi: &TwoQubitState) -> Self {
        Self(psi.projector())
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat4::identity().scale(0.25))
    }

    /// `p|ψ⟩⟨ψ| + (1 − p) I/4`.
    pub fn werner(psi: &TwoQubitState, p: f64) -> Result<Self> {
        if !(-1.0 / 3.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("Werner weight {p} outside [-1/3, 1]")));
        }
        Ok(Self(psi.projector().scale(p) + Mat4::identity().scale((1.0 - p) / 4.0)))
    }

    /// Convex combination `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(Self(self.0.scale(w) + other.0.scale(1.0 - w)))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    /// `Re Tr[ρ O]`.
    pub fn expectation(&self, op: &Mat4) -> f64 {
        (0..4)
            .map(|i| (0..4).map(|k| self.0[(i, k)] * op[(k, i)]).sum::<C64>().re)
            .sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 4] {
        eigh4(&self.0).0
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Conjugation by a unitary: `U ρ U†`.
    pub fn conjugate_by(&self, u: &Mat4) -> Self {
        Self(hermitize4(&(u * self.0 * u.adjoint())))
    }

    /// Row-major `(re, im)` pairs.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(16);
        for i in 0..4 {
            for j in 0..4 {
                let z = self.0[(i, j)];
                out.push([z.re, z.im]);
            }
        }
        out
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        if pairs.len() != 16 {
            return Err(Error::Parse(format!("expected 16 (re, im) pairs, got {}", pairs.len())));
        }
        let m = Mat4::from_fn(|i, j| {
            let [re, im] = pairs[4 * i + j];
            c(re, im)
        });
        // Serialized values are rounded; renormalize before validating.
        Self::from_unnormalized(m)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self
            .to_pairs()
            .into_iter()
            .map(|[re, im]| [crate::format::round_sig(re), crate::format::round_sig(im)])
            .collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Self::from_pairs(&pairs).map_err(serde::de::Error::custom)
    }
}

/// Rank-one projector `|ij⟩⟨ij|`.
pub fn projector(i: PolLabel, j: PolLabel) -> Mat4 {
    TwoQubitState::product(i, j).projector()
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &TwoQubitState) -> f64 {
    let a = psi.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += a[i].conj() * rho.0[(i, j)] * a[j];
        }
    }
    acc.re.clamp(0.0, 1.0)
}

fn sigma_yy() -> Mat4 {
    let sy = Mat2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0));
    kron2(&sy, &sy)
}

/// Wootters concurrence.
///
/// The λᵢ are obtained as square roots of the eigenvalues of the Hermitian
/// matrix `√ρ ρ̃ √ρ`, which shares its spectrum with `ρ ρ̃`.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let yy = sigma_yy();
    let tilde = yy * rho.0.conjugate() * yy;
    let root = sqrtm_psd4(&rho.0);
    let r = root * tilde * root;
    let (vals, _) = eigh4(&r);
    let l: Vec<f64> = vals.iter().rev().map(|v| v.max(0.0).sqrt()).collect();
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Columns are the magic basis, in which maximally entangled states are real
/// vectors up to a global phase.
fn magic_basis() -> Mat4 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    Mat4::from_columns(&[
        [c(s, 0.0), z, z, c(s, 0.0)].into(),
        [c(0.0, s), z, z, c(0.0, -s)].into(),
        [z, c(0.0, s), c(0.0, s), z].into(),
        [z, c(s, 0.0), c(-s, 0.0), z].into(),
    ])
}

/// Fidelity to the closest maximally entangled pure state (fully entangled
/// fraction): the largest eigenvalue of the real part of ρ in the magic basis.
pub fn max_entangled_fidelity(rho: &DensityMatrix) -> f64 {
    let b = magic_basis();
    let m = b.adjoint() * rho.0 * b;
    let re: Matrix4<f64> = m.map(|z| z.re);
    let re = (re + re.transpose()) * 0.5;
    let eig = SymmetricEigen::new(re);
    eig.eigenvalues.max().clamp(0.0, 1.0)
}

/// `½ Tr|ρ − σ|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let (vals, _) = eigh4(&(a.0 - b.0));
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}
