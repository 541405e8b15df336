use nalgebra::DMatrix;

use super::linalg::{eigh, C64};
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as exact zeros.
const ZERO_EIG: f64 = 1e-14;
/// Largest weight of ρ allowed outside the support of σ.
const SUPPORT_TOL: f64 = 1e-10;

/// `H₂(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

/// Shannon entropy in bits with `0·log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// `−Tr[ρ log₂ ρ]` of a Hermitian PSD operator.
pub fn von_neumann_entropy(rho: &DMatrix<C64>) -> f64 {
    let (vals, _) = eigh(rho);
    let clipped: Vec<f64> = vals.into_iter().map(|v| if v > ZERO_EIG { v } else { 0.0 }).collect();
    shannon_entropy(&clipped)
}

/// `D(ρ‖σ) = Tr[ρ log₂ ρ] − Tr[ρ log₂ σ]` in bits.
///
/// Both arguments must be square Hermitian PSD operators of equal size.
pub fn quantum_rel_entropy(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> Result<f64> {
    if rho.shape() != sigma.shape() || rho.nrows() != rho.ncols() {
        return Err(Error::Domain(format!(
            "shape mismatch {:?} vs {:?}",
            rho.shape(),
            sigma.shape()
        )));
    }
    let (rv, _) = eigh(rho);
    let (sv, su) = eigh(sigma);
    let neg_entropy: f64 = rv.iter().filter(|&&v| v > ZERO_EIG).map(|&v| v * v.log2()).sum();

    // Tr[ρ log σ] = Σ_k ⟨s_k|ρ|s_k⟩ log λ_k
    let rho_in_s = su.adjoint() * rho * &su;
    let mut cross = 0.0;
    let mut outside = 0.0;
    for (k, &lam) in sv.iter().enumerate() {
        let w = rho_in_s[(k, k)].re;
        if lam > ZERO_EIG {
            cross += w * lam.log2();
        } else {
            outside += w.max(0.0);
        }
    }
    if outside > SUPPORT_TOL {
        return Err(Error::Domain(format!(
            "support of first argument not contained in second (weight {outside:e} outside)"
        )));
    }
    Ok(neg_entropy - cross)
}
