//! Time-resolved six-state key rates from reconstructed two-photon states.
//!
//! Alice's key bit is the outcome of her Z (H/V) measurement. For
//! tomographically complete statistics the Devetak–Winter rate per sifted
//! coincidence is `D(G(ρ) ‖ Z(G(ρ))) − δ_leak`, where `G` copies Alice's key
//! outcome into a register and `Z` dephases that register.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig;
use crate::qcore::linalg::{c, C64};
use crate::qcore::{
    local_unitary, quantum_rel_entropy, shannon_entropy, DensityMatrix, LocalUnitaryParams,
};
use crate::tomography::{lifetime_weighted, optimize_local_basis, TimeBinnedStates};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SixStateConfig {
    pub p_z_a: f64,
    pub p_z_b: f64,
    /// Error-correction efficiency relative to the Shannon limit.
    pub f_ec: f64,
}

impl Default for SixStateConfig {
    fn default() -> Self {
        let p = 0.99f64.sqrt();
        Self { p_z_a: p, p_z_b: p, f_ec: 1.0 }
    }
}

impl SixStateConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_z_a", self.p_z_a), ("p_z_b", self.p_z_b)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("{name} = {p} outside (0, 1]")));
            }
        }
        if !(self.f_ec >= 1.0) || !self.f_ec.is_finite() {
            return Err(Error::Config(format!("f_ec = {} must be finite and >= 1", self.f_ec)));
        }
        Ok(())
    }

    pub fn p_sift(&self) -> f64 {
        self.p_z_a * self.p_z_b
    }
}

/// Joint distribution `p(z_A, z_B)` of Z-basis outcomes, indexed `[a][b]`.
pub fn z_distribution(rho: &DensityMatrix) -> [[f64; 2]; 2] {
    let m = rho.matrix();
    [[m[(0, 0)].re.max(0.0), m[(1, 1)].re.max(0.0)], [m[(2, 2)].re.max(0.0), m[(3, 3)].re.max(0.0)]]
}

/// Error-correction leakage `f_EC · H(Z_A | Z_B)` in bits.
pub fn delta_leak(rho: &DensityMatrix, cfg: &SixStateConfig) -> f64 {
    let p = z_distribution(rho);
    let joint = [p[0][0], p[0][1], p[1][0], p[1][1]];
    let bob = [p[0][0] + p[1][0], p[0][1] + p[1][1]];
    cfg.f_ec * (shannon_entropy(&joint) - shannon_entropy(&bob)).max(0.0)
}

/// Z-basis error rate `p(HV) + p(VH)`.
pub fn z_error_rate(rho: &DensityMatrix) -> f64 {
    let p = z_distribution(rho);
    p[0][1] + p[1][0]
}

/// `G(ρ) = K ρ K†` on register ⊗ A ⊗ B, with `K = Σ_z |z⟩ ⊗ P_z ⊗ I`.
pub fn key_map(rho: &DensityMatrix) -> DMatrix<C64> {
    let mut k = DMatrix::<C64>::zeros(8, 4);
    // P_H ⊗ I keeps |HH⟩, |HV⟩; P_V ⊗ I keeps |VH⟩, |VV⟩
    for ab in 0..4 {
        let z = ab / 2;
        k[(4 * z + ab, ab)] = c(1.0, 0.0);
    }
    let r = DMatrix::from_iterator(4, 4, rho.matrix().iter().copied());
    &k * r * k.adjoint()
}

/// Pinching of the key register: removes coherences between `z` blocks.
pub fn pinch_register(sigma: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = sigma.clone();
    for i in 0..8 {
        for j in 0..8 {
            if i / 4 != j / 4 {
                out[(i, j)] = c(0.0, 0.0);
            }
        }
    }
    out
}

/// `D(G(ρ) ‖ Z(G(ρ)))` in bits: Eve's uncertainty about the key bit.
pub fn key_entropy(rho: &DensityMatrix) -> Result<f64> {
    let g = key_map(rho);
    Ok(quantum_rel_entropy(&g, &pinch_register(&g))?.max(0.0))
}

/// Secret bits per coincidence: `p_sift · max(0, D − δ_leak)`.
pub fn keyrate_objective(rho: &DensityMatrix, cfg: &SixStateConfig) -> Result<f64> {
    let d = key_entropy(rho)?;
    Ok(cfg.p_sift() * (d - delta_leak(rho, cfg)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRatePoint {
    pub tau_ps: f64,
    pub r_bits: f64,
    pub n_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateCurve {
    pub entries: Vec<KeyRatePoint>,
    /// Coincidence-weighted mean of `r`.
    pub rate: f64,
}

impl KeyRateCurve {
    pub fn from_points(entries: Vec<KeyRatePoint>) -> Result<Self> {
        let r: Vec<f64> = entries.iter().map(|p| p.r_bits).collect();
        let w: Vec<f64> = entries.iter().map(|p| p.n_tau).collect();
        let rate = lifetime_weighted(&r, &w)?;
        Ok(Self { entries, rate })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["tau_ps", "r_bits", "n_tau"])?;
        for p in &self.entries {
            wr.write_record([sig(p.tau_ps), sig(p.r_bits), sig(p.n_tau)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `r(τ)` of every window after rotating the states into `basis`, and the
/// weighted rate `R`.
pub fn time_resolved_keyrate(
    states: &TimeBinnedStates,
    cfg: &SixStateConfig,
    basis: &LocalUnitaryParams,
) -> Result<KeyRateCurve> {
    cfg.validate()?;
    if states.is_empty() {
        return Err(Error::DegenerateData("no time windows to evaluate".into()));
    }
    let u = local_unitary(basis);
    let entries = states
        .entries
        .iter()
        .map(|e| {
            let r = keyrate_objective(&e.rho.conjugate_by(&u), cfg)?;
            Ok(KeyRatePoint { tau_ps: e.tau_ps, r_bits: r, n_tau: e.n_tau })
        })
        .collect::<Result<Vec<_>>>()?;
    KeyRateCurve::from_points(entries)
}

/// One global measurement basis maximizing the weighted rate `R`.
pub fn optimize_keyrate_basis(
    states: &TimeBinnedStates,
    cfg: &SixStateConfig,
) -> Result<(LocalUnitaryParams, KeyRateCurve)> {
    cfg.validate()?;
    if states.is_empty() {
        return Err(Error::DegenerateData("no time windows to evaluate".into()));
    }
    let (u, _) = optimize_local_basis(states, |rho| keyrate_objective(rho, cfg).unwrap_or(0.0));
    let curve = time_resolved_keyrate(states, cfg, &u)?;
    Ok((u, curve))
}

/// Comparison mode: an independently optimized basis for every window.
pub fn optimize_keyrate_basis_per_window(
    states: &TimeBinnedStates,
    cfg: &SixStateConfig,
) -> Result<(Vec<LocalUnitaryParams>, KeyRateCurve)> {
    cfg.validate()?;
    if states.is_empty() {
        return Err(Error::DegenerateData("no time windows to evaluate".into()));
    }
    let mut bases = Vec::with_capacity(states.len());
    let mut entries = Vec::with_capacity(states.len());
    for e in &states.entries {
        let single = TimeBinnedStates::new(states.window_ps, vec![e.clone()])?;
        let (u, _) = optimize_local_basis(&single, |rho| keyrate_objective(rho, cfg).unwrap_or(0.0));
        let r = keyrate_objective(&e.rho.conjugate_by(&local_unitary(&u)), cfg)?;
        bases.push(u);
        entries.push(KeyRatePoint { tau_ps: e.tau_ps, r_bits: r, n_tau: e.n_tau });
    }
    Ok((bases, KeyRateCurve::from_points(entries)?))
}
