use serde::{Deserialize, Serialize};

use super::linalg::{c, Mat4, C64};
use super::pol::PolLabel;
use crate::error::{Error, Result};

/// Reduced Planck constant in μeV·ns.
pub const HBAR_UEV_NS: f64 = 0.658_211_956_9;
/// Planck constant in μeV·ns.
pub const PLANCK_UEV_NS: f64 = 2.0 * std::f64::consts::PI * HBAR_UEV_NS;

/// Pure two-qubit state over `(HH, HV, VH, VV)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitState {
    amplitudes: [C64; 4],
}

impl TwoQubitState {
    /// Builds a state from already normalized amplitudes.
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("squared norm {n} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite amplitudes".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.map(|a| a / n),
        })
    }

    /// Product state `|a⟩⊗|b⟩`.
    pub fn product(a: PolLabel, b: PolLabel) -> Self {
        let (ja, jb) = (a.jones(), b.jones());
        Self {
            amplitudes: [ja[0] * jb[0], ja[0] * jb[1], ja[1] * jb[0], ja[1] * jb[1]],
        }
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Phase-insensitive equality.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (1.0 - self.overlap(other)).abs() <= tol
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> Mat4 {
        Mat4::from_fn(|i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

pub fn bell_state(kind: BellKind) -> TwoQubitState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let amplitudes = match kind {
        BellKind::PhiPlus => [c(s, 0.0), z, z, c(s, 0.0)],
        BellKind::PhiMinus => [c(s, 0.0), z, z, c(-s, 0.0)],
        BellKind::PsiPlus => [z, c(s, 0.0), c(s, 0.0), z],
        BellKind::PsiMinus => [z, c(s, 0.0), c(-s, 0.0), z],
    };
    TwoQubitState { amplitudes }
}

/// Relative HH/VV phase `Sτ/ħ` accumulated after a delay `tau_ns`.
pub fn cascade_phase(tau_ns: f64, fss_uev: f64) -> f64 {
    fss_uev * tau_ns / HBAR_UEV_NS
}

/// Oscillating Bell state `(|HH⟩ + e^{iSτ/ħ}|VV⟩)/√2` emitted by the cascade
/// when the exciton photon follows the biexciton photon by `tau_ns`.
pub fn cascade_state(tau_ns: f64, fss_uev: f64) -> TwoQubitState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phase = cascade_phase(tau_ns, fss_uev);
    let z = c(0.0, 0.0);
    TwoQubitState {
        amplitudes: [c(s, 0.0), z, z, C64::from_polar(s, phase)],
    }
}

/// FSS oscillation period `h/S` in ns.
pub fn fss_period_ns(fss_uev: f64) -> f64 {
    PLANCK_UEV_NS / fss_uev
}

/// FSS oscillation frequency `S/h` in MHz.
pub fn fss_frequency_mhz(fss_uev: f64) -> f64 {
    1.0e3 * fss_uev / PLANCK_UEV_NS
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = 3.226;

    #[test]
    fn bell_vectors() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pp = bell_state(BellKind::PhiPlus);
        assert_eq!(pp.amplitudes()[0], c(s, 0.0));
        assert_eq!(pp.amplitudes()[3], c(s, 0.0));
        assert_eq!(bell_state(BellKind::PhiMinus).amplitudes()[3], c(-s, 0.0));
        assert!(pp.inner(&bell_state(BellKind::PhiMinus)).norm() < 1e-15);
        let kinds = [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus];
        for a in kinds {
            for b in kinds {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((bell_state(a).overlap(&bell_state(b)) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cascade_start_and_half_period() {
        let pp = bell_state(BellKind::PhiPlus);
        assert!(cascade_state(0.0, 1.7).approx_eq(&pp, 1e-15));
        let half = fss_period_ns(S) / 2.0;
        assert!(cascade_state(half, S).approx_eq(&bell_state(BellKind::PhiMinus), 1e-12));
    }

    #[test]
    fn quarter_period_fidelity_is_half() {
        let quarter = fss_period_ns(S) / 4.0;
        let f = bell_state(BellKind::PhiPlus).overlap(&cascade_state(quarter, S));
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_follows_cos_squared() {
        let pp = bell_state(BellKind::PhiPlus);
        for k in 0..50 {
            let tau = 0.037 * k as f64;
            let expected = (cascade_phase(tau, S) / 2.0).cos().powi(2);
            assert!((pp.overlap(&cascade_state(tau, S)) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_up_to_phase() {
        let t = fss_period_ns(S);
        for k in 0..20 {
            let tau = 0.11 * k as f64;
            assert!(cascade_state(tau + t, S).approx_eq(&cascade_state(tau, S), 1e-12));
        }
    }

    // The circular-basis expansion cos(x)(|RL⟩+|LR⟩) + i sin(x)(|RR⟩+|LL⟩),
    // x = Sτ/2ħ, equals the rectilinear form evaluated at −τ (the two
    // printed forms are complex conjugates); every projection probability
    // that does not mix the linear and circular bases agrees at +τ.
    #[test]
    fn circular_form() {
        let r = PolLabel::R;
        let l = PolLabel::L;
        for k in 0..30 {
            let tau = 0.071 * k as f64;
            let x = cascade_phase(tau, S) / 2.0;
            let rl = TwoQubitState::product(r, l);
            let lr = TwoQubitState::product(l, r);
            let rr = TwoQubitState::product(r, r);
            let ll = TwoQubitState::product(l, l);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let amps: [C64; 4] = std::array::from_fn(|i| {
                c(s * x.cos(), 0.0) * (rl.amplitudes()[i] + lr.amplitudes()[i])
                    + c(0.0, s * x.sin()) * (rr.amplitudes()[i] + ll.amplitudes()[i])
            });
            let circ = TwoQubitState::new(amps).unwrap();
            assert!(circ.approx_eq(&cascade_state(-tau, S), 1e-12));
            for (a, b) in [(r, r), (r, l), (PolLabel::H, PolLabel::H), (PolLabel::D, PolLabel::D)] {
                let p = TwoQubitState::product(a, b);
                assert!((p.overlap(&circ) - p.overlap(&cascade_state(tau, S))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn measured_fss_period_and_frequency() {
        // S = 3.226 μeV ↔ 780.0 MHz; h/S ≈ 1.282 ns (quoted rounded as 1.26 ns)
        assert!((fss_frequency_mhz(S) - 780.0).abs() < 1.0);
        assert!((fss_period_ns(S) - 1.282).abs() < 1e-3);
    }

    #[test]
    fn normalization_enforced() {
        assert!(TwoQubitState::new([c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).is_err());
        assert!(TwoQubitState::normalized([c(0.0, 0.0); 4]).is_err());
    }
}
