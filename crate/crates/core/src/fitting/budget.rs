use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root-sum-square of independent timing-jitter contributions (FWHM, ps).
pub fn combine_jitter(components_ps: &[f64]) -> Result<f64> {
    if let Some(c) = components_ps.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(Error::Domain(format!("jitter component {c} must be finite and >= 0")));
    }
    Ok(components_ps.iter().map(|c| c * c).sum::<f64>().sqrt())
}

/// Measured quantities entering the efficiency budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyInputs {
    pub eta_prep_x: f64,
    pub eta_prep_xx: f64,
    /// Blinking ON fraction β.
    pub eta_blink: f64,
    /// Detected singles at saturation, counts/s.
    pub n_x_hz: f64,
    pub n_xx_hz: f64,
    /// Transmission of the detection path.
    pub eta_opt: f64,
    pub f_rep_mhz: f64,
}

impl EfficiencyInputs {
    pub fn nanowire() -> Self {
        Self {
            eta_prep_x: 0.82,
            eta_prep_xx: 0.774,
            eta_blink: 0.167,
            n_x_hz: 942.89e3,
            n_xx_hz: 401.29e3,
            eta_opt: 0.063,
            f_rep_mhz: 76.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    pub eta_prep_x: f64,
    pub eta_prep_xx: f64,
    pub eta_blink: f64,
    /// Nanowire extraction efficiency, `N_X N_XX / (η_opt f_rep)²`.
    pub eta_nw: f64,
    pub eta_opt: f64,
    /// `η_prep,X · η_prep,XX · η_blink`.
    pub eta_int: f64,
    /// `η_int · η_NW`.
    pub eta_est: f64,
}

/// Detected pair rate per pulse referred back to the first lens:
/// `N_X N_XX / (η_opt f_rep)²`.
pub fn pair_extraction(n_x_hz: f64, n_xx_hz: f64, eta_opt: f64, f_rep_mhz: f64) -> Result<f64> {
    let denom = eta_opt * f_rep_mhz * 1e6;
    if !(denom > 0.0) {
        return Err(Error::Domain("eta_opt and f_rep must be positive".into()));
    }
    if n_x_hz < 0.0 || n_xx_hz < 0.0 {
        return Err(Error::Domain("rates must be non-negative".into()));
    }
    if n_x_hz > denom || n_xx_hz > denom {
        return Err(Error::Domain(format!("rates exceed eta_opt * f_rep = {denom} /s")));
    }
    Ok(n_x_hz * n_xx_hz / (denom * denom))
}

pub fn efficiency_budget(inp: &EfficiencyInputs) -> Result<EfficiencyBudget> {
    for (name, p) in [
        ("eta_prep_x", inp.eta_prep_x),
        ("eta_prep_xx", inp.eta_prep_xx),
        ("eta_blink", inp.eta_blink),
        ("eta_opt", inp.eta_opt),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("{name} = {p} outside [0, 1]")));
        }
    }
    let eta_nw = pair_extraction(inp.n_x_hz, inp.n_xx_hz, inp.eta_opt, inp.f_rep_mhz)?;
    let eta_int = inp.eta_prep_x * inp.eta_prep_xx * inp.eta_blink;
    Ok(EfficiencyBudget {
        eta_prep_x: inp.eta_prep_x,
        eta_prep_xx: inp.eta_prep_xx,
        eta_blink: inp.eta_blink,
        eta_nw,
        eta_opt: inp.eta_opt,
        eta_int,
        eta_est: eta_int * eta_nw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter() {
        assert_eq!(combine_jitter(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(combine_jitter(&[7.5]).unwrap(), 7.5);
        assert!((combine_jitter(&[19.0, 18.0, 10.0, 10.0]).unwrap() - 885f64.sqrt()).abs() < 1e-12);
        assert!(combine_jitter(&[-1.0]).is_err());
    }

    #[test]
    fn budget_numbers() {
        let b = efficiency_budget(&EfficiencyInputs::nanowire()).unwrap();
        assert!((b.eta_nw - 0.016418).abs() < 1e-5);
        assert!((b.eta_int - 0.82 * 0.774 * 0.167).abs() < 1e-15);
        assert!((b.eta_est - b.eta_int * b.eta_nw).abs() < 1e-15);
    }

    #[test]
    fn saturated_rates_rejected() {
        assert!(pair_extraction(5e6, 1.0, 0.063, 76.2).is_err());
        assert!(pair_extraction(1.0, 1.0, 0.0, 76.2).is_err());
    }
}
