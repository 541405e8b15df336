use std::f64::consts::PI;

use super::lm::{multistart, Bound, LmOptions};
use super::result::FitResult;
use crate::error::{Error, Result};

/// Largest damping admitted by the model (`√(4 − ξ²)` must stay real).
pub const XI_MAX: f64 = 1.99;

/// Excited-state population after a pulse of area `theta` with
/// phonon-induced damping `xi`.
pub fn rabi_population(theta: f64, xi: f64) -> f64 {
    let pref = 1.0 / (2.0 * (1.0 + 2.0 * xi * xi));
    let osc = theta.cos() + 3.0 * xi / (4.0 - xi * xi).sqrt() * theta.sin();
    pref * (1.0 - osc * (-1.5 * theta * xi).exp())
}

/// Fits populations against average excitation power with pulse area
/// `Θ = a·√power`. Unit weights; errors are scaled by the residual scatter.
pub fn fit_rabi(powers: &[f64], populations: &[f64]) -> Result<FitResult> {
    fit_rabi_inner(powers, populations, None)
}

/// As [`fit_rabi`] with known per-point standard deviations.
pub fn fit_rabi_weighted(powers: &[f64], populations: &[f64], sigmas: &[f64]) -> Result<FitResult> {
    if sigmas.len() != powers.len() || sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Domain("need one positive sigma per point".into()));
    }
    fit_rabi_inner(powers, populations, Some(sigmas))
}

fn fit_rabi_inner(powers: &[f64], populations: &[f64], sigmas: Option<&[f64]>) -> Result<FitResult> {
    if powers.len() != populations.len() {
        return Err(Error::Domain("powers and populations differ in length".into()));
    }
    if powers.len() < 8 {
        return Err(Error::Domain(format!("need at least 8 points, got {}", powers.len())));
    }
    if powers.iter().chain(populations).any(|x| !x.is_finite()) || powers.iter().any(|p| *p < 0.0) {
        return Err(Error::Domain("powers must be finite and non-negative".into()));
    }
    let x_max = powers.iter().cloned().fold(0.0, f64::max);
    if !(x_max > 0.0) {
        return Err(Error::Domain("all powers are zero".into()));
    }
    let roots: Vec<f64> = powers.iter().map(|p| p.sqrt()).collect();
    let weights: Vec<f64> = match sigmas {
        Some(s) => s.iter().map(|s| 1.0 / s).collect(),
        None => vec![1.0; powers.len()],
    };
    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        Some(
            roots
                .iter()
                .zip(populations)
                .zip(&weights)
                .map(|((r, y), w)| (rabi_population(p[0] * r, p[1]) - y) * w)
                .collect(),
        )
    };
    // start grid relative to the largest pulse area, so the fit is
    // equivariant under rescaling of the power axis
    let mut starts = Vec::new();
    for k in 3..=20 {
        let a = (k as f64 * PI / 4.0) / x_max.sqrt();
        for xi in [0.02, 0.1, 0.25, 0.5] {
            starts.push(vec![a, xi]);
        }
    }
    let bounds = [Bound::new(0.0, f64::INFINITY), Bound::new(0.0, XI_MAX)];
    let fit = multistart(residual, &starts, &bounds, LmOptions::default())
        .ok_or_else(|| Error::NonConvergence("Rabi fit failed from every start".into()))?;
    let unweighted: Vec<f64> = roots
        .iter()
        .zip(populations)
        .map(|(r, y)| rabi_population(fit.params[0] * r, fit.params[1]) - y)
        .collect();
    let mut out = FitResult::from_lm(&["theta_scale", "xi"], &fit, sigmas.is_some(), populations, &unweighted)?;
    let a = fit.params[0];
    out.derived.insert("pi_power".into(), (PI / a).powi(2));
    out.derived.insert("theta_max".into(), a * x_max.sqrt());
    out.derived.insert("population_at_pi".into(), rabi_population(PI, fit.params[1]));
    if a * x_max.sqrt() < PI {
        out.warn("data span less than one pulse area of pi");
    }
    if fit.at_bound[1] && fit.params[1] > 1.0 {
        out.warn("damping reached its upper bound");
    }
    if !fit.converged {
        return Err(Error::NonConvergence("Rabi fit did not converge".into()));
    }
    Ok(out)
}
