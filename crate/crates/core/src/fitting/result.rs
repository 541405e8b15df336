use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lm::LmFit;
use crate::error::{Error, Result};
use crate::format::round_sig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub n_points: usize,
    pub rms: f64,
    pub max_abs: f64,
}

impl ResidualSummary {
    pub fn from_residuals(r: &[f64]) -> Self {
        let n = r.len();
        let rms = if n == 0 { 0.0 } else { (r.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt() };
        Self { n_points: n, rms, max_abs: r.iter().fold(0.0, |m, x| m.max(x.abs())) }
    }
}

/// Outcome of one curve fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    pub errors: BTreeMap<String, f64>,
    /// Quantities computed from the fitted parameters.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub derived: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_chi2: Option<f64>,
    pub residuals: ResidualSummary,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn error(&self, name: &str) -> f64 {
        self.errors.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn derived(&self, name: &str) -> f64 {
        self.derived.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn set(&mut self, name: &str, value: f64, error: f64) {
        self.params.insert(name.to_string(), value);
        self.errors.insert(name.to_string(), error);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// Copy with every number rounded to the output precision.
    pub fn rounded(&self) -> Self {
        let r = |m: &BTreeMap<String, f64>| m.iter().map(|(k, v)| (k.clone(), round_sig(*v))).collect();
        Self {
            params: r(&self.params),
            errors: r(&self.errors),
            derived: r(&self.derived),
            r_squared: self.r_squared.map(round_sig),
            reduced_chi2: self.reduced_chi2.map(round_sig),
            residuals: ResidualSummary {
                n_points: self.residuals.n_points,
                rms: round_sig(self.residuals.rms),
                max_abs: round_sig(self.residuals.max_abs),
            },
            converged: self.converged,
            warnings: self.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rounded())?)
    }

    /// Fills parameters, errors and goodness from a least-squares solution.
    /// `unweighted` are the raw data residuals used for R².
    pub(crate) fn from_lm(
        names: &[&str],
        fit: &LmFit,
        absolute_sigma: bool,
        y: &[f64],
        unweighted: &[f64],
    ) -> Result<Self> {
        if fit.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonConvergence("non-finite parameter".into()));
        }
        let mut out = Self::default();
        let errs = fit.std_errors(absolute_sigma);
        for ((name, v), e) in names.iter().zip(&fit.params).zip(&errs) {
            out.set(name, *v, *e);
        }
        out.r_squared = Some(r_squared(y, unweighted));
        out.reduced_chi2 = Some(fit.reduced_chi2());
        out.residuals = ResidualSummary::from_residuals(unweighted);
        out.converged = fit.converged;
        Ok(out)
    }
}

/// `1 − SS_res / SS_tot`.
pub fn r_squared(y: &[f64], residuals: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        f64::NAN
    }
}

/// Poisson standard deviation with a floor of one count.
pub fn poisson_sigma(n: f64) -> f64 {
    n.max(1.0).sqrt()
}
