use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the cascade source.
///
/// Energies in μeV, times in ns, singles rates in counts/s, repetition rate in
/// MHz. `None` dephasing times mean no dephasing of that kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    pub fss_uev: f64,
    pub tau_x_ns: f64,
    pub p_m: f64,
    pub n_x_hz: f64,
    pub n_xx_hz: f64,
    pub f_rep_mhz: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ss_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_hv_ns: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl SourceModel {
    /// The measured nanowire quantum-dot source, without dephasing.
    pub fn nanowire() -> Self {
        Self {
            fss_uev: 3.226,
            tau_x_ns: 0.777,
            p_m: 0.00415,
            n_x_hz: 145e3,
            n_xx_hz: 150e3,
            f_rep_mhz: 76.2,
            beta: 1.0,
            tau_ss_ns: None,
            tau_hv_ns: None,
        }
    }

    /// Same timing as [`SourceModel::nanowire`] with no multiphoton emission.
    pub fn ideal() -> Self {
        Self { p_m: 0.0, ..Self::nanowire() }
    }

    pub fn f_rep_hz(&self) -> f64 {
        self.f_rep_mhz * 1e6
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fss_uev, self.tau_x_ns, self.p_m, self.n_x_hz, self.n_xx_hz, self.f_rep_mhz, self.beta];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("source parameters must be finite".into()));
        }
        if self.tau_x_ns <= 0.0 {
            return Err(Error::Config(format!("tau_x_ns = {} must be positive", self.tau_x_ns)));
        }
        if !(0.0..=1.0).contains(&self.p_m) {
            return Err(Error::Config(format!("p_m = {} outside [0, 1]", self.p_m)));
        }
        if self.n_x_hz < 0.0 || self.n_xx_hz < 0.0 {
            return Err(Error::Config("singles rates must be non-negative".into()));
        }
        if self.f_rep_mhz <= 0.0 {
            return Err(Error::Config(format!("f_rep_mhz = {} must be positive", self.f_rep_mhz)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!("beta = {} outside (0, 1]", self.beta)));
        }
        for (name, t) in [("tau_ss_ns", self.tau_ss_ns), ("tau_hv_ns", self.tau_hv_ns)] {
            if let Some(t) = t {
                if !(t > 0.0) {
                    return Err(Error::Config(format!("{name} = {t} must be positive")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseKind {
    Gaussian,
    Sech2,
    Delta,
}

/// Timing response and dark counts of the detection system.
///
/// `width_ps` is the FWHM of the response for both bell-shaped kinds and is
/// ignored for `Delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub response: ResponseKind,
    pub width_ps: f64,
    pub dark_x_hz: f64,
    pub dark_xx_hz: f64,
}

impl DetectorModel {
    /// Superconducting nanowire detectors and time tagger.
    pub fn snspd() -> Self {
        Self { response: ResponseKind::Gaussian, width_ps: 30.0, dark_x_hz: 1.0, dark_xx_hz: 1.0 }
    }

    /// Single-photon avalanche diodes.
    pub fn spad() -> Self {
        Self { response: ResponseKind::Sech2, width_ps: 488.0, dark_x_hz: 34.0, dark_xx_hz: 306.0 }
    }

    pub fn ideal() -> Self {
        Self { response: ResponseKind::Delta, width_ps: 0.0, dark_x_hz: 0.0, dark_xx_hz: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_ps >= 0.0) || !self.width_ps.is_finite() {
            return Err(Error::Config(format!("width_ps = {} must be finite and >= 0", self.width_ps)));
        }
        if !(self.dark_x_hz >= 0.0 && self.dark_xx_hz >= 0.0) {
            return Err(Error::Config("dark rates must be non-negative".into()));
        }
        Ok(())
    }
}

/// Histogram time axis. Bin `k` is labelled `tau_start_ps + k·bin_width_ps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub bin_width_ps: f64,
    pub n_bins: usize,
    pub tau_start_ps: f64,
}

impl Grid {
    /// Smallest grid of the given bin width whose labels cover `[from, to]`,
    /// with the start aligned to a multiple of the bin width.
    pub fn covering(bin_width_ps: f64, from_ps: f64, to_ps: f64) -> Self {
        let k0 = (from_ps / bin_width_ps).floor();
        let k1 = (to_ps / bin_width_ps).ceil();
        Self { bin_width_ps, n_bins: (k1 - k0) as usize + 1, tau_start_ps: k0 * bin_width_ps }
    }

    pub fn tau_ps(&self, k: usize) -> f64 {
        self.tau_start_ps + k as f64 * self.bin_width_ps
    }

    pub fn taus_ps(&self) -> Vec<f64> {
        (0..self.n_bins).map(|k| self.tau_ps(k)).collect()
    }

    pub fn end_ps(&self) -> f64 {
        self.tau_ps(self.n_bins.saturating_sub(1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width_ps > 0.0) || !self.bin_width_ps.is_finite() {
            return Err(Error::Config(format!("bin_width_ps = {} must be positive", self.bin_width_ps)));
        }
        if !self.tau_start_ps.is_finite() {
            return Err(Error::Config("tau_start_ps must be finite".into()));
        }
        Ok(())
    }
}
