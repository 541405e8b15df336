use std::io::Write;

use serde::{Deserialize, Serialize};

use super::mle::{reconstruct_bin, MleConfig};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::qcore::{
    concurrence, fidelity_pure, max_entangled_fidelity, BellKind, DensityMatrix, TwoQubitState,
};
use crate::sim::{CoincidenceHistogramSet, N_CHANNELS};

/// One reconstructed time window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeBin {
    /// Mean of the bin labels inside the window.
    pub tau_ps: f64,
    pub rho: DensityMatrix,
    pub n_tau: f64,
    #[serde(default = "yes")]
    pub converged: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeBinnedStates {
    pub window_ps: f64,
    pub entries: Vec<TimeBin>,
    /// Window centres that held no counts and were not reconstructed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_ps: Vec<f64>,
}

impl TimeBinnedStates {
    pub fn new(window_ps: f64, entries: Vec<TimeBin>) -> Result<Self> {
        for w in entries.windows(2) {
            if !(w[1].tau_ps - w[0].tau_ps >= window_ps * (1.0 - 1e-9)) {
                return Err(Error::InvalidState(format!(
                    "windows at {} and {} ps overlap or are out of order",
                    w[0].tau_ps, w[1].tau_ps
                )));
            }
        }
        if let Some(e) = entries.iter().find(|e| !(e.n_tau >= 0.0)) {
            return Err(Error::InvalidState(format!("negative weight at {} ps", e.tau_ps)));
        }
        Ok(Self { window_ps, entries, skipped_ps: Vec::new() })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.n_tau).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.converged)
    }

    /// Entries whose centre lies in `[from_ps, to_ps]`.
    pub fn restrict(&self, from_ps: f64, to_ps: f64) -> Self {
        Self {
            window_ps: self.window_ps,
            entries: self.entries.iter().filter(|e| e.tau_ps >= from_ps && e.tau_ps <= to_ps).cloned().collect(),
            skipped_ps: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Self = serde_json::from_str(s)?;
        let skipped = raw.skipped_ps.clone();
        let mut out = Self::new(raw.window_ps, raw.entries)?;
        out.skipped_ps = skipped;
        Ok(out)
    }
}

/// Sums raw bins into windows `[k·w, (k+1)·w)` aligned to zero delay and
/// reconstructs each window that is fully covered by the histogram.
pub fn time_resolved_states(
    h: &CoincidenceHistogramSet,
    window_ps: f64,
    cfg: &MleConfig,
) -> Result<TimeBinnedStates> {
    let bw = h.grid.bin_width_ps;
    let ratio = window_ps / bw;
    let per = ratio.round();
    if !(window_ps >= bw) || (ratio - per).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Config(format!(
            "window {window_ps} ps is not a positive multiple of the bin width {bw} ps"
        )));
    }
    let per = per as usize;
    let n = h.n_bins();
    let window_of = |k: usize| (h.grid.tau_ps(k) / window_ps + 1e-9).floor() as i64;

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut k = 0;
    while k < n {
        let w = window_of(k);
        let mut end = k;
        while end < n && window_of(end) == w {
            end += 1;
        }
        if end - k == per {
            let mut agg = [0.0; N_CHANNELS];
            for b in k..end {
                for (a, x) in agg.iter_mut().zip(h.bin(b)) {
                    *a += x;
                }
            }
            let tau = (k..end).map(|b| h.grid.tau_ps(b)).sum::<f64>() / per as f64;
            let n_tau: f64 = agg.iter().sum();
            if n_tau > 0.0 {
                let r = reconstruct_bin(&agg, cfg)?;
                entries.push(TimeBin { tau_ps: tau, rho: r.rho, n_tau, converged: r.converged });
            } else {
                skipped.push(tau);
            }
        }
        k = end;
    }
    let mut out = TimeBinnedStates::new(window_ps, entries)?;
    out.skipped_ps = skipped;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Bell(BellKind),
    /// The oscillating cascade state at each window's own delay.
    Cascade { fss_uev: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Concurrence,
    Fidelity(Reference),
    MaxEntangledFidelity,
}

impl Metric {
    pub fn evaluate(&self, rho: &DensityMatrix, tau_ps: f64) -> f64 {
        match self {
            Metric::Concurrence => concurrence(rho),
            Metric::MaxEntangledFidelity => max_entangled_fidelity(rho),
            Metric::Fidelity(Reference::Bell(kind)) => fidelity_pure(rho, &crate::qcore::bell_state(*kind)),
            Metric::Fidelity(Reference::Cascade { fss_uev }) => {
                let psi: TwoQubitState = crate::qcore::cascade_state(tau_ps * 1e-3, *fss_uev);
                fidelity_pure(rho, &psi)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau_ps: f64,
    pub value: f64,
    pub n_tau: f64,
}

pub fn metric_curve(states: &TimeBinnedStates, metric: Metric) -> Vec<CurvePoint> {
    states
        .entries
        .iter()
        .map(|e| CurvePoint { tau_ps: e.tau_ps, value: metric.evaluate(&e.rho, e.tau_ps), n_tau: e.n_tau })
        .collect()
}

/// `Σ N_τ v_τ / Σ N_τ`.
pub fn lifetime_weighted(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::Domain(format!("{} values but {} weights", values.len(), weights.len())));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData("total weight is zero".into()));
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total)
}

pub fn curve_weighted(curve: &[CurvePoint]) -> Result<f64> {
    let v: Vec<f64> = curve.iter().map(|p| p.value).collect();
    let w: Vec<f64> = curve.iter().map(|p| p.n_tau).collect();
    lifetime_weighted(&v, &w)
}

/// Writes `tau_ps,<value_name>,n_tau` rows.
pub fn write_curve_csv<W: Write>(w: W, value_name: &str, curve: &[CurvePoint]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tau_ps", value_name, "n_tau"])?;
    for p in curve {
        wr.write_record([sig(p.tau_ps), sig(p.value), sig(p.n_tau)])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_examples() {
        assert_eq!(lifetime_weighted(&[0.7, 0.7, 0.7], &[1.0, 5.0, 2.0]).unwrap(), 0.7);
        assert_eq!(lifetime_weighted(&[1.0, 0.0], &[3.0, 1.0]).unwrap(), 0.75);
        assert!(lifetime_weighted(&[1.0], &[0.0]).is_err());
        assert!(lifetime_weighted(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn curve_csv_header() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, "value", &[CurvePoint { tau_ps: 20.0, value: 0.5, n_tau: 3.0 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "tau_ps,value,n_tau\n20,0.5,3\n");
    }
}
