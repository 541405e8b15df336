use std::f64::consts::{PI, TAU};

use super::lm::{multistart, Bound, LmOptions};
use super::result::FitResult;
use crate::error::{Error, Result};
use crate::qcore::{HBAR_UEV_NS, PLANCK_UEV_NS};
use crate::sim::GAUSS_FWHM_PER_SIGMA;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FssOptions {
    /// FWHM of the Gaussian timing response; 0 disables the convolution.
    pub response_fwhm_ps: f64,
    /// Fixed exciton lifetime; fitted when `None`.
    pub tau_x_ns: Option<f64>,
}

impl Default for FssOptions {
    fn default() -> Self {
        Self { response_fwhm_ps: 30.0, tau_x_ns: None }
    }
}

/// `Θ(τ) A e^{−τ/τ_X} cos(Sτ/ħ + φ)` convolved with a Gaussian, evaluated at
/// uniformly spaced `taus_ns`.
///
/// The curve is point-sampled on the delay grid (refined by an integer
/// factor until the FWHM spans at least two samples) and convolved with the
/// sampled, unit-sum kernel, matching how histograms are binned.
pub fn fss_model(taus_ns: &[f64], amplitude: f64, fss_uev: f64, phase: f64, tau_x_ns: f64, fwhm_ps: f64) -> Vec<f64> {
    let omega = fss_uev / HBAR_UEV_NS;
    let raw = |t: f64| if t >= 0.0 { amplitude * (-t / tau_x_ns).exp() * (omega * t + phase).cos() } else { 0.0 };
    if fwhm_ps <= 0.0 || taus_ns.len() < 2 {
        return taus_ns.iter().map(|t| raw(*t)).collect();
    }
    let fwhm = fwhm_ps * 1e-3;
    let dt = taus_ns[1] - taus_ns[0];
    let refine = (2.0 * dt / fwhm).ceil().max(1.0);
    let h = dt / refine;
    let sigma = fwhm / GAUSS_FWHM_PER_SIGMA;
    let half = (5.0 * fwhm / h).ceil() as i64;
    let mut kernel: Vec<f64> = (-half..=half).map(|i| (-0.5 * (i as f64 * h / sigma).powi(2)).exp()).collect();
    let ksum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= ksum);
    // samples on the refined grid aligned with the data points
    let t0 = taus_ns[0];
    let n_fine = (taus_ns.len() as i64 - 1) * refine as i64 + 1 + 2 * half;
    let fine: Vec<f64> = (0..n_fine).map(|j| raw(t0 + (j - half) as f64 * h)).collect();
    (0..taus_ns.len())
        .map(|k| {
            let c = k as i64 * refine as i64 + half;
            (-half..=half).zip(&kernel).map(|(i, w)| w * fine[(c - i) as usize]).sum()
        })
        .collect()
}

fn periodogram_peak(t: &[f64], y: &[f64], w_lo: f64, w_hi: f64) -> (f64, f64, f64) {
    let n_grid = 4000;
    let mut best = (w_lo, 0.0, 0.0);
    for k in 0..=n_grid {
        let w = w_lo + (w_hi - w_lo) * k as f64 / n_grid as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (ti, yi) in t.iter().zip(y) {
            re += yi * (w * ti).cos();
            im -= yi * (w * ti).sin();
        }
        let p = re * re + im * im;
        if p > best.1 {
            best = (w, p, im.atan2(re));
        }
    }
    best
}

/// Fits the fine-structure oscillation of the circular-basis contrast
/// `RL + LR − RR − LL` against delay (ps). `sigmas` are per-point standard
/// deviations, or `None` for unit weights.
pub fn fit_fss(taus_ps: &[f64], values: &[f64], sigmas: Option<&[f64]>, opts: FssOptions) -> Result<FitResult> {
    let n = taus_ps.len();
    if values.len() != n || sigmas.is_some_and(|s| s.len() != n) {
        return Err(Error::Domain("delays, values and sigmas differ in length".into()));
    }
    if n < 8 {
        return Err(Error::Domain(format!("need at least 8 points, got {n}")));
    }
    let dt = taus_ps[1] - taus_ps[0];
    if !(dt > 0.0) || taus_ps.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::Domain("delays must be uniformly spaced and increasing".into()));
    }
    let t: Vec<f64> = taus_ps.iter().map(|x| x * 1e-3).collect();
    let (tp, yp): (Vec<f64>, Vec<f64>) = t.iter().zip(values).filter(|(t, _)| **t >= 0.0).map(|(a, b)| (*a, *b)).unzip();
    if tp.len() < 8 {
        return Err(Error::Domain("need at least 8 points at non-negative delay".into()));
    }
    let span = tp[tp.len() - 1] - tp[0];
    let dt_ns = dt * 1e-3;
    let nyquist = PI / dt_ns;
    let (w0, _, ph0) = periodogram_peak(&tp, &yp, 0.5 * TAU / span, nyquist);
    let period = TAU / w0;
    if period < 3.0 * dt_ns {
        return Err(Error::Undersampled(format!(
            "oscillation period {:.1} ps is shorter than 3 bins of {dt} ps",
            period * 1e3
        )));
    }
    if span < 2.0 * period {
        return Err(Error::DegenerateData(format!(
            "no oscillation resolved: dominant period {:.3} ns exceeds half the {span:.3} ns span",
            period
        )));
    }

    let a0 = yp.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let s0 = w0 * HBAR_UEV_NS;
    let w: Vec<f64> = match sigmas {
        Some(s) => s.iter().map(|s| 1.0 / s.max(1e-300)).collect(),
        None => vec![1.0; n],
    };
    let fixed_tau = opts.tau_x_ns;
    let fwhm = opts.response_fwhm_ps;
    let unpack = |p: &[f64]| (p[0], p[1], p[2], fixed_tau.unwrap_or_else(|| p[3]));
    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        let (a, s, ph, tx) = unpack(p);
        let m = fss_model(&t, a, s, ph, tx, fwhm);
        Some(m.iter().zip(values).zip(&w).map(|((m, y), w)| (m - y) * w).collect())
    };
    let mut starts = Vec::new();
    let taus = match fixed_tau {
        Some(_) => vec![None],
        None => [0.25, 0.5, 1.0].iter().map(|f| Some(f * span)).collect(),
    };
    for tau in &taus {
        for ph in [ph0, ph0 + PI / 2.0, ph0 - PI / 2.0] {
            let mut s = vec![a0, s0, ph];
            if let Some(tau) = tau {
                s.push(*tau);
            }
            starts.push(s);
        }
    }
    let mut bounds = vec![Bound::new(0.0, f64::INFINITY), Bound::new(0.0, f64::INFINITY), Bound::FREE];
    if fixed_tau.is_none() {
        bounds.push(Bound::new(1e-6, f64::INFINITY));
    }
    let fit = multistart(residual, &starts, &bounds, LmOptions::default())
        .ok_or_else(|| Error::NonConvergence("FSS fit failed".into()))?;
    let (a, s, _, tx) = unpack(&fit.params);
    let model = fss_model(&t, a, s, fit.params[2], tx, fwhm);
    let unweighted: Vec<f64> = model.iter().zip(values).map(|(m, y)| m - y).collect();
    let names: &[&str] = if fixed_tau.is_some() {
        &["amplitude", "fss_uev", "phase"]
    } else {
        &["amplitude", "fss_uev", "phase", "tau_x_ns"]
    };
    let mut out = FitResult::from_lm(names, &fit, sigmas.is_some(), values, &unweighted)?;
    let phase = (fit.params[2] + PI).rem_euclid(TAU) - PI;
    out.params.insert("phase".into(), phase);
    let s_err = out.error("fss_uev");
    out.derived.insert("fss_mhz".into(), s / PLANCK_UEV_NS * 1e3);
    out.derived.insert("fss_mhz_error".into(), s_err / PLANCK_UEV_NS * 1e3);
    out.derived.insert("period_ns".into(), PLANCK_UEV_NS / s);
    out.derived.insert("response_fwhm_ps".into(), fwhm);
    if !fit.converged {
        return Err(Error::NonConvergence("FSS fit did not converge".into()));
    }
    if out.error("amplitude") > out.param("amplitude") {
        out.warn("oscillation amplitude not significant");
    }
    Ok(out)
}
