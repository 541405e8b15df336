use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, Bound, LmOptions};
use super::result::{r_squared, FitResult};
use crate::error::{Error, Result};
use crate::sim::{GAUSS_FWHM_PER_SIGMA, SECH2_FWHM_PER_SCALE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    /// Odd window length in bins.
    pub window: usize,
    pub degree: usize,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self { window: 65, degree: 6 }
    }
}

/// Savitzky–Golay filter. Returns the smoothed series (`deriv = 0`) or its
/// first derivative per sample (`deriv = 1`). Edge points use the polynomial
/// fitted to the first or last full window.
pub fn savitzky_golay(y: &[f64], s: Smoothing, deriv: usize) -> Result<Vec<f64>> {
    let (w, d) = (s.window, s.degree);
    if w % 2 == 0 || w < 3 {
        return Err(Error::Config(format!("smoothing window {w} must be odd and >= 3")));
    }
    if d >= w {
        return Err(Error::Config(format!("degree {d} must be below the window {w}")));
    }
    if deriv > 1 {
        return Err(Error::Config("only the value and first derivative are supported".into()));
    }
    let n = y.len();
    if n < w {
        return Err(Error::Domain(format!("series of {n} points is shorter than the window {w}")));
    }
    let m = (w / 2) as f64;
    // positions scaled to [-1, 1] for conditioning
    let v = DMatrix::from_fn(w, d + 1, |j, k| ((j as f64 - m) / m).powi(k as i32));
    let pinv = (v.transpose() * &v)
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular smoothing design".into()))?
        * v.transpose();
    let mut out = vec![0.0; n];
    let mut cache: Option<(usize, Vec<f64>)> = None;
    for (i, o) in out.iter_mut().enumerate() {
        let start = i.saturating_sub(w / 2).min(n - w);
        let coef = match &cache {
            Some((s0, c)) if *s0 == start => c.clone(),
            _ => {
                let c: Vec<f64> = (0..=d).map(|k| (0..w).map(|j| pinv[(k, j)] * y[start + j]).sum()).collect();
                cache = Some((start, c.clone()));
                c
            }
        };
        let x = (i as f64 - start as f64 - m) / m;
        *o = if deriv == 0 {
            coef.iter().enumerate().map(|(k, a)| a * x.powi(k as i32)).sum()
        } else {
            coef.iter().enumerate().skip(1).map(|(k, a)| a * k as f64 * x.powi(k as i32 - 1)).sum::<f64>() / m
        };
    }
    Ok(out)
}

pub fn sech2(t: f64, t0: f64, a: f64, s: f64) -> f64 {
    let c = ((t - t0) / s).cosh();
    a / (c * c)
}

pub fn gaussian(t: f64, t0: f64, a: f64, sigma: f64) -> f64 {
    a * (-0.5 * ((t - t0) / sigma).powi(2)).exp()
}

/// Number of bins over which the leading edge rises from 10 % to 90 % of
/// the peak above the pre-edge baseline.
pub fn rise_bins(y: &[f64]) -> usize {
    let (ipk, &peak) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap_or((0, &0.0));
    let base = y[..=ipk].iter().cloned().fold(f64::INFINITY, f64::min);
    let level = |f: f64| base + f * (peak - base);
    let i10 = y[..=ipk].iter().position(|v| *v >= level(0.1)).unwrap_or(ipk);
    let i90 = y[..=ipk].iter().position(|v| *v >= level(0.9)).unwrap_or(ipk);
    i90 - i10
}

/// Recovers the detection timing response from the rising edge of a
/// polarization-summed coincidence histogram (delays in ps).
///
/// The histogram is smoothed and differentiated. When the exciton lifetime
/// is given, `g = f' + (f − b)/τ_X` undoes the exponential decay exactly,
/// with `b` the flat floor before the edge; otherwise
/// `g = f'`, which widens the recovered response. The `t ≤ 0` branch is
/// mirrored about zero and fitted with `A/cosh²((t − t₀)/s)`. A Gaussian is
/// fitted to the same points for comparison.
pub fn extract_timing_response(
    taus_ps: &[f64],
    counts: &[f64],
    smoothing: Smoothing,
    tau_x_ns: Option<f64>,
) -> Result<FitResult> {
    let n = taus_ps.len();
    if counts.len() != n || n < 3 {
        return Err(Error::Domain("need equal-length delays and counts".into()));
    }
    let dt = taus_ps[1] - taus_ps[0];
    if !(dt > 0.0) || taus_ps.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::Domain("delays must be uniformly spaced and increasing".into()));
    }
    let rise = rise_bins(counts);
    if rise < 3 {
        return Err(Error::Undersampled(format!("rising edge spans {rise} bins, need at least 3")));
    }
    let f = savitzky_golay(counts, smoothing, 0)?;
    let df = savitzky_golay(counts, smoothing, 1)?;
    // flat accidental floor, from the earliest smoothing window
    let baseline = counts[..smoothing.window.min(n)].iter().sum::<f64>() / smoothing.window.min(n) as f64;
    let g: Vec<f64> = match tau_x_ns {
        Some(tx) => df.iter().zip(&f).map(|(d, v)| d / dt + (v - baseline) / (tx * 1e3)).collect(),
        None => df.iter().map(|d| d / dt).collect(),
    };
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (t, v) in taus_ps.iter().zip(&g) {
        if *t <= 0.0 {
            pts.push((*t, *v));
            if *t < 0.0 {
                pts.push((-t, *v));
            }
        }
    }
    if pts.len() < 10 {
        return Err(Error::Domain("fewer than 10 points on the t <= 0 branch".into()));
    }
    let (tt, yy): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (ipk, &a0) = yy.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let t_pk = tt[ipk];
    let half = tt
        .iter()
        .zip(&yy)
        .filter(|(t, y)| **t <= t_pk && **y <= 0.5 * a0)
        .map(|(t, _)| *t)
        .fold(f64::NEG_INFINITY, f64::max);
    let fwhm0 = if half.is_finite() { 2.0 * (t_pk - half) } else { 10.0 * dt };
    let fwhm0 = fwhm0.max(2.0 * dt);

    let fit_shape = |shape: fn(f64, f64, f64, f64) -> f64, width0: f64| {
        let residual = |p: &[f64]| Some(tt.iter().zip(&yy).map(|(t, y)| shape(*t, p[0], p[1], p[2]) - y).collect());
        let bounds = [Bound::FREE, Bound::new(0.0, f64::INFINITY), Bound::new(1e-6, f64::INFINITY)];
        levenberg_marquardt(residual, &[0.0, a0, width0], &bounds, LmOptions::default())
    };
    let sfit = fit_shape(sech2, fwhm0 / SECH2_FWHM_PER_SCALE)
        .ok_or_else(|| Error::NonConvergence("sech² fit failed".into()))?;
    let gfit = fit_shape(gaussian, fwhm0 / GAUSS_FWHM_PER_SIGMA)
        .ok_or_else(|| Error::NonConvergence("Gaussian fit failed".into()))?;
    let resid = |fit: &super::lm::LmFit| fit.residuals.clone();

    let mut out = FitResult::from_lm(&["t0_ps", "amplitude", "sigma_ps"], &sfit, false, &yy, &resid(&sfit))?;
    let fwhm = sfit.params[2] * SECH2_FWHM_PER_SCALE;
    let fwhm_err = out.error("sigma_ps") * SECH2_FWHM_PER_SCALE;
    out.derived.insert("fwhm_ps".into(), fwhm);
    out.derived.insert("fwhm_ps_error".into(), fwhm_err);
    out.derived.insert("sech2_r_squared".into(), r_squared(&yy, &sfit.residuals));
    out.derived.insert("gaussian_fwhm_ps".into(), gfit.params[2] * GAUSS_FWHM_PER_SIGMA);
    out.derived.insert("gaussian_t0_ps".into(), gfit.params[0]);
    out.derived.insert("gaussian_r_squared".into(), r_squared(&yy, &gfit.residuals));
    out.derived.insert("rise_bins".into(), rise as f64);
    if rise < 10 {
        out.warn(format!("rising edge spans only {rise} bins"));
    }
    if tau_x_ns.is_none() {
        out.warn("no lifetime given: raw derivative used, response width is biased high");
    }
    if !(sfit.converged && gfit.converged) {
        return Err(Error::NonConvergence("timing-response fit did not converge".into()));
    }
    Ok(out)
}
