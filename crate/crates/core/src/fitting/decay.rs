use super::lm::{levenberg_marquardt, multistart, Bound, LmOptions};
use super::result::{poisson_sigma, FitResult};
use crate::error::{Error, Result};

/// Fits `A·exp(−τ/τ_X)` to the decaying tail `τ > 2·response_fwhm_ps` of a
/// polarization-summed coincidence histogram. Delays in ps, lifetime in ns.
pub fn fit_lifetime(taus_ps: &[f64], counts: &[f64], response_fwhm_ps: f64) -> Result<FitResult> {
    if taus_ps.len() != counts.len() {
        return Err(Error::Domain("delays and counts differ in length".into()));
    }
    let t_min = 2.0 * response_fwhm_ps.max(0.0);
    let (t, y): (Vec<f64>, Vec<f64>) =
        taus_ps.iter().zip(counts).filter(|(t, _)| **t > t_min).map(|(t, y)| (t * 1e-3, *y)).unzip();
    if t.len() < 20 {
        return Err(Error::Domain(format!("need at least 20 points beyond {t_min} ps, got {}", t.len())));
    }
    if y.iter().all(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateData("no positive counts in the fit region".into()));
    }
    // log-linear start
    let pts: Vec<(f64, f64)> = t.iter().zip(&y).filter(|(_, y)| **y > 0.0).map(|(t, y)| (*t, y.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let span = t[t.len() - 1] - t[0];
    if !(slope < 0.0) {
        return Err(Error::NonConvergence("counts do not decay; lifetime diverges".into()));
    }
    let tau0 = -1.0 / slope;
    let a0 = (my - slope * mx).exp();

    let model = |p: &[f64], t: f64| p[0] * (-t / p[1]).exp();
    let bounds = [Bound::new(0.0, f64::INFINITY), Bound::new(1e-9, f64::INFINITY)];
    let solve = |sig: &[f64], p0: &[f64]| {
        let residual = |p: &[f64]| Some(t.iter().zip(&y).zip(sig).map(|((t, y), s)| (model(p, *t) - y) / s).collect());
        levenberg_marquardt(residual, p0, &bounds, LmOptions::default())
    };
    let sig: Vec<f64> = y.iter().map(|v| poisson_sigma(*v)).collect();
    let first = solve(&sig, &[a0, tau0]).ok_or_else(|| Error::NonConvergence("lifetime fit failed".into()))?;
    // reweight with the fitted model: observed-count weights bias low-count tails
    let sig: Vec<f64> = t.iter().map(|t| poisson_sigma(model(&first.params, *t))).collect();
    let fit = solve(&sig, &first.params).ok_or_else(|| Error::NonConvergence("lifetime fit failed".into()))?;
    if !fit.converged || fit.params[1] > 10.0 * span {
        return Err(Error::NonConvergence(format!("lifetime {} ns is not resolved by a {span} ns tail", fit.params[1])));
    }
    let unweighted: Vec<f64> = t.iter().zip(&y).map(|(t, y)| model(&fit.params, *t) - y).collect();
    let mut out = FitResult::from_lm(&["amplitude", "tau_x_ns"], &fit, true, &y, &unweighted)?;
    out.derived.insert("t_min_ps".into(), t_min);
    Ok(out)
}

/// Side-peak height `A_P (1 + (1−β)/β · exp(−|τ|/τ_b))` of a blinking
/// emitter.
pub fn blinking_model(tau_ns: f64, beta: f64, tau_b_ns: f64, a_p: f64) -> f64 {
    a_p * (1.0 + (1.0 - beta) / beta * (-tau_ns.abs() / tau_b_ns).exp())
}

/// Fits the telegraph model to side-peak heights at non-zero delays (ns).
///
/// Internally `c = (1−β)/β ≥ 0` is fitted so that `β ≤ 1`; a fit ending at
/// `β = 1` is reported as the Poisson limit with `τ_b` undetermined.
pub fn fit_blinking(taus_ns: &[f64], heights: &[f64]) -> Result<FitResult> {
    if taus_ns.len() != heights.len() {
        return Err(Error::Domain("delays and heights differ in length".into()));
    }
    if taus_ns.len() < 10 {
        return Err(Error::Domain(format!("need at least 10 side peaks, got {}", taus_ns.len())));
    }
    if taus_ns.iter().any(|t| *t == 0.0 || !t.is_finite()) {
        return Err(Error::Domain("blinking fit takes side peaks only (tau != 0)".into()));
    }
    if heights.iter().any(|h| !(*h >= 0.0)) {
        return Err(Error::Domain("heights must be non-negative".into()));
    }
    let abs_t: Vec<f64> = taus_ns.iter().map(|t| t.abs()).collect();
    let t_max = abs_t.iter().cloned().fold(0.0, f64::max);
    let t_near = abs_t.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut far: Vec<f64> = abs_t.iter().zip(heights).filter(|(t, _)| **t >= 0.75 * t_max).map(|(_, h)| *h).collect();
    far.sort_by(f64::total_cmp);
    let a0 = far[far.len() / 2].max(1e-12);
    let near = abs_t.iter().zip(heights).filter(|(t, _)| **t <= 1.5 * t_near).map(|(_, h)| *h).fold(0.0, f64::max);
    let c0 = (near / a0 - 1.0).max(0.05);

    let model = |p: &[f64], t: f64| p[0] * (1.0 + p[1] * (-t / p[2]).exp());
    let bounds = [Bound::new(0.0, f64::INFINITY), Bound::new(0.0, f64::INFINITY), Bound::new(1e-6, f64::INFINITY)];
    let solve = |sig: &[f64], starts: &[Vec<f64>]| {
        let residual =
            |p: &[f64]| Some(abs_t.iter().zip(heights).zip(sig).map(|((t, y), s)| (model(p, *t) - y) / s).collect());
        multistart(residual, starts, &bounds, LmOptions::default())
    };
    let sig: Vec<f64> = heights.iter().map(|h| poisson_sigma(*h)).collect();
    let starts: Vec<Vec<f64>> = [0.03, 0.1, 0.3, 1.0].iter().map(|f| vec![a0, c0, f * t_max]).collect();
    let first = solve(&sig, &starts).ok_or_else(|| Error::NonConvergence("blinking fit failed".into()))?;
    let sig: Vec<f64> = abs_t.iter().map(|t| poisson_sigma(model(&first.params, *t))).collect();
    let fit = solve(&sig, std::slice::from_ref(&first.params)).ok_or_else(|| Error::NonConvergence("blinking fit failed".into()))?;
    let (a_p, c, tau_b) = (fit.params[0], fit.params[1], fit.params[2]);
    let errs = fit.std_errors(true);
    let beta = 1.0 / (1.0 + c);
    let unweighted: Vec<f64> = abs_t.iter().zip(heights).map(|(t, y)| model(&fit.params, *t) - y).collect();
    let mut out = FitResult::from_lm(&["a_p", "contrast", "tau_b_ns"], &fit, true, heights, &unweighted)?;
    out.set("beta", beta, errs[1] / (1.0 + c).powi(2));
    out.derived.insert("blink_rate_mhz".into(), 1e3 / tau_b);
    out.derived.insert("height_at_zero".into(), a_p / beta);
    if c <= 1e-9 {
        out.warn("poisson-limit: beta reached 1, tau_b undetermined");
    }
    if !fit.converged {
        return Err(Error::NonConvergence("blinking fit did not converge".into()));
    }
    Ok(out)
}

/// Peak heights at non-zero multiples of the repetition period: the maximum
/// count within ±10 % of each nominal delay.
pub fn side_peak_heights(taus_ns: &[f64], counts: &[f64], rep_period_ns: f64) -> Result<Vec<(f64, f64)>> {
    if !(rep_period_ns > 0.0) {
        return Err(Error::Domain("repetition period must be positive".into()));
    }
    if taus_ns.len() != counts.len() || taus_ns.is_empty() {
        return Err(Error::Domain("delays and counts must be non-empty and equal in length".into()));
    }
    let (lo, hi) = (taus_ns[0], taus_ns[taus_ns.len() - 1]);
    let k_lo = ((lo + 0.1 * rep_period_ns) / rep_period_ns).ceil() as i64;
    let k_hi = ((hi - 0.1 * rep_period_ns) / rep_period_ns).floor() as i64;
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        if k == 0 {
            continue;
        }
        let nominal = k as f64 * rep_period_ns;
        let best = taus_ns
            .iter()
            .zip(counts)
            .filter(|(t, _)| (**t - nominal).abs() <= 0.1 * rep_period_ns)
            .max_by(|a, b| a.1.total_cmp(b.1));
        if let Some((_, h)) = best {
            out.push((nominal, *h));
        }
    }
    Ok(out)
}
