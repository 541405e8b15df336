use super::model::{DetectorModel, ResponseKind};
use crate::error::{Error, Result};

/// `2·arccosh(√2)`: FWHM of `sech²(t/s)` in units of `s`.
pub const SECH2_FWHM_PER_SCALE: f64 = 1.762_747_174_039_086;
/// `2·√(2 ln 2)`: FWHM of a Gaussian in units of σ.
pub const GAUSS_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Unnormalized response shape with unit peak at `t = 0`.
pub fn response_shape(kind: ResponseKind, fwhm: f64, t: f64) -> f64 {
    match kind {
        ResponseKind::Gaussian => {
            let s = fwhm / GAUSS_FWHM_PER_SIGMA;
            (-0.5 * (t / s).powi(2)).exp()
        }
        ResponseKind::Sech2 => {
            let s = fwhm / SECH2_FWHM_PER_SCALE;
            let ch = (t / s).cosh();
            1.0 / (ch * ch)
        }
        ResponseKind::Delta => {
            if t == 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Half extent of the sampled kernel, in bins.
pub fn kernel_half_bins(det: &DetectorModel, bin_width_ps: f64) -> usize {
    match det.response {
        ResponseKind::Delta => 0,
        _ => (5.0 * det.width_ps / bin_width_ps).ceil() as usize,
    }
}

/// Response kernel sampled at multiples of the bin width over ±5 FWHM and
/// normalized to unit sum. Element `half` is the `t = 0` sample.
pub fn response_kernel(det: &DetectorModel, bin_width_ps: f64) -> Result<Vec<f64>> {
    if det.response == ResponseKind::Delta {
        return Ok(vec![1.0]);
    }
    if det.width_ps < 2.0 * bin_width_ps {
        return Err(Error::Config(format!(
            "response width {} ps is below twice the bin width {} ps",
            det.width_ps, bin_width_ps
        )));
    }
    let half = kernel_half_bins(det, bin_width_ps) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| response_shape(det.response, det.width_ps, i as f64 * bin_width_ps))
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|x| *x /= sum);
    Ok(k)
}

/// Full ("same"-centred) discrete convolution of `x` with an odd-length
/// kernel centred on its middle element. Output has the length of `x`.
pub fn convolve_same(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let half = kernel.len() / 2;
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        for j in lo..=hi {
            out[j] += xi * kernel[j + half - i];
        }
    }
    out
}
