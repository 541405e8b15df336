use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::histogram::{CoincidenceHistogramSet, N_CHANNELS};
use super::kernel::{convolve_same, kernel_half_bins, response_kernel};
use super::model::{DetectorModel, Grid, SourceModel};
use crate::error::{Error, Result};
use crate::qcore::{cascade_state, projector, DensityMatrix, Mat4, PolLabel, TwoQubitState};

/// `(1 − p_m) ρ + p_m I/4`.
pub fn mix_multiphoton(rho: &DensityMatrix, p_m: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p_m) {
        return Err(Error::Domain(format!("p_m = {p_m} outside [0, 1]")));
    }
    rho.mix(&DensityMatrix::maximally_mixed(), 1.0 - p_m)
}

/// `(|HH⟩⟨HH| + |VV⟩⟨VV|)/2`: the classically correlated state left after
/// complete H/V dephasing.
pub fn hv_mixture() -> DensityMatrix {
    let hh = TwoQubitState::product(PolLabel::H, PolLabel::H).projector();
    let vv = TwoQubitState::product(PolLabel::V, PolLabel::V).projector();
    DensityMatrix::new((hh + vv).scale(0.5)).expect("valid by construction")
}

fn decay(tau_ns: f64, t: Option<f64>) -> f64 {
    t.map_or(1.0, |t| (-tau_ns / t).exp())
}

/// Two-photon state at delay `tau_ns` including multiphoton background and
/// spin dephasing. Negative delays are treated as `τ = 0`.
pub fn dephased_state(tau_ns: f64, source: &SourceModel) -> DensityMatrix {
    let tau = tau_ns.max(0.0);
    let k = 1.0 - source.p_m;
    let ess = decay(tau, source.tau_ss_ns);
    let ehv = decay(tau, source.tau_hv_ns);
    let pure = cascade_state(tau, source.fss_uev).projector();
    let m = pure.scale(k * ess * ehv)
        + Mat4::identity().scale((1.0 - k * ess) / 4.0)
        + hv_mixture().matrix().scale(k * ess * (1.0 - ehv));
    DensityMatrix::from_unnormalized(m).expect("convex combination of states")
}

/// Coincidence probability density (1/ns) of channel `(i, j)` for the pure
/// cascade state.
pub fn ideal_pair_density(tau_ns: f64, i: PolLabel, j: PolLabel, source: &SourceModel) -> f64 {
    if tau_ns < 0.0 {
        return 0.0;
    }
    let rho = DensityMatrix::from_pure(&cascade_state(tau_ns, source.fss_uev));
    rho.expectation(&projector(i, j)) * (-tau_ns / source.tau_x_ns).exp() / source.tau_x_ns
}

/// Signal coincidences per bin per unit probability density (1/ns):
/// `N_X N_XX T Δτ / f_rep` with Δτ in ns.
pub fn signal_scale(source: &SourceModel, bin_width_ps: f64, t_exp_s: f64) -> f64 {
    source.n_x_hz * source.n_xx_hz * t_exp_s * (bin_width_ps * 1e-3) / source.f_rep_hz()
}

/// Flat accidental floor per bin and channel:
/// `(N_XX d_X + N_X d_XX) T Δτ / f_rep` with Δτ in ns.
pub fn dark_floor(source: &SourceModel, det: &DetectorModel, bin_width_ps: f64, t_exp_s: f64) -> f64 {
    (source.n_xx_hz * det.dark_x_hz + source.n_x_hz * det.dark_xx_hz) * t_exp_s * (bin_width_ps * 1e-3)
        / source.f_rep_hz()
}

/// Expected coincidence counts in all 36 channels.
///
/// The emission model is evaluated at each bin label, the dark floor added,
/// and the result convolved with the response kernel on a grid padded by the
/// kernel half-width on both sides.
pub fn expected_histograms(
    source: &SourceModel,
    det: &DetectorModel,
    grid: &Grid,
    t_exp_s: f64,
) -> Result<CoincidenceHistogramSet> {
    source.validate()?;
    det.validate()?;
    grid.validate()?;
    if !(t_exp_s >= 0.0) || !t_exp_s.is_finite() {
        return Err(Error::Config(format!("t_exp_s = {t_exp_s} must be finite and >= 0")));
    }
    let kernel = response_kernel(det, grid.bin_width_ps)?;
    let width = if kernel.len() > 1 { det.width_ps } else { 0.0 };
    let need_from = -3.0 * width;
    let need_to = 5.0 * source.tau_x_ns * 1e3;
    let eps = 1e-9 * grid.bin_width_ps;
    if grid.tau_start_ps > need_from + eps || grid.end_ps() < need_to - grid.bin_width_ps - eps {
        return Err(Error::Config(format!(
            "grid [{}, {}] ps does not cover [{need_from}, {need_to}] ps",
            grid.tau_start_ps,
            grid.end_ps()
        )));
    }

    let pad = kernel_half_bins(det, grid.bin_width_ps);
    let n = grid.n_bins + 2 * pad;
    let n0 = signal_scale(source, grid.bin_width_ps, t_exp_s);
    let nd = dark_floor(source, det, grid.bin_width_ps, t_exp_s);
    let projectors: Vec<Mat4> = PolLabel::pairs().map(|(a, b)| projector(a, b)).collect();

    let mut raw = vec![vec![nd; n]; N_CHANNELS];
    for k in 0..n {
        let tau_ps = grid.tau_start_ps + (k as f64 - pad as f64) * grid.bin_width_ps;
        if tau_ps < 0.0 {
            continue;
        }
        let tau_ns = tau_ps * 1e-3;
        let density = (-tau_ns / source.tau_x_ns).exp() / source.tau_x_ns;
        let rho = dephased_state(tau_ns, source);
        for (ch, p) in raw.iter_mut().zip(&projectors) {
            ch[k] += n0 * density * rho.expectation(p).max(0.0);
        }
    }
    let counts = raw
        .into_iter()
        .map(|ch| {
            let full = if kernel.len() > 1 { convolve_same(&ch, &kernel) } else { ch };
            full[pad..pad + grid.n_bins].iter().map(|x| x.max(0.0)).collect()
        })
        .collect();
    Ok(CoincidenceHistogramSet::new(*grid, t_exp_s, counts)?.with_models(source.clone(), det.clone()))
}

/// Independent Poisson draw per bin with the expected counts as means.
pub fn sample_histograms(expected: &CoincidenceHistogramSet, seed: u64) -> Result<CoincidenceHistogramSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut err = None;
    let out = expected.map_counts(|mean| {
        if mean <= 0.0 {
            return 0.0;
        }
        match Poisson::new(mean) {
            Ok(d) => d.sample(&mut rng),
            Err(e) => {
                err.get_or_insert_with(|| Error::Domain(format!("Poisson mean {mean}: {e}")));
                0.0
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
