//! Forward model of time-resolved polarization-resolved coincidence
//! histograms.

mod forward;
mod histogram;
mod kernel;
mod model;

pub use forward::{
    dark_floor, dephased_state, expected_histograms, hv_mixture, ideal_pair_density, mix_multiphoton,
    sample_histograms, signal_scale,
};
pub use histogram::{channel_index, sidecar_path, CoincidenceHistogramSet, HistogramMeta, N_CHANNELS};
pub use kernel::{
    convolve_same, response_kernel, response_shape, GAUSS_FWHM_PER_SIGMA, SECH2_FWHM_PER_SCALE,
};
pub use model::{DetectorModel, Grid, ResponseKind, SourceModel};
