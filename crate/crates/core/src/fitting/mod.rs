//! Curve fits and scalar analyses used to characterise the source.

mod budget;
mod decay;
mod fss;
mod g2;
pub mod lm;
mod rabi;
mod result;
mod timing;

pub use budget::{combine_jitter, efficiency_budget, pair_extraction, EfficiencyBudget, EfficiencyInputs};
pub use decay::{blinking_model, fit_blinking, fit_lifetime, side_peak_heights};
pub use fss::{fit_fss, fss_model, FssOptions};
pub use g2::{corrected_g2, g2_from_hbt, G2Result};
pub use rabi::{fit_rabi, fit_rabi_weighted, rabi_population, XI_MAX};
pub use result::{poisson_sigma, r_squared, FitResult, ResidualSummary};
pub use timing::{extract_timing_response, gaussian, rise_bins, savitzky_golay, sech2, Smoothing};
