//! Time-resolved maximum-likelihood state tomography.

mod basis;
mod mle;
mod states;

pub use basis::{optimize_local_basis, rotated_aggregate, GRID_POINTS};
pub use mle::{expected_counts, reconstruct_bin, Likelihood, MleConfig, Reconstruction};
pub use states::{
    curve_weighted, lifetime_weighted, metric_curve, time_resolved_states, write_curve_csv, CurvePoint, Metric,
    Reference, TimeBin, TimeBinnedStates,
};
