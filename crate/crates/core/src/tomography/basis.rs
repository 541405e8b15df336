use std::f64::consts::{PI, TAU};

use super::states::TimeBinnedStates;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::qcore::{local_unitary, DensityMatrix, LocalUnitaryParams};

/// Points per angle in the coarse search.
pub const GRID_POINTS: usize = 12;

/// Weighted aggregate `Σ N_τ f(U ρ_τ U†) / Σ N_τ` for one local unitary.
pub fn rotated_aggregate<F>(states: &TimeBinnedStates, u: &LocalUnitaryParams, objective: &F) -> f64
where
    F: Fn(&DensityMatrix) -> f64,
{
    let m = local_unitary(u);
    let mut num = 0.0;
    let mut den = 0.0;
    for e in &states.entries {
        num += e.n_tau * objective(&e.rho.conjugate_by(&m));
        den += e.n_tau;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Heuristic search for the local unitary maximizing the weighted objective:
/// a 12-point grid per angle followed by simplex refinement from the best
/// grid point. Returns the best parameters found and their aggregate.
///
/// Orientation angles are gridded over `[0, π)` since a retarder rotated by
/// π is the same plate.
pub fn optimize_local_basis<F>(states: &TimeBinnedStates, objective: F) -> (LocalUnitaryParams, f64)
where
    F: Fn(&DensityMatrix) -> f64,
{
    let eval = |a: &[f64]| match LocalUnitaryParams::new(a[0], a[1], a[2], a[3]) {
        Ok(u) => rotated_aggregate(states, &u, &objective),
        Err(_) => f64::NEG_INFINITY,
    };
    let mut best = ([0.0; 4], eval(&[0.0; 4]));
    let theta = |i: usize| PI * i as f64 / GRID_POINTS as f64;
    let phi = |i: usize| TAU * i as f64 / GRID_POINTS as f64;
    for a in 0..GRID_POINTS {
        for b in 0..GRID_POINTS {
            for c in 0..GRID_POINTS {
                for d in 0..GRID_POINTS {
                    let x = [theta(a), phi(b), theta(c), phi(d)];
                    let v = eval(&x);
                    if v > best.1 {
                        best = (x, v);
                    }
                }
            }
        }
    }
    let step = [PI / GRID_POINTS as f64, TAU / GRID_POINTS as f64, PI / GRID_POINTS as f64, TAU / GRID_POINTS as f64];
    let opts = NelderMeadOptions { max_evaluations: 2000, f_tol: 1e-13, x_tol: 1e-8 };
    let m = nelder_mead(|x| -eval(x), &best.0, &step, opts);
    let (x, v) = if -m.value > best.1 { (m.x, -m.value) } else { (best.0.to_vec(), best.1) };
    let u = LocalUnitaryParams::new(x[0], x[1], x[2], x[3]).expect("finite search point");
    (u, v)
}
