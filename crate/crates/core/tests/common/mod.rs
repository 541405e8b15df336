#![allow(dead_code)]

use std::f64::consts::PI;

use cascade_core::qcore::{DensityMatrix, LocalUnitaryParams, C64};
use nalgebra::Matrix4;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Hilbert–Schmidt distributed state from a complex Ginibre matrix.
pub fn hs_state(rng: &mut impl Rng) -> DensityMatrix {
    let g = Matrix4::from_fn(|_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    DensityMatrix::from_unnormalized(g * g.adjoint()).unwrap()
}

pub fn hs_state_from_seed(seed: u64) -> DensityMatrix {
    hs_state(&mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn arb_state() -> impl Strategy<Value = DensityMatrix> {
    any::<u64>().prop_map(hs_state_from_seed)
}

pub fn arb_rotation() -> impl Strategy<Value = LocalUnitaryParams> {
    prop::array::uniform4(0.0..2.0 * PI).prop_map(|a| LocalUnitaryParams::from_array(a).unwrap())
}

/// Analytic concurrence of `p|Bell⟩⟨Bell| + (1−p) I/4`.
pub fn werner_concurrence(p: f64) -> f64 {
    ((3.0 * p - 1.0) / 2.0).max(0.0)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
