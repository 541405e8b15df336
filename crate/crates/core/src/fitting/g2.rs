use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Removes the blinking-induced bunching from a nearest-neighbour `g2(0)`.
pub fn corrected_g2(g2_nn: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta = {beta} outside (0, 1]")));
    }
    Ok(g2_nn / beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Result {
    pub g2_zero: f64,
    pub central_area: f64,
    /// `(nominal delay ns, area)` of every complete side peak.
    pub side_areas: Vec<(f64, f64)>,
}

/// Nearest-neighbour `g2(0)` of a pulsed HBT histogram: the area of the
/// central peak over the mean area of the two adjacent peaks. Each area sums
/// the bins with delay in `[c − T/2, c + T/2)`.
pub fn g2_from_hbt(taus_ns: &[f64], counts: &[f64], rep_period_ns: f64) -> Result<G2Result> {
    if !(rep_period_ns > 0.0) {
        return Err(Error::Domain("repetition period must be positive".into()));
    }
    if taus_ns.len() != counts.len() || taus_ns.len() < 2 {
        return Err(Error::Domain("delays and counts must have equal length >= 2".into()));
    }
    let half = 0.5 * rep_period_ns;
    let (lo, hi) = (taus_ns[0], taus_ns[taus_ns.len() - 1]);
    let area = |c: f64| -> f64 {
        taus_ns.iter().zip(counts).filter(|(t, _)| **t >= c - half && **t < c + half).map(|(_, n)| *n).sum()
    };
    let complete = |c: f64| c - half >= lo - 1e-9 && c + half <= hi + (taus_ns[1] - taus_ns[0]) + 1e-9;
    let mut side_areas = Vec::new();
    let k_max = ((hi - lo) / rep_period_ns).ceil() as i64 + 1;
    for k in -k_max..=k_max {
        let c = k as f64 * rep_period_ns;
        if k != 0 && complete(c) {
            side_areas.push((c, area(c)));
        }
    }
    let left = side_areas.iter().filter(|p| p.0 < 0.0).count();
    let right = side_areas.len() - left;
    if left < 3 || right < 3 || !complete(0.0) {
        return Err(Error::DegenerateData(format!(
            "need 3 complete side peaks on each side, found {left} and {right}"
        )));
    }
    let neighbour = |k: f64| side_areas.iter().find(|p| (p.0 - k * rep_period_ns).abs() < 1e-9).map(|p| p.1);
    let (Some(a_m), Some(a_p)) = (neighbour(-1.0), neighbour(1.0)) else {
        return Err(Error::DegenerateData("nearest side peaks missing".into()));
    };
    let mean = 0.5 * (a_m + a_p);
    if !(mean > 0.0) {
        return Err(Error::DegenerateData("nearest side peaks are empty".into()));
    }
    let central_area = area(0.0);
    Ok(G2Result { g2_zero: central_area / mean, central_area, side_areas })
}
