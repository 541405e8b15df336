use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{bfgs, BfgsOptions};
use crate::qcore::linalg::{c, C64};
use crate::qcore::{DensityMatrix, Mat4, PolLabel, TwoQubitState};
use crate::sim::N_CHANNELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    Poisson,
    /// Weighted least squares with variance `max(n, 1)` per channel.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleConfig {
    pub max_iterations: usize,
    /// Relative log-likelihood improvement below which iteration stops.
    pub tolerance: f64,
    pub likelihood: Likelihood,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self { max_iterations: 5000, tolerance: 1e-10, likelihood: Likelihood::Poisson }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance = {} must be positive", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    /// Log-likelihood per recorded coincidence, up to a data-only constant.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Model {
    vecs: Vec<[C64; 4]>,
    setting: Vec<usize>,
}

impl Model {
    fn new() -> Self {
        let pairs: Vec<_> = PolLabel::pairs().collect();
        Self {
            vecs: pairs.iter().map(|&(a, b)| *TwoQubitState::product(a, b).amplitudes()).collect(),
            setting: pairs.iter().map(|&(a, b)| 3 * a.basis() + b.basis()).collect(),
        }
    }
}

/// Lower-triangular `T` from 16 reals: 4 diagonal entries then (re, im) of
/// the 6 strictly lower entries, row by row.
fn unpack(x: &[f64]) -> Mat4 {
    let mut t = Mat4::zeros();
    for i in 0..4 {
        t[(i, i)] = c(x[i], 0.0);
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            t[(i, j)] = c(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

fn pack_gradient(m: &Mat4) -> Vec<f64> {
    let mut g = Vec::with_capacity(16);
    for i in 0..4 {
        g.push(2.0 * m[(i, i)].re);
    }
    for i in 1..4 {
        for j in 0..i {
            g.push(2.0 * m[(i, j)].re);
            g.push(2.0 * m[(i, j)].im);
        }
    }
    g
}

fn quad(a: &Mat4, v: &[C64; 4]) -> f64 {
    let mut acc = c(0.0, 0.0);
    for i in 0..4 {
        let mut row = c(0.0, 0.0);
        for j in 0..4 {
            row += a[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc.re
}

/// Negative log-likelihood per coincidence as a function of the packed `T`.
struct Objective<'a> {
    model: Model,
    counts: &'a [f64; N_CHANNELS],
    per_setting: [f64; 9],
    likelihood: Likelihood,
    total: f64,
}

impl<'a> Objective<'a> {
    fn new(counts: &'a [f64; N_CHANNELS], likelihood: Likelihood) -> Self {
        let model = Model::new();
        let mut per_setting = [0.0; 9];
        for (c, n) in counts.iter().enumerate() {
            per_setting[model.setting[c]] += n;
        }
        let total = counts.iter().sum();
        Self { model, counts, per_setting, likelihood, total }
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let t = unpack(x);
        let a = t.adjoint() * t;
        let tr = (0..4).map(|i| a[(i, i)].re).sum::<f64>();
        if !(tr > 0.0) {
            return (f64::INFINITY, vec![0.0; 16]);
        }
        let mut l = 0.0;
        // dL/dA = Σ w_c (Π_c − q_c I) / Tr A with w_c = dL/dq_c
        let mut g = Mat4::zeros();
        let mut wq = 0.0;
        for (ci, v) in self.model.vecs.iter().enumerate() {
            let q = quad(&a, v) / tr;
            let n = self.counts[ci];
            let w = match self.likelihood {
                Likelihood::Poisson => {
                    if n == 0.0 {
                        continue;
                    }
                    if !(q > 0.0) {
                        return (f64::INFINITY, vec![0.0; 16]);
                    }
                    l += n * q.ln();
                    n / q
                }
                Likelihood::Gaussian => {
                    let ns = self.per_setting[self.model.setting[ci]];
                    let var = n.max(1.0);
                    let r = n - ns * q;
                    l -= 0.5 * r * r / var;
                    ns * r / var
                }
            };
            wq += w * q;
            for i in 0..4 {
                for j in 0..4 {
                    g[(i, j)] += v[i] * v[j].conj() * w;
                }
            }
        }
        for i in 0..4 {
            g[(i, i)] -= c(wq, 0.0);
        }
        // A = T†T: dL/dRe T = 2 Re(TG), dL/dIm T = 2 Im(TG)
        let grad_t = (t * g).unscale(tr);
        let scale = -1.0 / self.total;
        let grad = pack_gradient(&grad_t).into_iter().map(|x| x * scale).collect();
        (l * scale, grad)
    }
}

/// Maximum-likelihood density matrix for one set of 36 channel counts in the
/// fixed channel order.
///
/// Each of the nine basis settings is normalized on its own, so settings may
/// have been recorded for different durations. The state is parameterized as
/// `ρ = T†T / Tr[T†T]` with `T` lower triangular and the search starts from
/// `I/4`.
pub fn reconstruct_bin(counts: &[f64; N_CHANNELS], cfg: &MleConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    if counts.iter().any(|n| !(*n >= 0.0) || !n.is_finite()) {
        return Err(Error::Domain("counts must be finite and non-negative".into()));
    }
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData("all 36 counts are zero".into()));
    }
    let obj = Objective::new(counts, cfg.likelihood);
    let mut x0 = vec![0.0; 16];
    x0[..4].fill(0.5);
    let opts = BfgsOptions { max_iterations: cfg.max_iterations, rel_tol: cfg.tolerance, grad_tol: 1e-13 };
    let m = bfgs(|x| obj.eval(x), &x0, opts);
    let t = unpack(&m.x);
    let rho = DensityMatrix::from_unnormalized(t.adjoint() * t)?;
    Ok(Reconstruction { rho, log_likelihood: -m.value, iterations: m.iterations, converged: m.converged })
}

/// Noiseless expected counts `N·Tr[ρ Π_ij]` in channel order.
pub fn expected_counts(rho: &DensityMatrix, n_per_setting: f64) -> [f64; N_CHANNELS] {
    let model = Model::new();
    std::array::from_fn(|c| n_per_setting * quad(rho.matrix(), &model.vecs[c]).max(0.0))
}
