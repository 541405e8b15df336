use nalgebra::{DMatrix, DVector};

/// Box constraint on one parameter.
#[derive(Debug, Clone, Copy)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub const FREE: Self = Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub rel_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, rel_tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `Σ r²` at the solution.
    pub chi2: f64,
    /// `(JᵀJ)⁻¹`, or `None` if singular.
    pub cov_unscaled: Option<DMatrix<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Parameters that finished on a bound.
    pub at_bound: Vec<bool>,
}

impl LmFit {
    pub fn dof(&self) -> usize {
        self.residuals.len().saturating_sub(self.params.len())
    }

    pub fn reduced_chi2(&self) -> f64 {
        let dof = self.dof();
        if dof == 0 {
            f64::NAN
        } else {
            self.chi2 / dof as f64
        }
    }

    /// Standard errors. With `absolute_sigma` the residuals are assumed to
    /// carry true weights; otherwise the covariance is scaled by the reduced
    /// χ².
    pub fn std_errors(&self, absolute_sigma: bool) -> Vec<f64> {
        let scale = if absolute_sigma { 1.0 } else { self.reduced_chi2() };
        match &self.cov_unscaled {
            Some(c) => (0..self.params.len()).map(|i| (c[(i, i)] * scale).max(0.0).sqrt()).collect(),
            None => vec![f64::INFINITY; self.params.len()],
        }
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian<F>(f: &F, p: &[f64], r0: &[f64], bounds: &[Bound]) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let (m, n) = (r0.len(), p.len());
    let mut j = DMatrix::zeros(m, n);
    for k in 0..n {
        let h = 1e-6 * p[k].abs().max(1e-6);
        let mut up = p.to_vec();
        let mut dn = p.to_vec();
        up[k] = bounds[k].clamp(p[k] + h);
        dn[k] = bounds[k].clamp(p[k] - h);
        let (ru, rd) = (f(&up), f(&dn));
        let (hi, lo, step) = match (ru, rd) {
            (Some(ru), Some(rd)) if up[k] != dn[k] => (ru, rd, up[k] - dn[k]),
            (Some(ru), _) if up[k] != p[k] => (ru, r0.to_vec(), up[k] - p[k]),
            (_, Some(rd)) if dn[k] != p[k] => (r0.to_vec(), rd, p[k] - dn[k]),
            _ => return None,
        };
        for i in 0..m {
            j[(i, k)] = (hi[i] - lo[i]) / step;
        }
    }
    Some(j)
}

/// Levenberg–Marquardt on weighted residuals `r(p)` with a central-difference
/// Jacobian. `f` returns `None` for parameters outside the model's domain.
pub fn levenberg_marquardt<F>(f: F, p0: &[f64], bounds: &[Bound], opts: LmOptions) -> Option<LmFit>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = p0.len();
    let mut p: Vec<f64> = p0.iter().zip(bounds).map(|(x, b)| b.clamp(*x)).collect();
    let mut r = f(&p)?;
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return None;
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = jacobian(&f, &p, &r, bounds)?;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = (0..n).map(|i| bounds[i].clamp(p[i] + delta[i])).collect();
            if let Some(rt) = f(&trial) {
                let ct = sum_sq(&rt);
                if ct.is_finite() && ct < cost {
                    let rel = (cost - ct) / cost.max(1e-300);
                    let step_rel = (0..n).map(|i| (trial[i] - p[i]).abs() / p[i].abs().max(1e-12)).fold(0.0, f64::max);
                    p = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    if rel < opts.rel_tol || step_rel < 1e-12 {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !improved {
            // no downhill step at any damping: stationary point
            converged = true;
            break;
        }
        jac = jacobian(&f, &p, &r, bounds)?;
        if converged {
            break;
        }
    }
    let at_bound: Vec<bool> = p
        .iter()
        .zip(bounds)
        .map(|(x, b)| (*x - b.lo).abs() <= 1e-9 * x.abs().max(1e-9) || (*x - b.hi).abs() <= 1e-9 * x.abs().max(1e-9))
        .collect();
    let jtj = jac.transpose() * &jac;
    let cov_unscaled = jtj.try_inverse().filter(|c| c.iter().all(|x| x.is_finite()));
    Some(LmFit { params: p, residuals: r, chi2: cost, cov_unscaled, iterations, converged, at_bound })
}

/// Runs [`levenberg_marquardt`] from every start and keeps the lowest χ².
pub fn multistart<F>(f: F, starts: &[Vec<f64>], bounds: &[Bound], opts: LmOptions) -> Option<LmFit>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    starts
        .iter()
        .filter_map(|s| levenberg_marquardt(&f, s, bounds, opts))
        .min_by(|a, b| a.chi2.total_cmp(&b.chi2))
}
