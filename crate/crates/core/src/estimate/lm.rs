//! Bounded Levenberg-Marquardt least squares with analytic Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative parameter step below which the fit has converged.
    pub x_tol: f64,
    /// Relative cost decrease below which the fit has converged.
    pub f_tol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, x_tol: 1e-12, f_tol: 1e-15, initial_damping: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmSolution {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
}

impl LmSolution {
    /// `‖r‖₂`.
    pub fn residual_norm(&self) -> f64 {
        self.residuals.norm()
    }

    /// Gauss-Newton covariance `(JᵀJ)⁻¹ · ‖r‖²/(m − n)`. Approximate; `None`
    /// when JᵀJ is singular.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let (m, n) = self.jacobian.shape();
        let jtj = self.jacobian.transpose() * &self.jacobian;
        let inv = jtj.try_inverse()?;
        let dof = m.saturating_sub(n).max(1) as f64;
        Some(inv * (self.residuals.norm_squared() / dof))
    }

    pub fn sigma(&self) -> Vec<f64> {
        match self.covariance() {
            Some(c) => (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect(),
            None => vec![f64::NAN; self.params.len()],
        }
    }
}

/// Minimizes `½‖r(p)‖²` subject to `lower ≤ p ≤ upper`.
///
/// `model(p)` returns the residual vector and its Jacobian `∂r/∂p`.
pub fn levenberg_marquardt(
    model: impl Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
    initial: DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
    options: LmOptions,
) -> Result<LmSolution> {
    let n = initial.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Fit("bounds and initial guess differ in length".into()));
    }
    let clamp = |p: &DVector<f64>| DVector::from_iterator(n, (0..n).map(|i| p[i].clamp(lower[i], upper[i])));
    let mut p = clamp(&initial);
    let (mut r, mut j) = model(&p);
    if r.len() < n {
        return Err(Error::Fit(format!("{} residuals cannot determine {n} parameters", r.len())));
    }
    let mut cost = 0.5 * r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Fit("non-finite residuals at the initial guess".into()));
    }
    let mut lambda = options.initial_damping;
    for iteration in 1..=options.max_iterations {
        let jt = j.transpose();
        let jtj = &jt * &j;
        let grad = &jt * &r;
        if grad.amax() <= 1e-300 || cost == 0.0 {
            return Ok(LmSolution { params: p, residuals: r, jacobian: j, iterations: iteration });
        }
        loop {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let step = match a.cholesky() {
                Some(c) => c.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e20 {
                        return Err(Error::Fit("normal equations are singular".into()));
                    }
                    continue;
                }
            };
            let trial = clamp(&(&p + &step));
            let (tr, tj) = model(&trial);
            let trial_cost = 0.5 * tr.norm_squared();
            if trial_cost.is_finite() && trial_cost <= cost {
                let moved = (&trial - &p).amax();
                let decrease = cost - trial_cost;
                p = trial;
                r = tr;
                j = tj;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                if moved <= options.x_tol * (p.amax() + options.x_tol) || decrease <= options.f_tol * cost {
                    return Ok(LmSolution { params: p, residuals: r, jacobian: j, iterations: iteration });
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No downhill step exists at machine precision: a minimum.
                return Ok(LmSolution { params: p, residuals: r, jacobian: j, iterations: iteration });
            }
        }
    }
    Err(Error::Fit(format!(
        "no convergence after {} iterations (cost {cost:e}, params {:?})",
        options.max_iterations,
        p.as_slice()
    )))
}

/// Digamma function ψ(x) for x > 0.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + x.ln() - 0.5 / x - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 / 132.0))))
}

/// Mean of `ln(Ŝ/S)` for a PSD estimate averaged over `k` independent
/// periodograms, `ψ(k) − ln k`.
pub fn log_periodogram_bias(k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    digamma(k as f64) - (k as f64).ln()
}
