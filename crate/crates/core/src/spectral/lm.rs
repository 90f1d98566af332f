//! Levenberg–Marquardt least squares for smooth curve models.

use nalgebra::{DMatrix, DVector};

/// A model `f(x; p)` with an analytic gradient in `p`.
pub trait CurveModel {
    fn n_params(&self) -> usize;
    fn eval(&self, p: &[f64], x: f64) -> f64;
    /// Writes ∂f/∂p at `x` into `grad`.
    fn gradient(&self, p: &[f64], x: f64, grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub relative_tolerance: f64,
    pub initial_damping: f64,
    /// Damping multiplier after a rejected step.
    pub increase: f64,
    /// Damping divisor after an accepted step.
    pub decrease: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-10,
            initial_damping: 1e-3,
            increase: 2.0,
            decrease: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// σ²·(JᵀJ)⁻¹ with σ² = cost / (m − n).
    pub covariance: DMatrix<f64>,
}

impl LmFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

fn cost<M: CurveModel>(model: &M, p: &[f64], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - model.eval(p, xi);
            r * r
        })
        .sum()
}

fn jacobian<M: CurveModel>(model: &M, p: &[f64], x: &[f64], y: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = model.n_params();
    let mut j = DMatrix::zeros(x.len(), n);
    let mut r = DVector::zeros(x.len());
    let mut g = vec![0.0; n];
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        model.gradient(p, xi, &mut g);
        for (k, gk) in g.iter().enumerate() {
            j[(i, k)] = *gk;
        }
        r[i] = yi - model.eval(p, xi);
    }
    (j, r)
}

/// Inverse of a symmetric positive semi-definite matrix, falling back to the
/// pseudo-inverse when it is singular.
pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = a.clone().cholesky() {
        return ch.inverse();
    }
    a.clone()
        .pseudo_inverse(1e-14 * a.norm())
        .unwrap_or_else(|_| DMatrix::from_element(a.nrows(), a.ncols(), f64::NAN))
}

/// Minimizes Σ (y − f(x; p))² from the starting point `p0`.
pub fn levenberg_marquardt<M: CurveModel>(model: &M, x: &[f64], y: &[f64], p0: &[f64], opts: &LmOptions) -> LmFit {
    let n = model.n_params();
    let mut p = p0.to_vec();
    let mut current = cost(model, &p, x, y);
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let (j, r) = jacobian(model, &p, x, y);
        let jtj = j.tr_mul(&j);
        let jtr = j.tr_mul(&r);
        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for k in 0..n {
                // Marquardt scaling; the floor keeps dead directions solvable
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= opts.increase;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let c = cost(model, &trial, x, y);
            if c.is_finite() && c < current {
                let decrease = (current - c) / current;
                p = trial;
                current = c;
                lambda = (lambda / opts.decrease).max(1e-15);
                accepted = true;
                if decrease < opts.relative_tolerance || current == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= opts.increase;
        }
        if !accepted {
            // no downhill step exists at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }

    let (j, _) = jacobian(model, &p, x, y);
    let dof = x.len().saturating_sub(n).max(1) as f64;
    let covariance = spd_inverse(&j.tr_mul(&j)) * (current / dof);
    LmFit {
        params: p,
        cost: current,
        iterations,
        converged,
        covariance,
    }
}
