//! Non-negative least squares (Lawson–Hanson active set), and the mixed
//! problem with unconstrained nuisance columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves min ‖A x − b‖ subject to x ≥ 0.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    let max_outer = 3 * n + 10;

    for _ in 0..max_outer {
        let w = a.tr_mul(&(b - a * &x));
        let next = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = next else { break };
        passive[j] = true;

        loop {
            let z = solve_passive(a, b, &passive);
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            // step back to the boundary and release the blocking variables
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            for k in 0..n {
                if passive[k] {
                    x[k] += alpha * (z[k] - x[k]);
                    if x[k] <= tol.min(1e-300) || (z[k] <= 0.0 && x[k].abs() < 1e-15) {
                        x[k] = 0.0;
                        passive[k] = false;
                    }
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Unconstrained least squares on the passive columns; zeros elsewhere.
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&k| passive[k]).collect();
    let sub = a.select_columns(&cols);
    let sol = sub
        .clone()
        .svd(true, true)
        .solve(b, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(cols.len()));
    let mut z = DVector::zeros(a.ncols());
    for (i, &k) in cols.iter().enumerate() {
        z[k] = sol[i];
    }
    z
}

/// 2-norm condition number of `a` after scaling each column to unit norm.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let mut scaled = a.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let sv = scaled.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solution of the mixed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    /// Non-negative weights of the constrained columns.
    pub weights: Vec<f64>,
    /// Free coefficients of the nuisance columns.
    pub free: Vec<f64>,
    pub residual_norm: f64,
    pub condition: f64,
}

/// Conditions above this are rejected as rank deficient.
pub const CONDITION_LIMIT: f64 = 1e10;

/// min ‖C w + F f − b‖ with w ≥ 0 and f free. The free block is projected
/// out, NNLS runs on the projected problem, and f is recovered by least
/// squares on what the constrained part leaves.
pub fn nnls_with_free(c: &DMatrix<f64>, f: &DMatrix<f64>, b: &DVector<f64>, context: &str) -> Result<MixedSolution> {
    let m = b.len();
    let full = DMatrix::from_fn(m, c.ncols() + f.ncols(), |i, j| {
        if j < c.ncols() {
            c[(i, j)]
        } else {
            f[(i, j - c.ncols())]
        }
    });
    let condition = condition_number(&full);
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::RankDeficient {
            condition,
            context: context.to_string(),
        });
    }
    let (pc, pb) = if f.ncols() > 0 {
        let q = f.clone().qr().q();
        let project = |v: &DMatrix<f64>| v - &q * q.tr_mul(v);
        let pb = b - &q * q.tr_mul(b);
        (project(c), pb)
    } else {
        (c.clone(), b.clone())
    };
    let w = nnls(&pc, &pb);
    let rest = b - c * &w;
    let free = if f.ncols() > 0 {
        f.clone()
            .svd(true, true)
            .solve(&rest, 1e-14)
            .map_err(|e| Error::RankDeficient {
                condition,
                context: format!("{context}: {e}"),
            })?
    } else {
        DVector::zeros(0)
    };
    let residual = &rest - f * &free;
    Ok(MixedSolution {
        weights: w.iter().copied().collect(),
        free: free.iter().copied().collect(),
        residual_norm: residual.norm(),
        condition,
    })
}
