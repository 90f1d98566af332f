//! Screened-Coulomb scattering with the ZBL universal potential.
//!
//! All quantities here are in reduced units: distances are divided by the
//! universal screening length `a_U` and the centre-of-mass energy by the
//! Coulomb energy at `a_U`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::constants::{BOHR_RADIUS, COULOMB_E2};
use crate::error::{Error, Result};

const ZBL_COEFF: [f64; 4] = [0.18175, 0.50986, 0.28022, 0.02817];
const ZBL_DECAY: [f64; 4] = [3.19980, 0.94229, 0.40290, 0.20162];

/// Number of Gauss–Mehler nodes used for the scattering integral.
pub const QUADRATURE_ORDER: usize = 24;

/// ZBL universal screening function φ(x).
#[inline]
pub fn zbl_screening(x: f64) -> f64 {
    ZBL_COEFF
        .iter()
        .zip(ZBL_DECAY)
        .map(|(c, d)| c * (-d * x).exp())
        .sum()
}

/// φ(x) and dφ/dx.
#[inline]
fn zbl_with_derivative(x: f64) -> (f64, f64) {
    let mut phi = 0.0;
    let mut dphi = 0.0;
    for (c, d) in ZBL_COEFF.iter().zip(ZBL_DECAY) {
        let term = c * (-d * x).exp();
        phi += term;
        dphi -= d * term;
    }
    (phi, dphi)
}

/// Universal screening length a_U (nm) for a pair of atomic numbers.
pub fn screening_length(z1: u32, z2: u32) -> f64 {
    0.8854 * BOHR_RADIUS / ((z1 as f64).powf(0.23) + (z2 as f64).powf(0.23))
}

/// Reduced energy for a projectile of lab energy `energy` (eV).
pub fn reduced_energy(z1: u32, m1: f64, z2: u32, m2: f64, energy: f64) -> f64 {
    screening_length(z1, z2) * m2 * energy / ((z1 * z2) as f64 * COULOMB_E2 * (m1 + m2))
}

/// Distance of closest approach in reduced units: the root of
/// `1 - φ(x)/(xε) - b²/x²`, which is strictly increasing in `x`.
pub fn closest_approach(reduced_energy: f64, reduced_impact: f64) -> f64 {
    let eps = reduced_energy;
    let b = reduced_impact;
    let f = |x: f64| {
        let (phi, dphi) = zbl_with_derivative(x);
        let v = phi / (x * eps);
        let value = 1.0 - v - b * b / (x * x);
        let slope = v / x - dphi / (x * eps) + 2.0 * b * b / (x * x * x);
        (value, slope)
    };
    // φ ≤ 1 bounds the root by the bare Coulomb solution.
    let half = 0.5 / eps;
    let mut hi = half + (half * half + b * b).sqrt();
    let mut lo = if b > 0.0 { b } else { 0.0 };
    let mut x = if eps > 5.0 { hi } else { (lo.max(1e-3 * hi) * hi).sqrt() };
    for _ in 0..200 {
        let (value, slope) = f(x);
        if value > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - value / slope;
        if !(next > lo && next < hi) {
            next = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
        }
        if (next - x).abs() <= 1e-14 * x || hi - lo <= 1e-15 * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Centre-of-mass deflection angle θ (rad) for reduced energy `ε` and
/// reduced impact parameter `b`, by Gauss–Mehler quadrature of the classical
/// scattering integral.
pub fn scatter(reduced_energy: f64, reduced_impact: f64) -> Result<f64> {
    if !reduced_energy.is_finite() || !reduced_impact.is_finite() {
        return Err(Error::NonFinite("scatter"));
    }
    if reduced_energy <= 0.0 || reduced_impact < 0.0 {
        return Err(Error::InvalidParameter {
            name: "scatter",
            reason: format!("need ε > 0 and b >= 0, got ε = {reduced_energy}, b = {reduced_impact}"),
        });
    }
    Ok(scatter_unchecked(reduced_energy, reduced_impact))
}

fn mehler_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = QUADRATURE_ORDER as f64;
        (1..=QUADRATURE_ORDER)
            .map(|i| {
                let arg = (2.0 * i as f64 - 1.0) * PI / (4.0 * n);
                (arg.cos(), arg.sin())
            })
            .collect()
    })
}

pub(crate) fn scatter_unchecked(eps: f64, b: f64) -> f64 {
    if b == 0.0 {
        return PI;
    }
    let x0 = closest_approach(eps, b);
    let ratio = b / x0;
    let mut sum = 0.0;
    for &(u, s) in mehler_nodes() {
        let x = x0 / u;
        let g = 1.0 - zbl_screening(x) / (x * eps) - (ratio * u) * (ratio * u);
        sum += s / g.sqrt();
    }
    let theta = PI - PI * ratio * sum / QUADRATURE_ORDER as f64;
    theta.clamp(0.0, PI)
}

/// Deflection angles precomputed with [`scatter`] on a regular grid in
/// `(ln ε, b)` and interpolated bicubically in `ln θ`. Queries outside the
/// grid fall back to the quadrature.
#[derive(Debug)]
pub struct ScatteringTable {
    ln_theta: Vec<f64>,
    n_b: usize,
}

const TABLE_LN_EPS_MIN: f64 = -16.2; // ε ≈ 9e-8
const TABLE_LN_EPS_STEP: f64 = 0.1;
const TABLE_N_EPS: usize = 172;
const TABLE_B_STEP: f64 = 0.04;
const TABLE_N_B: usize = 626;

impl ScatteringTable {
    /// Process-wide table, built on first use.
    pub fn shared() -> &'static ScatteringTable {
        static TABLE: OnceLock<ScatteringTable> = OnceLock::new();
        TABLE.get_or_init(ScatteringTable::build)
    }

    fn build() -> Self {
        let mut ln_theta = Vec::with_capacity(TABLE_N_EPS * TABLE_N_B);
        for i in 0..TABLE_N_EPS {
            let eps = (TABLE_LN_EPS_MIN + i as f64 * TABLE_LN_EPS_STEP).exp();
            for j in 0..TABLE_N_B {
                let theta = scatter_unchecked(eps, j as f64 * TABLE_B_STEP);
                ln_theta.push(theta.max(f64::MIN_POSITIVE).ln());
            }
        }
        Self {
            ln_theta,
            n_b: TABLE_N_B,
        }
    }

    /// Largest reduced impact parameter covered by the grid.
    pub fn max_impact() -> f64 {
        (TABLE_N_B - 3) as f64 * TABLE_B_STEP
    }

    /// θ(ε, b); exact quadrature outside the tabulated range.
    #[inline]
    pub fn theta(&self, eps: f64, b: f64) -> f64 {
        if b == 0.0 {
            return PI;
        }
        let u = (eps.ln() - TABLE_LN_EPS_MIN) / TABLE_LN_EPS_STEP;
        let v = b / TABLE_B_STEP;
        if !(u >= 1.0 && u < (TABLE_N_EPS - 3) as f64 && v < (TABLE_N_B - 3) as f64) {
            return scatter_unchecked(eps, b);
        }
        let i = u as usize;
        let fu = u - i as f64;
        let j = v as usize;
        let fv = v - j as f64;
        let wu = catmull_rom(fu);
        // θ has a finite slope at b = 0, so the first cell uses one-sided weights
        let (wv, j0) = if j == 0 {
            (lagrange_first_cell(fv), 0)
        } else {
            (catmull_rom(fv), j - 1)
        };
        let mut acc = 0.0;
        for (di, wi) in wu.iter().enumerate() {
            let row = (i + di - 1) * self.n_b + j0;
            let cells = &self.ln_theta[row..row + 4];
            acc += wi * (wv[0] * cells[0] + wv[1] * cells[1] + wv[2] * cells[2] + wv[3] * cells[3]);
        }
        acc.exp().min(PI)
    }
}

/// Cubic Lagrange weights on nodes 0..=3 evaluated at `t` ∈ [0, 1).
#[inline]
fn lagrange_first_cell(t: f64) -> [f64; 4] {
    [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ]
}

#[inline]
fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_on_is_pi() {
        assert_eq!(scatter(1.0, 0.0).unwrap(), PI);
        assert_eq!(scatter(1e-4, 0.0).unwrap(), PI);
    }

    #[test]
    fn distant_collision_is_small() {
        assert!(scatter(1.0, 20.0).unwrap() < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(scatter(f64::NAN, 1.0).is_err());
        assert!(scatter(1.0, f64::INFINITY).is_err());
        assert!(scatter(0.0, 1.0).is_err());
        assert!(scatter(1.0, -1.0).is_err());
    }

    #[test]
    fn closest_approach_is_root() {
        for &eps in &[1e-4, 1e-2, 1.0, 100.0] {
            for &b in &[0.0, 0.3, 2.0, 8.0] {
                let x = closest_approach(eps, b);
                let g = 1.0 - zbl_screening(x) / (x * eps) - b * b / (x * x);
                assert!(g.abs() < 1e-9, "eps={eps} b={b} x={x} g={g}");
            }
        }
    }

    #[test]
    fn monotone_in_impact_parameter() {
        for &eps in &[1e-4, 1e-3, 0.1, 1.0, 10.0, 100.0] {
            let mut prev = PI;
            for i in 1..200 {
                let b = i as f64 * 0.05;
                let t = scatter(eps, b).unwrap();
                assert!(t < prev, "eps={eps} b={b}: {t} >= {prev}");
                assert!(t > 0.0);
                prev = t;
            }
        }
    }
}
