//! Reference implementations that the library is checked against. Nothing
//! here calls into the code path it verifies.
#![allow(dead_code)]

use std::f64::consts::PI;

fn phi(x: f64) -> f64 {
    0.18175 * (-3.1998 * x).exp()
        + 0.50986 * (-0.94229 * x).exp()
        + 0.28022 * (-0.4029 * x).exp()
        + 0.02817 * (-0.20162 * x).exp()
}

/// Closest approach by plain bisection on `x² - xφ(x)/ε - b²`.
pub fn bisect_closest_approach(eps: f64, b: f64) -> f64 {
    let f = |x: f64| 1.0 - phi(x) / (x * eps) - b * b / (x * x);
    let mut lo = 1e-12_f64.max(b);
    let mut hi = 1.0 / eps + b + 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

const K15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = K15_WEIGHTS[7] * f(c);
    let mut gauss = G7_WEIGHTS[3] * f(c);
    for i in 0..7 {
        let dx = h * K15_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += K15_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (G7/K15) integration: the interval with
/// the largest error estimate is bisected until the summed estimate drops
/// below `tol` or 4000 intervals are in use.
pub fn adaptive_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    while parts.len() < 4000 {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// Centre-of-mass deflection by adaptive quadrature of the scattering
/// integral after the substitution x = x0/(1 - s²), which removes the
/// inverse-square-root singularity at the turning point.
pub fn adaptive_scatter(eps: f64, b: f64) -> f64 {
    if b == 0.0 {
        return PI;
    }
    let x0 = bisect_closest_approach(eps, b);
    let integrand = |s: f64| {
        let x = x0 / (1.0 - s * s);
        let g = 1.0 - phi(x) / (x * eps) - b * b / (x * x);
        if !(g > 0.0) {
            return 0.0;
        }
        s / g.sqrt()
    };
    // integral ∫_0^1 ... is O(1); demand far more accuracy than the check needs
    let integral = adaptive_integrate(&integrand, 0.0, 1.0 - 1e-15, 1e-13);
    PI - 4.0 * b / x0 * integral
}
