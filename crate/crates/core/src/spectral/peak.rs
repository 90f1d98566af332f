//! Lorentzian peaks on a polynomial background.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, CurveModel, LmFit, LmOptions};
use super::spectrum::{fwhm_nm_to_ghz, AxisKind, Spectrum};
use crate::error::{Error, Result};

/// Lorentzian of peak height `height` and full width `fwhm` at `center`.
#[inline]
pub fn lorentzian(x: f64, center: f64, fwhm: f64, height: f64) -> f64 {
    let u = 2.0 * (x - center) / fwhm;
    height / (1.0 + u * u)
}

/// Area under a Lorentzian: (π/2)·height·fwhm.
#[inline]
pub fn lorentzian_area(height: f64, fwhm: f64) -> f64 {
    FRAC_PI_2 * height * fwhm
}

/// Σ Lorentzians + polynomial in (x − origin). Parameters are
/// `[c₁, w₁, h₁, …, c_n, w_n, h_n, b₀, …, b_d]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PeaksModel {
    pub n_peaks: usize,
    pub degree: usize,
    pub origin: f64,
}

impl CurveModel for PeaksModel {
    fn n_params(&self) -> usize {
        3 * self.n_peaks + self.degree + 1
    }

    fn eval(&self, p: &[f64], x: f64) -> f64 {
        let mut y = 0.0;
        for k in 0..self.n_peaks {
            y += lorentzian(x, p[3 * k], p[3 * k + 1], p[3 * k + 2]);
        }
        let t = x - self.origin;
        let bg = &p[3 * self.n_peaks..];
        y + bg.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn gradient(&self, p: &[f64], x: f64, g: &mut [f64]) {
        for k in 0..self.n_peaks {
            let (c, w, h) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
            let u = 2.0 * (x - c) / w;
            let d = 1.0 / (1.0 + u * u);
            let d2 = d * d;
            g[3 * k] = h * d2 * 4.0 * u / w;
            g[3 * k + 1] = h * d2 * 2.0 * u * u / w;
            g[3 * k + 2] = d;
        }
        let t = x - self.origin;
        let mut tp = 1.0;
        for gi in &mut g[3 * self.n_peaks..] {
            *gi = tp;
            tp *= t;
        }
    }
}

/// One fitted peak, with the shared background and fit quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub center: f64,
    pub fwhm: f64,
    pub height: f64,
    pub area: f64,
    /// Background polynomial coefficients in powers of (x − background_origin).
    pub background: Vec<f64>,
    pub background_origin: f64,
    /// √(Σ residual²) over the window.
    pub residual_norm: f64,
    pub sigma: PeakSigma,
    pub converged: bool,
    pub iterations: usize,
    /// FWHM converted with Δν = c·Δλ/λ² (wavelength axes only).
    pub fwhm_ghz: Option<f64>,
}

/// 1σ parameter uncertainties from the fit covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSigma {
    pub center: f64,
    pub fwhm: f64,
    pub height: f64,
    pub area: f64,
}

impl PeakFit {
    /// Background polynomial at `x`.
    pub fn background_at(&self, x: f64) -> f64 {
        let t = x - self.background_origin;
        self.background.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// Fit window and model size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSpec {
    pub window: (f64, f64),
    pub n_peaks: usize,
    pub background_degree: usize,
}

/// Moving median with an odd window; edges use the available neighbours.
pub fn moving_median(y: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            buf.clear();
            buf.extend_from_slice(&y[lo..hi]);
            buf.sort_by(f64::total_cmp);
            let m = buf.len();
            if m % 2 == 1 {
                buf[m / 2]
            } else {
                0.5 * (buf[m / 2 - 1] + buf[m / 2])
            }
        })
        .collect()
}

/// Indices of the `n` largest strict-or-plateau local maxima of `y`,
/// ordered by decreasing value and at least `min_gap` apart.
pub(crate) fn top_maxima(y: &[f64], n: usize, min_gap: usize) -> Vec<usize> {
    let m = y.len();
    let mut cands: Vec<usize> = (1..m.saturating_sub(1))
        .filter(|&i| y[i] >= y[i - 1] && y[i] > y[i + 1])
        .collect();
    cands.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = Vec::new();
    for c in cands {
        if out.iter().all(|&o| o.abs_diff(c) >= min_gap) {
            out.push(c);
            if out.len() == n {
                break;
            }
        }
    }
    out
}

/// Starting parameters: background through the window's end values,
/// peaks at the largest maxima of the median-smoothed residual.
pub(crate) fn initial_guess(x: &[f64], y: &[f64], n_peaks: usize, degree: usize, origin: f64) -> Result<Vec<f64>> {
    let m = x.len();
    let smooth = moving_median(y, 5);
    let edge = 3.min(m / 2).max(1);
    let left = smooth[..edge].iter().sum::<f64>() / edge as f64;
    let right = smooth[m - edge..].iter().sum::<f64>() / edge as f64;
    let xl = x[..edge].iter().sum::<f64>() / edge as f64;
    let xr = x[m - edge..].iter().sum::<f64>() / edge as f64;
    let slope = (right - left) / (xr - xl);
    let mut bg = vec![0.0; degree + 1];
    if degree == 0 {
        bg[0] = 0.5 * (left + right);
    } else {
        bg[0] = left + slope * (origin - xl);
        bg[1] = slope;
    }
    let base = |xi: f64| if degree == 0 { bg[0] } else { bg[0] + bg[1] * (xi - origin) };
    let excess: Vec<f64> = smooth.iter().zip(x).map(|(s, &xi)| s - base(xi)).collect();
    let step = (x[m - 1] - x[0]) / (m - 1) as f64;
    let peaks = top_maxima(&excess, n_peaks, 3);
    if peaks.len() < n_peaks {
        return Err(Error::NoPeak(format!(
            "found {} local maxima, need {n_peaks}",
            peaks.len()
        )));
    }
    let mut peaks = peaks;
    peaks.sort_unstable();
    let mut p = Vec::with_capacity(3 * n_peaks + degree + 1);
    for i in peaks {
        p.extend([x[i], 5.0 * step, excess[i].max(f64::MIN_POSITIVE)]);
    }
    p.extend(bg);
    Ok(p)
}

pub(crate) fn peak_fits_from(
    fit: &LmFit,
    model: &PeaksModel,
    axis_kind: AxisKind,
) -> Vec<PeakFit> {
    let p = &fit.params;
    let background = p[3 * model.n_peaks..].to_vec();
    let residual_norm = fit.cost.sqrt();
    let mut out: Vec<PeakFit> = (0..model.n_peaks)
        .map(|k| {
            let (c, w, h) = (p[3 * k], p[3 * k + 1].abs(), p[3 * k + 2]);
            let cov = &fit.covariance;
            let (iw, ih) = (3 * k + 1, 3 * k + 2);
            let var_area = FRAC_PI_2.powi(2)
                * (w * w * cov[(ih, ih)] + h * h * cov[(iw, iw)] + 2.0 * w * h * cov[(iw, ih)] * p[iw].signum());
            PeakFit {
                center: c,
                fwhm: w,
                height: h,
                area: lorentzian_area(h, w),
                background: background.clone(),
                background_origin: model.origin,
                residual_norm,
                sigma: PeakSigma {
                    center: fit.sigma(3 * k),
                    fwhm: fit.sigma(iw),
                    height: fit.sigma(ih),
                    area: var_area.max(0.0).sqrt(),
                },
                converged: fit.converged,
                iterations: fit.iterations,
                fwhm_ghz: (axis_kind == AxisKind::WavelengthNm).then(|| fwhm_nm_to_ghz(c, w)),
            }
        })
        .collect();
    out.sort_by(|a, b| a.center.total_cmp(&b.center));
    out
}

/// Least-squares fit of `n_peaks` Lorentzians plus a polynomial background
/// of degree ≤ 2 inside `window`. Peaks come back sorted by centre; a fit
/// that hit the iteration cap is returned with `converged = false`.
pub fn fit_peak(spectrum: &Spectrum, spec: &PeakSpec) -> Result<Vec<PeakFit>> {
    fit_peak_with(spectrum, spec, &LmOptions::default())
}

pub fn fit_peak_with(spectrum: &Spectrum, spec: &PeakSpec, opts: &LmOptions) -> Result<Vec<PeakFit>> {
    let (lo, hi) = spec.window;
    if !(1..=8).contains(&spec.n_peaks) || spec.background_degree > 2 {
        return Err(Error::DegenerateWindow(format!(
            "n_peaks must be 1..=8 and background degree ≤ 2, got {} and {}",
            spec.n_peaks, spec.background_degree
        )));
    }
    if !(hi > lo) {
        return Err(Error::DegenerateWindow(format!("empty window [{lo}, {hi}]")));
    }
    if !spectrum.covers(lo, hi) {
        let (a, b) = spectrum.range();
        return Err(Error::Coverage(format!("window [{lo}, {hi}] (axis spans [{a}, {b}])")));
    }
    let (x, y) = spectrum.window(lo, hi);
    let needed = 3 * (3 * spec.n_peaks + spec.background_degree + 1);
    if x.len() < needed {
        return Err(Error::DegenerateWindow(format!(
            "{} points in [{lo}, {hi}], need at least {needed}",
            x.len()
        )));
    }
    let model = PeaksModel {
        n_peaks: spec.n_peaks,
        degree: spec.background_degree,
        origin: 0.5 * (lo + hi),
    };
    let p0 = initial_guess(x, y, spec.n_peaks, spec.background_degree, model.origin)?;
    let fit = levenberg_marquardt(&model, x, y, &p0, opts);
    if fit.params.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotConverged {
            iterations: fit.iterations,
        });
    }
    Ok(peak_fits_from(&fit, &model, spectrum.axis_kind))
}
