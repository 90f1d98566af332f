//! Linear decompositions: a template plus background, and non-negative
//! mixtures of model spectra plus background.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lm::spd_inverse;
use super::nnls::nnls_with_free;
use super::spectrum::{trapezoid_window, Spectrum};
use crate::error::{Error, Result};

/// Condition numbers above this are logged as a warning.
pub const CONDITION_WARN: f64 = 1e6;

/// Component name whose contribution also absorbs the background.
pub const NV: &str = "NV";

fn polynomial_basis(x: &[f64], degree: usize, origin: f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), degree + 1, |i, j| (x[i] - origin).powi(j as i32))
}

fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn check_window(spectrum: &Spectrum, lo: f64, hi: f64, min_points: usize) -> Result<()> {
    if !(hi > lo) {
        return Err(Error::DegenerateWindow(format!("empty window [{lo}, {hi}]")));
    }
    if !spectrum.covers(lo, hi) {
        let (a, b) = spectrum.range();
        return Err(Error::Coverage(format!("window [{lo}, {hi}] (axis spans [{a}, {b}])")));
    }
    let n = spectrum.window_indices(lo, hi).len();
    if n < min_points {
        return Err(Error::DegenerateWindow(format!("{n} points in [{lo}, {hi}], need at least {min_points}")));
    }
    Ok(())
}

/// Template scale and background from [`fit_template_background`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateFit {
    pub scale: f64,
    /// 1σ of the scale from the unconstrained covariance.
    pub scale_sigma: f64,
    pub background: Vec<f64>,
    pub background_origin: f64,
    /// scale × ∫template over the window.
    pub area: f64,
    pub residual_norm: f64,
    pub condition_number: f64,
}

/// Fits `scale · template + polynomial` on `window`, with scale ≥ 0.
pub fn fit_template_background(
    spectrum: &Spectrum,
    template: &Spectrum,
    window: (f64, f64),
    background_degree: usize,
) -> Result<TemplateFit> {
    let (lo, hi) = window;
    check_window(spectrum, lo, hi, background_degree + 3)?;
    let (x, y) = spectrum.window(lo, hi);
    let t = template.resample(x)?;
    let origin = 0.5 * (lo + hi);
    let c = DMatrix::from_column_slice(x.len(), 1, t.intensity());
    let f = polynomial_basis(x, background_degree, origin);
    let b = DVector::from_column_slice(y);
    let sol = nnls_with_free(&c, &f, &b, "template against background basis")?;
    if sol.condition > CONDITION_WARN {
        log::warn!("template fit condition number {:.3e}", sol.condition);
    }
    let full = DMatrix::from_fn(x.len(), background_degree + 2, |i, j| if j == 0 { c[(i, 0)] } else { f[(i, j - 1)] });
    let dof = x.len().saturating_sub(background_degree + 2).max(1) as f64;
    let cov = spd_inverse(&full.tr_mul(&full)) * (sol.residual_norm.powi(2) / dof);
    let area = sol.weights[0] * trapezoid_window(x, t.intensity(), lo, hi);
    Ok(TemplateFit {
        scale: sol.weights[0],
        scale_sigma: cov[(0, 0)].max(0.0).sqrt(),
        background: sol.free,
        background_origin: origin,
        area,
        residual_norm: sol.residual_norm,
        condition_number: sol.condition,
    })
}

/// Non-negative decomposition of a spectrum over a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmixResult {
    pub band: (f64, f64),
    pub weights: BTreeMap<String, f64>,
    /// Quadratic background coefficients in powers of (x − background_origin).
    pub background: Vec<f64>,
    pub background_origin: f64,
    /// weight × band integral of each model.
    pub contributions: BTreeMap<String, f64>,
    pub background_integral: f64,
    /// NV contribution with the background added to it.
    pub nv_with_background: Option<f64>,
    /// Band integral of the fitted spectrum.
    pub fitted_integral: f64,
    pub residual_norm: f64,
    pub condition_number: f64,
}

impl UnmixResult {
    pub fn background_at(&self, x: f64) -> f64 {
        eval_poly(&self.background, x - self.background_origin)
    }
}

/// Fits `Σ wᵢ·modelᵢ + quadratic` over `band` with every wᵢ ≥ 0. Models are
/// resampled onto the spectrum's axis.
pub fn unmix(spectrum: &Spectrum, models: &[(String, Spectrum)], band: (f64, f64)) -> Result<UnmixResult> {
    let (lo, hi) = band;
    check_window(spectrum, lo, hi, models.len() + 4)?;
    if models.is_empty() {
        return Err(Error::DegenerateWindow("no model spectra".into()));
    }
    let (x, y) = spectrum.window(lo, hi);
    let resampled = models
        .iter()
        .map(|(name, m)| {
            m.resample(x)
                .map_err(|e| Error::Coverage(format!("model `{name}` over band [{lo}, {hi}]: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let origin = 0.5 * (lo + hi);
    let c = DMatrix::from_fn(x.len(), models.len(), |i, j| resampled[j].intensity()[i]);
    let f = polynomial_basis(x, 2, origin);
    let b = DVector::from_column_slice(y);
    let sol = nnls_with_free(&c, &f, &b, "model spectra on band")?;
    if sol.condition > CONDITION_WARN {
        log::warn!("unmix condition number {:.3e}", sol.condition);
    }

    let mut weights = BTreeMap::new();
    let mut contributions = BTreeMap::new();
    for ((name, _), (w, m)) in models.iter().zip(sol.weights.iter().zip(&resampled)) {
        weights.insert(name.clone(), *w);
        contributions.insert(name.clone(), w * trapezoid_window(x, m.intensity(), lo, hi));
    }
    let bg: Vec<f64> = x.iter().map(|&v| eval_poly(&sol.free, v - origin)).collect();
    let background_integral = trapezoid_window(x, &bg, lo, hi);
    let fitted: Vec<f64> = (0..x.len())
        .map(|i| bg[i] + (0..models.len()).map(|j| sol.weights[j] * c[(i, j)]).sum::<f64>())
        .collect();
    Ok(UnmixResult {
        band,
        nv_with_background: contributions.get(NV).map(|v| v + background_integral),
        weights,
        background: sol.free,
        background_origin: origin,
        contributions,
        background_integral,
        fitted_integral: trapezoid_window(x, &fitted, lo, hi),
        residual_norm: sol.residual_norm,
        condition_number: sol.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectrum::AxisKind;

    fn gauss(x: f64, c: f64, w: f64) -> f64 {
        (-((x - c) / w).powi(2)).exp()
    }

    #[test]
    fn scaled_template() {
        let axis = Spectrum::linspace(1300.0, 1360.0, 121);
        let t = Spectrum::from_fn(AxisKind::WavelengthNm, axis.clone(), |x| gauss(x, 1332.0, 2.0)).unwrap();
        let s = t.scaled(2.5);
        let fit = fit_template_background(&s, &t, (1310.0, 1350.0), 2).unwrap();
        assert!((fit.scale - 2.5).abs() < 1e-10);
        assert!(fit.background.iter().all(|c| c.abs() < 1e-10));
    }

    #[test]
    fn parallel_components_rejected() {
        let axis = Spectrum::linspace(600.0, 800.0, 201);
        let a = Spectrum::from_fn(AxisKind::WavelengthNm, axis.clone(), |x| gauss(x, 700.0, 30.0)).unwrap();
        let models = vec![("A".to_string(), a.clone()), ("B".to_string(), a.scaled(2.0))];
        assert!(matches!(unmix(&a, &models, (625.0, 792.0)), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn integrals_close() {
        let axis = Spectrum::linspace(600.0, 800.0, 401);
        let a = Spectrum::from_fn(AxisKind::WavelengthNm, axis.clone(), |x| gauss(x, 680.0, 25.0)).unwrap();
        let b = Spectrum::from_fn(AxisKind::WavelengthNm, axis.clone(), |x| gauss(x, 738.0, 3.0)).unwrap();
        let s = Spectrum::from_fn(AxisKind::WavelengthNm, axis, |x| {
            0.4 * gauss(x, 680.0, 25.0) + 1.5 * gauss(x, 738.0, 3.0) + 0.05 + 1e-6 * (x - 700.0).powi(2)
        })
        .unwrap();
        let r = unmix(&s, &[("NV".into(), a), ("SiV".into(), b)], (625.0, 792.0)).unwrap();
        let sum: f64 = r.contributions.values().sum::<f64>() + r.background_integral;
        assert!((sum - r.fitted_integral).abs() < 1e-9 * r.fitted_integral);
        assert!((r.weights["NV"] - 0.4).abs() < 1e-8);
        assert!((r.weights["SiV"] - 1.5).abs() < 1e-8);
    }
}
