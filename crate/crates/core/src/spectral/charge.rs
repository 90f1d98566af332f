//! NV charge-state ratio from the two zero-phonon lines.

use serde::{Deserialize, Serialize};

use super::peak::{fit_peak, PeakFit, PeakSpec};
use super::spectrum::Spectrum;
use crate::error::{Error, Result};

/// Fit windows around the NV⁰ and NV⁻ lines, in nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeWindows {
    pub nv0_nm: f64,
    pub nv_minus_nm: f64,
    pub half_width_nm: f64,
}

impl Default for ChargeWindows {
    fn default() -> Self {
        Self {
            nv0_nm: 575.0,
            nv_minus_nm: 637.0,
            half_width_nm: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeRatio {
    /// NV⁻ / (NV⁻ + NV⁰) by fitted line area.
    pub ratio: f64,
    pub sigma: f64,
    pub nv_minus: PeakFit,
    pub nv_zero: PeakFit,
}

fn fit_line(spectrum: &Spectrum, center: f64, half: f64) -> Result<PeakFit> {
    let spec = PeakSpec {
        window: (center - half, center + half),
        n_peaks: 1,
        background_degree: 2,
    };
    let fit = fit_peak(spectrum, &spec)?.remove(0);
    if !fit.converged {
        return Err(Error::NotConverged {
            iterations: fit.iterations,
        });
    }
    if !(fit.area > 0.0) {
        return Err(Error::NoPeak(format!("non-positive line area near {center} nm")));
    }
    Ok(fit)
}

pub fn charge_ratio(spectrum: &Spectrum) -> Result<ChargeRatio> {
    charge_ratio_with(spectrum, &ChargeWindows::default())
}

/// Both lines must fit; there is no partial result.
pub fn charge_ratio_with(spectrum: &Spectrum, windows: &ChargeWindows) -> Result<ChargeRatio> {
    let nv_zero = fit_line(spectrum, windows.nv0_nm, windows.half_width_nm)?;
    let nv_minus = fit_line(spectrum, windows.nv_minus_nm, windows.half_width_nm)?;
    let (a, b) = (nv_minus.area, nv_zero.area);
    let total = a + b;
    let ratio = a / total;
    // ∂r/∂a = b/S², ∂r/∂b = −a/S²
    let sigma = ((b * nv_minus.sigma.area).powi(2) + (a * nv_zero.sigma.area).powi(2)).sqrt() / (total * total);
    Ok(ChargeRatio {
        ratio,
        sigma,
        nv_minus,
        nv_zero,
    })
}
