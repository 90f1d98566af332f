//! NV ensemble ODMR: first-order forward model and 8-dip fits.

use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions};
use super::peak::{lorentzian, moving_median, PeaksModel};
use super::spectrum::{AxisKind, Spectrum};
use crate::error::{invalid, Error, Result};

/// Ground-state zero-field splitting, GHz.
pub const ZERO_FIELD_GHZ: f64 = 2.870;
/// Electron gyromagnetic ratio, MHz/G.
pub const GYROMAGNETIC_MHZ_PER_G: f64 = 2.803;

/// The four ⟨111⟩ NV axes (unnormalized).
const NV_AXES: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

/// Eight resonance frequencies in GHz, sorted, for a field `b_gauss` in
/// crystal coordinates: D ± γ|B·û| for each axis. Valid for |B| ≲ 100 G.
pub fn predict_odmr(b_gauss: [f64; 3], d_ghz: f64, gamma_mhz_per_g: f64) -> [f64; 8] {
    let mut f = [0.0; 8];
    for (k, a) in NV_AXES.iter().enumerate() {
        let proj = (a[0] * b_gauss[0] + a[1] * b_gauss[1] + a[2] * b_gauss[2]).abs() / 3f64.sqrt();
        let split = gamma_mhz_per_g * proj * 1e-3;
        f[2 * k] = d_ghz - split;
        f[2 * k + 1] = d_ghz + split;
    }
    f.sort_by(f64::total_cmp);
    f
}

/// Baseline-1 spectrum with an inverted Lorentzian of depth `contrast` at
/// each centre. `axis_mhz` and `fwhm_mhz` in MHz, `centers_ghz` in GHz.
pub fn odmr_spectrum(axis_mhz: Vec<f64>, centers_ghz: &[f64], fwhm_mhz: f64, contrast: f64) -> Result<Spectrum> {
    Spectrum::from_fn(AxisKind::FrequencyMhz, axis_mhz, |x| {
        1.0 - centers_ghz
            .iter()
            .map(|c| lorentzian(x, c * 1e3, fwhm_mhz, contrast))
            .sum::<f64>()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    pub center_mhz: f64,
    pub fwhm_mhz: f64,
    /// Depth relative to the baseline.
    pub contrast: f64,
    pub sigma_center_mhz: f64,
    pub sigma_fwhm_mhz: f64,
    pub sigma_contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrFit {
    /// Sorted by centre.
    pub dips: Vec<Dip>,
    /// (cᵢ + c₇₋ᵢ)/2 for the i-th lowest and i-th highest dips, GHz.
    pub pair_midpoints_ghz: Vec<f64>,
    pub pair_sigma_ghz: Vec<f64>,
    pub zfs_mean_ghz: f64,
    /// Sample standard deviation of the pair midpoints.
    pub zfs_std_ghz: f64,
    pub mean_fwhm_mhz: f64,
    pub baseline: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Local maxima of `y` whose topographic prominence exceeds `min_prominence`,
/// largest first.
pub(crate) fn prominent_maxima(y: &[f64], min_prominence: f64) -> Vec<usize> {
    let m = y.len();
    let mut out: Vec<(usize, f64)> = Vec::new();
    for i in 1..m.saturating_sub(1) {
        if !(y[i] >= y[i - 1] && y[i] > y[i + 1]) {
            continue;
        }
        let mut left = y[i];
        let mut j = i;
        while j > 0 {
            j -= 1;
            if y[j] > y[i] {
                break;
            }
            left = left.min(y[j]);
        }
        let mut right = y[i];
        let mut j = i;
        while j + 1 < m {
            j += 1;
            // ties to the right count as higher so equal twins score once
            if y[j] >= y[i] {
                break;
            }
            right = right.min(y[j]);
        }
        let prominence = y[i] - left.max(right);
        if prominence > min_prominence {
            out.push((i, y[i]));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out.into_iter().map(|(i, _)| i).collect()
}

/// Robust noise scale from the median absolute first difference.
pub(crate) fn noise_sigma(y: &[f64]) -> f64 {
    let mut d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    d.sort_by(f64::total_cmp);
    1.4826 * d[d.len() / 2] / std::f64::consts::SQRT_2
}

/// Fits `n_dips` inverted Lorentzians on a constant baseline. The spectrum
/// should be normalized to an off-resonance level of 1 and have a frequency
/// axis. Fewer resolvable dips than requested is an error carrying the count.
pub fn fit_odmr(spectrum: &Spectrum, n_dips: usize) -> Result<OdmrFit> {
    fit_odmr_with(spectrum, n_dips, &LmOptions::default())
}

pub fn fit_odmr_with(spectrum: &Spectrum, n_dips: usize, opts: &LmOptions) -> Result<OdmrFit> {
    let to_mhz = spectrum
        .axis_kind
        .to_mhz()
        .ok_or_else(|| invalid("spectrum", "ODMR fits need a frequency axis"))?;
    if n_dips == 0 || n_dips % 2 == 1 {
        return Err(invalid("n_dips", format!("{n_dips} is not a positive even number")));
    }
    let x: Vec<f64> = spectrum.axis().iter().map(|v| v * to_mhz).collect();
    let m = x.len();
    if m < 3 * (3 * n_dips + 1) {
        return Err(Error::DegenerateWindow(format!("{m} points for {n_dips} dips")));
    }
    // dips become peaks of the negated signal
    let y: Vec<f64> = spectrum.intensity().iter().map(|v| -v).collect();
    let smooth = moving_median(&y, 5);
    let noise = noise_sigma(&y);
    let span = smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - smooth.iter().cloned().fold(f64::INFINITY, f64::min);
    let found = prominent_maxima(&smooth, (4.0 * noise).max(1e-6 * span));
    if found.len() < n_dips {
        return Err(Error::UnresolvedDips {
            resolved: found.len(),
            expected: n_dips,
        });
    }
    let mut centers: Vec<usize> = found[..n_dips].to_vec();
    centers.sort_unstable();

    let mut sorted = smooth.clone();
    sorted.sort_by(f64::total_cmp);
    // most of the band is off resonance, so the low quantile is the baseline
    let base = sorted[m / 4];
    let step = (x[m - 1] - x[0]) / (m - 1) as f64;
    let model = PeaksModel {
        n_peaks: n_dips,
        degree: 0,
        origin: 0.0,
    };
    let mut p0 = Vec::with_capacity(3 * n_dips + 1);
    for &i in &centers {
        p0.extend([x[i], 5.0 * step, (smooth[i] - base).max(f64::MIN_POSITIVE)]);
    }
    p0.push(base);
    let fit = levenberg_marquardt(&model, &x, &y, &p0, opts);
    if fit.params.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotConverged {
            iterations: fit.iterations,
        });
    }
    let p = &fit.params;
    let baseline = -p[3 * n_dips];
    let mut dips: Vec<Dip> = (0..n_dips)
        .map(|k| {
            let h = p[3 * k + 2];
            let var_base = fit.covariance[(3 * n_dips, 3 * n_dips)];
            let cov_hb = fit.covariance[(3 * k + 2, 3 * n_dips)];
            // contrast = h / baseline with baseline = −b
            let c = h / baseline;
            let var_c = (fit.covariance[(3 * k + 2, 3 * k + 2)] + c * c * var_base + 2.0 * c * cov_hb) / (baseline * baseline);
            Dip {
                center_mhz: p[3 * k],
                fwhm_mhz: p[3 * k + 1].abs(),
                contrast: c,
                sigma_center_mhz: fit.sigma(3 * k),
                sigma_fwhm_mhz: fit.sigma(3 * k + 1),
                sigma_contrast: var_c.max(0.0).sqrt(),
            }
        })
        .collect();
    dips.sort_by(|a, b| a.center_mhz.total_cmp(&b.center_mhz));

    let half = n_dips / 2;
    let pair_midpoints_ghz: Vec<f64> = (0..half)
        .map(|i| 0.5 * (dips[i].center_mhz + dips[n_dips - 1 - i].center_mhz) * 1e-3)
        .collect();
    let pair_sigma_ghz: Vec<f64> = (0..half)
        .map(|i| 0.5 * dips[i].sigma_center_mhz.hypot(dips[n_dips - 1 - i].sigma_center_mhz) * 1e-3)
        .collect();
    let zfs_mean_ghz = pair_midpoints_ghz.iter().sum::<f64>() / half as f64;
    let zfs_std_ghz = if half > 1 {
        (pair_midpoints_ghz.iter().map(|v| (v - zfs_mean_ghz).powi(2)).sum::<f64>() / (half - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(OdmrFit {
        mean_fwhm_mhz: dips.iter().map(|d| d.fwhm_mhz).sum::<f64>() / n_dips as f64,
        dips,
        pair_midpoints_ghz,
        pair_sigma_ghz,
        zfs_mean_ghz,
        zfs_std_ghz,
        baseline,
        residual_norm: fit.cost.sqrt(),
        converged: fit.converged,
        iterations: fit.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_collapses() {
        let f = predict_odmr([0.0; 3], ZERO_FIELD_GHZ, GYROMAGNETIC_MHZ_PER_G);
        assert!(f.iter().all(|&v| v == ZERO_FIELD_GHZ));
    }

    #[test]
    fn midpoints_are_exact() {
        let f = predict_odmr([13.0, -7.5, 18.2], ZERO_FIELD_GHZ, GYROMAGNETIC_MHZ_PER_G);
        for i in 0..4 {
            assert!((0.5 * (f[i] + f[7 - i]) - ZERO_FIELD_GHZ).abs() < 1e-12);
        }
    }

    #[test]
    fn prominence_ignores_shoulders() {
        let y = [0.0, 1.0, 0.0, 5.0, 4.9, 5.1, 10.0, 0.0];
        let idx = prominent_maxima(&y, 0.5);
        assert_eq!(idx, vec![6, 1]);
        let twins = [0.0, 2.0, 1.9, 2.0, 0.0];
        assert_eq!(prominent_maxima(&twins, 0.5), vec![3]);
    }
}
