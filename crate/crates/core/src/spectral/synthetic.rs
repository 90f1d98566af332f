//! Synthetic stand-ins for measured model spectra and fixtures. Line
//! positions follow the known emitters; shapes and weights are invented.

use super::odmr::{odmr_spectrum, predict_odmr, GYROMAGNETIC_MHZ_PER_G, ZERO_FIELD_GHZ};
use super::peak::lorentzian;
use super::spectrum::{AxisKind, Spectrum};
use super::hyperspectral::Cube;
use crate::error::Result;

fn gauss(x: f64, center: f64, sigma: f64) -> f64 {
    (-0.5 * ((x - center) / sigma).powi(2)).exp()
}

/// Default wavelength grid: 560–800 nm in 0.1 nm steps.
pub fn pl_axis() -> Vec<f64> {
    Spectrum::linspace(560.0, 800.0, 2401)
}

/// NV ensemble: NV⁻ ZPL at 637 nm with its sideband, weaker NV⁰ at 575 nm.
pub fn nv_model(axis: Vec<f64>) -> Result<Spectrum> {
    Spectrum::from_fn(AxisKind::WavelengthNm, axis, |x| {
        lorentzian(x, 637.0, 1.5, 0.25)
            + 0.6 * gauss(x, 690.0, 30.0)
            + lorentzian(x, 575.0, 1.5, 0.08)
            + 0.2 * gauss(x, 615.0, 22.0)
    })
}

/// SiV⁻: sharp 737 nm ZPL with a small sideband near 766 nm.
pub fn siv_model(axis: Vec<f64>) -> Result<Spectrum> {
    Spectrum::from_fn(AxisKind::WavelengthNm, axis, |x| {
        lorentzian(x, 737.0, 5.0, 1.0) + 0.08 * gauss(x, 766.0, 8.0)
    })
}

/// Irradiation damage: GR1 line at 741 nm on a broad red sideband.
pub fn irradiation_model(axis: Vec<f64>) -> Result<Spectrum> {
    Spectrum::from_fn(AxisKind::WavelengthNm, axis, |x| {
        lorentzian(x, 741.0, 2.0, 0.3) + 0.4 * gauss(x, 775.0, 18.0)
    })
}

/// Field used by the ODMR fixture, G.
pub const FIXTURE_FIELD_G: [f64; 3] = [5.22, -20.93, 10.52];

/// Eight-dip spectrum on 2.77–2.97 GHz (0.25 MHz steps), 8.4 MHz lines,
/// 3% contrast.
pub fn odmr_fixture() -> Result<Spectrum> {
    let centers = predict_odmr(FIXTURE_FIELD_G, ZERO_FIELD_GHZ, GYROMAGNETIC_MHZ_PER_G);
    odmr_spectrum(Spectrum::linspace(2770.0, 2970.0, 801), &centers, 8.4, 0.03)
}

/// Side length of the fixture cube.
pub const CUBE_SIDE: usize = 12;

/// True inside the bright square of the fixture cube.
pub fn cube_mask(ix: usize, iy: usize) -> bool {
    (3..9).contains(&ix) && (4..10).contains(&iy)
}

/// 12×12 cube on 630–644 nm: an NV⁻ ZPL on a sloped background inside the
/// mask, the background alone outside it.
pub fn cube_fixture() -> Result<Cube> {
    let axis = Spectrum::linspace(630.0, 644.0, 141);
    Cube::from_fn(CUBE_SIDE, CUBE_SIDE, AxisKind::WavelengthNm, axis, |ix, iy, x| {
        let bg = 20.0 + 0.5 * (x - 637.0) + 0.02 * (ix + iy) as f64;
        let line = if cube_mask(ix, iy) {
            lorentzian(x, 637.0, 1.2, 100.0)
        } else {
            0.0
        };
        bg + line
    })
}
