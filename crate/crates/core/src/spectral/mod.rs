//! Spectrum fitting and decomposition.

pub mod charge;
pub mod hyperspectral;
pub mod lm;
pub mod nnls;
pub mod odmr;
pub mod peak;
pub mod spectrum;
pub mod synthetic;
pub mod unmix;

pub use charge::{charge_ratio, charge_ratio_with, ChargeRatio, ChargeWindows};
pub use hyperspectral::{bin_hyperspectral, Cube, IntensityMap, PixelFailure, PixelMethod};
pub use lm::{levenberg_marquardt, CurveModel, LmFit, LmOptions};
pub use nnls::{nnls, nnls_with_free, MixedSolution};
pub use odmr::{fit_odmr, odmr_spectrum, predict_odmr, Dip, OdmrFit, GYROMAGNETIC_MHZ_PER_G, ZERO_FIELD_GHZ};
pub use peak::{fit_peak, fit_peak_with, lorentzian, lorentzian_area, PeakFit, PeakSigma, PeakSpec};
pub use spectrum::{fwhm_nm_to_ghz, AxisKind, Normalization, Spectrum};
pub use unmix::{fit_template_background, unmix, TemplateFit, UnmixResult};
