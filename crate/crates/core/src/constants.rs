//! Physical constants in the toolkit's internal units (eV, nm, amu).

/// Avogadro constant (1/mol).
pub const AVOGADRO: f64 = 6.022_140_76e23;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// e²/(4πε₀) in eV·nm.
pub const COULOMB_E2: f64 = 1.439_964_547;

/// Bohr radius (nm).
pub const BOHR_RADIUS: f64 = 0.052_917_721_090_3;

/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Fine-structure constant.
pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;

/// Bohr velocity v₀ = αc (m/s).
pub const BOHR_VELOCITY: f64 = FINE_STRUCTURE * SPEED_OF_LIGHT;

/// cm³ per nm³.
pub const CM3_PER_NM3: f64 = 1e-21;

/// nm² per cm².
pub const NM2_PER_CM2: f64 = 1e14;
