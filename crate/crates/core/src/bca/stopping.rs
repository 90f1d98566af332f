//! Velocity-proportional (Lindhard–Scharff) electronic stopping.

use std::f64::consts::PI;

use crate::constants::{AMU, BOHR_RADIUS, BOHR_VELOCITY, COULOMB_E2, ELEMENTARY_CHARGE};
use crate::target::{ElementSpec, Material};

/// Stopping coefficient `k` (eV·nm²) such that the per-atom stopping cross
/// section is `k·√E` with `E` in eV, for a projectile `(z1, m1)` on a target
/// atom `z2`.
pub fn lindhard_coefficient(z1: u32, m1: f64, z2: u32) -> f64 {
    let z1 = z1 as f64;
    let z2 = z2 as f64;
    let charge_factor =
        z1.powf(7.0 / 6.0) * z2 / (z1.powf(2.0 / 3.0) + z2.powf(2.0 / 3.0)).powf(1.5);
    // v/v0 = sqrt(2 E e / (m amu)) / v0
    let velocity_factor = (2.0 * ELEMENTARY_CHARGE / (m1 * AMU)).sqrt() / BOHR_VELOCITY;
    8.0 * PI * COULOMB_E2 * BOHR_RADIUS * charge_factor * velocity_factor
}

/// Material stopping coefficient (eV/nm per √eV), Bragg-summed over species.
pub fn material_coefficient(projectile: &ElementSpec, material: &Material) -> f64 {
    material
        .composition
        .iter()
        .map(|c| c.number_density * lindhard_coefficient(projectile.z, projectile.mass, c.element.z))
        .sum()
}

/// Electronic stopping power dE/dx (eV/nm) of `projectile` at `energy` (eV).
pub fn electronic_stopping(projectile: &ElementSpec, energy: f64, material: &Material) -> f64 {
    if !(energy > 0.0) {
        return 0.0;
    }
    material_coefficient(projectile, material) * energy.sqrt()
}
