//! Two-body elastic collision kinematics in the laboratory frame.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::scattering::{reduced_energy, scatter, screening_length};
use crate::error::{invalid, Result};
use crate::target::ElementSpec;

/// Cartesian vector; `z` is depth into the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
}

/// Rotates unit vector `dir` by polar angle `polar` about itself, with the
/// azimuth of the rotation plane given by `azimuth`.
pub fn rotate(dir: Vec3, polar: f64, azimuth: f64) -> Vec3 {
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    rotate_cs(dir, cp, sp, ca, sa)
}

/// [`rotate`] from the cosines and sines of the two angles.
#[inline]
pub(crate) fn rotate_cs(dir: Vec3, cp: f64, sp: f64, ca: f64, sa: f64) -> Vec3 {
    let perp2 = 1.0 - dir.z * dir.z;
    let out = if perp2 > 1e-20 {
        let k = sp / perp2.sqrt();
        Vec3::new(
            cp * dir.x + k * (dir.x * dir.z * ca - dir.y * sa),
            cp * dir.y + k * (dir.y * dir.z * ca + dir.x * sa),
            cp * dir.z - k * perp2 * ca,
        )
    } else {
        Vec3::new(sp * ca, sp * sa, dir.z.signum() * cp)
    };
    out.normalized()
}

/// A moving particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonState {
    pub species: ElementSpec,
    /// eV
    pub energy: f64,
    /// nm
    pub position: Vec3,
    pub direction: Vec3,
    /// 0 for the incident ion, k + 1 for a recoil set in motion by a
    /// generation-k particle.
    pub generation: u32,
}

impl IonState {
    pub fn validate(&self) -> Result<()> {
        if !(self.energy >= 0.0 && self.energy.is_finite()) {
            return Err(invalid("energy", format!("{} eV", self.energy)));
        }
        if (self.direction.norm() - 1.0).abs() > 1e-12 {
            return Err(invalid("direction", "not a unit vector"));
        }
        Ok(())
    }
}

/// Mass-dependent part of a collision, shared by the exact and tabulated
/// scattering paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmToLab {
    /// T_max / E = 4 M1 M2 / (M1 + M2)²
    pub transfer_factor: f64,
    /// M1 / M2
    pub mass_ratio: f64,
}

impl CmToLab {
    pub fn new(m1: f64, m2: f64) -> Self {
        Self {
            transfer_factor: 4.0 * m1 * m2 / ((m1 + m2) * (m1 + m2)),
            mass_ratio: m1 / m2,
        }
    }

    /// Energy transfer to the target atom for a CM deflection `theta`.
    #[inline]
    pub fn energy_transfer(&self, energy: f64, theta: f64) -> f64 {
        let s = (0.5 * theta).sin();
        self.transfer_factor * energy * s * s
    }

    /// Energy transfer from sin(θ/2).
    #[inline]
    pub(crate) fn energy_transfer_half(&self, energy: f64, sin_half: f64) -> f64 {
        self.transfer_factor * energy * sin_half * sin_half
    }

    /// (cos ψ, sin ψ) of the projectile's lab deflection from the half-angle
    /// sine and cosine of θ.
    #[inline]
    pub(crate) fn projectile_cs(&self, sin_half: f64, cos_half: f64) -> (f64, f64) {
        let s = 2.0 * sin_half * cos_half;
        let c = 1.0 - 2.0 * sin_half * sin_half;
        let r = self.mass_ratio;
        let h = ((r + c) * (r + c) + s * s).sqrt();
        if h == 0.0 {
            // equal masses, head-on: the projectile stops
            return (0.0, 1.0);
        }
        ((r + c) / h, s / h)
    }

    /// Lab-frame deflection of the projectile.
    #[inline]
    pub fn projectile_angle(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        s.atan2(self.mass_ratio + c)
    }

    /// Lab-frame recoil angle, measured from the projectile's incoming direction.
    #[inline]
    pub fn recoil_angle(theta: f64) -> f64 {
        0.5 * (PI - theta)
    }
}

/// Result of a single binary collision.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionOutcome {
    /// Centre-of-mass deflection (rad).
    pub theta_cm: f64,
    /// Lab deflection of the projectile (rad).
    pub projectile_angle: f64,
    pub projectile_direction: Vec3,
    pub projectile_energy: f64,
    pub recoil_direction: Vec3,
    /// Energy handed to the target atom (eV).
    pub energy_transfer: f64,
}

/// Elastic collision of `projectile` with a stationary `target` atom at
/// impact parameter `impact_parameter` (nm) and azimuth `azimuth` (rad).
pub fn binary_collision(
    projectile: &IonState,
    target: &ElementSpec,
    impact_parameter: f64,
    azimuth: f64,
) -> Result<CollisionOutcome> {
    if !(projectile.energy > 0.0) {
        return Err(invalid("energy", "projectile must be moving"));
    }
    let p = &projectile.species;
    let eps = reduced_energy(p.z, p.mass, target.z, target.mass, projectile.energy);
    let b = impact_parameter / screening_length(p.z, target.z);
    let theta = scatter(eps, b)?;
    Ok(resolve(projectile, CmToLab::new(p.mass, target.mass), theta, azimuth))
}

pub(crate) fn resolve(
    projectile: &IonState,
    lab: CmToLab,
    theta: f64,
    azimuth: f64,
) -> CollisionOutcome {
    let transfer = lab.energy_transfer(projectile.energy, theta);
    let psi = lab.projectile_angle(theta);
    CollisionOutcome {
        theta_cm: theta,
        projectile_angle: psi,
        projectile_direction: rotate(projectile.direction, psi, azimuth),
        projectile_energy: projectile.energy - transfer,
        recoil_direction: rotate(projectile.direction, CmToLab::recoil_angle(theta), azimuth + PI),
        energy_transfer: transfer,
    }
}
