use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Bohr magneton (J/T)
    pub mu_b: f64,
    /// Vacuum permeability (T·m/A)
    pub mu_0: f64,
    /// Reduced Planck constant (J·s)
    pub hbar: f64,
    /// Elementary charge (C)
    pub q: f64,
    /// Boltzmann constant (J/K)
    pub k_b: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu_b: 9.274_010_078_3e-24,
            mu_0: 1.256_637_062_12e-6,
            hbar: 1.054_571_817e-34,
            q: 1.602_176_634e-19,
            k_b: 1.380_649e-23,
        }
    }
}

impl PhysicalConstants {
    /// Electron gyromagnetic ratio 2·mu_B·mu_0/hbar in m/(A·s).
    pub fn gamma(&self) -> f64 {
        2.0 * self.mu_b * self.mu_0 / self.hbar
    }

    /// Thermal energy k_B·T.
    pub fn kt(&self, temperature: f64) -> f64 {
        self.k_b * temperature
    }
}

/// Elliptic-disk free layer. Axes are full lengths, not semi-axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetGeometry {
    pub major_axis: f64,
    pub minor_axis: f64,
    pub thickness: f64,
}

impl MagnetGeometry {
    pub fn new(major_axis: f64, minor_axis: f64, thickness: f64) -> Result<Self> {
        let g = Self { major_axis, minor_axis, thickness };
        g.validate()?;
        Ok(g)
    }

    /// 100 nm × 40 nm ellipse with the given thickness.
    pub fn paper_disk(thickness: f64) -> Self {
        Self { major_axis: 100e-9, minor_axis: 40e-9, thickness }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("major_axis", self.major_axis),
            ("minor_axis", self.minor_axis),
            ("thickness", self.thickness),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "geometry {name} must be positive, got {v:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        PI / 4.0 * self.major_axis * self.minor_axis * self.thickness
    }

    pub fn with_thickness(&self, thickness: f64) -> Self {
        Self { thickness, ..*self }
    }
}

/// Free-layer material constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Saturation magnetization (A/m)
    pub ms: f64,
    /// Gilbert damping
    pub alpha: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { ms: 1.0e6, alpha: 0.0122 }
    }
}

impl MaterialParams {
    pub fn new(ms: f64, alpha: f64) -> Result<Self> {
        let m = Self { ms, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ms.is_finite() && self.ms > 0.0) {
            return Err(Error::InvalidParameter(format!("M_s must be positive, got {}", self.ms)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Number of spins in the free layer, M_s·V/mu_B.
    pub fn spin_count(&self, geometry: &MagnetGeometry, consts: &PhysicalConstants) -> f64 {
        self.ms * geometry.volume() / consts.mu_b
    }
}
