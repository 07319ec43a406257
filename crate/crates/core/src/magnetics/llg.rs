//! Landau-Lifshitz-Gilbert-Slonczewski right-hand side in explicit form.

use serde::{Deserialize, Serialize};

use super::demag::{demag_field, DemagTensor};
use super::params::{MagnetGeometry, MaterialParams, PhysicalConstants};
use super::vec3::{add, cross, Vec3};
use crate::error::Result;

/// Explicit LLG-Slonczewski derivative dm/dt (1/s).
///
/// ```text
/// dm/dt = γ/(1+α²) · [ -(m × H) - α·m × (m × H) ] + 1/((1+α²)·q·N_s) · m × (I_s × m)
/// ```
///
/// `h_eff` in A/m, `spin_current` in A. Every term is a cross product with `m`,
/// so the result is tangent to the sphere.
pub fn llg_rhs(
    m: Vec3,
    h_eff: Vec3,
    spin_current: Vec3,
    material: &MaterialParams,
    spin_count: f64,
    consts: &PhysicalConstants,
) -> Vec3 {
    let a2 = 1.0 + material.alpha * material.alpha;
    rhs_with(
        m,
        h_eff,
        spin_current,
        consts.gamma() / a2,
        material.alpha,
        1.0 / (a2 * consts.q * spin_count),
    )
}

#[inline(always)]
fn rhs_with(m: Vec3, h: Vec3, is: Vec3, precession: f64, alpha: f64, stt: f64) -> Vec3 {
    let mxh = cross(m, h);
    let mxmxh = cross(m, mxh);
    let mxisxm = cross(m, cross(is, m));
    [
        -precession * (mxh[0] + alpha * mxmxh[0]) + stt * mxisxm[0],
        -precession * (mxh[1] + alpha * mxmxh[1]) + stt * mxisxm[1],
        -precession * (mxh[2] + alpha * mxmxh[2]) + stt * mxisxm[2],
    ]
}

/// A single-domain free layer with its derived coefficients precomputed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Macrospin {
    pub consts: PhysicalConstants,
    pub material: MaterialParams,
    pub geometry: MagnetGeometry,
    pub tensor: DemagTensor,
}

impl Macrospin {
    pub fn new(
        consts: PhysicalConstants,
        material: MaterialParams,
        geometry: MagnetGeometry,
        tensor: DemagTensor,
    ) -> Result<Self> {
        material.validate()?;
        geometry.validate()?;
        tensor.validate()?;
        Ok(Self { consts, material, geometry, tensor })
    }

    pub fn spin_count(&self) -> f64 {
        self.material.spin_count(&self.geometry, &self.consts)
    }

    pub fn coefficients(&self) -> RhsCoefficients {
        let a2 = 1.0 + self.material.alpha * self.material.alpha;
        RhsCoefficients {
            precession: self.consts.gamma() / a2,
            alpha: self.material.alpha,
            stt: 1.0 / (a2 * self.consts.q * self.spin_count()),
            ms: self.material.ms,
            tensor: self.tensor,
        }
    }

    /// Shape-anisotropy energy (J) of the whole free layer.
    pub fn energy(&self, m: Vec3) -> f64 {
        super::demag::demag_energy_density(m, &self.tensor, self.material.ms, self.consts.mu_0)
            * self.geometry.volume()
    }

    /// In-plane barrier between easy (x) and hard in-plane (y) axis.
    pub fn energy_barrier(&self) -> f64 {
        0.5 * self.consts.mu_0
            * self.material.ms
            * self.material.ms
            * self.geometry.volume()
            * self.tensor.in_plane_anisotropy()
    }
}

/// Coefficients of the right-hand side, hoisted out of the inner loop.
#[derive(Debug, Clone, Copy)]
pub struct RhsCoefficients {
    pub precession: f64,
    pub alpha: f64,
    pub stt: f64,
    pub ms: f64,
    pub tensor: DemagTensor,
}

impl RhsCoefficients {
    /// dm/dt with H_eff = demag(m) + `h_extra`.
    #[inline(always)]
    pub fn eval(&self, m: Vec3, h_extra: Vec3, spin_current: Vec3) -> Vec3 {
        let h = add(demag_field(m, &self.tensor, self.ms), h_extra);
        rhs_with(m, h, spin_current, self.precession, self.alpha, self.stt)
    }

    /// dm/dt for a given full effective field.
    pub fn eval_with_field(&self, m: Vec3, h_eff: Vec3, spin_current: Vec3) -> Vec3 {
        rhs_with(m, h_eff, spin_current, self.precession, self.alpha, self.stt)
    }
}
