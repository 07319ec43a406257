use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetics::{
    compute_demag_tensor, DemagTensor, Macrospin, MagnetGeometry, MaterialParams,
    PhysicalConstants,
};

/// Macrospin in-plane barrier (1/2)·mu_0·M_s²·V·(N_y − N_x) in joules.
///
/// Errors when the major axis is not the easy axis (N_x > N_y).
pub fn energy_barrier(
    geometry: &MagnetGeometry,
    material: &MaterialParams,
    tensor: &DemagTensor,
    consts: &PhysicalConstants,
) -> Result<f64> {
    if tensor.n_x > tensor.n_y {
        return Err(Error::NoInPlaneAnisotropy { n_x: tensor.n_x, n_y: tensor.n_y });
    }
    Ok(0.5 * consts.mu_0 * material.ms * material.ms * geometry.volume() * tensor.in_plane_anisotropy())
}

/// Free-layer template shared by all barrier operating points: everything but
/// the thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnetTemplate {
    pub major_axis: f64,
    pub minor_axis: f64,
    pub material: MaterialParams,
    #[serde(default)]
    pub consts: PhysicalConstants,
}

impl Default for MagnetTemplate {
    fn default() -> Self {
        Self {
            major_axis: 100e-9,
            minor_axis: 40e-9,
            material: MaterialParams::default(),
            consts: PhysicalConstants::default(),
        }
    }
}

impl MagnetTemplate {
    pub fn geometry(&self, thickness: f64) -> Result<MagnetGeometry> {
        MagnetGeometry::new(self.major_axis, self.minor_axis, thickness)
    }

    /// Uncalibrated macrospin using the computed demag tensor.
    pub fn macrospin(&self, thickness: f64) -> Result<Macrospin> {
        let g = self.geometry(thickness)?;
        Macrospin::new(self.consts, self.material, g, compute_demag_tensor(&g)?)
    }

    /// Macrospin whose in-plane anisotropy has been rescaled by a calibration.
    pub fn calibrated_macrospin(&self, cal: &BarrierCalibration) -> Result<Macrospin> {
        let g = self.geometry(cal.thickness)?;
        Macrospin::new(self.consts, self.material, g, cal.tensor)
    }
}

/// Scaling of N_y − N_x that makes a given thickness hit a target barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierCalibration {
    pub thickness: f64,
    /// Target barrier (J)
    pub e_b_target: f64,
    /// Barrier after calibration (J)
    pub achieved_e_b: f64,
    /// Multiplier applied to N_y − N_x of the computed tensor.
    pub demag_scaling: f64,
    /// The calibrated tensor.
    pub tensor: DemagTensor,
}

impl BarrierCalibration {
    pub fn relative_error(&self) -> f64 {
        (self.achieved_e_b - self.e_b_target).abs() / self.e_b_target
    }
}

/// Solve for the in-plane anisotropy scaling that puts the barrier at `target`
/// joules for the given thickness. The barrier is linear in N_y − N_x, so the
/// scaling is the ratio target / uncalibrated.
pub fn calibrate_barrier(
    template: &MagnetTemplate,
    thickness: f64,
    target: f64,
) -> Result<BarrierCalibration> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::InvalidParameter(format!("barrier target must be positive, got {target:e}")));
    }
    let g = template.geometry(thickness)?;
    let tensor = compute_demag_tensor(&g)?;
    let raw = energy_barrier(&g, &template.material, &tensor, &template.consts)?;
    if raw <= 0.0 {
        return Err(Error::UnreachableBarrier {
            target,
            reason: "geometry has no in-plane anisotropy to scale".into(),
        });
    }
    let scaling = target / raw;
    let calibrated = tensor.with_in_plane_scaling(scaling).map_err(|e| Error::UnreachableBarrier {
        target,
        reason: format!("scaled tensor invalid ({e})"),
    })?;
    let achieved = energy_barrier(&g, &template.material, &calibrated, &template.consts)?;
    let cal = BarrierCalibration { thickness, e_b_target: target, achieved_e_b: achieved, demag_scaling: scaling, tensor: calibrated };
    if cal.relative_error() >= 0.05 {
        return Err(Error::UnreachableBarrier { target, reason: format!("achieved {achieved:e} J") });
    }
    Ok(cal)
}

/// Free-layer thickness used for a barrier given in units of k_B·T.
///
/// The three published operating points 10/20/30 k_B·T ↔ 0.8/1.2/1.5 nm are
/// exact; other values are linearly interpolated (or extrapolated) between them.
pub fn thickness_for_barrier(eb_kt: f64) -> f64 {
    const POINTS: [(f64, f64); 3] = [(10.0, 0.8e-9), (20.0, 1.2e-9), (30.0, 1.5e-9)];
    let seg = if eb_kt <= 20.0 { (POINTS[0], POINTS[1]) } else { (POINTS[1], POINTS[2]) };
    let ((x0, y0), (x1, y1)) = seg;
    let t = y0 + (eb_kt - x0) * (y1 - y0) / (x1 - x0);
    t.max(0.1e-9)
}
