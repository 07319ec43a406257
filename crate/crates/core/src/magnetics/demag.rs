//! Shape anisotropy of a uniformly magnetized elliptic cylinder (thin elliptic disk).
//!
//! The tensor is evaluated in reciprocal space. For a cylinder of cross-section
//! S and thickness t the out-of-plane factor is
//!
//! ```text
//! N_zz = (1/A) ∫ d²k/(2π)² |S(k)|² g(k t),   g(x) = (1 - e^{-x}) / x
//! ```
//!
//! and the in-plane factors carry (1 - g) weighted by the direction cosines of k.
//! For an ellipse with semi-axes a, b the shape transform is 2πab·J1(κ)/κ with
//! κ = |(a k_x, b k_y)|, which reduces everything to a 2D integral over (ψ, κ).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::params::MagnetGeometry;
use super::vec3::Vec3;
use crate::error::{Error, Result};
use crate::special::{bessel_j1, GaussLegendre};

/// Demagnetization factors along the major axis (x), minor axis (y) and film normal (z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemagTensor {
    pub n_x: f64,
    pub n_y: f64,
    pub n_z: f64,
}

impl DemagTensor {
    pub fn new(n_x: f64, n_y: f64, n_z: f64) -> Result<Self> {
        let t = Self { n_x, n_y, n_z };
        t.validate()?;
        Ok(t)
    }

    pub fn sphere() -> Self {
        Self { n_x: 1.0 / 3.0, n_y: 1.0 / 3.0, n_z: 1.0 / 3.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.n_x, self.n_y, self.n_z] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "demag factor {v} outside [0, 1]"
                )));
            }
        }
        let sum = self.n_x + self.n_y + self.n_z;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "demag factors sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// In-plane anisotropy N_y - N_x.
    pub fn in_plane_anisotropy(&self) -> f64 {
        self.n_y - self.n_x
    }

    /// Rescale N_y - N_x by `factor` keeping N_z and the trace fixed.
    pub fn with_in_plane_scaling(&self, factor: f64) -> Result<Self> {
        let mean = 0.5 * (self.n_x + self.n_y);
        let half = 0.5 * factor * self.in_plane_anisotropy();
        Self::new(mean - half, mean + half, self.n_z)
    }
}

/// Demagnetizing field -M_s·N·m (A/m).
#[inline]
pub fn demag_field(m: Vec3, tensor: &DemagTensor, ms: f64) -> Vec3 {
    [-tensor.n_x * ms * m[0], -tensor.n_y * ms * m[1], -tensor.n_z * ms * m[2]]
}

/// Shape-anisotropy energy density (1/2)·mu_0·M_s²·Σ N_i m_i² (J/m³).
pub fn demag_energy_density(m: Vec3, tensor: &DemagTensor, ms: f64, mu_0: f64) -> f64 {
    0.5 * mu_0
        * ms
        * ms
        * (tensor.n_x * m[0] * m[0] + tensor.n_y * m[1] * m[1] + tensor.n_z * m[2] * m[2])
}

const KAPPA_MAX: f64 = 2000.0;
const KAPPA_PANEL: f64 = 2.0;
const PSI_NODES: usize = 48;

fn g_kernel(x: f64) -> f64 {
    if x < 1e-4 {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// ∫_0^∞ J1(κ)²/κ · g(cκ) dκ. The tail beyond `KAPPA_MAX` uses the cycle-averaged
/// asymptote J1(κ)² ≈ 1/(πκ).
fn radial_integral(c: f64, gl: &GaussLegendre) -> f64 {
    let panels = (KAPPA_MAX / KAPPA_PANEL) as usize;
    let mut sum = 0.0;
    for p in 0..panels {
        let lo = p as f64 * KAPPA_PANEL;
        sum += gl.integrate(lo, lo + KAPPA_PANEL, |k| {
            if k == 0.0 {
                return 0.0;
            }
            let j = bessel_j1(k);
            j * j / k * g_kernel(c * k)
        });
    }
    // substitute u = 1/κ on the tail
    let tail = gl.integrate(0.0, 1.0 / KAPPA_MAX, |u| {
        if u == 0.0 {
            0.0
        } else {
            g_kernel(c / u) / PI
        }
    });
    sum + tail
}

fn compute_uncached(geometry: &MagnetGeometry) -> DemagTensor {
    let a = 0.5 * geometry.major_axis;
    let b = 0.5 * geometry.minor_axis;
    let t = geometry.thickness;
    let gl16 = GaussLegendre::new(16);
    let gl_psi = GaussLegendre::new(PSI_NODES);

    let (mut n_x, mut n_y, mut n_z) = (0.0, 0.0, 0.0);
    for (&x, &w) in gl_psi.nodes.iter().zip(&gl_psi.weights) {
        let psi = PI / 4.0 * (x + 1.0);
        let weight = w * PI / 4.0;
        let (sn, cs) = psi.sin_cos();
        let sx = cs * cs / (a * a);
        let sy = sn * sn / (b * b);
        let s2 = sx + sy;
        let ig = radial_integral(t * s2.sqrt(), &gl16);
        // ∫ J1²/κ dκ = 1/2 over the half line
        let ing = 0.5 - ig;
        n_z += weight * ig;
        n_x += weight * ing * sx / s2;
        n_y += weight * ing * sy / s2;
    }
    let f = 4.0 / PI;
    let (n_x, n_y, n_z) = (f * n_x, f * n_y, f * n_z);
    let sum = n_x + n_y + n_z;
    DemagTensor { n_x: n_x / sum, n_y: n_y / sum, n_z: n_z / sum }
}

fn cache() -> &'static Mutex<HashMap<[u64; 3], DemagTensor>> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 3], DemagTensor>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Demagnetization tensor of an elliptic disk. Results are memoized per geometry.
pub fn compute_demag_tensor(geometry: &MagnetGeometry) -> Result<DemagTensor> {
    geometry.validate()?;
    let key = [
        geometry.major_axis.to_bits(),
        geometry.minor_axis.to_bits(),
        geometry.thickness.to_bits(),
    ];
    if let Some(t) = cache().lock().expect("demag cache poisoned").get(&key) {
        return Ok(*t);
    }
    let t = compute_uncached(geometry);
    t.validate()?;
    cache().lock().expect("demag cache poisoned").insert(key, t);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_field() {
        let h = demag_field([1.0, 0.0, 0.0], &DemagTensor::sphere(), 1e6);
        assert!((h[0] + 1e6 / 3.0).abs() < 1e-9);
        assert_eq!(h[1], 0.0);
        assert_eq!(h[2], 0.0);
    }

    #[test]
    fn thin_film_field() {
        let t = DemagTensor::new(0.0, 0.0, 1.0).unwrap();
        let h = demag_field([0.0, 0.0, 1.0], &t, 8e5);
        assert_eq!(h, [0.0, 0.0, -8e5]);
    }

    #[test]
    fn rejects_bad_tensor() {
        assert!(DemagTensor::new(0.5, 0.5, 0.5).is_err());
        assert!(DemagTensor::new(-0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn rejects_zero_thickness() {
        let g = MagnetGeometry { major_axis: 1e-7, minor_axis: 4e-8, thickness: 0.0 };
        assert!(compute_demag_tensor(&g).is_err());
    }

    #[test]
    fn paper_disk_ordering() {
        let t = compute_demag_tensor(&MagnetGeometry::paper_disk(1.5e-9)).unwrap();
        assert!(t.n_x < t.n_y && t.n_y < t.n_z, "{t:?}");
        assert!((t.n_x + t.n_y + t.n_z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_limit_goes_to_film_normal() {
        let t = compute_demag_tensor(&MagnetGeometry::new(100e-9, 40e-9, 1e-13).unwrap()).unwrap();
        assert!(t.n_z > 0.999, "{t:?}");
    }

    #[test]
    fn in_plane_scaling_preserves_trace() {
        let t = compute_demag_tensor(&MagnetGeometry::paper_disk(1.2e-9)).unwrap();
        let s = t.with_in_plane_scaling(1.3).unwrap();
        assert!((s.in_plane_anisotropy() - 1.3 * t.in_plane_anisotropy()).abs() < 1e-15);
        assert_eq!(s.n_z, t.n_z);
        assert!((s.n_x + s.n_y + s.n_z - 1.0).abs() < 1e-12);
        let id = t.with_in_plane_scaling(1.0).unwrap();
        assert!((id.n_x - t.n_x).abs() < 1e-15);
    }
}
