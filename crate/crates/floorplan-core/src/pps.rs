//! Plane parameter space: planes as (azimuth, elevation, offset) triples.
//!
//! Nearby patches of the same physical plane land close together in this
//! space, so clustering happens here rather than on raw normals. Azimuth
//! wraps at ±π and collapses at the elevation poles; the distance accounts
//! for both.

use nalgebra::Vector3;
use std::f64::consts::PI;

use crate::geometry::PlaneCartesian;

/// A plane as a point in parameter space. `phi` is the azimuth of the
/// normal in (−π, π], `psi` its elevation from the +z axis in [0, π], and
/// `d` the plane offset. `src_triangle` records which mesh triangle the
/// sample came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpsPoint {
    pub phi: f64,
    pub psi: f64,
    pub d: f64,
    pub src_triangle: usize,
}

/// Weights for [`pps_distance`]. The offset weight is larger by default
/// because offsets are in meters while angles are in radians, and offset
/// separation is the strongest cue for splitting parallel planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpsWeights {
    pub azimuth: f64,
    pub elevation: f64,
    pub offset: f64,
}

impl Default for PpsWeights {
    fn default() -> Self {
        PpsWeights {
            azimuth: 1.0,
            elevation: 1.0,
            offset: 2.0,
        }
    }
}

/// Maps a plane to parameter space. At the poles (normal along ±z) the
/// azimuth is undefined; it is pinned to 0 so the mapping stays total.
pub fn to_pps(plane: &PlaneCartesian, src_triangle: usize) -> PpsPoint {
    let n = plane.normal;
    let phi = if n.x == 0.0 && n.y == 0.0 {
        0.0
    } else {
        let a = n.y.atan2(n.x);
        // atan2 can return -π for (-x, -0); fold onto the (−π, π] branch.
        if a <= -PI {
            PI
        } else {
            a
        }
    };
    PpsPoint {
        phi,
        psi: n.z.clamp(-1.0, 1.0).acos(),
        d: plane.offset,
        src_triangle,
    }
}

impl PpsPoint {
    /// Reconstructs the Cartesian plane. Inverse of [`to_pps`] away from
    /// the poles.
    pub fn to_plane(&self) -> PlaneCartesian {
        let (sp, cp) = self.phi.sin_cos();
        let (se, ce) = self.psi.sin_cos();
        PlaneCartesian::new(Vector3::new(cp * se, sp * se, ce), self.d)
    }
}

/// Distance between two parameter-space points.
///
/// The azimuth difference is wrapped around ±π and scaled by the sine of
/// the mean elevation, so it fades out near the poles where azimuth stops
/// meaning anything. Symmetric in its arguments; zero exactly when the
/// planes coincide up to azimuth wrap and the pole degeneracy.
pub fn pps_distance(a: &PpsPoint, b: &PpsPoint, w: &PpsWeights) -> f64 {
    let raw = (a.phi - b.phi).abs();
    let dphi = raw.min(2.0 * PI - raw);
    let mean_elevation = 0.5 * (a.psi + b.psi);
    let az = w.azimuth * mean_elevation.sin() * dphi;
    let el = w.elevation * (a.psi - b.psi);
    let off = w.offset * (a.d - b.d);
    (az * az + el * el + off * off).sqrt()
}
