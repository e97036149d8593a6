//! Stereo support points and disparity triangulation.
//!
//! Support points live in the left image with a disparity against the right
//! image. Triangulation uses the rectified pinhole model: depth is inversely
//! proportional to disparity, scaled by focal length and baseline.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::RigidTransform;

/// Rectified stereo intrinsics. `b` is the baseline in meters; the
/// remaining entries are in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub b: f64,
}

/// Detector provenance of a support point. Corners come from blob/corner
/// responses, edges from gradient maxima; the pipeline treats both alike
/// and keeps the tag for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Corner,
    Edge,
}

/// A sparse stereo measurement: pixel position in the left image plus
/// disparity in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub u: f64,
    pub v: f64,
    pub d: f64,
    pub kind: FeatureKind,
}

/// One frame of pipeline input: the camera-to-world pose, the intrinsics
/// it was measured with, and the sparse support points seen in it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u64,
    /// Camera-to-world transform.
    pub pose: RigidTransform,
    pub intrinsics: CameraIntrinsics,
    pub points: Vec<SupportPoint>,
}

#[derive(Debug, Error, PartialEq)]
pub enum StereoError {
    #[error("disparity {0} is not positive")]
    NonPositiveDisparity(f64),
}

/// Back-projects a support point into the camera frame.
///
/// `z = fx·b/d`, `x = (u−cx)·z/fx`, `y = (v−cy)·z/fy`. Fails on `d ≤ 0`,
/// which encodes a point at or beyond infinity.
pub fn triangulate(sp: &SupportPoint, k: &CameraIntrinsics) -> Result<Point3<f64>, StereoError> {
    if sp.d <= 0.0 {
        return Err(StereoError::NonPositiveDisparity(sp.d));
    }
    let z = k.fx * k.b / sp.d;
    let x = (sp.u - k.cx) * z / k.fx;
    let y = (sp.v - k.cy) * z / k.fy;
    Ok(Point3::new(x, y, z))
}

/// Projects a camera-frame point back to `(u, v, d)`. Inverse of
/// [`triangulate`] for points with positive depth.
pub fn reproject(p: &Point3<f64>, k: &CameraIntrinsics, kind: FeatureKind) -> SupportPoint {
    SupportPoint {
        u: k.fx * p.x / p.z + k.cx,
        v: k.fy * p.y / p.z + k.cy,
        d: k.fx * k.b / p.z,
        kind,
    }
}
