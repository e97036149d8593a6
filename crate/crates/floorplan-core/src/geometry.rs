//! Core geometric types shared across the pipeline: planes in Cartesian
//! form, rigid transforms, and 2D segments with robust intersection.

use nalgebra::{Matrix3, Point2, Point3, UnitQuaternion, Vector2, Vector3};
use thiserror::Error;

/// Default tolerance for geometric predicates (collinearity, unit-norm
/// checks, intersection parameter ranges).
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// Two segments share a sub-segment of positive length, so they do not
    /// intersect in a single point.
    #[error("segments overlap along a shared sub-segment")]
    CollinearOverlap,
    /// A rotation matrix failed the orthonormality / determinant check.
    #[error("rotation is not orthonormal with determinant +1")]
    InvalidRotation,
}

/// An infinite plane `{ p : n·p + d = 0 }` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCartesian {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl PlaneCartesian {
    /// Builds a plane from a (not necessarily unit) normal and a point on
    /// the plane. Panics if the normal is numerically zero.
    pub fn from_normal_and_point(normal: Vector3<f64>, point: Point3<f64>) -> Self {
        let n = normal.normalize();
        PlaneCartesian {
            normal: n,
            offset: -n.dot(&point.coords),
        }
    }

    pub fn new(normal: Vector3<f64>, offset: f64) -> Self {
        PlaneCartesian { normal, offset }
    }

    /// Unsigned distance from a point to the plane.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        (self.normal.dot(&p.coords) + self.offset).abs()
    }

    /// Signed distance (positive on the side the normal points to).
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) + self.offset
    }

    /// Flips the orientation; the plane as a point set is unchanged.
    pub fn flipped(&self) -> Self {
        PlaneCartesian {
            normal: -self.normal,
            offset: -self.offset,
        }
    }

    /// Canonical orientation used when comparing planes as unoriented sets:
    /// the last nonzero normal component in (x, y, z) order is made
    /// positive.
    pub fn canonical(&self) -> Self {
        let n = self.normal;
        let lead = if n.z.abs() > GEOM_EPS {
            n.z
        } else if n.y.abs() > GEOM_EPS {
            n.y
        } else {
            n.x
        };
        if lead < 0.0 {
            self.flipped()
        } else {
            *self
        }
    }

    /// True when both planes describe the same point set within `tol`
    /// (normals compared after canonicalization).
    pub fn approx_eq(&self, other: &PlaneCartesian, tol: f64) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        (a.normal - b.normal).norm() < tol && (a.offset - b.offset).abs() < tol
    }

    /// Angle between the oriented normals, in radians.
    pub fn normal_angle(&self, other: &PlaneCartesian) -> f64 {
        self.normal.dot(&other.normal).clamp(-1.0, 1.0).acos()
    }
}

/// Distance from `p` to the plane. Thin wrapper kept as a free function
/// because call sites often have the plane by value.
pub fn point_to_plane_distance(p: &Point3<f64>, plane: &PlaneCartesian) -> f64 {
    plane.distance(p)
}

/// A rigid-body transform `p ↦ R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates orthonormality and determinant +1 within `tol`.
    pub fn try_new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tol: f64,
    ) -> Result<Self, GeometryError> {
        let rtr = rotation.transpose() * rotation;
        if (rtr - Matrix3::identity()).norm() > tol || (rotation.determinant() - 1.0).abs() > tol {
            return Err(GeometryError::InvalidRotation);
        }
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation: q.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_matrix(&self.rotation)
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

/// Maps a plane through a rigid transform: points satisfying the input
/// equation satisfy the output equation after transformation. The normal
/// stays unit length and keeps its orientation.
pub fn transform_plane(plane: &PlaneCartesian, t: &RigidTransform) -> PlaneCartesian {
    let n = t.rotation * plane.normal;
    PlaneCartesian {
        normal: n,
        offset: plane.offset - n.dot(&t.translation),
    }
}

/// A closed 2D segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: Point2<f64>,
    pub b: Point2<f64>,
}

impl Segment2 {
    pub fn new(a: Point2<f64>, b: Point2<f64>) -> Self {
        Segment2 { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Unit direction from `a` to `b`; zero-length segments return zero.
    pub fn direction(&self) -> Vector2<f64> {
        let d = self.b - self.a;
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            Vector2::zeros()
        }
    }

    pub fn midpoint(&self) -> Point2<f64> {
        Point2::from((self.a.coords + self.b.coords) * 0.5)
    }

    /// Distance from a point to the closed segment.
    pub fn distance_to_point(&self, p: &Point2<f64>) -> f64 {
        let d = self.b - self.a;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return (p - self.a).norm();
        }
        let t = ((p - self.a).dot(&d) / len2).clamp(0.0, 1.0);
        (p - (self.a + d * t)).norm()
    }

    /// Parameter of the orthogonal projection of `p` onto the supporting
    /// line, in units of the segment length (0 at `a`, 1 at `b`).
    pub fn project_parameter(&self, p: &Point2<f64>) -> f64 {
        let d = self.b - self.a;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return 0.0;
        }
        (p - self.a).dot(&d) / len2
    }

    pub fn point_at(&self, t: f64) -> Point2<f64> {
        Point2::from(self.a.coords + (self.b - self.a) * t)
    }

    /// Smaller angle between the supporting lines, in radians, in [0, π/2].
    pub fn line_angle(&self, other: &Segment2) -> f64 {
        let c = self.direction().dot(&other.direction()).abs().clamp(0.0, 1.0);
        c.acos()
    }
}

/// Twice the signed area of triangle (a, b, c); positive when counter-
/// clockwise.
pub fn orient2d(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Intersection of two closed segments.
///
/// Returns the single intersection point when one exists (including shared
/// endpoints and collinear segments touching at one point), `None` when the
/// segments are disjoint, and [`GeometryError::CollinearOverlap`] when they
/// share a sub-segment of positive length. `eps` bounds both the parallelism
/// test and the parameter-range slack.
pub fn segment_intersection(
    s1: &Segment2,
    s2: &Segment2,
    eps: f64,
) -> Result<Option<Point2<f64>>, GeometryError> {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let denom = d1.x * d2.y - d1.y * d2.x;
    let scale = d1.norm().max(d2.norm()).max(1.0);

    if denom.abs() > eps * scale * scale {
        // General position: solve a + s·d1 = c + t·d2.
        let r = s2.a - s1.a;
        let s = (r.x * d2.y - r.y * d2.x) / denom;
        let t = (r.x * d1.y - r.y * d1.x) / denom;
        if (-eps..=1.0 + eps).contains(&s) && (-eps..=1.0 + eps).contains(&t) {
            return Ok(Some(s1.point_at(s.clamp(0.0, 1.0))));
        }
        return Ok(None);
    }

    // Parallel. Distinct supporting lines cannot intersect.
    if orient2d(&s1.a, &s1.b, &s2.a).abs() > eps * scale * scale {
        return Ok(None);
    }

    // Collinear: compare 1D intervals along the dominant direction.
    let axis = if d1.norm() >= d2.norm() { d1 } else { d2 };
    let axis = if axis.norm() > 0.0 {
        axis / axis.norm()
    } else {
        return Ok(if (s1.a - s2.a).norm() <= eps {
            Some(s1.a)
        } else {
            None
        });
    };
    let proj = |p: &Point2<f64>| axis.dot(&p.coords);
    let (mut lo1, mut hi1) = (proj(&s1.a), proj(&s1.b));
    if lo1 > hi1 {
        std::mem::swap(&mut lo1, &mut hi1);
    }
    let (mut lo2, mut hi2) = (proj(&s2.a), proj(&s2.b));
    if lo2 > hi2 {
        std::mem::swap(&mut lo2, &mut hi2);
    }
    let lo = lo1.max(lo2);
    let hi = hi1.min(hi2);
    if hi - lo > eps {
        return Err(GeometryError::CollinearOverlap);
    }
    if hi - lo >= -eps {
        // Touch at a single point: recover it from the parameter midpoint.
        let t = ((lo + hi) * 0.5 - proj(&s1.a)) / (proj(&s1.b) - proj(&s1.a));
        return Ok(Some(s1.point_at(t.clamp(0.0, 1.0))));
    }
    Ok(None)
}

/// Angle in radians between two 2D directions treated as unoriented lines,
/// in [0, π/2].
pub fn line_angle(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (u.dot(v).abs() / (nu * nv)).clamp(0.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Point2, Point3, Vector3};

    #[test]
    fn distance_to_horizontal_plane() {
        // Plane z = 1 written as n=(0,0,1), d=-1.
        let plane = PlaneCartesian::new(Vector3::z(), -1.0);
        let d = point_to_plane_distance(&Point3::new(0.0, 0.0, 3.0), &plane);
        assert_relative_eq!(d, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn distance_is_translation_invariant_along_plane() {
        let plane = PlaneCartesian::new(Vector3::z(), -1.0);
        let d1 = plane.distance(&Point3::new(0.0, 0.0, 3.0));
        let d2 = plane.distance(&Point3::new(17.0, -4.0, 3.0));
        assert_relative_eq!(d1, d2, epsilon = 1e-12);
    }

    #[test]
    fn translate_plane_along_normal() {
        let plane = PlaneCartesian::new(Vector3::z(), 0.0);
        let t = RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::new(0.0, 0.0, 1.0),
        };
        let moved = transform_plane(&plane, &t);
        assert_relative_eq!(moved.normal.z, 1.0, epsilon = 1e-12);
        assert_relative_eq!(moved.offset, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn yaw_rotates_wall_plane() {
        // Plane x = 2 under a 90° yaw becomes y = 2.
        let plane = PlaneCartesian::new(Vector3::x(), -2.0);
        let q = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let t = RigidTransform::from_quaternion(q, Vector3::zeros());
        let moved = transform_plane(&plane, &t);
        assert_relative_eq!(moved.normal.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(moved.normal.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(moved.offset, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn transform_preserves_incidence() {
        let plane = PlaneCartesian::from_normal_and_point(
            Vector3::new(0.3, -1.2, 0.4),
            Point3::new(1.0, 2.0, 3.0),
        );
        let q = UnitQuaternion::from_euler_angles(0.3, -0.7, 1.9);
        let t = RigidTransform::from_quaternion(q, Vector3::new(-4.0, 0.5, 2.0));
        let moved = transform_plane(&plane, &t);
        assert_relative_eq!(moved.normal.norm(), 1.0, epsilon = 1e-9);
        for p in [
            Point3::new(1.0, 2.0, 3.0),
            Point3::new(-2.0, 1.25, 3.25),
            Point3::new(5.0, 4.0, 3.0 + (0.3 * -4.0 + -1.2 * -2.0) / 0.4),
        ] {
            if plane.distance(&p) < 1e-9 {
                assert!(moved.distance(&t.apply(&p)) < 1e-9);
            }
        }
    }

    #[test]
    fn inverse_undoes_transform() {
        let q = UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3);
        let t = RigidTransform::from_quaternion(q, Vector3::new(1.0, -2.0, 0.5));
        let p = Point3::new(0.4, 0.5, 0.6);
        let back = t.inverse().apply(&t.apply(&p));
        assert_relative_eq!((back - p).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn crossing_segments_intersect_at_center() {
        let s1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(2.0, 2.0));
        let s2 = Segment2::new(Point2::new(0.0, 2.0), Point2::new(2.0, 0.0));
        let p = segment_intersection(&s1, &s2, GEOM_EPS).unwrap().unwrap();
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn parallel_segments_are_disjoint() {
        let s1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let s2 = Segment2::new(Point2::new(0.0, 1.0), Point2::new(1.0, 1.0));
        assert_eq!(segment_intersection(&s1, &s2, GEOM_EPS).unwrap(), None);
    }

    #[test]
    fn collinear_overlap_is_an_error() {
        let s1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0));
        let s2 = Segment2::new(Point2::new(1.0, 0.0), Point2::new(3.0, 0.0));
        assert_eq!(
            segment_intersection(&s1, &s2, GEOM_EPS),
            Err(GeometryError::CollinearOverlap)
        );
    }

    #[test]
    fn collinear_touch_yields_single_point() {
        let s1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let s2 = Segment2::new(Point2::new(1.0, 0.0), Point2::new(2.0, 0.0));
        let p = segment_intersection(&s1, &s2, GEOM_EPS).unwrap().unwrap();
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-9);
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn endpoint_touch_counts_as_intersection() {
        let s1 = Segment2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let s2 = Segment2::new(Point2::new(1.0, 1.0), Point2::new(2.0, 0.0));
        let p = segment_intersection(&s1, &s2, GEOM_EPS).unwrap().unwrap();
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn canonical_flips_downward_normals() {
        let plane = PlaneCartesian::new(-Vector3::z(), 1.0);
        let c = plane.canonical();
        assert_relative_eq!(c.normal.z, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.offset, -1.0, epsilon = 1e-12);
        // A wall normal with exactly zero z falls through to the y rule.
        let wall = PlaneCartesian::new(Vector3::new(0.6, -0.8, 0.0), 0.5);
        assert!(wall.canonical().normal.y > 0.0);
    }

    #[test]
    fn segment_point_distance_clamps_to_endpoints() {
        let s = Segment2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        assert_relative_eq!(s.distance_to_point(&Point2::new(0.5, 0.7)), 0.7);
        assert_relative_eq!(s.distance_to_point(&Point2::new(2.0, 0.0)), 1.0);
        assert_relative_eq!(
            s.distance_to_point(&Point2::new(-3.0, 4.0)),
            5.0,
            epsilon = 1e-12
        );
    }
}
