//! Synthetic scenes and the frame streams a stereo front end would
//! produce from them.
//!
//! A scene is authored as 2D wall polylines with door openings cut out,
//! plus a camera trajectory given as waypoints. Frame generation samples
//! points uniformly over every surface at a fixed density, keeps the ones
//! inside the camera frustum whose sight line is not blocked by a solid
//! wall span, corrupts each survivor with isotropic Gaussian noise in the
//! camera frame, and encodes it as a stereo measurement. Doorways do not
//! block sight lines, so geometry behind an opening is observed through
//! it. Clutter appears as short-lived vertical patches visible only in a
//! small window of frames, which keeps clutter below the landmark
//! promotion gate downstream.
//!
//! Everything is deterministic given the spec: clutter placement draws
//! from one seeded stream, and each frame draws from its own stream keyed
//! by the frame index, so frames do not depend on how many preceded them.

use nalgebra::{Matrix3, Point2, Point3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floorplan::crosses_polyline;
use crate::geometry::{RigidTransform, Segment2};
use crate::stereo::{reproject, CameraIntrinsics, FeatureKind, FrameRecord};

/// Points closer to the camera than this are dropped before encoding;
/// depth this small is outside any stereo rig's working range and would
/// produce unbounded pixel coordinates.
const MIN_DEPTH: f64 = 0.05;

/// A door endpoint must lie within this of a wall edge, meters.
const DOOR_ON_WALL_TOL: f64 = 1e-6;

/// Shortest wall span kept after cutting doors out, meters.
const MIN_SOLID_SPAN: f64 = 1e-9;

/// Stream key for clutter placement, kept apart from the per-frame keys
/// (which are the spec seed XOR a small frame index).
const CLUTTER_STREAM: u64 = 0xC1A7_7E50_AA55_1234;

/// Frame windows in which a clutter patch is visible, frames.
const CLUTTER_WINDOW_MIN: u64 = 5;
const CLUTTER_WINDOW_MAX: u64 = 25;

fn default_camera_height() -> f64 {
    1.2
}

fn default_wall_height() -> f64 {
    2.5
}

fn default_max_depth() -> f64 {
    15.0
}

fn default_true() -> bool {
    true
}

fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 300.0,
        fy: 300.0,
        cx: 320.0,
        cy: 180.0,
        b: 0.12,
    }
}

fn default_image_width() -> u32 {
    640
}

fn default_image_height() -> u32 {
    360
}

/// A door: a sub-segment of some wall edge that is open. Walls emit no
/// points on the span and sight lines pass through it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoorSpec {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Ground-truth scene description: wall polylines on the ground plane,
/// door openings, the camera path, and sampling parameters. Serialized as
/// the scene JSON file; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    /// Wall polylines; every consecutive vertex pair is one wall edge.
    pub walls: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub doors: Vec<DoorSpec>,
    /// Camera waypoints on the ground plane; frames interpolate the
    /// polyline uniformly by arc length.
    pub trajectory: Vec<[f64; 2]>,
    pub frame_count: u64,
    /// Expected surface samples per square meter, per frame.
    pub point_density: f64,
    /// Isotropic Gaussian noise applied in the camera frame, meters.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Expected clutter patches per square meter of scene footprint.
    #[serde(default)]
    pub clutter_density: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_camera_height")]
    pub camera_height: f64,
    #[serde(default = "default_wall_height")]
    pub wall_height: f64,
    #[serde(default = "default_true")]
    pub include_floor: bool,
    #[serde(default = "default_true")]
    pub include_ceiling: bool,
    /// Extra yaw added per frame on top of the direction of travel,
    /// degrees; lets a short path sweep the whole room.
    #[serde(default)]
    pub yaw_rate_deg: f64,
    /// Surface points beyond this camera distance are dropped, meters.
    #[serde(default = "default_max_depth")]
    pub max_depth: f64,
    #[serde(default = "default_intrinsics")]
    pub intrinsics: CameraIntrinsics,
    #[serde(default = "default_image_width")]
    pub image_width: u32,
    #[serde(default = "default_image_height")]
    pub image_height: u32,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            walls: Vec::new(),
            doors: Vec::new(),
            trajectory: Vec::new(),
            frame_count: 0,
            point_density: 0.0,
            noise_sigma: 0.0,
            clutter_density: 0.0,
            seed: 0,
            camera_height: default_camera_height(),
            wall_height: default_wall_height(),
            include_floor: true,
            include_ceiling: true,
            yaw_rate_deg: 0.0,
            max_depth: default_max_depth(),
            intrinsics: default_intrinsics(),
            image_width: default_image_width(),
            image_height: default_image_height(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("trajectory needs at least one waypoint")]
    EmptyTrajectory,
    #[error("trajectory waypoints {0} and {1} coincide")]
    DuplicateWaypoint(usize, usize),
    #[error("wall {0} needs at least two vertices")]
    ShortWall(usize),
    #[error("wall {wall} edge {edge} has zero length")]
    DegenerateEdge { wall: usize, edge: usize },
    #[error("door {0} has zero length")]
    DegenerateDoor(usize),
    #[error("door {0} does not lie on any wall edge")]
    DoorOffWall(usize),
    #[error("the trajectory never passes through door {0}")]
    DoorNotTraversed(usize),
    #[error("camera height {0} must sit strictly between the floor and the wall top {1}")]
    CameraHeightOutOfRange(f64, f64),
    #[error("{name} out of valid range ({value})")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// A transient vertical patch: its ground segment, vertical extent, and
/// the frame window in which it emits points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClutterPatch {
    pub base: Segment2,
    pub z_bottom: f64,
    pub height: f64,
    pub frames: std::ops::Range<u64>,
}

/// One sampled rectangle: `origin + s·u_axis + t·v_axis` for s, t in
/// [0, 1], with a precomputed per-frame sample count.
struct Surface {
    origin: Point3<f64>,
    u_axis: Vector3<f64>,
    v_axis: Vector3<f64>,
    samples_per_frame: usize,
}

impl Surface {
    fn new(origin: Point3<f64>, u_axis: Vector3<f64>, v_axis: Vector3<f64>, density: f64) -> Self {
        let area = u_axis.cross(&v_axis).norm();
        Surface {
            origin,
            u_axis,
            v_axis,
            samples_per_frame: (density * area).round() as usize,
        }
    }
}

impl SceneSpec {
    /// Checks every invariant the generator relies on.
    pub fn validate(&self) -> Result<(), SceneError> {
        self.checked().map(|_| ())
    }

    /// The solid wall spans: every wall edge with its door openings cut
    /// out. These are both the emitting wall surfaces and the occluders,
    /// and they are the ground truth evaluation compares against.
    pub fn solid_wall_segments(&self) -> Result<Vec<Segment2>, SceneError> {
        self.checked()
    }

    fn checked(&self) -> Result<Vec<Segment2>, SceneError> {
        let positive = |name: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(SceneError::InvalidParameter { name, value })
            }
        };
        let non_negative = |name: &'static str, value: f64| {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(SceneError::InvalidParameter { name, value })
            }
        };
        non_negative("noise_sigma", self.noise_sigma)?;
        non_negative("point_density", self.point_density)?;
        non_negative("clutter_density", self.clutter_density)?;
        positive("wall_height", self.wall_height)?;
        positive("max_depth", self.max_depth)?;
        positive("fx", self.intrinsics.fx)?;
        positive("fy", self.intrinsics.fy)?;
        positive("baseline", self.intrinsics.b)?;
        if !self.intrinsics.cx.is_finite() || !self.intrinsics.cy.is_finite() {
            return Err(SceneError::InvalidParameter {
                name: "principal point",
                value: self.intrinsics.cx,
            });
        }
        if !self.yaw_rate_deg.is_finite() {
            return Err(SceneError::InvalidParameter {
                name: "yaw_rate_deg",
                value: self.yaw_rate_deg,
            });
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(SceneError::InvalidParameter {
                name: "image size",
                value: self.image_width.min(self.image_height) as f64,
            });
        }
        if !self.camera_height.is_finite()
            || self.camera_height <= 0.0
            || self.camera_height >= self.wall_height
        {
            return Err(SceneError::CameraHeightOutOfRange(
                self.camera_height,
                self.wall_height,
            ));
        }

        if self.trajectory.is_empty() {
            return Err(SceneError::EmptyTrajectory);
        }
        for (i, pair) in self.trajectory.windows(2).enumerate() {
            let d = Vector2::new(pair[1][0] - pair[0][0], pair[1][1] - pair[0][1]);
            if d.norm() <= 1e-9 {
                return Err(SceneError::DuplicateWaypoint(i, i + 1));
            }
        }

        // Wall edges, flattened.
        let mut edges = Vec::new();
        for (wi, wall) in self.walls.iter().enumerate() {
            if wall.len() < 2 {
                return Err(SceneError::ShortWall(wi));
            }
            for (ei, pair) in wall.windows(2).enumerate() {
                let seg = Segment2::new(
                    Point2::new(pair[0][0], pair[0][1]),
                    Point2::new(pair[1][0], pair[1][1]),
                );
                if seg.length() <= 1e-9 {
                    return Err(SceneError::DegenerateEdge { wall: wi, edge: ei });
                }
                edges.push(seg);
            }
        }

        // Assign each door to the edge it lies on and record the open
        // interval in edge parameters.
        let mut openings: Vec<Vec<(f64, f64)>> = vec![Vec::new(); edges.len()];
        let waypoints: Vec<Point2<f64>> = self
            .trajectory
            .iter()
            .map(|w| Point2::new(w[0], w[1]))
            .collect();
        for (di, door) in self.doors.iter().enumerate() {
            let a = Point2::new(door.a[0], door.a[1]);
            let b = Point2::new(door.b[0], door.b[1]);
            if (b - a).norm() <= DOOR_ON_WALL_TOL {
                return Err(SceneError::DegenerateDoor(di));
            }
            let edge = edges.iter().position(|e| {
                e.distance_to_point(&a) <= DOOR_ON_WALL_TOL
                    && e.distance_to_point(&b) <= DOOR_ON_WALL_TOL
            });
            let Some(ei) = edge else {
                return Err(SceneError::DoorOffWall(di));
            };
            let ta = edges[ei].project_parameter(&a).clamp(0.0, 1.0);
            let tb = edges[ei].project_parameter(&b).clamp(0.0, 1.0);
            openings[ei].push((ta.min(tb), ta.max(tb)));
            if !crosses_polyline(&Segment2::new(a, b), &waypoints) {
                return Err(SceneError::DoorNotTraversed(di));
            }
        }

        // Cut the openings out of each edge.
        let mut solid = Vec::new();
        for (edge, mut cuts) in edges.into_iter().zip(openings) {
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut cursor = 0.0;
            for (lo, hi) in cuts {
                if lo > cursor {
                    push_span(&mut solid, &edge, cursor, lo);
                }
                cursor = cursor.max(hi);
            }
            if cursor < 1.0 {
                push_span(&mut solid, &edge, cursor, 1.0);
            }
        }
        Ok(solid)
    }

    /// Camera-to-world pose for every frame. The camera looks along its
    /// +z axis, which tracks the direction of travel (plus the per-frame
    /// yaw offset); +x points right and +y points at the floor.
    pub fn camera_poses(&self) -> Vec<RigidTransform> {
        let pts: Vec<Point2<f64>> = self
            .trajectory
            .iter()
            .map(|w| Point2::new(w[0], w[1]))
            .collect();
        let mut cum = vec![0.0];
        for pair in pts.windows(2) {
            cum.push(cum.last().unwrap() + (pair[1] - pair[0]).norm());
        }
        let total = *cum.last().unwrap();
        let yaw_step = self.yaw_rate_deg.to_radians();

        let mut poses = Vec::with_capacity(self.frame_count as usize);
        let mut edge = 0usize;
        for i in 0..self.frame_count {
            let s = if self.frame_count <= 1 || total <= 0.0 {
                0.0
            } else {
                total * i as f64 / (self.frame_count - 1) as f64
            };
            let (pos, heading) = if pts.len() < 2 || total <= 0.0 {
                (pts[0], 0.0)
            } else {
                while edge + 2 < pts.len() && cum[edge + 1] <= s {
                    edge += 1;
                }
                let dir = (pts[edge + 1] - pts[edge]) / (cum[edge + 1] - cum[edge]);
                (
                    pts[edge] + dir * (s - cum[edge]),
                    f64::atan2(dir.y, dir.x),
                )
            };
            let psi = heading + yaw_step * i as f64;
            let (sin_psi, cos_psi) = psi.sin_cos();
            let rotation = Matrix3::from_columns(&[
                Vector3::new(sin_psi, -cos_psi, 0.0),
                Vector3::new(0.0, 0.0, -1.0),
                Vector3::new(cos_psi, sin_psi, 0.0),
            ]);
            poses.push(RigidTransform {
                rotation,
                translation: Vector3::new(pos.x, pos.y, self.camera_height),
            });
        }
        poses
    }

    /// Clutter patches with their visibility windows, drawn from the
    /// clutter stream of the spec seed. Placement covers the scene
    /// footprint; windows are clipped to the frame range and never exceed
    /// [`CLUTTER_WINDOW_MAX`] frames.
    pub fn clutter_patches(&self) -> Vec<ClutterPatch> {
        let Some((min, max)) = self.footprint() else {
            return Vec::new();
        };
        let area = (max.x - min.x) * (max.y - min.y);
        if self.clutter_density <= 0.0 || area <= 0.0 || self.frame_count == 0 {
            return Vec::new();
        }
        let count = (self.clutter_density * area).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ CLUTTER_STREAM);
        (0..count)
            .map(|_| {
                let cx = rng.gen_range(min.x..=max.x);
                let cy = rng.gen_range(min.y..=max.y);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let half = rng.gen_range(0.15..=0.4);
                let height = rng.gen_range(0.3..=0.8);
                let z_bottom = rng.gen_range(0.2..=(self.wall_height - 0.8).max(0.2));
                let start = rng.gen_range(0..self.frame_count);
                let len = rng.gen_range(CLUTTER_WINDOW_MIN..=CLUTTER_WINDOW_MAX);
                let dir = Vector2::new(angle.cos(), angle.sin());
                let center = Point2::new(cx, cy);
                ClutterPatch {
                    base: Segment2::new(center - dir * half, center + dir * half),
                    z_bottom,
                    height,
                    frames: start..(start + len).min(self.frame_count),
                }
            })
            .collect()
    }

    /// Axis-aligned bounds over wall vertices and waypoints.
    fn footprint(&self) -> Option<(Point2<f64>, Point2<f64>)> {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for p in self
            .walls
            .iter()
            .flatten()
            .chain(self.trajectory.iter())
        {
            min.x = min.x.min(p[0]);
            min.y = min.y.min(p[1]);
            max.x = max.x.max(p[0]);
            max.y = max.y.max(p[1]);
            any = true;
        }
        any.then_some((min, max))
    }
}

fn push_span(out: &mut Vec<Segment2>, edge: &Segment2, t0: f64, t1: f64) {
    if (t1 - t0) * edge.length() > MIN_SOLID_SPAN {
        out.push(Segment2::new(edge.point_at(t0), edge.point_at(t1)));
    }
}

/// True when the open sight line from `from` to `to` hits an occluder
/// strictly before reaching `to`, so a surface never occludes its own
/// points. Walls span the full floor-to-ceiling height and the camera
/// rides below the wall top, which makes this ground-plane test exact for
/// every surface the generator samples.
fn sight_blocked(from: Point2<f64>, to: Point2<f64>, occluders: &[Segment2]) -> bool {
    let d = to - from;
    for occ in occluders {
        let e = occ.b - occ.a;
        let denom = d.x * e.y - d.y * e.x;
        if denom.abs() <= 1e-12 * d.norm().max(1.0) * e.norm().max(1.0) {
            continue;
        }
        let r = occ.a - from;
        let s = (r.x * e.y - r.y * e.x) / denom;
        let t = (r.x * d.y - r.y * d.x) / denom;
        if s > 1e-9 && s < 1.0 - 1e-9 && (-1e-9..=1.0 + 1e-9).contains(&t) {
            return true;
        }
    }
    false
}

/// Simulates the camera along the trajectory and emits every frame's
/// measurements. Deterministic given the spec; see the module docs for
/// the visibility and noise model.
pub fn generate_frames(spec: &SceneSpec) -> Result<Vec<FrameRecord>, SceneError> {
    let solid = spec.checked()?;

    let mut statics: Vec<Surface> = solid
        .iter()
        .map(|seg| {
            Surface::new(
                Point3::new(seg.a.x, seg.a.y, 0.0),
                Vector3::new(seg.b.x - seg.a.x, seg.b.y - seg.a.y, 0.0),
                Vector3::new(0.0, 0.0, spec.wall_height),
                spec.point_density,
            )
        })
        .collect();
    if let Some((min, max)) = spec.footprint() {
        let u_axis = Vector3::new(max.x - min.x, 0.0, 0.0);
        let v_axis = Vector3::new(0.0, max.y - min.y, 0.0);
        if spec.include_floor {
            statics.push(Surface::new(
                Point3::new(min.x, min.y, 0.0),
                u_axis,
                v_axis,
                spec.point_density,
            ));
        }
        if spec.include_ceiling {
            statics.push(Surface::new(
                Point3::new(min.x, min.y, spec.wall_height),
                u_axis,
                v_axis,
                spec.point_density,
            ));
        }
    }
    let clutter: Vec<(Surface, std::ops::Range<u64>)> = spec
        .clutter_patches()
        .into_iter()
        .map(|p| {
            let surface = Surface::new(
                Point3::new(p.base.a.x, p.base.a.y, p.z_bottom),
                Vector3::new(p.base.b.x - p.base.a.x, p.base.b.y - p.base.a.y, 0.0),
                Vector3::new(0.0, 0.0, p.height),
                spec.point_density,
            );
            (surface, p.frames)
        })
        .collect();

    let mut frames = Vec::with_capacity(spec.frame_count as usize);
    for (frame_id, pose) in spec.camera_poses().into_iter().enumerate() {
        let frame_id = frame_id as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ frame_id);
        let world_to_cam = pose.inverse();
        let cam_ground = Point2::new(pose.translation.x, pose.translation.y);

        let mut points = Vec::new();
        let mut sample = |surface: &Surface, rng: &mut ChaCha8Rng| {
            for _ in 0..surface.samples_per_frame {
                let su: f64 = rng.gen();
                let tv: f64 = rng.gen();
                let kind = if rng.gen_bool(0.5) {
                    FeatureKind::Corner
                } else {
                    FeatureKind::Edge
                };
                let noise = Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ) * spec.noise_sigma;

                let world =
                    surface.origin + surface.u_axis * su + surface.v_axis * tv;
                let cam = world_to_cam.apply(&world);
                if !(MIN_DEPTH..=spec.max_depth).contains(&cam.z) {
                    continue;
                }
                if sight_blocked(cam_ground, Point2::new(world.x, world.y), &solid) {
                    continue;
                }
                let measured = cam + noise;
                if measured.z < MIN_DEPTH {
                    continue;
                }
                let sp = reproject(&measured, &spec.intrinsics, kind);
                if sp.u < 0.0
                    || sp.u > spec.image_width as f64
                    || sp.v < 0.0
                    || sp.v > spec.image_height as f64
                    || sp.d <= 0.0
                {
                    continue;
                }
                points.push(sp);
            }
        };
        for surface in &statics {
            sample(surface, &mut rng);
        }
        for (surface, window) in &clutter {
            if window.contains(&frame_id) {
                sample(surface, &mut rng);
            }
        }

        frames.push(FrameRecord {
            frame_id,
            pose,
            intrinsics: spec.intrinsics,
            points,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PlaneCartesian;
    use crate::stereo::triangulate;
    use approx::assert_relative_eq;

    /// A 4 x 4 square room centered on the origin, camera circling inside.
    fn square_spec() -> SceneSpec {
        SceneSpec {
            walls: vec![vec![
                [-2.0, -2.0],
                [2.0, -2.0],
                [2.0, 2.0],
                [-2.0, 2.0],
                [-2.0, -2.0],
            ]],
            doors: vec![],
            trajectory: vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]],
            frame_count: 12,
            point_density: 30.0,
            noise_sigma: 0.0,
            clutter_density: 0.0,
            seed: 7,
            camera_height: 1.2,
            wall_height: 2.5,
            include_floor: true,
            include_ceiling: true,
            yaw_rate_deg: 0.0,
            max_depth: 15.0,
            intrinsics: default_intrinsics(),
            image_width: 640,
            image_height: 360,
        }
    }

    fn world_points(frame: &FrameRecord) -> Vec<Point3<f64>> {
        frame
            .points
            .iter()
            .map(|sp| {
                let cam = triangulate(sp, &frame.intrinsics).unwrap();
                frame.pose.apply(&cam)
            })
            .collect()
    }

    #[test]
    fn noiseless_single_wall_points_lie_on_its_plane() {
        let spec = SceneSpec {
            walls: vec![vec![[2.0, -3.0], [2.0, 3.0]]],
            trajectory: vec![[0.0, -0.5], [0.0, 0.5]],
            frame_count: 4,
            include_floor: false,
            include_ceiling: false,
            point_density: 40.0,
            ..square_spec()
        };
        let plane = PlaneCartesian::new(Vector3::new(1.0, 0.0, 0.0), -2.0);
        let frames = generate_frames(&spec).unwrap();
        let mut seen = 0;
        for frame in &frames {
            for world in world_points(frame) {
                assert!(plane.distance(&world) < 1e-9, "off plane: {world}");
                seen += 1;
            }
        }
        assert!(seen > 100, "only {seen} points generated");
    }

    #[test]
    fn zero_clutter_points_all_belong_to_structure() {
        let spec = square_spec();
        let frames = generate_frames(&spec).unwrap();
        let solid = spec.solid_wall_segments().unwrap();
        for frame in &frames {
            for world in world_points(frame) {
                let ground = Point2::new(world.x, world.y);
                let on_wall = solid.iter().any(|s| s.distance_to_point(&ground) < 1e-9);
                let on_floor = world.z.abs() < 1e-9;
                let on_ceiling = (world.z - spec.wall_height).abs() < 1e-9;
                assert!(on_wall || on_floor || on_ceiling, "unexplained point {world}");
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = SceneSpec {
            noise_sigma: 0.01,
            clutter_density: 0.3,
            frame_count: 40,
            ..square_spec()
        };
        let a = generate_frames(&spec).unwrap();
        let b = generate_frames(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_density_doubles_support_counts() {
        let base = SceneSpec {
            frame_count: 100,
            point_density: 15.0,
            ..square_spec()
        };
        let double = SceneSpec {
            point_density: 30.0,
            ..base.clone()
        };
        let count = |frames: &[FrameRecord]| -> f64 {
            frames.iter().map(|f| f.points.len()).sum::<usize>() as f64
        };
        let ratio = count(&generate_frames(&double).unwrap()) / count(&generate_frames(&base).unwrap());
        assert!((1.9..=2.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn walls_occlude_what_is_behind_them() {
        // Two parallel walls; the camera only ever sees the near one.
        let spec = SceneSpec {
            walls: vec![vec![[2.0, -3.0], [2.0, 3.0]], vec![[4.0, -3.0], [4.0, 3.0]]],
            trajectory: vec![[0.0, -0.5], [0.0, 0.5]],
            frame_count: 6,
            include_floor: false,
            include_ceiling: false,
            ..square_spec()
        };
        let frames = generate_frames(&spec).unwrap();
        let mut near = 0usize;
        for frame in &frames {
            for world in world_points(frame) {
                assert!((world.x - 2.0).abs() < 1e-9, "far wall leaked: {world}");
                near += 1;
            }
        }
        assert!(near > 50);
    }

    #[test]
    fn doorways_reveal_the_far_side() {
        // Near wall with a 1 m doorway; a second wall behind it. Frames
        // taken before the near wall must see the far wall only through
        // the opening.
        let spec = SceneSpec {
            walls: vec![vec![[2.0, -3.0], [2.0, 3.0]], vec![[4.0, -3.0], [4.0, 3.0]]],
            doors: vec![DoorSpec {
                a: [2.0, -0.5],
                b: [2.0, 0.5],
            }],
            trajectory: vec![[0.0, 0.0], [3.0, 0.0]],
            frame_count: 7,
            include_floor: false,
            include_ceiling: false,
            ..square_spec()
        };
        let frames = generate_frames(&spec).unwrap();
        let mut through = 0usize;
        for frame in &frames {
            let cam = frame.pose.translation;
            if cam.x > 1.9 {
                continue;
            }
            for world in world_points(frame) {
                if (world.x - 4.0).abs() < 1e-9 {
                    // The sight line's y where it crosses the near wall
                    // plane must fall inside the opening.
                    let t = (2.0 - cam.x) / (world.x - cam.x);
                    let y_at_wall = cam.y + t * (world.y - cam.y);
                    assert!(y_at_wall.abs() <= 0.5 + 1e-9, "blocked ray leaked: {world}");
                    through += 1;
                }
            }
        }
        assert!(through > 20, "nothing seen through the doorway: {through}");
    }

    #[test]
    fn clutter_emits_only_inside_its_window() {
        let spec = SceneSpec {
            clutter_density: 0.5,
            frame_count: 60,
            ..square_spec()
        };
        let patches = spec.clutter_patches();
        assert!(!patches.is_empty());
        for p in &patches {
            let len = p.frames.end - p.frames.start;
            assert!(len >= 1 && len <= CLUTTER_WINDOW_MAX);
        }
        let frames = generate_frames(&spec).unwrap();
        let solid = spec.solid_wall_segments().unwrap();
        for frame in &frames {
            for world in world_points(frame) {
                let ground = Point2::new(world.x, world.y);
                let structural = solid.iter().any(|s| s.distance_to_point(&ground) < 1e-9)
                    || world.z.abs() < 1e-9
                    || (world.z - spec.wall_height).abs() < 1e-9;
                if structural {
                    continue;
                }
                let explained = patches.iter().any(|p| {
                    p.frames.contains(&frame.frame_id)
                        && p.base.distance_to_point(&ground) < 1e-9
                        && world.z >= p.z_bottom - 1e-9
                        && world.z <= p.z_bottom + p.height + 1e-9
                });
                assert!(explained, "clutter outside its window: {world}");
            }
        }
    }

    #[test]
    fn poses_track_the_direction_of_travel() {
        let spec = SceneSpec {
            trajectory: vec![[0.0, 0.0], [2.0, 0.0]],
            frame_count: 5,
            ..square_spec()
        };
        let poses = spec.camera_poses();
        assert_eq!(poses.len(), 5);
        // Heading +x: the camera forward axis (third column) is +x and
        // the down axis (second column) is -z.
        for pose in &poses {
            assert_relative_eq!(pose.rotation.column(2).x, 1.0, epsilon = 1e-12);
            assert_relative_eq!(pose.rotation.column(2).y, 0.0, epsilon = 1e-12);
            assert_relative_eq!(pose.rotation.column(1).z, -1.0, epsilon = 1e-12);
            assert_relative_eq!(pose.translation.z, 1.2, epsilon = 1e-12);
        }
        assert_relative_eq!(poses[2].translation.x, 1.0, epsilon = 1e-12);
        // A floor point straight ahead lands in the lower image half.
        let k = default_intrinsics();
        let cam = poses[0].inverse().apply(&Point3::new(1.0, 0.0, 0.0));
        let sp = reproject(&cam, &k, FeatureKind::Corner);
        assert!(sp.v > k.cy);
    }

    #[test]
    fn all_emitted_points_fit_the_image_and_depth_range() {
        let spec = SceneSpec {
            noise_sigma: 0.05,
            clutter_density: 0.2,
            frame_count: 20,
            ..square_spec()
        };
        for frame in generate_frames(&spec).unwrap() {
            for sp in &frame.points {
                assert!(sp.u >= 0.0 && sp.u <= 640.0);
                assert!(sp.v >= 0.0 && sp.v <= 360.0);
                assert!(sp.d > 0.0);
                let cam = triangulate(sp, &frame.intrinsics).unwrap();
                assert!(cam.z >= MIN_DEPTH - 3.0 * 0.05 && cam.z <= 15.0 + 3.0 * 0.05);
            }
        }
    }

    #[test]
    fn door_off_any_wall_is_rejected() {
        let spec = SceneSpec {
            doors: vec![DoorSpec {
                a: [0.5, 0.5],
                b: [1.0, 0.5],
            }],
            ..square_spec()
        };
        assert_eq!(spec.validate(), Err(SceneError::DoorOffWall(0)));
    }

    #[test]
    fn untraversed_door_is_rejected() {
        // Door on the far east wall, trajectory loops in the middle.
        let spec = SceneSpec {
            doors: vec![DoorSpec {
                a: [2.0, -0.5],
                b: [2.0, 0.5],
            }],
            ..square_spec()
        };
        assert_eq!(spec.validate(), Err(SceneError::DoorNotTraversed(0)));
    }

    #[test]
    fn doors_cut_openings_out_of_walls() {
        let spec = SceneSpec {
            walls: vec![vec![[0.0, 0.0], [10.0, 0.0]]],
            doors: vec![
                DoorSpec {
                    a: [2.0, 0.0],
                    b: [3.0, 0.0],
                },
                DoorSpec {
                    a: [7.0, 0.0],
                    b: [6.0, 0.0],
                },
            ],
            trajectory: vec![[2.5, 1.0], [2.5, -1.0], [6.5, -1.0], [6.5, 1.0]],
            frame_count: 4,
            ..square_spec()
        };
        let solid = spec.solid_wall_segments().unwrap();
        assert_eq!(solid.len(), 3);
        let lengths: Vec<f64> = solid.iter().map(Segment2::length).collect();
        assert_relative_eq!(lengths[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(lengths[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(lengths[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sigma_bounds_triangulation_error() {
        // With 1 cm noise the world-frame error of each point stays within
        // a loose multiple of sigma once re-triangulated.
        let spec = SceneSpec {
            walls: vec![vec![[2.0, -3.0], [2.0, 3.0]]],
            trajectory: vec![[0.0, -0.5], [0.0, 0.5]],
            frame_count: 4,
            include_floor: false,
            include_ceiling: false,
            noise_sigma: 0.01,
            ..square_spec()
        };
        let plane = PlaneCartesian::new(Vector3::new(1.0, 0.0, 0.0), -2.0);
        let frames = generate_frames(&spec).unwrap();
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for frame in &frames {
            for world in world_points(frame) {
                worst = worst.max(plane.distance(&world));
                count += 1;
            }
        }
        assert!(count > 100);
        assert!(worst > 1e-4, "noise had no effect: {worst}");
        assert!(worst < 0.01 * 6.0, "error {worst} too large for sigma");
    }

    #[test]
    fn spin_in_place_sweeps_headings() {
        let spec = SceneSpec {
            trajectory: vec![[0.0, 0.0]],
            frame_count: 8,
            yaw_rate_deg: 45.0,
            ..square_spec()
        };
        let poses = spec.camera_poses();
        let forward = |i: usize| {
            let c = poses[i].rotation.column(2).into_owned();
            f64::atan2(c.y, c.x)
        };
        assert_relative_eq!(forward(0), 0.0, epsilon = 1e-12);
        assert_relative_eq!(forward(2), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(forward(4), std::f64::consts::PI, epsilon = 1e-12);
    }
}
