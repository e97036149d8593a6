//! File formats: frame streams, session maps, floorplans, and rigid
//! transforms.
//!
//! Frames travel as JSON lines, one object per frame. Maps, floorplans,
//! and transform lists are single pretty-printed JSON documents carrying a
//! `schema_version`. Rotations are stored as unit quaternions in
//! `[x, y, z, w]` order; vectors and points as plain arrays. Parsers
//! reject unknown keys, version mismatches, non-unit rotations, and
//! structurally inconsistent data rather than guessing.

use std::io::{BufRead, Write};

use nalgebra::{Point2, Point3, Quaternion, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floorplan::FloorplanModel;
use crate::geometry::{PlaneCartesian, RigidTransform};
use crate::landmarks::{
    landmark_from_parts, KeyframeObservation, LandmarkConfig, LandmarkState, PlaneLandmark,
    PlaneMap, TrajectoryEntry,
};
use crate::stereo::{CameraIntrinsics, FrameRecord, SupportPoint};

/// Version stamped into every JSON document this module writes.
pub const SCHEMA_VERSION: u32 = 1;

/// A parsed rotation may deviate from unit norm by at most this.
const ROTATION_NORM_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    MalformedFrame { line: usize, message: String },
    #[error("unsupported schema version {found} (this build reads {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    InvalidData(String),
    #[error(transparent)]
    File(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDto {
    /// Unit quaternion, `[x, y, z, w]`.
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl PoseDto {
    fn from_transform(t: &RigidTransform) -> Self {
        let q = t.to_quaternion();
        PoseDto {
            rotation: [q.i, q.j, q.k, q.w],
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }

    fn to_transform(&self) -> Result<RigidTransform, IoError> {
        let [x, y, z, w] = self.rotation;
        let q = Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > ROTATION_NORM_TOL {
            return Err(IoError::InvalidData(format!(
                "rotation {:?} is not a unit quaternion",
                self.rotation
            )));
        }
        let q = Unit::new_normalize(q);
        Ok(RigidTransform::from_quaternion(
            q,
            Vector3::new(
                self.translation[0],
                self.translation[1],
                self.translation[2],
            ),
        ))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaneDto {
    normal: [f64; 3],
    offset: f64,
}

impl PlaneDto {
    fn from_plane(p: &PlaneCartesian) -> Self {
        PlaneDto {
            normal: [p.normal.x, p.normal.y, p.normal.z],
            offset: p.offset,
        }
    }

    fn to_plane(&self, context: &str) -> Result<PlaneCartesian, IoError> {
        let n = Vector3::new(self.normal[0], self.normal[1], self.normal[2]);
        if (n.norm() - 1.0).abs() > ROTATION_NORM_TOL {
            return Err(IoError::InvalidData(format!(
                "{context}: plane normal {:?} is not unit length",
                self.normal
            )));
        }
        Ok(PlaneCartesian::new(n.normalize(), self.offset))
    }
}

// ---------------------------------------------------------------------
// Frame streams (JSON lines)

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDto {
    frame_id: u64,
    pose: PoseDto,
    intrinsics: CameraIntrinsics,
    points: Vec<SupportPoint>,
}

/// Encodes one frame as a single JSON line (no trailing newline).
pub fn frame_to_json_line(frame: &FrameRecord) -> String {
    let dto = FrameDto {
        frame_id: frame.frame_id,
        pose: PoseDto::from_transform(&frame.pose),
        intrinsics: frame.intrinsics,
        points: frame.points.clone(),
    };
    serde_json::to_string(&dto).expect("frame serialization cannot fail")
}

/// Parses one frame line; the caller owns line-number bookkeeping.
pub fn parse_frame_line(line: &str) -> Result<FrameRecord, IoError> {
    let dto: FrameDto = serde_json::from_str(line)?;
    if dto.intrinsics.fx <= 0.0 || dto.intrinsics.fy <= 0.0 || dto.intrinsics.b <= 0.0 {
        return Err(IoError::InvalidData(
            "intrinsics need positive focal lengths and baseline".into(),
        ));
    }
    for sp in &dto.points {
        if sp.d <= 0.0 {
            return Err(IoError::InvalidData(format!(
                "support point at ({}, {}) has non-positive disparity {}",
                sp.u, sp.v, sp.d
            )));
        }
    }
    Ok(FrameRecord {
        frame_id: dto.frame_id,
        pose: dto.pose.to_transform()?,
        intrinsics: dto.intrinsics,
        points: dto.points,
    })
}

/// Reads a whole frame stream, reporting the 1-based line of the first
/// malformed record. Blank lines are skipped.
pub fn read_frames(reader: impl BufRead) -> Result<Vec<FrameRecord>, IoError> {
    let mut frames = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_frame_line(&line) {
            Ok(frame) => frames.push(frame),
            Err(e) => {
                return Err(IoError::MalformedFrame {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(frames)
}

/// Like [`read_frames`], but malformed records are collected by 1-based
/// line number instead of aborting the read. I/O failures still abort.
pub fn read_frames_lenient(
    reader: impl BufRead,
) -> Result<(Vec<FrameRecord>, Vec<usize>), IoError> {
    let mut frames = Vec::new();
    let mut bad_lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_frame_line(&line) {
            Ok(frame) => frames.push(frame),
            Err(_) => bad_lines.push(i + 1),
        }
    }
    Ok((frames, bad_lines))
}

pub fn write_frames(mut writer: impl Write, frames: &[FrameRecord]) -> Result<(), IoError> {
    for frame in frames {
        writeln!(writer, "{}", frame_to_json_line(frame))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Session maps

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationDto {
    keyframe_id: u64,
    plane: PlaneDto,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandmarkDto {
    id: u64,
    state: LandmarkState,
    plane: PlaneDto,
    support: Vec<[f64; 3]>,
    frames_observed: u64,
    observations: Vec<ObservationDto>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDto {
    frame_id: u64,
    pose: PoseDto,
    keyframe: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    schema_version: u32,
    config: LandmarkConfig,
    epoch: u64,
    next_id: u64,
    landmarks: Vec<LandmarkDto>,
    trajectory: Vec<TrajectoryDto>,
}

pub fn map_to_json(map: &PlaneMap) -> String {
    let file = MapFile {
        schema_version: SCHEMA_VERSION,
        config: map.config,
        epoch: map.epoch(),
        next_id: map.next_id(),
        landmarks: map
            .landmarks()
            .iter()
            .map(|lm| LandmarkDto {
                id: lm.id,
                state: lm.state,
                plane: PlaneDto::from_plane(&lm.plane),
                support: lm.support.iter().map(|p| [p.x, p.y, p.z]).collect(),
                frames_observed: lm.frames_observed,
                observations: lm
                    .observations
                    .iter()
                    .map(|o| ObservationDto {
                        keyframe_id: o.keyframe_id,
                        plane: PlaneDto::from_plane(&o.plane),
                    })
                    .collect(),
            })
            .collect(),
        trajectory: map
            .trajectory
            .iter()
            .map(|t| TrajectoryDto {
                frame_id: t.frame_id,
                pose: PoseDto::from_transform(&t.pose),
                keyframe: t.keyframe,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("map serialization cannot fail")
}

pub fn parse_map(text: &str) -> Result<PlaneMap, IoError> {
    let file: MapFile = serde_json::from_str(text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaVersion {
            found: file.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let mut landmarks: Vec<PlaneLandmark> = Vec::with_capacity(file.landmarks.len());
    for dto in file.landmarks {
        let context = format!("landmark {}", dto.id);
        if dto.id >= file.next_id {
            return Err(IoError::InvalidData(format!(
                "{context}: id not below next_id {}",
                file.next_id
            )));
        }
        if landmarks.iter().any(|l| l.id == dto.id) {
            return Err(IoError::InvalidData(format!("{context}: duplicate id")));
        }
        let plane = dto.plane.to_plane(&context)?;
        let mut observations = Vec::with_capacity(dto.observations.len());
        for (i, o) in dto.observations.iter().enumerate() {
            if i > 0 && o.keyframe_id <= dto.observations[i - 1].keyframe_id {
                return Err(IoError::InvalidData(format!(
                    "{context}: observations not sorted by keyframe id"
                )));
            }
            observations.push(KeyframeObservation {
                keyframe_id: o.keyframe_id,
                plane: o.plane.to_plane(&context)?,
            });
        }
        let support = dto
            .support
            .iter()
            .map(|&[x, y, z]| Point3::new(x, y, z))
            .collect();
        landmarks.push(landmark_from_parts(
            dto.id,
            dto.state,
            plane,
            support,
            dto.frames_observed,
            observations,
        ));
    }
    let mut trajectory = Vec::with_capacity(file.trajectory.len());
    for t in file.trajectory {
        trajectory.push(TrajectoryEntry {
            frame_id: t.frame_id,
            pose: t.pose.to_transform()?,
            keyframe: t.keyframe,
        });
    }
    Ok(PlaneMap::from_parts(
        file.config,
        landmarks,
        trajectory,
        file.next_id,
        file.epoch,
    ))
}

// ---------------------------------------------------------------------
// Floorplans

/// The floorplan document: selected walls as vertex-index pairs over a
/// deduplicated vertex table, plus the evidence useful for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorplanFile {
    pub schema_version: u32,
    pub epoch: u64,
    pub objective: f64,
    pub energies: crate::floorplan::EnergyBreakdown,
    pub vertices: Vec<[f64; 2]>,
    /// Selected walls as `[vertex, vertex]` index pairs.
    pub walls: Vec<[usize; 2]>,
    /// Trajectory-crossed candidate spans: navigable gaps.
    pub openings: Vec<[[f64; 2]; 2]>,
    /// Keyframe ground positions, in order.
    pub trajectory: Vec<[f64; 2]>,
    /// Ground projections of the support behind the selected walls.
    pub support_points: Vec<[f64; 2]>,
}

/// Flattens a floorplan model into its document form. Wall endpoints that
/// sit on an arrangement vertex share one table entry; free ends get their
/// own. `trajectory` is the keyframe polyline the floorplan was built
/// with.
pub fn floorplan_to_file(model: &FloorplanModel, trajectory: &[Point2<f64>]) -> FloorplanFile {
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut index_of_vertex: Vec<Option<usize>> = vec![None; model.vertices.len()];
    let mut walls = Vec::with_capacity(model.walls.len());
    let mut support_points = Vec::new();
    for wall in &model.walls {
        let mut pair = [0usize; 2];
        for (slot, end) in pair.iter_mut().zip(0..2) {
            let fallback = if end == 0 { wall.seg.a } else { wall.seg.b };
            *slot = match wall.endpoints[end] {
                Some(vid) => *index_of_vertex[vid].get_or_insert_with(|| {
                    let p = model.vertices[vid].position;
                    vertices.push([p.x, p.y]);
                    vertices.len() - 1
                }),
                None => {
                    vertices.push([fallback.x, fallback.y]);
                    vertices.len() - 1
                }
            };
        }
        walls.push(pair);
        support_points.extend(wall.support2d.iter().map(|p| [p.x, p.y]));
    }
    FloorplanFile {
        schema_version: SCHEMA_VERSION,
        epoch: model.epoch,
        objective: model.objective,
        energies: model.energies,
        vertices,
        walls,
        openings: model
            .openings
            .iter()
            .map(|o| [[o.seg.a.x, o.seg.a.y], [o.seg.b.x, o.seg.b.y]])
            .collect(),
        trajectory: trajectory.iter().map(|p| [p.x, p.y]).collect(),
        support_points,
    }
}

impl FloorplanFile {
    /// Selected walls as ground-plane segments, in document order.
    pub fn wall_segments(&self) -> Vec<crate::geometry::Segment2> {
        self.walls
            .iter()
            .map(|&[a, b]| {
                crate::geometry::Segment2::new(
                    Point2::new(self.vertices[a][0], self.vertices[a][1]),
                    Point2::new(self.vertices[b][0], self.vertices[b][1]),
                )
            })
            .collect()
    }
}

pub fn floorplan_to_json(model: &FloorplanModel, trajectory: &[Point2<f64>]) -> String {
    serde_json::to_string_pretty(&floorplan_to_file(model, trajectory))
        .expect("floorplan serialization cannot fail")
}

pub fn parse_floorplan(text: &str) -> Result<FloorplanFile, IoError> {
    let file: FloorplanFile = serde_json::from_str(text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaVersion {
            found: file.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    for (i, wall) in file.walls.iter().enumerate() {
        if wall.iter().any(|&v| v >= file.vertices.len()) {
            return Err(IoError::InvalidData(format!(
                "wall {i} references a vertex outside the table of {}",
                file.vertices.len()
            )));
        }
    }
    Ok(file)
}

// ---------------------------------------------------------------------
// Scene specifications

/// Parses and validates a synthetic scene description.
pub fn parse_scene(text: &str) -> Result<crate::scenegen::SceneSpec, IoError> {
    let spec: crate::scenegen::SceneSpec = serde_json::from_str(text)?;
    spec.validate()
        .map_err(|e| IoError::InvalidData(e.to_string()))?;
    Ok(spec)
}

// ---------------------------------------------------------------------
// Rigid transforms

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformsFile {
    schema_version: u32,
    transforms: Vec<PoseDto>,
}

pub fn transforms_to_json(transforms: &[RigidTransform]) -> String {
    let file = TransformsFile {
        schema_version: SCHEMA_VERSION,
        transforms: transforms.iter().map(PoseDto::from_transform).collect(),
    };
    serde_json::to_string_pretty(&file).expect("transform serialization cannot fail")
}

pub fn parse_transforms(text: &str) -> Result<Vec<RigidTransform>, IoError> {
    let file: TransformsFile = serde_json::from_str(text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaVersion {
            found: file.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    file.transforms.iter().map(PoseDto::to_transform).collect()
}
