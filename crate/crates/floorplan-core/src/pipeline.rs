//! Session orchestration: frames in, landmark map and floorplan series
//! out.
//!
//! Each frame is triangulated, meshed, and mined for plane features in
//! the camera frame; features move to world coordinates through the
//! frame's pose and fold into the landmark map. Reconstruction runs every
//! `cadence` frames and once more at the end, so the final floorplan
//! depends only on the final map, never on the cadence.
//!
//! The map has a single writer: the ingestion loop. In threaded mode a
//! worker consumes map snapshots latest-wins for the intermediate
//! reconstructions; the final one always runs after ingestion on the full
//! map, so it stays deterministic.

use std::sync::mpsc;
use std::time::{Duration, Instant};

use nalgebra::{Point2, Point3};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::extraction::extract_planes;
use crate::floorplan::{generate_problem, solve_selection, FloorplanError, FloorplanModel};
use crate::landmarks::{MapSnapshot, Observation, PlaneMap, TrajectoryEntry};
use crate::mesh::{build_mesh, prune_mesh, MeshError};
use crate::stereo::{triangulate, FrameRecord, StereoError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame {frame}: {source}")]
    BadMeasurement {
        frame: u64,
        #[source]
        source: StereoError,
    },
    #[error(transparent)]
    Floorplan(#[from] FloorplanError),
}

/// Wall time split across the pipeline stages. The named stages are
/// measured; `other` is the remainder, so the four parts always sum to
/// `total`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub plane_extraction: Duration,
    pub segment_generation: Duration,
    pub segment_selection: Duration,
    pub other: Duration,
    pub total: Duration,
    pub frames: usize,
}

impl StageTimings {
    fn close(&mut self, started: Instant) {
        self.total = started.elapsed();
        self.other = self
            .total
            .saturating_sub(self.plane_extraction)
            .saturating_sub(self.segment_generation)
            .saturating_sub(self.segment_selection);
    }

    /// Frames processed per second of total wall time.
    pub fn fps(&self) -> f64 {
        if self.total.is_zero() {
            return 0.0;
        }
        self.frames as f64 / self.total.as_secs_f64()
    }

    /// Multi-line human-readable report.
    pub fn report(&self) -> String {
        let line = |name: &str, d: Duration| {
            let share = if self.total.is_zero() {
                0.0
            } else {
                100.0 * d.as_secs_f64() / self.total.as_secs_f64()
            };
            format!("{name:<20} {:>10.3} ms {share:>5.1}%\n", d.as_secs_f64() * 1e3)
        };
        let mut out = String::new();
        out.push_str(&line("plane extraction", self.plane_extraction));
        out.push_str(&line("segment generation", self.segment_generation));
        out.push_str(&line("segment selection", self.segment_selection));
        out.push_str(&line("other", self.other));
        out.push_str(&line("total", self.total));
        out.push_str(&format!(
            "frames {:>14} {:>13.1} fps\n",
            self.frames,
            self.fps()
        ));
        out
    }
}

/// Everything a session run produces.
#[derive(Debug)]
pub struct SessionOutput {
    pub map: PlaneMap,
    /// One floorplan per reconstruction tick, oldest first; the last one
    /// reflects the complete map.
    pub floorplans: Vec<FloorplanModel>,
    pub timings: StageTimings,
}

/// Runs one full session over an in-memory frame stream.
pub fn run_session(
    cfg: &PipelineConfig,
    frames: &[FrameRecord],
) -> Result<SessionOutput, PipelineError> {
    if cfg.threaded_reconstruction {
        run_session_threaded(cfg, frames)
    } else {
        run_session_sync(cfg, frames)
    }
}

fn run_session_sync(
    cfg: &PipelineConfig,
    frames: &[FrameRecord],
) -> Result<SessionOutput, PipelineError> {
    let started = Instant::now();
    let mut map = PlaneMap::new(cfg.landmarks);
    let mut timings = StageTimings::default();
    let mut floorplans = Vec::new();
    let mut last_reconstructed_epoch = None;
    for (i, frame) in frames.iter().enumerate() {
        ingest_frame(cfg, &mut map, frame, i, &mut timings)?;
        if (i + 1) % cfg.cadence == 0 {
            let snap = map.snapshot();
            floorplans.push(reconstruct_timed(&snap, cfg, &mut timings)?);
            last_reconstructed_epoch = Some(snap.epoch);
        }
    }
    timings.frames = frames.len();
    if !frames.is_empty() && last_reconstructed_epoch != Some(map.epoch()) {
        let snap = map.snapshot();
        floorplans.push(reconstruct_timed(&snap, cfg, &mut timings)?);
    }
    timings.close(started);
    Ok(SessionOutput {
        map,
        floorplans,
        timings,
    })
}

/// Threaded variant: intermediate reconstructions happen on a worker that
/// always grabs the newest pending snapshot, so a slow solve skips
/// snapshots instead of stalling ingestion. How many intermediates come
/// back depends on scheduling; the final floorplan does not.
fn run_session_threaded(
    cfg: &PipelineConfig,
    frames: &[FrameRecord],
) -> Result<SessionOutput, PipelineError> {
    let started = Instant::now();
    let mut map = PlaneMap::new(cfg.landmarks);
    let mut timings = StageTimings::default();
    let (snap_tx, snap_rx) = mpsc::channel::<MapSnapshot>();
    let worker_cfg = cfg.floorplan;
    let worker = std::thread::spawn(move || {
        let mut results: Vec<Result<FloorplanModel, FloorplanError>> = Vec::new();
        let mut gen_time = Duration::ZERO;
        let mut sel_time = Duration::ZERO;
        while let Ok(first) = snap_rx.recv() {
            // Latest wins: drain whatever queued up behind it.
            let mut snap = first;
            while let Ok(newer) = snap_rx.try_recv() {
                snap = newer;
            }
            let t0 = Instant::now();
            let generated = generate_problem(&snap, &worker_cfg);
            gen_time += t0.elapsed();
            match generated {
                Ok((problem, skipped)) => {
                    let t1 = Instant::now();
                    results.push(solve_selection(&problem, &worker_cfg, snap.epoch, skipped));
                    sel_time += t1.elapsed();
                }
                Err(e) => results.push(Err(e)),
            }
        }
        (results, gen_time, sel_time)
    });

    let mut ingest_result = Ok(());
    for (i, frame) in frames.iter().enumerate() {
        if let Err(e) = ingest_frame(cfg, &mut map, frame, i, &mut timings) {
            ingest_result = Err(e);
            break;
        }
        if (i + 1) % cfg.cadence == 0 {
            // The worker owning the receiver has panicked if this fails.
            let _ = snap_tx.send(map.snapshot());
        }
    }
    drop(snap_tx);
    let (worker_results, gen_time, sel_time) = worker.join().expect("reconstruction worker");
    timings.segment_generation += gen_time;
    timings.segment_selection += sel_time;
    ingest_result?;
    let mut floorplans = Vec::new();
    for r in worker_results {
        floorplans.push(r?);
    }
    timings.frames = frames.len();
    if !frames.is_empty() && floorplans.last().map(|f| f.epoch) != Some(map.epoch()) {
        let snap = map.snapshot();
        floorplans.push(reconstruct_timed(&snap, cfg, &mut timings)?);
    }
    timings.close(started);
    Ok(SessionOutput {
        map,
        floorplans,
        timings,
    })
}

/// Triangulates, meshes, and extracts one frame, then folds the result
/// into the map. Frames too sparse to mesh still contribute their pose.
fn ingest_frame(
    cfg: &PipelineConfig,
    map: &mut PlaneMap,
    frame: &FrameRecord,
    index: usize,
    timings: &mut StageTimings,
) -> Result<(), PipelineError> {
    let is_keyframe = index % cfg.keyframe_stride == 0;
    map.push_pose(TrajectoryEntry {
        frame_id: frame.frame_id,
        pose: frame.pose,
        keyframe: is_keyframe,
    });

    let t0 = Instant::now();
    let mut uv = Vec::with_capacity(frame.points.len());
    let mut cam = Vec::with_capacity(frame.points.len());
    for sp in &frame.points {
        let p = triangulate(sp, &frame.intrinsics).map_err(|source| {
            PipelineError::BadMeasurement {
                frame: frame.frame_id,
                source,
            }
        })?;
        uv.push(Point2::new(sp.u, sp.v));
        cam.push(p);
    }
    let features = match build_mesh(&uv, &cam) {
        Ok(mesh) => {
            let pruned = prune_mesh(&mesh, &cfg.mesh);
            extract_planes(&pruned, &cfg.extraction).features
        }
        // A frame without enough spread carries no plane evidence.
        Err(MeshError::DegenerateInput) => Vec::new(),
    };
    timings.plane_extraction += t0.elapsed();

    for feature in features {
        let world_points: Vec<Point3<f64>> = feature
            .support
            .iter()
            .map(|&i| frame.pose.apply(&cam[i]))
            .collect();
        let obs = Observation {
            plane: crate::geometry::transform_plane(&feature.plane, &frame.pose),
            points: world_points,
        };
        map.observe(&obs, frame.frame_id, is_keyframe);
    }
    Ok(())
}

fn reconstruct_timed(
    snapshot: &MapSnapshot,
    cfg: &PipelineConfig,
    timings: &mut StageTimings,
) -> Result<FloorplanModel, PipelineError> {
    let t0 = Instant::now();
    let (problem, skipped) = generate_problem(snapshot, &cfg.floorplan)?;
    timings.segment_generation += t0.elapsed();
    let t1 = Instant::now();
    let model = solve_selection(&problem, &cfg.floorplan, snapshot.epoch, skipped)?;
    timings.segment_selection += t1.elapsed();
    Ok(model)
}

/// Runs the merge protocol: maps are folded left to right, each
/// subsequent map carried into the first map's frame by its transform,
/// then one reconstruction runs on the merged result. `transforms[i]`
/// maps `maps[i + 1]` coordinates into the accumulated frame.
pub fn run_merge(
    cfg: &PipelineConfig,
    maps: Vec<PlaneMap>,
    transforms: &[crate::geometry::RigidTransform],
) -> Result<(PlaneMap, FloorplanModel), PipelineError> {
    assert!(
        transforms.len() + 1 == maps.len(),
        "one transform per map after the first"
    );
    let mut maps = maps.into_iter();
    let mut merged = maps.next().expect("at least one map");
    for (incoming, t) in maps.zip(transforms) {
        merged = crate::landmarks::merge_maps(&incoming, &merged, t);
    }
    let mut timings = StageTimings::default();
    let snap = merged.snapshot();
    let model = reconstruct_timed(&snap, cfg, &mut timings)?;
    Ok((merged, model))
}
