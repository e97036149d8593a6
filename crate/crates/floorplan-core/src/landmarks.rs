//! Plane landmarks and the map that owns them.
//!
//! Landmarks start out invalid and earn validity through observation:
//! strictly more than `promote_frames` frames and strictly more than
//! `promote_keyframes` distinct keyframes. Only keyframes create landmarks
//! and contribute support points; ordinary frames just confirm existence.
//! Landmarks that decay to at most one keyframe observation can be demoted
//! back to invalid. Pairs that describe the same physical plane are merged,
//! keeping the landmark with the richer keyframe history.

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PlaneCartesian, RigidTransform};
use crate::ransac::{fit_plane_ransac, RansacConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkState {
    Invalid,
    Valid,
}

/// One keyframe's view of a landmark: which keyframe saw it and the plane
/// it measured. Kept so later residual pruning can re-evaluate the
/// keyframe history against the current plane estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyframeObservation {
    pub keyframe_id: u64,
    pub plane: PlaneCartesian,
}

#[derive(Debug, Clone)]
pub struct PlaneLandmark {
    pub id: u64,
    pub state: LandmarkState,
    pub plane: PlaneCartesian,
    /// World-frame support points, aggregated from keyframe observations
    /// and capped by seeded downsampling.
    pub support: Vec<Point3<f64>>,
    /// Number of distinct frames (keyframes included) that observed this
    /// landmark.
    pub frames_observed: u64,
    /// Distinct keyframe observations, sorted by keyframe id.
    pub observations: Vec<KeyframeObservation>,
    last_frame: Option<u64>,
}

impl PlaneLandmark {
    pub fn keyframe_count(&self) -> usize {
        self.observations.len()
    }

    /// Smallest distance from any of `points` to this landmark's plane.
    fn min_distance_from(&self, points: &[Point3<f64>]) -> f64 {
        points
            .iter()
            .map(|p| self.plane.distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A world-frame plane observation handed to the map: the fitted plane and
/// the support points behind it.
#[derive(Debug, Clone)]
pub struct Observation {
    pub plane: PlaneCartesian,
    pub points: Vec<Point3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkConfig {
    /// Maximum angle between feature and landmark normals for a match,
    /// degrees.
    pub theta_m_deg: f64,
    /// Maximum distance from a feature point to the landmark plane for a
    /// match, meters.
    pub d_m: f64,
    /// Promotion needs strictly more frames than this.
    pub promote_frames: u64,
    /// Promotion needs strictly more distinct keyframes than this.
    pub promote_keyframes: usize,
    /// Support points kept per landmark; overflow is downsampled.
    pub support_cap: usize,
    /// Hypothesis count for support re-fits.
    pub refit_iterations: usize,
    /// Base seed for re-fit and downsampling RNG streams.
    pub seed: u64,
}

impl Default for LandmarkConfig {
    fn default() -> Self {
        LandmarkConfig {
            theta_m_deg: 5.0,
            d_m: 0.02,
            promote_frames: 30,
            promote_keyframes: 3,
            support_cap: 5000,
            refit_iterations: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LandmarkError {
    #[error("no landmark with id {0}")]
    UnknownLandmark(u64),
    #[error("landmarks {0} and {1} do not describe the same plane")]
    MergePreconditionNotMet(u64, u64),
}

/// A pose in the session trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryEntry {
    pub frame_id: u64,
    pub pose: RigidTransform,
    pub keyframe: bool,
}

/// What [`PlaneMap::observe`] did with a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserveOutcome {
    Matched(u64),
    Created(u64),
    /// Unmatched feature on a non-keyframe: nothing recorded.
    Ignored,
}

/// Immutable copy of the valid part of the map, safe to hand to a
/// reconstruction worker while the map keeps evolving. The epoch is the
/// map's version, advancing with every recorded change, so of two
/// snapshots from one map the later one carries the larger epoch.
#[derive(Debug, Clone)]
pub struct MapSnapshot {
    pub epoch: u64,
    pub landmarks: Vec<PlaneLandmark>,
    pub trajectory: Vec<TrajectoryEntry>,
}

/// The landmark map for one session. Single-writer: all mutation goes
/// through `&mut self`; concurrent readers work on [`MapSnapshot`]s.
#[derive(Debug, Clone)]
pub struct PlaneMap {
    pub config: LandmarkConfig,
    landmarks: Vec<PlaneLandmark>,
    pub trajectory: Vec<TrajectoryEntry>,
    next_id: u64,
    epoch: u64,
    /// Support points dropped by re-fits since the map was created.
    pub refit_outliers_dropped: u64,
}

impl PlaneMap {
    pub fn new(config: LandmarkConfig) -> Self {
        PlaneMap {
            config,
            landmarks: Vec::new(),
            trajectory: Vec::new(),
            next_id: 0,
            epoch: 0,
            refit_outliers_dropped: 0,
        }
    }

    pub fn landmarks(&self) -> &[PlaneLandmark] {
        &self.landmarks
    }

    pub fn landmark(&self, id: u64) -> Option<&PlaneLandmark> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Restores a map from its serialized parts.
    pub fn from_parts(
        config: LandmarkConfig,
        landmarks: Vec<PlaneLandmark>,
        trajectory: Vec<TrajectoryEntry>,
        next_id: u64,
        epoch: u64,
    ) -> Self {
        PlaneMap {
            config,
            landmarks,
            trajectory,
            next_id,
            epoch,
            refit_outliers_dropped: 0,
        }
    }

    pub fn push_pose(&mut self, entry: TrajectoryEntry) {
        self.epoch += 1;
        self.trajectory.push(entry);
    }

    /// Finds the landmark this observation re-measures: normals within
    /// `theta_m_deg` and at least one observation point within `d_m` of the
    /// landmark plane. Among candidates, the smallest normal angle wins;
    /// ties resolve to the smaller id by scan order.
    pub fn match_feature(&self, obs: &Observation) -> Option<u64> {
        let max_angle = self.config.theta_m_deg.to_radians();
        let mut best: Option<(f64, u64)> = None;
        for lm in &self.landmarks {
            let angle = lm.plane.normal_angle(&obs.plane);
            if angle >= max_angle {
                continue;
            }
            if lm.min_distance_from(&obs.points) >= self.config.d_m {
                continue;
            }
            if best.map_or(true, |(a, _)| angle < a) {
                best = Some((angle, lm.id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Folds one world-frame observation into the map.
    ///
    /// Matched landmarks gain a frame observation; on keyframes they also
    /// gain the observation record and the support points, followed by a
    /// support re-fit. Unmatched features create a new invalid landmark on
    /// keyframes and are ignored otherwise.
    pub fn observe(&mut self, obs: &Observation, frame_id: u64, is_keyframe: bool) -> ObserveOutcome {
        self.epoch += 1;
        if let Some(id) = self.match_feature(obs) {
            let idx = self.landmarks.iter().position(|l| l.id == id).unwrap();
            {
                let lm = &mut self.landmarks[idx];
                if lm.last_frame != Some(frame_id) {
                    lm.frames_observed += 1;
                    lm.last_frame = Some(frame_id);
                }
                if is_keyframe {
                    if let Err(pos) = lm
                        .observations
                        .binary_search_by_key(&frame_id, |o| o.keyframe_id)
                    {
                        lm.observations.insert(
                            pos,
                            KeyframeObservation {
                                keyframe_id: frame_id,
                                plane: obs.plane,
                            },
                        );
                    }
                    lm.support.extend_from_slice(&obs.points);
                }
            }
            if is_keyframe {
                self.cap_and_refit(idx);
            }
            self.maybe_promote(idx);
            ObserveOutcome::Matched(id)
        } else if is_keyframe {
            let id = self.next_id;
            self.next_id += 1;
            let mut lm = PlaneLandmark {
                id,
                state: LandmarkState::Invalid,
                plane: obs.plane,
                support: obs.points.clone(),
                frames_observed: 1,
                observations: vec![KeyframeObservation {
                    keyframe_id: frame_id,
                    plane: obs.plane,
                }],
                last_frame: Some(frame_id),
            };
            Self::cap_support(&mut lm, &self.config);
            self.landmarks.push(lm);
            ObserveOutcome::Created(id)
        } else {
            ObserveOutcome::Ignored
        }
    }

    fn maybe_promote(&mut self, idx: usize) {
        let lm = &mut self.landmarks[idx];
        if lm.state == LandmarkState::Invalid
            && lm.frames_observed > self.config.promote_frames
            && lm.keyframe_count() > self.config.promote_keyframes
        {
            lm.state = LandmarkState::Valid;
        }
    }

    /// Demotes the landmark to invalid if its keyframe history has decayed
    /// to at most one observation. Returns whether a demotion happened.
    pub fn demote(&mut self, id: u64) -> Result<bool, LandmarkError> {
        let lm = self
            .landmarks
            .iter_mut()
            .find(|l| l.id == id)
            .ok_or(LandmarkError::UnknownLandmark(id))?;
        if lm.state == LandmarkState::Valid && lm.keyframe_count() <= 1 {
            lm.state = LandmarkState::Invalid;
            self.epoch += 1;
            return Ok(true);
        }
        Ok(false)
    }

    /// Drops keyframe observations whose plane now sits further than
    /// `residual_gate` (meters) from the landmark's support centroid, then
    /// re-evaluates demotion for every landmark. Returns the number of
    /// observations dropped.
    pub fn prune_observations(&mut self, residual_gate: f64) -> usize {
        let mut dropped = 0;
        for lm in &mut self.landmarks {
            if lm.support.is_empty() {
                continue;
            }
            let mut centroid = nalgebra::Vector3::zeros();
            for p in &lm.support {
                centroid += p.coords;
            }
            centroid /= lm.support.len() as f64;
            let centroid = Point3::from(centroid);
            let before = lm.observations.len();
            lm.observations.retain(|o| o.plane.distance(&centroid) <= residual_gate);
            dropped += before - lm.observations.len();
        }
        if dropped > 0 {
            self.epoch += 1;
        }
        let ids: Vec<u64> = self.landmarks.iter().map(|l| l.id).collect();
        for id in ids {
            let _ = self.demote(id);
        }
        dropped
    }

    /// True when the two landmarks pass the merge test: normals within the
    /// match angle and each support set reaching the other's plane within
    /// `d_m`.
    pub fn merge_precondition(&self, a: &PlaneLandmark, b: &PlaneLandmark) -> bool {
        let max_angle = self.config.theta_m_deg.to_radians();
        a.plane.normal_angle(&b.plane) < max_angle
            && b.min_distance_from(&a.support) < self.config.d_m
            && a.min_distance_from(&b.support) < self.config.d_m
    }

    /// Merges two landmarks that describe the same plane. The one with
    /// more keyframe observations survives (ties: the smaller id); the
    /// other's counts, observations, and support transfer to it, followed
    /// by a support re-fit. Returns the surviving id.
    pub fn merge_landmarks(&mut self, a: u64, b: u64) -> Result<u64, LandmarkError> {
        let ia = self
            .landmarks
            .iter()
            .position(|l| l.id == a)
            .ok_or(LandmarkError::UnknownLandmark(a))?;
        let ib = self
            .landmarks
            .iter()
            .position(|l| l.id == b)
            .ok_or(LandmarkError::UnknownLandmark(b))?;
        if ia == ib {
            return Err(LandmarkError::MergePreconditionNotMet(a, b));
        }
        if !self.merge_precondition(&self.landmarks[ia], &self.landmarks[ib]) {
            return Err(LandmarkError::MergePreconditionNotMet(a, b));
        }
        let (wi, li) = {
            let la = &self.landmarks[ia];
            let lb = &self.landmarks[ib];
            let a_wins = match la.keyframe_count().cmp(&lb.keyframe_count()) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => a < b,
            };
            if a_wins {
                (ia, ib)
            } else {
                (ib, ia)
            }
        };
        let loser = self.landmarks.remove(li);
        let wi = if li < wi { wi - 1 } else { wi };
        self.absorb(wi, loser);
        self.epoch += 1;
        Ok(self.landmarks[wi].id)
    }

    /// Transfers a removed landmark's history into `self.landmarks[wi]`.
    fn absorb(&mut self, wi: usize, loser: PlaneLandmark) {
        {
            let w = &mut self.landmarks[wi];
            w.frames_observed += loser.frames_observed;
            for obs in loser.observations {
                if let Err(pos) = w
                    .observations
                    .binary_search_by_key(&obs.keyframe_id, |o| o.keyframe_id)
                {
                    w.observations.insert(pos, obs);
                }
            }
            // A bit-identical support point is the same measurement seen
            // again; keeping one copy makes merging a map with a copy of
            // itself a no-op instead of a cap-and-downsample reshuffle.
            let mut seen: std::collections::HashSet<[u64; 3]> =
                w.support.iter().map(point_key).collect();
            for p in loser.support {
                if seen.insert(point_key(&p)) {
                    w.support.push(p);
                }
            }
        }
        self.cap_and_refit(wi);
        self.maybe_promote(wi);
    }

    fn cap_support(lm: &mut PlaneLandmark, cfg: &LandmarkConfig) {
        if lm.support.len() <= cfg.support_cap {
            return;
        }
        // Seeded uniform downsample; keep original order for determinism.
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed
                .wrapping_add(lm.id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                .wrapping_add(lm.support.len() as u64),
        );
        let n = lm.support.len();
        let mut keep: Vec<usize> = (0..n).collect();
        for i in 0..cfg.support_cap {
            let j = rng.gen_range(i..n);
            keep.swap(i, j);
        }
        keep.truncate(cfg.support_cap);
        keep.sort_unstable();
        lm.support = keep.iter().map(|&i| lm.support[i]).collect();
    }

    /// Caps the support set and re-fits the plane over it. The re-fit
    /// keeps the RANSAC consensus and discards outliers; the refreshed
    /// normal is aligned with the previous orientation so matching stays
    /// stable across updates.
    fn cap_and_refit(&mut self, idx: usize) {
        let cfg = self.config;
        let lm = &mut self.landmarks[idx];
        Self::cap_support(lm, &cfg);
        if lm.support.len() < 3 {
            return;
        }
        let ransac = RansacConfig {
            iterations: cfg.refit_iterations,
            dist_gate: cfg.d_m,
            // Re-fits keep whatever consensus RANSAC finds; the acceptance
            // gate applies to fresh extractions, not to maintenance.
            min_inlier_ratio: 0.0,
            seed: cfg
                .seed
                .wrapping_add(lm.id.wrapping_mul(0xD1B5_4A32_D192_ED03))
                .wrapping_add(lm.frames_observed),
        };
        if let Ok(fit) = fit_plane_ransac(&lm.support, &ransac) {
            let plane = if fit.plane.normal.dot(&lm.plane.normal) < 0.0 {
                fit.plane.flipped()
            } else {
                fit.plane
            };
            let dropped = lm.support.len() - fit.inliers.len();
            if dropped > 0 {
                lm.support = fit.inliers.iter().map(|&i| lm.support[i]).collect();
            }
            lm.plane = plane;
            self.refit_outliers_dropped += dropped as u64;
        }
    }

    /// Repeatedly merges the first mergeable pair (id order) until no pair
    /// passes the precondition. Returns the number of merges performed.
    pub fn merge_pass(&mut self) -> usize {
        let mut merges = 0;
        loop {
            let mut todo: Option<(u64, u64)> = None;
            'scan: for i in 0..self.landmarks.len() {
                for j in (i + 1)..self.landmarks.len() {
                    if self.merge_precondition(&self.landmarks[i], &self.landmarks[j]) {
                        todo = Some((self.landmarks[i].id, self.landmarks[j].id));
                        break 'scan;
                    }
                }
            }
            match todo {
                Some((a, b)) => {
                    self.merge_landmarks(a, b).expect("precondition just checked");
                    merges += 1;
                }
                None => return merges,
            }
        }
    }

    /// Immutable copy of the valid landmarks and trajectory, stamped with
    /// the map's current version.
    pub fn snapshot(&self) -> MapSnapshot {
        MapSnapshot {
            epoch: self.epoch,
            landmarks: self
                .landmarks
                .iter()
                .filter(|l| l.state == LandmarkState::Valid)
                .cloned()
                .collect(),
            trajectory: self.trajectory.clone(),
        }
    }
}

/// Exact bit pattern of a point, the identity used to spot duplicate
/// measurements.
fn point_key(p: &Point3<f64>) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

/// Builds a landmark directly; used by deserialization and tests.
pub fn landmark_from_parts(
    id: u64,
    state: LandmarkState,
    plane: PlaneCartesian,
    support: Vec<Point3<f64>>,
    frames_observed: u64,
    observations: Vec<KeyframeObservation>,
) -> PlaneLandmark {
    PlaneLandmark {
        id,
        state,
        plane,
        support,
        frames_observed,
        observations,
        last_frame: None,
    }
}

/// Merges a finished session (`current`) into an earlier map (`matching`).
///
/// `t_cm` maps current-map coordinates into the matching map's frame.
/// Current landmarks that duplicate a matching-map landmark transfer their
/// history into it (the matching map's landmark always survives); the rest
/// are appended under fresh ids. Frame ids from the current session are
/// shifted past the matching map's largest id, and the transformed current
/// trajectory is appended. A final merge pass restores the no-duplicates
/// invariant across the union.
pub fn merge_maps(current: &PlaneMap, matching: &PlaneMap, t_cm: &RigidTransform) -> PlaneMap {
    let mut merged = matching.clone();
    let id_offset = matching
        .trajectory
        .iter()
        .map(|t| t.frame_id + 1)
        .max()
        .unwrap_or(0);

    for lm in &current.landmarks {
        let mut moved = lm.clone();
        moved.plane = crate::geometry::transform_plane(&lm.plane, t_cm);
        moved.support = lm.support.iter().map(|p| t_cm.apply(p)).collect();
        for obs in &mut moved.observations {
            obs.keyframe_id += id_offset;
            obs.plane = crate::geometry::transform_plane(&obs.plane, t_cm);
        }
        moved.last_frame = None;

        let dup = merged
            .landmarks
            .iter()
            .find(|m| merged.merge_precondition(m, &moved))
            .map(|m| m.id);
        match dup {
            Some(winner_id) => {
                let wi = merged
                    .landmarks
                    .iter()
                    .position(|l| l.id == winner_id)
                    .unwrap();
                merged.absorb(wi, moved);
            }
            None => {
                moved.id = merged.next_id;
                merged.next_id += 1;
                merged.landmarks.push(moved);
            }
        }
    }

    for entry in &current.trajectory {
        merged.trajectory.push(TrajectoryEntry {
            frame_id: entry.frame_id + id_offset,
            pose: t_cm.compose(&entry.pose),
            keyframe: entry.keyframe,
        });
    }

    merged.epoch = merged.epoch.max(current.epoch);
    merged.merge_pass();
    merged
}
