//! Quantitative comparison of a reconstructed floorplan against the
//! ground-truth scene it was generated from.
//!
//! Error is measured on the ground plane in both directions: points
//! sampled uniformly over the selected walls are matched to the nearest
//! ground-truth wall span, and points sampled over the ground truth are
//! matched to the nearest selected wall. The headline mean and RMS follow
//! the floorplan-to-truth direction; the reverse direction and the larger
//! of the two means are reported alongside, labeled explicitly, plus a
//! per-wall coverage fraction that exposes walls the model missed.

use nalgebra::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floorplan::FloorplanModel;
use crate::geometry::Segment2;
use crate::scenegen::{SceneError, SceneSpec};

/// Sample count used when the caller does not pick one.
pub const DEFAULT_EVAL_SAMPLES: usize = 10_000;

/// A ground-truth point is covered when a selected wall passes within
/// this distance, meters.
pub const COVERAGE_TOL: f64 = 0.05;

/// Spacing of the per-wall coverage probes, meters.
const COVERAGE_STEP: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("the floorplan selected no walls to evaluate")]
    EmptyModel,
    #[error("the ground-truth scene has no wall spans")]
    EmptyTruth,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Distance statistics between a floorplan and its ground truth. All
/// distances are meters on the ground plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Samples drawn per direction.
    pub sample_count: usize,
    /// Mean distance from floorplan samples to the nearest ground-truth
    /// wall span: the headline error.
    pub model_to_truth_mean: f64,
    pub model_to_truth_rms: f64,
    /// Mean distance from ground-truth samples to the nearest selected
    /// wall; large values expose missing structure.
    pub truth_to_model_mean: f64,
    pub truth_to_model_rms: f64,
    /// The larger of the two directed means.
    pub symmetric_mean: f64,
    /// Per ground-truth wall span, the fraction of evenly spaced probes
    /// within [`COVERAGE_TOL`] of a selected wall; spans follow the scene
    /// order (walls minus door openings).
    pub per_wall_coverage: Vec<f64>,
}

/// Smallest distance from `p` to any segment in `segs`.
fn nearest_distance(p: &Point2<f64>, segs: &[Segment2]) -> f64 {
    segs.iter()
        .map(|s| s.distance_to_point(p))
        .fold(f64::INFINITY, f64::min)
}

/// Draws `n` points uniformly by length over `segs`.
fn sample_segments(segs: &[Segment2], n: usize, rng: &mut ChaCha8Rng) -> Vec<Point2<f64>> {
    let mut cum = Vec::with_capacity(segs.len() + 1);
    cum.push(0.0);
    for s in segs {
        cum.push(cum.last().unwrap() + s.length());
    }
    let total = *cum.last().unwrap();
    (0..n)
        .map(|_| {
            let s = rng.gen::<f64>() * total;
            let i = cum.partition_point(|&c| c <= s).saturating_sub(1).min(segs.len() - 1);
            let len = cum[i + 1] - cum[i];
            let t = if len > 0.0 { (s - cum[i]) / len } else { 0.0 };
            segs[i].point_at(t.clamp(0.0, 1.0))
        })
        .collect()
}

fn directed(from: &[Point2<f64>], to: &[Segment2]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for p in from {
        let d = nearest_distance(p, to);
        sum += d;
        sum_sq += d * d;
    }
    let n = from.len().max(1) as f64;
    (sum / n, (sum_sq / n).sqrt())
}

/// Compares the selected walls of `model` against the ground truth of
/// `truth`: `n_samples` uniform samples per direction, nearest-segment
/// distances, mean and RMS both ways, and per-wall coverage. Deterministic
/// given `seed`.
pub fn hausdorff_eval(
    model: &FloorplanModel,
    truth: &SceneSpec,
    n_samples: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let model_segs: Vec<Segment2> = model.walls.iter().map(|w| w.seg).collect();
    hausdorff_eval_segments(&model_segs, truth, n_samples, seed)
}

/// Same comparison as [`hausdorff_eval`], but from bare wall segments, for
/// floorplans reloaded from disk where only the geometry survives.
pub fn hausdorff_eval_segments(
    model_segs: &[Segment2],
    truth: &SceneSpec,
    n_samples: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let truth_segs = truth.solid_wall_segments()?;
    if truth_segs.is_empty() || truth_segs.iter().all(|s| s.length() <= 0.0) {
        return Err(EvalError::EmptyTruth);
    }
    if model_segs.is_empty() || model_segs.iter().all(|s| s.length() <= 0.0) {
        return Err(EvalError::EmptyModel);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model_samples = sample_segments(&model_segs, n_samples, &mut rng);
    let truth_samples = sample_segments(&truth_segs, n_samples, &mut rng);

    let (model_to_truth_mean, model_to_truth_rms) = directed(&model_samples, &truth_segs);
    let (truth_to_model_mean, truth_to_model_rms) = directed(&truth_samples, &model_segs);

    let per_wall_coverage = truth_segs
        .iter()
        .map(|seg| {
            let probes = ((seg.length() / COVERAGE_STEP).ceil() as usize).max(1) + 1;
            let covered = (0..probes)
                .filter(|&i| {
                    let t = i as f64 / (probes - 1) as f64;
                    nearest_distance(&seg.point_at(t), &model_segs) < COVERAGE_TOL
                })
                .count();
            covered as f64 / probes as f64
        })
        .collect();

    Ok(EvalReport {
        sample_count: n_samples,
        model_to_truth_mean,
        model_to_truth_rms,
        truth_to_model_mean,
        truth_to_model_rms,
        symmetric_mean: model_to_truth_mean.max(truth_to_model_mean),
        per_wall_coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::{CandidateSegment, EnergyBreakdown};
    use approx::assert_relative_eq;

    fn model_from_segments(segs: &[Segment2]) -> FloorplanModel {
        FloorplanModel {
            walls: segs
                .iter()
                .map(|&seg| CandidateSegment {
                    seg,
                    support2d: Vec::new(),
                    endpoints: [None, None],
                    crossed_by_trajectory: false,
                })
                .collect(),
            vertices: Vec::new(),
            selected: vec![true; segs.len()],
            openings: Vec::new(),
            objective: 0.0,
            energies: EnergyBreakdown::default(),
            epoch: 0,
            infeasible_vertices: Vec::new(),
            skipped_landmarks: 0,
        }
    }

    fn square_scene() -> SceneSpec {
        let spec = serde_json::json!({
            "walls": [[[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0], [-2.0, -2.0]]],
            "trajectory": [[0.0, 0.0], [0.5, 0.0]],
            "frame_count": 1,
            "point_density": 1.0,
        });
        serde_json::from_value(spec).unwrap()
    }

    fn square_segments() -> Vec<Segment2> {
        square_scene().solid_wall_segments().unwrap()
    }

    #[test]
    fn identical_model_scores_zero() {
        let truth = square_scene();
        let model = model_from_segments(&square_segments());
        let report = hausdorff_eval(&model, &truth, 5_000, 3).unwrap();
        assert_relative_eq!(report.model_to_truth_mean, 0.0, epsilon = 1e-12);
        assert_relative_eq!(report.truth_to_model_mean, 0.0, epsilon = 1e-12);
        assert_relative_eq!(report.symmetric_mean, 0.0, epsilon = 1e-12);
        assert!(report.per_wall_coverage.iter().all(|&c| c == 1.0));
    }

    #[test]
    fn uniform_offset_is_measured_exactly() {
        // A single wall offset perpendicularly: every sample is exactly
        // 0.1 m from the truth, in both directions.
        let truth = SceneSpec {
            walls: vec![vec![[0.0, 0.0], [0.0, 4.0]]],
            ..square_scene()
        };
        let model = model_from_segments(&[Segment2::new(
            Point2::new(0.1, 0.0),
            Point2::new(0.1, 4.0),
        )]);
        let report = hausdorff_eval(&model, &truth, DEFAULT_EVAL_SAMPLES, 11).unwrap();
        assert_relative_eq!(report.model_to_truth_mean, 0.1, epsilon = 1e-6);
        assert_relative_eq!(report.model_to_truth_rms, 0.1, epsilon = 1e-6);
        assert_relative_eq!(report.truth_to_model_mean, 0.1, epsilon = 1e-6);
        assert_relative_eq!(report.symmetric_mean, 0.1, epsilon = 1e-6);
    }

    #[test]
    fn missing_wall_shows_in_the_reverse_direction_and_coverage() {
        let truth = square_scene();
        let segs = square_segments();
        assert_eq!(segs.len(), 4);
        // Drop the east wall (from (2,-2) to (2,2)).
        let kept: Vec<Segment2> = segs
            .iter()
            .copied()
            .filter(|s| !(s.a.x == 2.0 && s.b.x == 2.0))
            .collect();
        assert_eq!(kept.len(), 3);
        let model = model_from_segments(&kept);
        let report = hausdorff_eval(&model, &truth, DEFAULT_EVAL_SAMPLES, 5).unwrap();

        // The model itself still matches the truth everywhere.
        assert!(report.model_to_truth_mean < 1e-9);
        // The truth side sees the hole.
        assert!(report.truth_to_model_mean > 0.2, "{}", report.truth_to_model_mean);
        assert_relative_eq!(report.symmetric_mean, report.truth_to_model_mean);
        let east = segs
            .iter()
            .position(|s| s.a.x == 2.0 && s.b.x == 2.0)
            .unwrap();
        for (i, &c) in report.per_wall_coverage.iter().enumerate() {
            if i == east {
                assert!(c < 0.1, "missing wall reported covered: {c}");
            } else {
                assert_relative_eq!(c, 1.0);
            }
        }
    }

    #[test]
    fn report_is_deterministic_in_the_seed() {
        let truth = square_scene();
        let model = model_from_segments(&square_segments()[..3]);
        let a = hausdorff_eval(&model, &truth, 2_000, 99).unwrap();
        let b = hausdorff_eval(&model, &truth, 2_000, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn headline_direction_ignores_truth_ordering() {
        let truth = square_scene();
        let reordered = SceneSpec {
            // Same square, opposite winding starting elsewhere.
            walls: vec![vec![
                [-2.0, 2.0],
                [2.0, 2.0],
                [2.0, -2.0],
                [-2.0, -2.0],
                [-2.0, 2.0],
            ]],
            ..square_scene()
        };
        let model = model_from_segments(&square_segments()[..2]);
        let a = hausdorff_eval(&model, &truth, 4_000, 17).unwrap();
        let b = hausdorff_eval(&model, &reordered, 4_000, 17).unwrap();
        assert_eq!(a.model_to_truth_mean, b.model_to_truth_mean);
        assert_eq!(a.model_to_truth_rms, b.model_to_truth_rms);
    }

    #[test]
    fn empty_model_is_an_error() {
        let truth = square_scene();
        let model = model_from_segments(&[]);
        assert_eq!(
            hausdorff_eval(&model, &truth, 100, 0),
            Err(EvalError::EmptyModel)
        );
    }
}
