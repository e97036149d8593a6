//! Data terms for wall selection: fitting, coverage, and the scale
//! parameters both are measured against.
//!
//! The scales come from the data itself: the fitting tolerance builds on
//! the mean distance between candidates and their support, and the
//! coverage gap tolerance is ten times the mean 10-nearest-neighbor
//! spacing of the support cloud.

use std::collections::HashMap;

use nalgebra::Point2;

use super::candidates::CandidateSegment;

/// Lower bound for data-derived scales so ratios stay finite.
const SCALE_FLOOR: f64 = 1e-6;

/// Mean distance between each candidate segment and its own support
/// points, over all candidates. This is the default fitting tolerance.
pub fn mean_support_distance(candidates: &[CandidateSegment]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for c in candidates {
        for p in &c.support2d {
            total += c.seg.distance_to_point(p);
            count += 1;
        }
    }
    if count == 0 {
        SCALE_FLOOR
    } else {
        (total / count as f64).max(SCALE_FLOOR)
    }
}

/// Average over all points of the mean distance to their k nearest
/// neighbors. A uniform hash grid keeps the neighbor queries near-linear;
/// rings of cells are expanded until the k-th best distance is certain.
pub fn knn_mean_spacing(points: &[Point2<f64>], k: usize) -> f64 {
    let n = points.len();
    if n <= 1 || k == 0 {
        return 0.0;
    }
    let k = k.min(n - 1);

    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    let span = (max.x - min.x).max(max.y - min.y);
    let cell = (span / (n as f64).sqrt().ceil()).max(1e-9);

    let key = |p: &Point2<f64>| {
        (
            ((p.x - min.x) / cell).floor() as i64,
            ((p.y - min.y) / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let max_ring = (span / cell).ceil() as i64 + 1;

    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (cx, cy) = key(p);
        let mut dists: Vec<f64> = Vec::new();
        let mut ring = 0i64;
        loop {
            // Cells at Chebyshev distance exactly `ring`.
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs().max(dy.abs()) != ring {
                        continue;
                    }
                    if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                        for &j in bucket {
                            if j != i {
                                dists.push((points[j] - p).norm());
                            }
                        }
                    }
                }
            }
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            dists.truncate(4 * k.max(4));
            // Any point outside the scanned rings is farther than
            // ring * cell from the query.
            if dists.len() >= k && dists[k - 1] <= ring as f64 * cell {
                break;
            }
            ring += 1;
            if ring > max_ring {
                break;
            }
        }
        let take = k.min(dists.len());
        if take > 0 {
            total += dists[..take].iter().sum::<f64>() / take as f64;
        }
    }
    total / n as f64
}

/// Coverage gap tolerance: ten times the mean 10-nearest-neighbor spacing
/// of the pooled support cloud.
pub fn coverage_epsilon(candidates: &[CandidateSegment]) -> f64 {
    let points: Vec<Point2<f64>> = candidates
        .iter()
        .flat_map(|c| c.support2d.iter().copied())
        .collect();
    (10.0 * knn_mean_spacing(&points, 10)).max(SCALE_FLOOR)
}

/// Per-candidate fitting score: the sum over support points closer than
/// `eps_f` of (1 - dist / eps_f). A perfectly supported candidate scores
/// its support count.
pub fn fitting_scores(candidates: &[CandidateSegment], eps_f: f64) -> Vec<f64> {
    candidates
        .iter()
        .map(|c| {
            c.support2d
                .iter()
                .map(|p| {
                    let d = c.seg.distance_to_point(p);
                    if d < eps_f {
                        1.0 - d / eps_f
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

/// Per-candidate uncovered fraction: 1 - len_cov / len, where len_cov sums
/// the gaps between consecutive support projections smaller than `eps_c`.
pub fn coverage_deficits(candidates: &[CandidateSegment], eps_c: f64) -> Vec<f64> {
    candidates
        .iter()
        .map(|c| {
            let len = c.seg.length();
            if len <= 0.0 {
                return 1.0;
            }
            let mut params: Vec<f64> = c
                .support2d
                .iter()
                .map(|p| (c.seg.project_parameter(p) * len).clamp(0.0, len))
                .collect();
            params.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let covered: f64 = params
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|gap| *gap < eps_c)
                .sum();
            1.0 - covered / len
        })
        .collect()
}
