//! Wall candidate generation: from vertical plane landmarks to an
//! arrangement of atomic candidate segments.
//!
//! The stages mirror the data flow: select near-vertical landmarks,
//! project each onto the ground plane as a 2D wall segment with support
//! points, merge near-duplicate segments, then extend everything,
//! intersect pairwise, and split at the intersection vertices. The atomic
//! pieces between (and beyond) vertices are the candidate walls the
//! selection stage chooses from.

use nalgebra::{Point2, Vector2};

use crate::geometry::{segment_intersection, GeometryError, Segment2};
use crate::landmarks::{MapSnapshot, PlaneLandmark};

use super::{FloorplanConfig, FloorplanError};

/// A wall hypothesis projected to the ground plane, before arrangement.
#[derive(Debug, Clone)]
pub struct WallSegment2D {
    pub seg: Segment2,
    /// Ground projections of the landmark support, kept within
    /// `support_line_gate` of the supporting line.
    pub support2d: Vec<Point2<f64>>,
    /// Landmarks that contributed support (regularization can merge
    /// several into one segment).
    pub source_landmarks: Vec<u64>,
}

/// An atomic piece of an extended wall segment between intersection
/// vertices. Free extremities (beyond the outermost intersection) have no
/// vertex and carry `None`.
#[derive(Debug, Clone)]
pub struct CandidateSegment {
    pub seg: Segment2,
    pub support2d: Vec<Point2<f64>>,
    pub endpoints: [Option<usize>; 2],
    pub crossed_by_trajectory: bool,
}

/// A pairwise intersection point of extended wall segments.
#[derive(Debug, Clone)]
pub struct IntersectionVertex {
    pub id: usize,
    pub position: Point2<f64>,
    /// Candidate indices that end at this vertex.
    pub incident: Vec<usize>,
}

/// Distance under which two intersection points collapse into one vertex.
const VERTEX_MERGE_TOL: f64 = 1e-6;
/// Atomic candidates shorter than this are dropped.
const MIN_CANDIDATE_LEN: f64 = 1e-9;

/// Valid landmarks whose plane is approximately perpendicular to the
/// ground: |n_z| at most sin(vertical_tol).
pub fn select_wall_landmarks<'a>(
    snapshot: &'a MapSnapshot,
    vertical_tol_deg: f64,
) -> Vec<&'a PlaneLandmark> {
    let gate = vertical_tol_deg.to_radians().sin();
    snapshot
        .landmarks
        .iter()
        .filter(|lm| lm.plane.normal.z.abs() <= gate)
        .collect()
}

/// Projects a wall landmark onto the ground plane: support points drop
/// their z, the supporting line comes from the horizontal part of the
/// plane normal, and the segment extent is the support span along the
/// line.
pub fn project_and_fit(
    lm: &PlaneLandmark,
    cfg: &FloorplanConfig,
) -> Result<WallSegment2D, FloorplanError> {
    let horizontal = Vector2::new(lm.plane.normal.x, lm.plane.normal.y);
    let norm = horizontal.norm();
    if norm < 1e-9 || lm.support.len() < 2 {
        return Err(FloorplanError::DegenerateExtent {
            landmark: lm.id,
            span: 0.0,
        });
    }
    let normal2 = horizontal / norm;
    let projected: Vec<Point2<f64>> = lm
        .support
        .iter()
        .map(|p| Point2::new(p.x, p.y))
        .collect();
    let offset = -projected
        .iter()
        .map(|p| normal2.dot(&p.coords))
        .sum::<f64>()
        / projected.len() as f64;
    let support2d: Vec<Point2<f64>> = projected
        .into_iter()
        .filter(|p| (normal2.dot(&p.coords) + offset).abs() <= cfg.support_line_gate)
        .collect();
    if support2d.len() < 2 {
        return Err(FloorplanError::DegenerateExtent {
            landmark: lm.id,
            span: 0.0,
        });
    }
    let tangent = Vector2::new(-normal2.y, normal2.x);
    let origin = Point2::from(-offset * normal2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &support2d {
        let t = tangent.dot(&(p - origin));
        lo = lo.min(t);
        hi = hi.max(t);
    }
    let span = hi - lo;
    if span < cfg.min_extent {
        return Err(FloorplanError::DegenerateExtent {
            landmark: lm.id,
            span,
        });
    }
    Ok(WallSegment2D {
        seg: Segment2::new(origin + tangent * lo, origin + tangent * hi),
        support2d,
        source_landmarks: vec![lm.id],
    })
}

/// Support points close to both segments (closed-segment distance).
fn shared_support(a: &WallSegment2D, b: &WallSegment2D, gate: f64) -> usize {
    a.support2d
        .iter()
        .chain(b.support2d.iter())
        .filter(|p| a.seg.distance_to_point(p) < gate && b.seg.distance_to_point(p) < gate)
        .count()
}

/// Total least squares line over a point set: centroid plus the dominant
/// covariance direction. Returns (origin, unit tangent).
fn fit_line(points: &[Point2<f64>]) -> (Point2<f64>, Vector2<f64>) {
    let n = points.len() as f64;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for p in points {
        cx += p.x;
        cy += p.y;
    }
    let centroid = Point2::new(cx / n, cy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let dx = p.x - centroid.x;
        let dy = p.y - centroid.y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Dominant eigenvector of the 2x2 covariance, in closed form.
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    (centroid, Vector2::new(theta.cos(), theta.sin()))
}

/// Merges two wall segments into one, re-fitting the line over the union
/// of their support.
fn merge_segments(a: &WallSegment2D, b: &WallSegment2D, cfg: &FloorplanConfig) -> WallSegment2D {
    let mut support: Vec<Point2<f64>> = a.support2d.clone();
    support.extend_from_slice(&b.support2d);
    let (centroid, tangent) = fit_line(&support);
    let normal2 = Vector2::new(-tangent.y, tangent.x);
    support.retain(|p| normal2.dot(&(p - centroid)).abs() <= cfg.support_line_gate);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &support {
        let t = tangent.dot(&(p - centroid));
        lo = lo.min(t);
        hi = hi.max(t);
    }
    let mut sources = a.source_landmarks.clone();
    sources.extend_from_slice(&b.source_landmarks);
    sources.sort_unstable();
    sources.dedup();
    WallSegment2D {
        seg: Segment2::new(centroid + tangent * lo, centroid + tangent * hi),
        support2d: support,
        source_landmarks: sources,
    }
}

/// Iteratively merges segment pairs that are nearly parallel and share
/// enough support points close to both, until no pair qualifies. The
/// shared-count threshold scales with the smaller support set:
/// strictly more than min(|SP_i|, |SP_j|) / 10 shared points are required.
pub fn regularize(mut segments: Vec<WallSegment2D>, cfg: &FloorplanConfig) -> Vec<WallSegment2D> {
    let max_angle = cfg.merge_angle_deg.to_radians();
    'restart: loop {
        for i in 0..segments.len() {
            for j in (i + 1)..segments.len() {
                let (si, sj) = (&segments[i], &segments[j]);
                if si.seg.line_angle(&sj.seg) >= max_angle {
                    continue;
                }
                let needed = (si.support2d.len().min(sj.support2d.len()) as f64) / 10.0;
                if (shared_support(si, sj, cfg.merge_close_gate) as f64) <= needed {
                    continue;
                }
                let merged = merge_segments(si, sj, cfg);
                segments[i] = merged;
                segments.remove(j);
                continue 'restart;
            }
        }
        return segments;
    }
}

/// True when the segment intersects the polyline; collinear overlap with
/// an edge counts as crossing.
pub fn crosses_polyline(seg: &Segment2, polyline: &[Point2<f64>]) -> bool {
    polyline.windows(2).any(|edge| {
        let e = Segment2::new(edge[0], edge[1]);
        match segment_intersection(seg, &e, 1e-9) {
            Ok(Some(_)) => true,
            Ok(None) => false,
            Err(GeometryError::CollinearOverlap) => true,
            Err(_) => false,
        }
    })
}

/// Axis-aligned bounding box over the scene, inflated by 10% per side.
fn scene_bbox(
    segments: &[WallSegment2D],
    trajectory: &[Point2<f64>],
) -> (Point2<f64>, Point2<f64>) {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: &Point2<f64>| {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    };
    for s in segments {
        grow(&s.seg.a);
        grow(&s.seg.b);
        for p in &s.support2d {
            grow(p);
        }
    }
    for p in trajectory {
        grow(p);
    }
    let cx = 0.5 * (min.x + max.x);
    let cy = 0.5 * (min.y + max.y);
    let hx = 0.55 * (max.x - min.x) + 1e-6;
    let hy = 0.55 * (max.y - min.y) + 1e-6;
    (
        Point2::new(cx - hx, cy - hy),
        Point2::new(cx + hx, cy + hy),
    )
}

/// Clips the parameter interval of `origin + t * dir` to the box, slab by
/// slab. Returns the intersection with [lo, hi], or the empty interval.
fn clip_params_to_box(
    origin: &Point2<f64>,
    dir: &Vector2<f64>,
    mut lo: f64,
    mut hi: f64,
    bbox: &(Point2<f64>, Point2<f64>),
) -> (f64, f64) {
    for axis in 0..2 {
        let (o, d, bmin, bmax) = if axis == 0 {
            (origin.x, dir.x, bbox.0.x, bbox.1.x)
        } else {
            (origin.y, dir.y, bbox.0.y, bbox.1.y)
        };
        if d.abs() < 1e-12 {
            if o < bmin || o > bmax {
                return (0.0, -1.0);
            }
            continue;
        }
        let t0 = (bmin - o) / d;
        let t1 = (bmax - o) / d;
        let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        lo = lo.max(t0);
        hi = hi.min(t1);
    }
    (lo, hi)
}

/// Extends the regularized segments, intersects them pairwise, and splits
/// each at its intersection points into atomic candidates.
///
/// Each segment is extended by max(`extension`, 20% of its length) per
/// end, clipped to the inflated scene bounding box. Intersection points
/// become shared vertices; atomic candidates inherit the parent support
/// points whose projection parameter falls in their half-open interval.
/// Every candidate is tested against the trajectory polyline for the
/// crossing flag.
pub fn build_arrangement(
    segments: &[WallSegment2D],
    trajectory: &[Point2<f64>],
    extension: f64,
) -> (Vec<CandidateSegment>, Vec<IntersectionVertex>) {
    if segments.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let bbox = scene_bbox(segments, trajectory);

    // Extended parameter interval per segment, in meters along the unit
    // tangent from the original `a` endpoint.
    struct Extended {
        origin: Point2<f64>,
        tangent: Vector2<f64>,
        lo: f64,
        hi: f64,
        seg: Segment2,
    }
    let extended: Vec<Extended> = segments
        .iter()
        .map(|s| {
            let len = s.seg.length();
            let tangent = s.seg.direction();
            let ext = extension.max(0.2 * len);
            let (lo, hi) = clip_params_to_box(&s.seg.a, &tangent, -ext, len + ext, &bbox);
            Extended {
                origin: s.seg.a,
                tangent,
                lo,
                hi,
                seg: Segment2::new(s.seg.a + tangent * lo, s.seg.a + tangent * hi),
            }
        })
        .collect();

    // Pairwise intersections, deduplicated into vertices.
    let mut vertices: Vec<IntersectionVertex> = Vec::new();
    let mut cuts: Vec<Vec<(f64, usize)>> = vec![Vec::new(); segments.len()];
    for i in 0..extended.len() {
        for j in (i + 1)..extended.len() {
            let hit = match segment_intersection(&extended[i].seg, &extended[j].seg, 1e-9) {
                Ok(Some(p)) => p,
                _ => continue,
            };
            let vid = match vertices
                .iter()
                .find(|v| (v.position - hit).norm() <= VERTEX_MERGE_TOL)
            {
                Some(v) => v.id,
                None => {
                    let id = vertices.len();
                    vertices.push(IntersectionVertex {
                        id,
                        position: hit,
                        incident: Vec::new(),
                    });
                    id
                }
            };
            for k in [i, j] {
                let e = &extended[k];
                let t = e.tangent.dot(&(vertices[vid].position - e.origin));
                cuts[k].push((t, vid));
            }
        }
    }

    // Split each extended segment at its cuts and assign support.
    let mut candidates: Vec<CandidateSegment> = Vec::new();
    for (k, e) in extended.iter().enumerate() {
        let mut bounds: Vec<(f64, Option<usize>)> = vec![(e.lo, None), (e.hi, None)];
        cuts[k].sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for &(t, vid) in &cuts[k] {
            match bounds
                .iter_mut()
                .find(|(bt, _)| (*bt - t).abs() <= VERTEX_MERGE_TOL)
            {
                Some(slot) => slot.1 = Some(vid),
                None => bounds.push((t, Some(vid))),
            }
        }
        bounds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let support_params: Vec<f64> = segments[k]
            .support2d
            .iter()
            .map(|p| e.tangent.dot(&(p - e.origin)))
            .collect();

        for w in bounds.windows(2) {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            if t1 - t0 <= MIN_CANDIDATE_LEN {
                continue;
            }
            let seg = Segment2::new(e.origin + e.tangent * t0, e.origin + e.tangent * t1);
            // Half-open ownership [t0, t1); the first and last piece also
            // absorb anything projecting beyond the extended span.
            let is_first = (t0 - e.lo).abs() <= VERTEX_MERGE_TOL;
            let is_last = (t1 - e.hi).abs() <= VERTEX_MERGE_TOL;
            let support: Vec<Point2<f64>> = segments[k]
                .support2d
                .iter()
                .zip(&support_params)
                .filter(|&(_, &t)| {
                    (t >= t0 || is_first) && (t < t1 || is_last)
                })
                .map(|(p, _)| *p)
                .collect();
            let crossed = crosses_polyline(&seg, trajectory);
            let idx = candidates.len();
            for (vid, _) in [(v0, 0), (v1, 1)] {
                if let Some(v) = vid {
                    vertices[v].incident.push(idx);
                }
            }
            candidates.push(CandidateSegment {
                seg,
                support2d: support,
                endpoints: [v0, v1],
                crossed_by_trajectory: crossed,
            });
        }
    }
    (candidates, vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PlaneCartesian;
    use crate::landmarks::{landmark_from_parts, LandmarkState};
    use approx::assert_relative_eq;
    use nalgebra::{Point3, Vector3};

    fn snapshot_with_normals(normals: &[Vector3<f64>]) -> MapSnapshot {
        let landmarks = normals
            .iter()
            .enumerate()
            .map(|(i, n)| {
                landmark_from_parts(
                    i as u64,
                    LandmarkState::Valid,
                    PlaneCartesian::new(*n, -1.0),
                    vec![],
                    40,
                    vec![],
                )
            })
            .collect();
        MapSnapshot {
            epoch: 1,
            landmarks,
            trajectory: vec![],
        }
    }

    #[test]
    fn wall_selection_gates_on_normal_z() {
        let tilted_z = 0.3;
        let snap = snapshot_with_normals(&[
            Vector3::x(),
            Vector3::z(),
            Vector3::new((1.0f64 - tilted_z * tilted_z).sqrt(), 0.0, tilted_z),
        ]);
        let walls = select_wall_landmarks(&snap, 10.0);
        assert_eq!(walls.len(), 1);
        assert_eq!(walls[0].id, 0);
    }

    fn wall_landmark(x: f64, y_lo: f64, y_hi: f64, step: f64) -> PlaneLandmark {
        let mut support = Vec::new();
        let mut y = y_lo;
        while y <= y_hi + 1e-9 {
            for z in [0.5, 1.5] {
                support.push(Point3::new(x, y, z));
            }
            y += step;
        }
        landmark_from_parts(
            7,
            LandmarkState::Valid,
            PlaneCartesian::new(Vector3::x(), -x),
            support,
            40,
            vec![],
        )
    }

    #[test]
    fn projection_recovers_wall_extent() {
        let cfg = FloorplanConfig::default();
        let wall = project_and_fit(&wall_landmark(2.0, 0.0, 3.0, 0.1), &cfg).unwrap();
        // Tangent for normal (1,0) is (0,1): segment runs (2,0) -> (2,3).
        assert_relative_eq!(wall.seg.a.x, 2.0, epsilon = 1e-9);
        assert_relative_eq!(wall.seg.a.y, 0.0, epsilon = 1e-9);
        assert_relative_eq!(wall.seg.b.y, 3.0, epsilon = 1e-9);
        assert_eq!(wall.support2d.len(), 62);
        assert_eq!(wall.source_landmarks, vec![7]);
    }

    #[test]
    fn two_points_span_their_projections() {
        let cfg = FloorplanConfig::default();
        let lm = landmark_from_parts(
            0,
            LandmarkState::Valid,
            PlaneCartesian::new(Vector3::x(), -1.0),
            vec![Point3::new(1.0, 0.0, 0.4), Point3::new(1.0, 2.0, 1.9)],
            40,
            vec![],
        );
        let wall = project_and_fit(&lm, &cfg).unwrap();
        assert_relative_eq!(wall.seg.length(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn short_spans_are_degenerate() {
        let cfg = FloorplanConfig::default();
        let err = project_and_fit(&wall_landmark(2.0, 0.0, 0.05, 0.05), &cfg).unwrap_err();
        assert!(matches!(err, FloorplanError::DegenerateExtent { .. }));
    }

    fn seg_with_support(a: Point2<f64>, b: Point2<f64>, n: usize) -> WallSegment2D {
        let seg = Segment2::new(a, b);
        let support = (0..n)
            .map(|i| seg.point_at(i as f64 / (n - 1) as f64))
            .collect();
        WallSegment2D {
            seg,
            support2d: support,
            source_landmarks: vec![n as u64],
        }
    }

    #[test]
    fn collinear_overlapping_walls_merge() {
        let cfg = FloorplanConfig::default();
        // Two halves of one wall overlapping on x in [0.9, 1.1]: the
        // overlap holds well over min(100, 100)/10 shared points.
        let a = seg_with_support(Point2::new(0.0, 0.0), Point2::new(1.1, 0.0), 100);
        let b = seg_with_support(Point2::new(0.9, 0.0), Point2::new(2.0, 0.0), 100);
        let merged = regularize(vec![a, b], &cfg);
        assert_eq!(merged.len(), 1);
        assert_relative_eq!(merged[0].seg.length(), 2.0, epsilon = 1e-9);
        assert_eq!(merged[0].support2d.len(), 200);
    }

    #[test]
    fn angled_walls_stay_separate() {
        let cfg = FloorplanConfig::default();
        let a = seg_with_support(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 50);
        let b = seg_with_support(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), 50);
        assert_eq!(regularize(vec![a, b], &cfg).len(), 2);
    }

    #[test]
    fn parallel_walls_without_shared_points_stay_separate() {
        let cfg = FloorplanConfig::default();
        let a = seg_with_support(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 50);
        let b = seg_with_support(Point2::new(0.0, 0.5), Point2::new(1.0, 0.5), 50);
        assert_eq!(regularize(vec![a, b], &cfg).len(), 2);
    }

    #[test]
    fn perpendicular_pair_meets_after_extension() {
        let a = seg_with_support(Point2::new(0.0, 0.0), Point2::new(0.9, 0.0), 30);
        let b = seg_with_support(Point2::new(1.0, 0.1), Point2::new(1.0, 1.0), 30);
        let (candidates, vertices) = build_arrangement(&[a, b], &[], 1.0);
        assert_eq!(vertices.len(), 1);
        assert_relative_eq!(vertices[0].position.x, 1.0, epsilon = 1e-9);
        assert_relative_eq!(vertices[0].position.y, 0.0, epsilon = 1e-9);
        assert_eq!(candidates.len(), 4);
        assert_eq!(vertices[0].incident.len(), 4);
        // Support must be conserved across the split pieces.
        let total: usize = candidates.iter().map(|c| c.support2d.len()).sum();
        assert_eq!(total, 60);
    }

    #[test]
    fn parallel_pair_yields_two_candidates() {
        let a = seg_with_support(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 30);
        let b = seg_with_support(Point2::new(0.0, 1.0), Point2::new(1.0, 1.0), 30);
        let (candidates, vertices) = build_arrangement(&[a, b], &[], 1.0);
        assert_eq!(vertices.len(), 0);
        assert_eq!(candidates.len(), 2);
        assert!(candidates.iter().all(|c| c.endpoints == [None, None]));
    }

    #[test]
    fn trajectory_crossing_sets_flag() {
        let a = seg_with_support(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 30);
        // Trajectory passes through the wall near x = 1.
        let trajectory = vec![Point2::new(1.0, -0.5), Point2::new(1.0, 0.5)];
        let (candidates, _) = build_arrangement(&[a], &trajectory, 1.0);
        assert_eq!(candidates.len(), 1);
        assert!(candidates[0].crossed_by_trajectory);

        let clear = vec![Point2::new(1.0, 0.2), Point2::new(1.5, 0.4)];
        let (candidates, _) =
            build_arrangement(&[seg_with_support(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 30)], &clear, 1.0);
        assert!(!candidates[0].crossed_by_trajectory);
    }

    #[test]
    fn extension_is_clipped_to_inflated_bbox() {
        let a = seg_with_support(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 30);
        let (candidates, _) = build_arrangement(&[a], &[], 100.0);
        assert_eq!(candidates.len(), 1);
        // Scene bbox is the unit segment inflated 10%: x in [-0.05, 1.05].
        assert!(candidates[0].seg.length() <= 1.1 + 1e-5);
    }
}
