//! Per-frame plane features: mesh triangles are mapped into plane
//! parameter space, clustered, and each cluster's support points are
//! RANSAC-fitted into a single plane.
//!
//! Extraction works in the camera frame. Triangle planes are oriented to
//! face the camera (positive offset), so patches of one physical plane
//! share one parameter-space point regardless of triangle winding.

use nalgebra::Point3;

use crate::dbscan::{dbscan, group_clusters};
use crate::geometry::PlaneCartesian;
use crate::mesh::TriMesh;
use crate::pps::{pps_distance, to_pps, PpsPoint, PpsWeights};
use crate::ransac::{fit_plane_ransac, RansacConfig, RansacError};

/// A fitted plane observation from a single frame.
#[derive(Debug, Clone)]
pub struct PlaneFeature {
    pub plane: PlaneCartesian,
    /// Indices into the point slice the mesh was built from (the mesh's
    /// own vertex indirection already resolved).
    pub support: Vec<usize>,
    /// Fraction of support points within the RANSAC gate of `plane`.
    pub inlier_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    pub pps_weights: PpsWeights,
    /// DBSCAN radius in parameter space.
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub ransac: RansacConfig,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            pps_weights: PpsWeights::default(),
            dbscan_eps: 0.08,
            dbscan_min_pts: 5,
            ransac: RansacConfig::default(),
        }
    }
}

/// Extraction output plus the counts that usually matter when tuning:
/// how many triangles clustered nowhere and how many clusters failed the
/// consensus gate.
#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub features: Vec<PlaneFeature>,
    pub noise_triangles: usize,
    pub rejected_clusters: usize,
}

/// Plane through a triangle, oriented so its offset is non-negative, which
/// in the camera frame means the normal faces the camera. Returns `None`
/// for degenerate triangles.
pub fn triangle_plane(
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<PlaneCartesian> {
    let cross = (b - a).cross(&(c - a));
    let norm = cross.norm();
    if norm <= 1e-12 {
        return None;
    }
    let normal = cross / norm;
    let offset = -normal.dot(&a.coords);
    Some(if offset < 0.0 {
        PlaneCartesian::new(-normal, -offset)
    } else {
        PlaneCartesian::new(normal, offset)
    })
}

/// Clusters the mesh's triangle planes in parameter space and fits one
/// plane per cluster. `cfg.ransac.seed` is the base seed; each cluster
/// derives its own stream from it, so results do not depend on how many
/// clusters precede one another.
pub fn extract_planes(mesh: &TriMesh, cfg: &ExtractionConfig) -> ExtractionResult {
    // Parameter-space samples, one per non-degenerate triangle.
    let mut samples: Vec<PpsPoint> = Vec::with_capacity(mesh.triangles.len());
    let mut sample_tri: Vec<usize> = Vec::with_capacity(mesh.triangles.len());
    for (ti, t) in mesh.triangles.iter().enumerate() {
        if let Some(plane) = triangle_plane(
            &mesh.positions[t[0]],
            &mesh.positions[t[1]],
            &mesh.positions[t[2]],
        ) {
            samples.push(to_pps(&plane, ti));
            sample_tri.push(ti);
        }
    }

    let labels = dbscan(
        samples.len(),
        |i, j| pps_distance(&samples[i], &samples[j], &cfg.pps_weights),
        cfg.dbscan_eps,
        cfg.dbscan_min_pts,
    );
    let noise_triangles = labels.iter().filter(|l| l.is_none()).count();

    let mut features = Vec::new();
    let mut rejected_clusters = 0;
    for (cid, members) in group_clusters(&labels).into_iter().enumerate() {
        // Unique mesh vertices of the cluster's triangles.
        let mut verts: Vec<usize> = members
            .iter()
            .flat_map(|&s| mesh.triangles[sample_tri[s]])
            .collect();
        verts.sort_unstable();
        verts.dedup();
        let pts: Vec<Point3<f64>> = verts.iter().map(|&v| mesh.positions[v]).collect();

        let ransac = RansacConfig {
            seed: cfg
                .ransac
                .seed
                .wrapping_add((cid as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            ..cfg.ransac
        };
        match fit_plane_ransac(&pts, &ransac) {
            Ok(fit) => {
                // Re-orient camera-facing; the least-squares normal comes
                // out in canonical orientation instead.
                let plane = if fit.plane.offset < 0.0 {
                    fit.plane.flipped()
                } else {
                    fit.plane
                };
                features.push(PlaneFeature {
                    plane,
                    support: verts.iter().map(|&v| mesh.vertices[v]).collect(),
                    inlier_ratio: fit.inlier_ratio,
                });
            }
            Err(RansacError::InsufficientPoints(_))
            | Err(RansacError::RejectedLowInlierRatio(_)) => rejected_clusters += 1,
        }
    }

    ExtractionResult {
        features,
        noise_triangles,
        rejected_clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use approx::assert_relative_eq;
    use nalgebra::Point2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Frame-like sampling of an axis-aligned patch at depth `z = depth`,
    /// jittered by `sigma` along z.
    fn frontal_patch(
        rng: &mut ChaCha8Rng,
        depth: f64,
        n: usize,
        sigma: f64,
    ) -> (Vec<Point2<f64>>, Vec<Point3<f64>>) {
        let mut uv = Vec::with_capacity(n);
        let mut pos = Vec::with_capacity(n);
        for _ in 0..n {
            let x = rng.gen_range(-0.5..0.5);
            let y = rng.gen_range(-0.4..0.4);
            let z = depth + sigma * rng.gen_range(-1.0..1.0);
            // Pinhole with f = 100: uv is just a scaled projection.
            uv.push(Point2::new(100.0 * x / z, 100.0 * y / z));
            pos.push(Point3::new(x, y, z));
        }
        (uv, pos)
    }

    #[test]
    fn single_wall_gives_one_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (uv, pos) = frontal_patch(&mut rng, 2.0, 120, 0.0);
        let mesh = build_mesh(&uv, &pos).unwrap();
        let out = extract_planes(&mesh, &ExtractionConfig::default());
        assert_eq!(out.features.len(), 1);
        let f = &out.features[0];
        // Camera-facing: plane z = 2 oriented with d > 0.
        assert_relative_eq!(f.plane.offset, 2.0, epsilon = 1e-9);
        assert_relative_eq!(f.plane.normal.z, -1.0, epsilon = 1e-9);
        assert_relative_eq!(f.inlier_ratio, 1.0);
        assert_eq!(f.support.len(), mesh.vertices.len());
    }

    #[test]
    fn two_depth_separated_walls_give_two_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut uv, mut pos) = frontal_patch(&mut rng, 1.5, 100, 0.002);
        let (uv2, pos2) = frontal_patch(&mut rng, 3.0, 100, 0.002);
        // Shift the far patch sideways in the image so the meshes do not
        // interleave.
        uv.extend(uv2.iter().map(|p| Point2::new(p.x + 80.0, p.y)));
        pos.extend(pos2);
        let mesh = build_mesh(&uv, &pos).unwrap();
        let out = extract_planes(&mesh, &ExtractionConfig::default());
        assert_eq!(out.features.len(), 2);
        let mut offsets: Vec<f64> = out.features.iter().map(|f| f.plane.offset).collect();
        offsets.sort_by(f64::total_cmp);
        assert_relative_eq!(offsets[0], 1.5, epsilon = 0.02);
        assert_relative_eq!(offsets[1], 3.0, epsilon = 0.02);
    }

    #[test]
    fn degenerate_triangle_plane_is_none() {
        let a = Point3::new(0.0, 0.0, 1.0);
        let b = Point3::new(1.0, 0.0, 1.0);
        assert!(triangle_plane(&a, &b, &a).is_none());
    }

    #[test]
    fn triangle_plane_faces_the_camera() {
        // Both windings orient the same way.
        let a = Point3::new(0.0, 0.0, 2.0);
        let b = Point3::new(0.1, 0.0, 2.0);
        let c = Point3::new(0.0, 0.1, 2.0);
        let p1 = triangle_plane(&a, &b, &c).unwrap();
        let p2 = triangle_plane(&a, &c, &b).unwrap();
        assert_eq!(p1.normal, p2.normal);
        assert!(p1.offset > 0.0);
        assert_relative_eq!(p1.normal.z, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn extraction_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (uv, pos) = frontal_patch(&mut rng, 2.5, 150, 0.004);
        let mesh = build_mesh(&uv, &pos).unwrap();
        let a = extract_planes(&mesh, &ExtractionConfig::default());
        let b = extract_planes(&mesh, &ExtractionConfig::default());
        assert_eq!(a.features.len(), b.features.len());
        for (fa, fb) in a.features.iter().zip(&b.features) {
            assert_eq!(fa.plane.normal, fb.plane.normal);
            assert_eq!(fa.plane.offset, fb.plane.offset);
            assert_eq!(fa.support, fb.support);
        }
    }
}
