//! Delaunay triangulation of support points in the image plane, and
//! pruning of the lifted 3D triangles.
//!
//! Triangulation is incremental Bowyer–Watson over points sorted
//! lexicographically, so the result depends only on the point set, not on
//! input order. The three enclosing vertices are treated symbolically as
//! directions at infinity, which keeps the convex hull exact instead of
//! depending on how far away a finite super-triangle was placed.

use nalgebra::{Point2, Point3, Vector2};
use thiserror::Error;

use crate::geometry::orient2d;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    /// Fewer than three distinct points, or all points collinear.
    #[error("input points do not span a 2D triangulation")]
    DegenerateInput,
}

/// A triangulated frame. `triangles` index into the parallel `vertices`,
/// `uv`, `positions` arrays; `vertices` holds indices into the caller's
/// input slices (duplicates collapsed).
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<usize>,
    pub uv: Vec<Point2<f64>>,
    pub positions: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

/// Gates applied to each lifted 3D triangle by [`prune_mesh`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshGates {
    /// Longest 3D edge a triangle may keep, in meters.
    pub max_edge: f64,
    /// Longest/shortest 3D edge ratio.
    pub max_aspect: f64,
    /// Smallest interior angle, in degrees.
    pub min_angle_deg: f64,
}

impl Default for MeshGates {
    fn default() -> Self {
        MeshGates {
            max_edge: 0.5,
            max_aspect: 10.0,
            min_angle_deg: 5.0,
        }
    }
}

// Directions at infinity for the three symbolic vertices, 120° apart.
const FAR_DIRS: [Vector2<f64>; 3] = [
    Vector2::new(0.0, 1.0),
    Vector2::new(-0.866_025_403_784_438_6, -0.5),
    Vector2::new(0.866_025_403_784_438_7, -0.5),
];

struct Builder {
    pts: Vec<Point2<f64>>,
    // Triangles as vertex triples in CCW order; indices >= pts.len() are
    // the symbolic far vertices. Dead triangles are tombstoned.
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
}

impl Builder {
    fn far_index(&self, v: usize) -> Option<usize> {
        (v >= self.pts.len()).then(|| v - self.pts.len())
    }

    /// Strict "p is inside the circumcircle" with symbolic far vertices.
    /// Boundary cases involving far vertices count as inside so that points
    /// exactly on hull edge lines still open a cavity.
    fn in_circumcircle(&self, tri: [usize; 3], p: Point2<f64>) -> bool {
        let far: Vec<usize> = (0..3).filter(|&i| self.far_index(tri[i]).is_some()).collect();
        match far.len() {
            0 => {
                let a = self.pts[tri[0]];
                let b = self.pts[tri[1]];
                let c = self.pts[tri[2]];
                incircle(a, b, c, p) > 0.0
            }
            1 => {
                // Rotate so the far vertex is last; the circle degenerates
                // to the half-plane left of the real edge.
                let k = far[0];
                let a = self.pts[tri[(k + 1) % 3]];
                let b = self.pts[tri[(k + 2) % 3]];
                orient2d(&a, &b, &p) >= 0.0
            }
            2 => {
                // Rotate so the real vertex is first; the circle degenerates
                // to a half-plane through it, parallel to the difference of
                // the two far directions.
                let k = (0..3).find(|&i| self.far_index(tri[i]).is_none()).unwrap();
                let a = self.pts[tri[k]];
                let dp = FAR_DIRS[self.far_index(tri[(k + 1) % 3]).unwrap()];
                let dq = FAR_DIRS[self.far_index(tri[(k + 2) % 3]).unwrap()];
                let q = Point2::from(a.coords + (dq - dp));
                orient2d(&a, &q, &p) <= 0.0
            }
            _ => true,
        }
    }

    fn insert(&mut self, p_idx: usize) {
        let p = self.pts[p_idx];
        let mut bad = Vec::new();
        for (ti, tri) in self.tris.iter().enumerate() {
            if self.alive[ti] && self.in_circumcircle(*tri, p) {
                bad.push(ti);
            }
        }
        // Directed edges of the cavity boundary: edges of bad triangles
        // whose reverse is not an edge of another bad triangle.
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(bad.len() * 3);
        for &ti in &bad {
            let t = self.tris[ti];
            edges.push((t[0], t[1]));
            edges.push((t[1], t[2]));
            edges.push((t[2], t[0]));
            self.alive[ti] = false;
        }
        for &(a, b) in &edges {
            if edges.contains(&(b, a)) {
                continue;
            }
            self.tris.push([p_idx, a, b]);
            self.alive.push(true);
        }
    }
}

/// Plain incircle determinant; positive when `d` is strictly inside the
/// circumcircle of CCW triangle `(a, b, c)`.
fn incircle(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let al = adx * adx + ady * ady;
    let bl = bdx * bdx + bdy * bdy;
    let cl = cdx * cdx + cdy * cdy;
    adx * (bdy * cl - bl * cdy) - ady * (bdx * cl - bl * cdx) + al * (bdx * cdy - bdy * cdx)
}

/// Circumcircle of a triangle as (center, radius); `None` when the points
/// are collinear. Exposed for mesh diagnostics and exhaustive checks.
pub fn circumcircle(
    a: Point2<f64>,
    b: Point2<f64>,
    c: Point2<f64>,
) -> Option<(Point2<f64>, f64)> {
    let d = 2.0 * orient2d(&a, &b, &c);
    if d == 0.0 {
        return None;
    }
    let al = a.coords.norm_squared();
    let bl = b.coords.norm_squared();
    let cl = c.coords.norm_squared();
    let ux = (al * (b.y - c.y) + bl * (c.y - a.y) + cl * (a.y - b.y)) / d;
    let uy = (al * (c.x - b.x) + bl * (a.x - c.x) + cl * (b.x - a.x)) / d;
    let center = Point2::new(ux, uy);
    Some((center, (center - a).norm()))
}

/// Delaunay-triangulates `uv`, carrying `positions` through to the mesh.
///
/// Exact duplicates in `uv` are collapsed to their first occurrence in
/// lexicographic order. The triangle set is canonical: independent of the
/// order of the input slices.
pub fn build_mesh(uv: &[Point2<f64>], positions: &[Point3<f64>]) -> Result<TriMesh, MeshError> {
    assert_eq!(uv.len(), positions.len());

    // Canonical vertex order: sort by (u, v), collapse duplicates.
    let mut order: Vec<usize> = (0..uv.len()).collect();
    order.sort_by(|&i, &j| {
        uv[i]
            .x
            .total_cmp(&uv[j].x)
            .then(uv[i].y.total_cmp(&uv[j].y))
            .then(i.cmp(&j))
    });
    let mut kept: Vec<usize> = Vec::with_capacity(order.len());
    for &i in &order {
        if let Some(&last) = kept.last() {
            if uv[last] == uv[i] {
                continue;
            }
        }
        kept.push(i);
    }
    if kept.len() < 3 {
        return Err(MeshError::DegenerateInput);
    }

    let pts: Vec<Point2<f64>> = kept.iter().map(|&i| uv[i]).collect();

    // Reject fully collinear inputs.
    let a = pts[0];
    let span = pts.iter().position(|p| (p - a).norm() > 0.0);
    let non_collinear = span.map_or(false, |s| {
        let scale = pts.iter().map(|p| (p - a).norm()).fold(0.0, f64::max);
        pts.iter()
            .any(|p| orient2d(&a, &pts[s], p).abs() > 1e-12 * scale * scale)
    });
    if !non_collinear {
        return Err(MeshError::DegenerateInput);
    }

    let n = pts.len();
    let mut builder = Builder {
        pts,
        tris: vec![[n, n + 1, n + 2]],
        alive: vec![true],
    };
    for i in 0..n {
        builder.insert(i);
    }

    let mut triangles: Vec<[usize; 3]> = builder
        .tris
        .iter()
        .zip(&builder.alive)
        .filter(|&(t, &alive)| alive && t.iter().all(|&v| v < n))
        .map(|(t, _)| {
            let mut s = *t;
            s.sort_unstable();
            s
        })
        .collect();
    triangles.sort_unstable();

    Ok(TriMesh {
        uv: builder.pts,
        positions: kept.iter().map(|&i| positions[i]).collect(),
        vertices: kept,
        triangles,
    })
}

/// Drops triangles whose lifted 3D shape fails the gates: overlong edges,
/// extreme aspect ratio, or a too-small interior angle. Vertex arrays are
/// left untouched, so pruning is idempotent and stable.
pub fn prune_mesh(mesh: &TriMesh, gates: &MeshGates) -> TriMesh {
    let min_angle = gates.min_angle_deg.to_radians();
    let triangles = mesh
        .triangles
        .iter()
        .filter(|t| {
            let p0 = mesh.positions[t[0]];
            let p1 = mesh.positions[t[1]];
            let p2 = mesh.positions[t[2]];
            let e = [(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()];
            let longest = e[0].max(e[1]).max(e[2]);
            let shortest = e[0].min(e[1]).min(e[2]);
            if shortest < 1e-12 || longest > gates.max_edge {
                return false;
            }
            if longest / shortest > gates.max_aspect {
                return false;
            }
            // Interior angles by the law of cosines; e[i] is opposite
            // vertex (i + 2) mod 3.
            for i in 0..3 {
                let opp = e[i];
                let u = e[(i + 1) % 3];
                let v = e[(i + 2) % 3];
                let cos = ((u * u + v * v - opp * opp) / (2.0 * u * v)).clamp(-1.0, 1.0);
                if cos.acos() < min_angle {
                    return false;
                }
            }
            true
        })
        .copied()
        .collect();
    TriMesh {
        vertices: mesh.vertices.clone(),
        uv: mesh.uv.clone(),
        positions: mesh.positions.clone(),
        triangles,
    }
}
