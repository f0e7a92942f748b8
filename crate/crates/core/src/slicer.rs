//! Level images: cross-sections of a normalized mesh by planes `x = const`.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::TriangleMesh;
use crate::raster::{rasterize_slice, BinaryImage};

pub const DEFAULT_PLANES: usize = 300;
/// Endpoints closer than this are joined when chaining segments.
pub const CHAIN_TOLERANCE: f64 = 1e-7;
/// Nudge applied to a plane that passes exactly through a vertex.
pub const PLANE_NUDGE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SliceError {
    #[error("mesh X-extent {0} is too small to slice")]
    DegenerateExtent(f64),
    #[error("at least two planes are required, got {0}")]
    TooFewPlanes(usize),
}

/// Polyline in the (y, z) plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSlice {
    pub x_position: f64,
    pub contours: Vec<Contour>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelImage {
    /// Index of the plane among all `n` planes, empty ones included.
    pub plane: usize,
    pub x: f64,
    pub image: BinaryImage,
}

/// Cell-centred plane positions over the X-extent of the mesh.
pub fn slice_positions(mesh: &TriangleMesh, n: usize) -> Result<Vec<f64>, SliceError> {
    if n < 2 {
        return Err(SliceError::TooFewPlanes(n));
    }
    let bb = mesh.bounding_box();
    let (lo, hi) = (bb.min.x, bb.max.x);
    if !(hi - lo >= 1e-9) {
        return Err(SliceError::DegenerateExtent(hi - lo));
    }
    let h = (hi - lo) / n as f64;
    Ok((0..n).map(|i| lo + (i as f64 + 0.5) * h).collect())
}

/// Intersection segments of the mesh with the plane `x = plane`, as 3D point pairs.
/// Each crossing point is computed from the edge in a fixed vertex order so
/// neighbouring triangles produce bit-identical endpoints.
pub(crate) fn plane_segments(mesh: &TriangleMesh, plane: f64) -> Vec<[nalgebra::Vector3<f64>; 2]> {
    let vertices = mesh.vertices();
    let crossing = |i: usize, j: usize| {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let (a, b) = (vertices[i], vertices[j]);
        let t = (plane - a.x) / (b.x - a.x);
        let mut p = a + (b - a) * t;
        p.x = plane;
        p
    };
    let mut segments = Vec::new();
    for tri in mesh.triangles() {
        let above = tri.map(|v| vertices[v].x > plane);
        if above[0] == above[1] && above[1] == above[2] {
            continue;
        }
        let mut ends = Vec::with_capacity(2);
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            if above[k] != above[(k + 1) % 3] {
                ends.push(crossing(i, j));
            }
        }
        if ends.len() == 2 {
            segments.push([ends[0], ends[1]]);
        }
    }
    segments
}

/// Tolerance-based clustering of segment endpoints into graph nodes.
struct NodeIndex {
    cells: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<[f64; 2]>,
}

impl NodeIndex {
    fn key(p: [f64; 2]) -> (i64, i64) {
        (
            (p[0] / CHAIN_TOLERANCE).floor() as i64,
            (p[1] / CHAIN_TOLERANCE).floor() as i64,
        )
    }

    fn node(&mut self, p: [f64; 2]) -> usize {
        let (kx, ky) = Self::key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let q = self.points[id];
                        if (p[0] - q[0]).hypot(p[1] - q[1]) <= CHAIN_TOLERANCE {
                            return id;
                        }
                    }
                }
            }
        }
        self.points.push(p);
        let id = self.points.len() - 1;
        self.cells.entry((kx, ky)).or_default().push(id);
        id
    }
}

/// Chains 2D segments into polylines; loops that return to their start node are closed.
fn chain_segments(segments: &[[[f64; 2]; 2]]) -> Vec<Contour> {
    let mut index = NodeIndex {
        cells: HashMap::new(),
        points: Vec::new(),
    };
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(segments.len());
    for [a, b] in segments {
        let (u, v) = (index.node(*a), index.node(*b));
        if u != v {
            edges.push((u, v));
        }
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); index.points.len()];
    for (e, &(u, v)) in edges.iter().enumerate() {
        incident[u].push(e);
        incident[v].push(e);
    }
    let mut used = vec![false; edges.len()];

    let walk = |start: usize, used: &mut Vec<bool>| -> Option<(Vec<usize>, bool)> {
        let mut nodes = vec![start];
        let mut at = start;
        loop {
            let next = incident[at].iter().copied().find(|&e| !used[e]);
            let Some(e) = next else { break };
            used[e] = true;
            let (u, v) = edges[e];
            at = if u == at { v } else { u };
            if at == start {
                return Some((nodes, true));
            }
            nodes.push(at);
        }
        (nodes.len() > 1).then_some((nodes, false))
    };

    let mut contours = Vec::new();
    // Open chains start at odd-degree nodes; whatever remains is a set of loops.
    for start in 0..incident.len() {
        if incident[start].len() % 2 == 1 {
            while incident[start].iter().any(|&e| !used[e]) {
                if let Some((nodes, closed)) = walk(start, &mut used) {
                    contours.push((nodes, closed));
                }
            }
        }
    }
    for start in 0..incident.len() {
        while incident[start].iter().any(|&e| !used[e]) {
            if let Some((nodes, closed)) = walk(start, &mut used) {
                contours.push((nodes, closed));
            }
        }
    }
    contours
        .into_iter()
        .map(|(nodes, closed)| {
            let points: Vec<[f64; 2]> = nodes.iter().map(|&n| index.points[n]).collect();
            let closed = closed && points.len() >= 3;
            Contour { points, closed }
        })
        .collect()
}

/// Cross-section of the mesh by the plane `x = const`.
pub fn intersect_plane(mesh: &TriangleMesh, x: f64) -> PlaneSlice {
    let mut plane = x;
    // A plane through a vertex is nudged until it is clear of all vertices.
    while mesh.vertices().iter().any(|v| v.x == plane) {
        plane += PLANE_NUDGE;
    }
    let segments: Vec<[[f64; 2]; 2]> = plane_segments(mesh, plane)
        .into_iter()
        .map(|[a, b]| [[a.y, a.z], [b.y, b.z]])
        .collect();
    PlaneSlice {
        x_position: plane,
        contours: chain_segments(&segments),
    }
}

/// Slices, rasterizes and keeps the non-empty images in ascending x.
pub fn extract_level_images(
    mesh: &TriangleMesh,
    n_planes: usize,
    resolution: usize,
) -> Result<Vec<LevelImage>, SliceError> {
    let positions = slice_positions(mesh, n_planes)?;
    let images: Vec<Option<LevelImage>> = positions
        .par_iter()
        .enumerate()
        .map(|(plane, &x)| {
            let slice = intersect_plane(mesh, x);
            rasterize_slice(&slice, resolution).map(|image| LevelImage {
                plane,
                x: slice.x_position,
                image,
            })
        })
        .collect();
    Ok(images.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Vec3;
    use crate::shapes::{box_mesh, icosphere, two_spheres};

    fn line_mesh(lo: f64, hi: f64) -> TriangleMesh {
        TriangleMesh::new(
            vec![Vec3::new(lo, 0.0, 0.0), Vec3::new(hi, 1.0, 0.0), Vec3::new(hi, 0.0, 1.0)],
            vec![[0, 1, 2]],
            "t",
        )
        .unwrap()
    }

    #[test]
    fn positions_are_cell_centred() {
        let p = slice_positions(&line_mesh(-1.0, 1.0), 4).unwrap();
        let expected = [-0.75, -0.25, 0.25, 0.75];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = slice_positions(&line_mesh(-1.0, 1.0), 300).unwrap();
        assert_eq!(p.len(), 300);
        for w in p.windows(2) {
            assert!((w[1] - w[0] - 2.0 / 300.0).abs() < 1e-12);
        }
        let flat = TriangleMesh::new(
            vec![Vec3::zeros(), Vec3::y(), Vec3::z()],
            vec![[0, 1, 2]],
            "flat",
        )
        .unwrap();
        assert_eq!(slice_positions(&flat, 10), Err(SliceError::DegenerateExtent(0.0)));
        assert_eq!(slice_positions(&flat, 1), Err(SliceError::TooFewPlanes(1)));
    }

    #[test]
    fn sphere_equator_is_one_closed_circle() {
        let sphere = icosphere(5);
        let slice = intersect_plane(&sphere, 0.0);
        assert_eq!(slice.contours.len(), 1);
        let c = &slice.contours[0];
        assert!(c.closed);
        // Chordal error of an icosphere with ~0.02 edge length.
        let sagitta = 1e-3;
        for p in &c.points {
            let r = p[0].hypot(p[1]);
            assert!(r <= 1.0 + 1e-12 && r > 1.0 - sagitta, "radius {r}");
        }
    }

    #[test]
    fn cube_section_perimeter() {
        let cube = box_mesh(Vec3::repeat(1.0), 3);
        let slice = intersect_plane(&cube, 0.0);
        assert_eq!(slice.contours.len(), 1);
        let c = &slice.contours[0];
        assert!(c.closed);
        let perimeter: f64 = (0..c.points.len())
            .map(|k| {
                let (p, q) = (c.points[k], c.points[(k + 1) % c.points.len()]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .sum();
        assert!((perimeter - 4.0).abs() < 1e-9, "{perimeter}");
        for p in &c.points {
            assert!(p[0].abs().max(p[1].abs()) - 0.5 < 1e-12);
        }
    }

    #[test]
    fn plane_outside_is_empty() {
        assert!(intersect_plane(&icosphere(2), 1.5).contours.is_empty());
    }

    #[test]
    fn plane_through_vertices_is_nudged() {
        // x = 0 passes through vertices of the subdivided cube.
        let cube = box_mesh(Vec3::repeat(1.0), 2);
        let slice = intersect_plane(&cube, 0.0);
        assert!(slice.x_position > 0.0 && slice.x_position < 1e-8);
        assert_eq!(slice.contours.len(), 1);
        assert!(slice.contours[0].closed);
    }

    #[test]
    fn segment_points_lie_on_plane() {
        let sphere = icosphere(3);
        for x in [-0.77, -0.1, 0.33, 0.9] {
            for [a, b] in plane_segments(&sphere, x) {
                assert!((a.x - x).abs() < 1e-9 && (b.x - x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn convex_slices_are_single_closed_contours() {
        let sphere = icosphere(3);
        for x in slice_positions(&sphere, 40).unwrap() {
            let s = intersect_plane(&sphere, x);
            assert_eq!(s.contours.len(), 1);
            assert!(s.contours[0].closed);
        }
    }

    #[test]
    fn sphere_profile_is_unimodal() {
        let images = extract_level_images(&icosphere(4), 300, 128).unwrap();
        assert!(images.len() >= 295);
        let counts: Vec<usize> = images.iter().map(|l| l.image.count()).collect();
        let peak = counts.iter().enumerate().max_by_key(|(_, &c)| c).unwrap().0;
        assert!((images[peak].x).abs() < 0.05);
        // Allow a few pixels of staircase noise per step.
        for w in counts[..=peak].windows(2) {
            assert!(w[1] + 4 >= w[0]);
        }
        for w in counts[peak..].windows(2) {
            assert!(w[0] + 4 >= w[1]);
        }
    }

    #[test]
    fn gap_between_spheres_has_no_images() {
        let mesh = two_spheres(1.5, 3);
        let images = extract_level_images(&mesh, 100, 64).unwrap();
        let positions = slice_positions(&mesh, 100).unwrap();
        let kept: Vec<usize> = images.iter().map(|l| l.plane).collect();
        for (plane, &x) in positions.iter().enumerate() {
            let in_gap = x.abs() < 0.5;
            assert_eq!(!kept.contains(&plane), in_gap, "plane at x = {x}");
        }
    }

    #[test]
    fn flat_triangle_gives_at_most_one_image() {
        let tri = TriangleMesh::new(
            vec![Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.1, 0.5, 0.0), Vec3::new(0.1001, 0.0, 0.5)],
            vec![[0, 1, 2]],
            "flat",
        )
        .unwrap();
        let images = extract_level_images(&tri, 300, 64).unwrap();
        assert!(images.len() <= 300);
        let images = extract_level_images(&tri, 2, 64).unwrap();
        assert!(images.len() <= 2);
    }
}
