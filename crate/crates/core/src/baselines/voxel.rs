//! Solid voxelization of a mesh inside the unit ball, and geometric moments
//! of the resulting occupancy field.

use rayon::prelude::*;

use crate::mesh::{TriangleMesh, Vec3};

pub const DEFAULT_VOXEL_RESOLUTION: usize = 64;

/// Occupancy values on a `resolution^3` grid of cells covering `[-1, 1]^3`.
/// Cells whose centre lies outside the unit ball are always 0.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    resolution: usize,
    values: Vec<f64>,
}

/// A grid together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Voxelization {
    pub grid: VoxelGrid,
    /// Set when ray parity was inconsistent and surface occupancy was used.
    pub watertight_fallback: bool,
}

impl VoxelGrid {
    /// Grid with `f(centre)` in every cell inside the unit ball.
    pub fn from_fn(resolution: usize, f: impl Fn(&Vec3) -> f64 + Sync) -> Self {
        let n = resolution;
        let values = (0..n * n * n)
            .into_par_iter()
            .map(|idx| {
                let c = cell_centre(n, idx % n, (idx / n) % n, idx / (n * n));
                if c.norm_squared() > 1.0 {
                    0.0
                } else {
                    f(&c)
                }
            })
            .collect();
        Self { resolution, values }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_size(&self) -> f64 {
        2.0 / self.resolution as f64
    }

    /// Value of cell `(i, j, k)`, with `i` along X.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.resolution;
        self.values[i + n * (j + n * k)]
    }

    pub fn centre(&self, i: usize, j: usize, k: usize) -> Vec3 {
        cell_centre(self.resolution, i, j, k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Iterates `(centre, value)` over non-zero cells in index order.
    pub fn occupied(&self) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        let n = self.resolution;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(move |(idx, &v)| (cell_centre(n, idx % n, (idx / n) % n, idx / (n * n)), v))
    }
}

fn coord(n: usize, i: usize) -> f64 {
    -1.0 + (i as f64 + 0.5) * 2.0 / n as f64
}

fn cell_centre(n: usize, i: usize, j: usize, k: usize) -> Vec3 {
    Vec3::new(coord(n, i), coord(n, j), coord(n, k))
}

/// Projection of a triangle onto the (y, z) plane, counter-clockwise.
struct Projected {
    p: [[f64; 2]; 3],
    x: [f64; 3],
    area2: f64,
}

impl Projected {
    fn new(c: &[Vec3; 3]) -> Option<Self> {
        let mut p = [[c[0].y, c[0].z], [c[1].y, c[1].z], [c[2].y, c[2].z]];
        let mut x = [c[0].x, c[1].x, c[2].x];
        let mut area2 = edge(&p[0], &p[1], &p[2]);
        if area2 == 0.0 {
            return None;
        }
        if area2 < 0.0 {
            p.swap(1, 2);
            x.swap(1, 2);
            area2 = -area2;
        }
        Some(Self { p, x, area2 })
    }

    /// X coordinate where the line through `(y, z)` parallel to X meets the
    /// triangle, if it does. Points on an edge belong to the triangle only for
    /// top or left edges, so a ray through a shared edge is counted once.
    fn hit(&self, q: &[f64; 2]) -> Option<f64> {
        let mut w = [0.0; 3];
        for e in 0..3 {
            let (a, b) = (&self.p[(e + 1) % 3], &self.p[(e + 2) % 3]);
            let v = edge(a, b, q);
            if v < 0.0 || (v == 0.0 && !top_left(a, b)) {
                return None;
            }
            w[e] = v;
        }
        Some((w[0] * self.x[0] + w[1] * self.x[1] + w[2] * self.x[2]) / self.area2)
    }
}

fn edge(a: &[f64; 2], b: &[f64; 2], q: &[f64; 2]) -> f64 {
    (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
}

fn top_left(a: &[f64; 2], b: &[f64; 2]) -> bool {
    let (dy, dz) = (b[0] - a[0], b[1] - a[1]);
    (dz == 0.0 && dy < 0.0) || dz > 0.0
}

/// Solid voxelization by parity of X-parallel rays through the cell centres.
/// If any ray crosses the surface an odd number of times the mesh is not
/// watertight and the grid falls back to surface occupancy.
pub fn voxelize_solid(mesh: &TriangleMesh, resolution: usize) -> Voxelization {
    let n = resolution;
    let projected: Vec<Projected> = (0..mesh.triangle_count())
        .filter_map(|t| Projected::new(&mesh.corners(t)))
        .collect();

    let slabs: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let z = coord(n, k);
            let near: Vec<&Projected> = projected
                .iter()
                .filter(|t| {
                    let lo = t.p.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
                    let hi = t.p.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
                    lo <= z && z <= hi
                })
                .collect();
            let mut slab = vec![0.0; n * n];
            for j in 0..n {
                let q = [coord(n, j), z];
                let mut hits: Vec<f64> = near.iter().filter_map(|t| t.hit(&q)).collect();
                if hits.len() % 2 == 1 {
                    return None;
                }
                hits.sort_by(f64::total_cmp);
                for i in 0..n {
                    let c = cell_centre(n, i, j, k);
                    let crossed = hits.partition_point(|&h| h < c.x);
                    if crossed % 2 == 1 && c.norm_squared() <= 1.0 {
                        slab[i + n * j] = 1.0;
                    }
                }
            }
            Some(slab)
        })
        .collect();

    if slabs.iter().all(Option::is_some) {
        let values = slabs.into_iter().flatten().flatten().collect();
        return Voxelization {
            grid: VoxelGrid { resolution, values },
            watertight_fallback: false,
        };
    }
    Voxelization {
        grid: voxelize_surface(mesh, resolution),
        watertight_fallback: true,
    }
}

/// Cells whose centre lies within half a cell diagonal of some triangle.
pub fn voxelize_surface(mesh: &TriangleMesh, resolution: usize) -> VoxelGrid {
    let n = resolution;
    let h = 2.0 / n as f64;
    let reach = h * 3f64.sqrt() / 2.0;
    let cell_of = |v: f64| (((v + 1.0) / h).floor()).clamp(0.0, (n - 1) as f64) as usize;
    let mut hits: Vec<usize> = (0..mesh.triangle_count())
        .into_par_iter()
        .flat_map_iter(|t| {
            let tri = mesh.corners(t);
            let lo = tri.iter().fold(Vec3::repeat(f64::INFINITY), |a, p| a.inf(p)) - Vec3::repeat(reach);
            let hi = tri.iter().fold(Vec3::repeat(f64::NEG_INFINITY), |a, p| a.sup(p)) + Vec3::repeat(reach);
            let mut cells = Vec::new();
            if hi.x < -1.0 || hi.y < -1.0 || hi.z < -1.0 || lo.x > 1.0 || lo.y > 1.0 || lo.z > 1.0 {
                return cells.into_iter();
            }
            for k in cell_of(lo.z)..=cell_of(hi.z) {
                for j in cell_of(lo.y)..=cell_of(hi.y) {
                    for i in cell_of(lo.x)..=cell_of(hi.x) {
                        let c = cell_centre(n, i, j, k);
                        if c.norm_squared() <= 1.0 && (closest_point(&c, &tri) - c).norm() <= reach {
                            cells.push(i + n * (j + n * k));
                        }
                    }
                }
            }
            cells.into_iter()
        })
        .collect();
    hits.sort_unstable();
    hits.dedup();
    let mut values = vec![0.0; n * n * n];
    for idx in hits {
        values[idx] = 1.0;
    }
    VoxelGrid { resolution, values }
}

/// Closest point of triangle `t` to `p` (Voronoi-region walk).
fn closest_point(p: &Vec3, t: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = t;
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = va + vb + vc;
    if denom == 0.0 {
        // Degenerate triangle: fall back to the nearest corner.
        return *[a, b, c]
            .into_iter()
            .min_by(|u, v| (*u - p).norm_squared().total_cmp(&(*v - p).norm_squared()))
            .unwrap();
    }
    a + ab * (vb / denom) + ac * (vc / denom)
}

/// Geometric moments `M_rst` for `r + s + t <= order`, cell-centre rule.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    order: usize,
    values: Vec<f64>,
}

impl MomentTable {
    pub fn zeros(order: usize) -> Self {
        let m = order + 1;
        Self { order, values: vec![0.0; m * m * m] }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, r: usize, s: usize, t: usize) -> f64 {
        assert!(r + s + t <= self.order, "moment ({r},{s},{t}) above order {}", self.order);
        let m = self.order + 1;
        self.values[r + m * (s + m * t)]
    }

    fn add(&mut self, r: usize, s: usize, t: usize, v: f64) {
        let m = self.order + 1;
        self.values[r + m * (s + m * t)] += v;
    }
}

fn powers(v: f64, order: usize) -> Vec<f64> {
    let mut p = vec![1.0; order + 1];
    for e in 1..=order {
        p[e] = p[e - 1] * v;
    }
    p
}

pub fn geometric_moments(grid: &VoxelGrid, order: usize) -> MomentTable {
    let n = grid.resolution;
    let volume = grid.cell_size().powi(3);
    let axis: Vec<Vec<f64>> = (0..n).map(|i| powers(coord(n, i), order)).collect();
    // Per-slab partial tables, combined in slab order for reproducible sums.
    let slabs: Vec<MomentTable> = (0..n)
        .into_par_iter()
        .map(|k| {
            let m = order + 1;
            let mut xy = vec![0.0; m * m];
            for j in 0..n {
                for i in 0..n {
                    let f = grid.get(i, j, k);
                    if f == 0.0 {
                        continue;
                    }
                    for r in 0..=order {
                        let fx = f * axis[i][r];
                        for s in 0..=order - r {
                            xy[r + m * s] += fx * axis[j][s];
                        }
                    }
                }
            }
            let mut table = MomentTable::zeros(order);
            for r in 0..=order {
                for s in 0..=order - r {
                    for t in 0..=order - r - s {
                        table.add(r, s, t, xy[r + m * s] * axis[k][t] * volume);
                    }
                }
            }
            table
        })
        .collect();
    let mut total = MomentTable::zeros(order);
    for slab in slabs {
        for (a, b) in total.values.iter_mut().zip(&slab.values) {
            *a += b;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::icosphere;
    use std::f64::consts::PI;

    #[test]
    fn sphere_volume_fraction() {
        let sphere = icosphere(5).map_vertices(|v| v * 0.8);
        let vox = voxelize_solid(&sphere, 64);
        assert!(!vox.watertight_fallback);
        let expected = 4.0 / 3.0 * PI * 0.8f64.powi(3) / 8.0;
        let got = vox.grid.occupied_fraction();
        assert!((got - expected).abs() / expected < 0.03, "{got} vs {expected}");
    }

    #[test]
    fn open_triangle_falls_back_to_shell() {
        let tri = TriangleMesh::new(
            vec![Vec3::new(0.1, -0.5, -0.5), Vec3::new(0.1, 0.5, -0.5), Vec3::new(0.12, 0.0, 0.5)],
            vec![[0, 1, 2]],
            "t",
        )
        .unwrap();
        let vox = voxelize_solid(&tri, 32);
        assert!(vox.watertight_fallback);
        let occupied = vox.grid.occupied().count();
        // A thin layer: roughly the triangle area over the cell face area, times a few layers.
        assert!(occupied > 0 && occupied < 4 * 32 * 32 / 4, "{occupied}");
        assert!(vox.grid.occupied().all(|(c, _)| (c.x - 0.11).abs() < 0.1));
    }

    #[test]
    fn ball_mask_applies_to_large_solids() {
        let big = icosphere(2).map_vertices(|v| v * 3.0);
        let vox = voxelize_solid(&big, 16);
        let g = &vox.grid;
        for k in 0..16 {
            for j in 0..16 {
                for i in 0..16 {
                    let inside = g.centre(i, j, k).norm() <= 1.0;
                    assert_eq!(g.get(i, j, k), if inside { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn unit_ball_moments() {
        let g = VoxelGrid::from_fn(64, |_| 1.0);
        let m = geometric_moments(&g, 4);
        let vol = 4.0 * PI / 3.0;
        assert!((m.get(0, 0, 0) - vol).abs() / vol < 0.01);
        for (r, s, t) in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (2, 1, 0), (1, 1, 1), (3, 0, 1)] {
            assert!(m.get(r, s, t).abs() < 1e-3, "M{r}{s}{t} = {}", m.get(r, s, t));
        }
        let trace = m.get(2, 0, 0) + m.get(0, 2, 0) + m.get(0, 0, 2);
        assert!((trace - vol * 0.6).abs() / (vol * 0.6) < 0.01, "{trace}");
    }

    #[test]
    fn moments_match_cell_sum() {
        let g = VoxelGrid::from_fn(12, |c| if c.x > 0.1 { 1.0 } else { 0.5 });
        let m = geometric_moments(&g, 3);
        let h3 = g.cell_size().powi(3);
        let direct: f64 = g.occupied().map(|(c, f)| f * c.x * c.y * c.y * h3).sum();
        assert!((m.get(1, 2, 0) - direct).abs() < 1e-12);
    }
}
