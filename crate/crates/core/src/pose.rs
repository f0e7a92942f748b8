//! Canonical pose: centre of gravity at the origin, continuous-PCA rotation
//! (largest variance on X, smallest on Z), unit average surface distance.

use nalgebra::{Matrix3, SymmetricEigen};
use thiserror::Error;

use crate::mesh::{TriangleMesh, Vec3};
use crate::quadrature::integrate_triangle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoseError {
    #[error("mesh has zero surface area")]
    ZeroSurfaceArea,
}

/// Relative eigenvalue gap below which two principal axes are interchangeable.
pub const SPECTRUM_GAP: f64 = 1e-9;
/// Relative signed-square statistic below which an axis sign is left as found.
pub const SIGN_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSummary {
    pub matrix: Matrix3<f64>,
    /// Sorted descending.
    pub eigenvalues: [f64; 3],
    /// Unit eigenvectors matching `eigenvalues`.
    pub eigenvectors: [Vec3; 3],
    pub degenerate_spectrum: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseFlags {
    pub degenerate_spectrum: bool,
    pub sign_ambiguous: [bool; 3],
}

/// Maps a vertex `v` to `rotation * (v + translation) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseTransform {
    pub translation: Vec3,
    pub rotation: Matrix3<f64>,
    pub scale: f64,
    pub flags: PoseFlags,
}

impl PoseTransform {
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.rotation * (v + self.translation) / self.scale
    }
}

/// Area-weighted mean of triangle centroids.
pub fn surface_center_of_gravity(mesh: &TriangleMesh) -> Result<Vec3, PoseError> {
    let mut area = 0.0;
    let mut moment = Vec3::zeros();
    for i in 0..mesh.triangle_count() {
        let a = mesh.triangle_area(i);
        area += a;
        moment += mesh.triangle_centroid(i) * a;
    }
    if area <= 0.0 {
        return Err(PoseError::ZeroSurfaceArea);
    }
    Ok(moment / area)
}

/// Surface covariance about `center`, integrated exactly over each linear
/// triangle: `int_T p p^T ds = A/12 (s s^T + a a^T + b b^T + c c^T)`, `s = a + b + c`.
pub fn continuous_covariance(
    mesh: &TriangleMesh,
    center: &Vec3,
) -> Result<CovarianceSummary, PoseError> {
    let mut total_area = 0.0;
    let mut acc = Matrix3::zeros();
    for i in 0..mesh.triangle_count() {
        let area = mesh.triangle_area(i);
        if area == 0.0 {
            continue;
        }
        let [a, b, c] = mesh.corners(i).map(|v| v - center);
        let s = a + b + c;
        acc += (s * s.transpose() + a * a.transpose() + b * b.transpose() + c * c.transpose())
            * (area / 12.0);
        total_area += area;
    }
    if total_area <= 0.0 {
        return Err(PoseError::ZeroSurfaceArea);
    }
    let mut matrix = acc / total_area;
    // Symmetrize away accumulation asymmetry.
    matrix = (matrix + matrix.transpose()) * 0.5;

    let eigen = SymmetricEigen::new(matrix);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eigen.eigenvalues[j].total_cmp(&eigen.eigenvalues[i]));
    let eigenvalues = order.map(|k| eigen.eigenvalues[k]);
    let eigenvectors = order.map(|k| eigen.eigenvectors.column(k).normalize());
    let scale = eigenvalues[0].abs().max(f64::MIN_POSITIVE);
    let degenerate_spectrum = eigenvalues[0] - eigenvalues[1] < SPECTRUM_GAP * scale
        || eigenvalues[1] - eigenvalues[2] < SPECTRUM_GAP * scale;
    Ok(CovarianceSummary {
        matrix,
        eigenvalues,
        eigenvectors,
        degenerate_spectrum,
    })
}

/// `int_T x^2 ds` for a triangle whose corners have axis coordinates `x`.
fn square_integral(x: [f64; 3], area: f64) -> f64 {
    area / 6.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[0] * x[1] + x[1] * x[2] + x[0] * x[2])
}

fn polygon_square_integral(poly: &[Vec3], axis: usize) -> f64 {
    let mut total = 0.0;
    for k in 1..poly.len().saturating_sub(1) {
        let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        total += square_integral([a[axis], b[axis], c[axis]], area);
    }
    total
}

/// Exact `int_T sign(p_axis) p_axis^2 ds`, splitting the triangle at `p_axis = 0`.
fn signed_square_integral(corners: &[Vec3; 3], axis: usize) -> f64 {
    let mut positive = Vec::with_capacity(4);
    let mut negative = Vec::with_capacity(4);
    for k in 0..3 {
        let (p, q) = (corners[k], corners[(k + 1) % 3]);
        let (dp, dq) = (p[axis], q[axis]);
        if dp >= 0.0 {
            positive.push(p);
        }
        if dp <= 0.0 {
            negative.push(p);
        }
        if (dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0) {
            let t = dp / (dp - dq);
            let mut cut = p + (q - p) * t;
            cut[axis] = 0.0;
            positive.push(cut);
            negative.push(cut);
        }
    }
    polygon_square_integral(&positive, axis) - polygon_square_integral(&negative, axis)
}

/// Continuous area-weighted mean of `|p|` (7-point rule per triangle).
pub fn mean_surface_distance(mesh: &TriangleMesh) -> Result<f64, PoseError> {
    let mut area_total = 0.0;
    let mut integral = 0.0;
    for i in 0..mesh.triangle_count() {
        let area = mesh.triangle_area(i);
        if area == 0.0 {
            continue;
        }
        integral += integrate_triangle(&mesh.corners(i), area, |p| p.norm());
        area_total += area;
    }
    if area_total <= 0.0 {
        return Err(PoseError::ZeroSurfaceArea);
    }
    Ok(integral / area_total)
}

/// Moves the mesh into its canonical frame and returns the transform used.
pub fn normalize_pose(mesh: &TriangleMesh) -> Result<(TriangleMesh, PoseTransform), PoseError> {
    let center = surface_center_of_gravity(mesh)?;
    let cov = continuous_covariance(mesh, &center)?;
    let mut rows = cov.eigenvectors;

    let mut flags = PoseFlags {
        degenerate_spectrum: cov.degenerate_spectrum,
        sign_ambiguous: [false; 3],
    };
    let rotation = Matrix3::from_rows(&rows.map(|r| r.transpose()));
    let rotated = mesh.map_vertices(|v| rotation * (v - center));
    let total_area = rotated.surface_area();
    for axis in 0..3 {
        let stat: f64 = (0..rotated.triangle_count())
            .map(|i| signed_square_integral(&rotated.corners(i), axis))
            .sum();
        let reference = total_area * cov.eigenvalues[axis].abs();
        if stat.abs() <= SIGN_THRESHOLD * reference {
            flags.sign_ambiguous[axis] = true;
        } else if stat < 0.0 {
            rows[axis] = -rows[axis];
        }
    }
    let mut rotation = Matrix3::from_rows(&rows.map(|r| r.transpose()));
    if rotation.determinant() < 0.0 {
        rows[2] = -rows[2];
        rotation = Matrix3::from_rows(&rows.map(|r| r.transpose()));
    }

    let aligned = mesh.map_vertices(|v| rotation * (v - center));
    let scale = mean_surface_distance(&aligned)?;
    if scale <= 0.0 {
        return Err(PoseError::ZeroSurfaceArea);
    }
    let normalized = aligned.map_vertices(|v| v / scale);
    Ok((
        normalized,
        PoseTransform {
            translation: -center,
            rotation,
            scale,
            flags,
        },
    ))
}
