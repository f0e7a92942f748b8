//! Surface moments of a triangle mesh with unit density, their central and
//! scale-normalized forms, and rotation invariants built from them.

use thiserror::Error;

use super::expr::{parse_config, ConfigError, Expr};
use crate::mesh::{TriangleMesh, Vec3};
use crate::quadrature::integrate_triangle;

/// Highest total order `k + l + m` kept; the 7-point rule is exact through 5.
pub const SURFACE_ORDER: usize = 4;

/// Default invariants: the three invariants of the second-order tensor, the
/// full contraction and vector contraction of the third-order tensor, and
/// the trace and full contraction of the fourth-order tensor.
pub const DEFAULT_INVARIANTS: &str = "\
i2_trace = m200 + m020 + m002
i2_minor = m200*m020 + m200*m002 + m020*m002 - m110^2 - m101^2 - m011^2
i2_det = m200*m020*m002 + 2*m110*m101*m011 - m200*m011^2 - m020*m101^2 - m002*m110^2
i3_full = m300^2 + m030^2 + m003^2 + 3*(m210^2 + m201^2 + m120^2 + m021^2 + m102^2 + m012^2) + 6*m111^2
i3_vector = (m300 + m120 + m102)^2 + (m210 + m030 + m012)^2 + (m201 + m021 + m003)^2
i4_trace = m400 + m040 + m004 + 2*(m220 + m202 + m022)
i4_full = m400^2 + m040^2 + m004^2 + 4*(m310^2 + m301^2 + m130^2 + m031^2 + m103^2 + m013^2) + 6*(m220^2 + m202^2 + m022^2) + 12*(m211^2 + m121^2 + m112^2)
";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("surface has zero area")]
    ZeroMass,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

const SIDE: usize = SURFACE_ORDER + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMomentSet {
    values: [f64; SIDE * SIDE * SIDE],
    pub centered: bool,
    pub scale_normalized: bool,
    /// Surface centroid of the raw moments this set was derived from.
    pub centroid: Vec3,
}

fn slot(k: usize, l: usize, m: usize) -> usize {
    k + SIDE * (l + SIDE * m)
}

fn exponents() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=SURFACE_ORDER).flat_map(|k| {
        (0..=SURFACE_ORDER - k).flat_map(move |l| (0..=SURFACE_ORDER - k - l).map(move |m| (k, l, m)))
    })
}

impl SurfaceMomentSet {
    pub fn get(&self, k: usize, l: usize, m: usize) -> f64 {
        assert!(k + l + m <= SURFACE_ORDER, "moment ({k},{l},{m}) above order {SURFACE_ORDER}");
        self.values[slot(k, l, m)]
    }

    /// `(k, l, m, value)` for every stored moment.
    pub fn entries(&self) -> Vec<(usize, usize, usize, f64)> {
        exponents().map(|(k, l, m)| (k, l, m, self.get(k, l, m))).collect()
    }
}

fn pow(v: f64, e: usize) -> f64 {
    v.powi(e as i32)
}

/// `M_klm = sum over triangles of the integral of x^k y^l z^m dA`.
pub fn surface_moments(mesh: &TriangleMesh) -> SurfaceMomentSet {
    let mut values = [0.0; SIDE * SIDE * SIDE];
    for t in 0..mesh.triangle_count() {
        let corners = mesh.corners(t);
        let area = mesh.triangle_area(t);
        if area == 0.0 {
            continue;
        }
        for (k, l, m) in exponents() {
            values[slot(k, l, m)] +=
                integrate_triangle(&corners, area, |p| pow(p.x, k) * pow(p.y, l) * pow(p.z, m));
        }
    }
    let mass = values[0];
    let centroid = if mass > 0.0 {
        Vec3::new(values[slot(1, 0, 0)], values[slot(0, 1, 0)], values[slot(0, 0, 1)]) / mass
    } else {
        Vec3::zeros()
    };
    SurfaceMomentSet { values, centered: false, scale_normalized: false, centroid }
}

fn binom(n: usize, k: usize) -> f64 {
    const TABLE: [[f64; SIDE]; SIDE] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    TABLE[n][k]
}

/// Central moments about the centroid (binomial expansion of the raw
/// moments), then `mu_klm = M_klm / M_000^(1 + (k+l+m)/2)`.
pub fn normalize_surface_moments(raw: &SurfaceMomentSet) -> Result<SurfaceMomentSet, SurfaceError> {
    let mass = raw.get(0, 0, 0);
    if mass <= 0.0 || !mass.is_finite() {
        return Err(SurfaceError::ZeroMass);
    }
    let c = raw.centroid;
    let mut values = [0.0; SIDE * SIDE * SIDE];
    for (k, l, m) in exponents() {
        let mut sum = 0.0;
        for a in 0..=k {
            for b in 0..=l {
                for d in 0..=m {
                    sum += binom(k, a) * binom(l, b) * binom(m, d)
                        * pow(-c.x, k - a)
                        * pow(-c.y, l - b)
                        * pow(-c.z, m - d)
                        * raw.get(a, b, d);
                }
            }
        }
        let order = (k + l + m) as f64;
        values[slot(k, l, m)] = sum / mass.powf(1.0 + order / 2.0);
    }
    // Exact by construction.
    values[slot(0, 0, 0)] = 1.0;
    for s in [slot(1, 0, 0), slot(0, 1, 0), slot(0, 0, 1)] {
        values[s] = 0.0;
    }
    Ok(SurfaceMomentSet { values, centered: true, scale_normalized: true, centroid: c })
}

/// A parsed list of invariant expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantConfig {
    pub expressions: Vec<(String, Expr)>,
}

impl InvariantConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(Self { expressions: parse_config(text, SURFACE_ORDER)? })
    }

    pub fn evaluate(&self, moments: &SurfaceMomentSet) -> Vec<f64> {
        let lookup = |k, l, m| moments.get(k, l, m);
        self.expressions.iter().map(|(_, e)| e.eval(&lookup)).collect()
    }
}

impl Default for InvariantConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_INVARIANTS).expect("default invariants parse")
    }
}

pub fn surface_descriptor(mesh: &TriangleMesh, config: &InvariantConfig) -> Result<Vec<f64>, SurfaceError> {
    let mu = normalize_surface_moments(&surface_moments(mesh))?;
    Ok(config.evaluate(&mu))
}
