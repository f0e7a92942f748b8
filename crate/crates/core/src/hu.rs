//! Image moments and Hu's seven invariants for binary images.
//!
//! Central moments are formed in exact integer arithmetic before the single
//! conversion to floating point, so translating an image leaves its invariants
//! bit-identical and grid rotations/mirrors only permute exact quantities.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::raster::BinaryImage;

/// Scale of the signed-log feature transform; see [`signed_log`].
pub const LOG_SCALE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("feature vectors use different scaling modes ({0} vs {1})")]
    ModeMismatch(ScalingMode, ScalingMode),
    #[error("unknown scaling mode '{0}'")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScalingMode {
    Raw,
    #[default]
    SignedLog,
}

impl ScalingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScalingMode::Raw => "raw",
            ScalingMode::SignedLog => "signed_log",
        }
    }
}

impl fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalingMode {
    type Err = MomentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ScalingMode::Raw),
            "signed_log" => Ok(ScalingMode::SignedLog),
            other => Err(MomentError::UnknownMode(other.to_string())),
        }
    }
}

/// Compresses the many decades spanned by Hu invariants while staying
/// continuous through zero: `sign(v) * log10(1 + |v| / LOG_SCALE)`.
pub fn signed_log(v: f64) -> f64 {
    v.signum() * (v.abs() / LOG_SCALE).ln_1p() / std::f64::consts::LN_10
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuVector {
    pub phi: [f64; 7],
    pub scaling: ScalingMode,
}

impl HuVector {
    pub fn new(phi: [f64; 7], scaling: ScalingMode) -> Self {
        Self { phi, scaling }
    }
}

/// `sum col^p row^q` over set pixels, pixel centres at integer coordinates.
pub fn raw_moment(img: &BinaryImage, p: u32, q: u32) -> f64 {
    img.set_pixels()
        .map(|(c, r)| (c as f64).powi(p as i32) * (r as f64).powi(q as i32))
        .sum()
}

/// Integer raw moments `m[p][q]` for `p + q <= 3`.
fn integer_moments(img: &BinaryImage) -> [[i128; 4]; 4] {
    let mut m = [[0i64; 4]; 4];
    for (c, r) in img.set_pixels() {
        let (c, r) = (c as i64, r as i64);
        let cp = [1, c, c * c, c * c * c];
        let rp = [1, r, r * r, r * r * r];
        for p in 0..4 {
            for q in 0..(4 - p) {
                m[p][q] += cp[p] * rp[q];
            }
        }
    }
    m.map(|row| row.map(i128::from))
}

const BINOM: [[i128; 4]; 4] = [[1, 0, 0, 0], [1, 1, 0, 0], [1, 2, 1, 0], [1, 3, 3, 1]];

/// Normalized central moments `eta[p][q]` for `2 <= p + q <= 3`.
///
/// `N_pq = sum (m00 c - m10)^p (m00 r - m01)^q` is exact in i128, and
/// `eta_pq = N_pq / m00^(p+q) / m00^(1 + (p+q)/2)`.
pub fn normalized_central_moments(img: &BinaryImage) -> [[f64; 4]; 4] {
    let m = integer_moments(img);
    let m00 = m[0][0];
    assert!(m00 > 0, "moments of an empty image");
    let pow = |base: i128, e: usize| (0..e).fold(1i128, |acc, _| acc * base);
    let mut eta = [[0.0; 4]; 4];
    let n = m00 as f64;
    for p in 0..4 {
        for q in 0..(4 - p) {
            if p + q < 2 {
                continue;
            }
            let mut acc: i128 = 0;
            for a in 0..=p {
                for b in 0..=q {
                    acc += BINOM[p][a]
                        * BINOM[q][b]
                        * pow(m00, a + b)
                        * pow(-m[1][0], p - a)
                        * pow(-m[0][1], q - b)
                        * m[a][b];
                }
            }
            let order = (p + q) as i32;
            let denom = n.powi(order) * n.powi(1 + order / 2) * if order % 2 == 1 { n.sqrt() } else { 1.0 };
            eta[p][q] = acc as f64 / denom;
        }
    }
    eta
}

/// Hu's seven invariants from normalized central moments.
pub fn hu_from_eta(eta: &[[f64; 4]; 4]) -> [f64; 7] {
    let (n20, n02, n11) = (eta[2][0], eta[0][2], eta[1][1]);
    let (n30, n03, n21, n12) = (eta[3][0], eta[0][3], eta[2][1], eta[1][2]);
    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]
}

pub fn hu_invariants(img: &BinaryImage, scaling: ScalingMode) -> HuVector {
    let phi = hu_from_eta(&normalized_central_moments(img));
    let phi = match scaling {
        ScalingMode::Raw => phi,
        ScalingMode::SignedLog => phi.map(signed_log),
    };
    HuVector { phi, scaling }
}

/// Euclidean distance in the 7-dimensional feature space.
pub fn hu_distance(a: &HuVector, b: &HuVector) -> Result<f64, MomentError> {
    if a.scaling != b.scaling {
        return Err(MomentError::ModeMismatch(a.scaling, b.scaling));
    }
    Ok(euclidean(&a.phi, &b.phi))
}

pub fn euclidean(a: &[f64; 7], b: &[f64; 7]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
