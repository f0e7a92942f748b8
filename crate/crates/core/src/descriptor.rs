//! Characteristic level images: per-model sets of Hu vectors, reduced by
//! k-means to medoid slices and compared with the Hausdorff distance.

use rayon::prelude::*;
use thiserror::Error;

use crate::hu::{euclidean, hu_invariants, HuVector, ScalingMode};
use crate::kmeans::kmeans;
use crate::mesh::TriangleMesh;
use crate::pose::{normalize_pose, PoseError};
use crate::raster::DEFAULT_RESOLUTION;
use crate::slicer::{extract_level_images, LevelImage, SliceError, DEFAULT_PLANES};

pub const DEFAULT_K_MAX: usize = 40;
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Level images with fewer set pixels than this fraction of the model's
/// largest level image are not used as features.
pub const DEFAULT_MIN_AREA_FRACTION: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescriptorError {
    #[error("Hausdorff distance of an empty set")]
    EmptySet,
    #[error("descriptors use different scaling modes ({0} vs {1})")]
    ModeMismatch(ScalingMode, ScalingMode),
    #[error("no cross-section produced a non-empty image")]
    NoLevelImages,
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliDescriptor {
    pub model_id: String,
    pub vectors: Vec<HuVector>,
    pub scaling: ScalingMode,
    pub n_source_images: usize,
}

/// Pipeline parameters for descriptor extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliParams {
    pub n_planes: usize,
    pub resolution: usize,
    pub k_max: usize,
    pub scaling: ScalingMode,
    pub seed: u64,
    /// 0 keeps every non-empty level image.
    pub min_area_fraction: f64,
}

impl Default for CliParams {
    fn default() -> Self {
        Self {
            n_planes: DEFAULT_PLANES,
            resolution: DEFAULT_RESOLUTION,
            k_max: DEFAULT_K_MAX,
            scaling: ScalingMode::SignedLog,
            seed: DEFAULT_SEED,
            min_area_fraction: DEFAULT_MIN_AREA_FRACTION,
        }
    }
}

/// Keeps every vector when there are at most `k_max`; otherwise clusters and
/// keeps each cluster's medoid (the member nearest its centroid, lowest index
/// on ties), in ascending input order.
///
/// Returns the indices of the kept features.
pub fn select_characteristic_indices(features: &[HuVector], k_max: usize, seed: u64) -> Vec<usize> {
    assert!(!features.is_empty(), "no features to select from");
    if features.len() <= k_max {
        return (0..features.len()).collect();
    }
    let points: Vec<[f64; 7]> = features.iter().map(|f| f.phi).collect();
    let clusters = kmeans(&points, k_max, seed);
    let mut best: Vec<Option<(f64, usize)>> = vec![None; clusters.centroids.len()];
    for (i, (p, &c)) in points.iter().zip(&clusters.assignment).enumerate() {
        let d = euclidean(p, &clusters.centroids[c]);
        match best[c] {
            Some((bd, _)) if bd <= d => {}
            _ => best[c] = Some((d, i)),
        }
    }
    let mut kept: Vec<usize> = best.into_iter().flatten().map(|(_, i)| i).collect();
    kept.sort_unstable();
    kept
}

pub fn select_characteristic(
    model_id: &str,
    features: &[HuVector],
    k_max: usize,
    seed: u64,
) -> CliDescriptor {
    let kept = select_characteristic_indices(features, k_max, seed);
    let scaling = features[0].scaling;
    CliDescriptor {
        model_id: model_id.to_string(),
        vectors: kept.into_iter().map(|i| features[i]).collect(),
        scaling,
        n_source_images: features.len(),
    }
}

fn directed(a: &[HuVector], b: &[HuVector]) -> f64 {
    a.iter()
        .map(|x| {
            b.iter()
                .map(|y| euclidean(&x.phi, &y.phi))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance with a Euclidean base metric.
pub fn hausdorff(a: &[HuVector], b: &[HuVector]) -> Result<f64, DescriptorError> {
    if a.is_empty() || b.is_empty() {
        return Err(DescriptorError::EmptySet);
    }
    for v in a.iter().chain(b) {
        if v.scaling != a[0].scaling {
            return Err(DescriptorError::ModeMismatch(a[0].scaling, v.scaling));
        }
    }
    Ok(directed(a, b).max(directed(b, a)))
}

/// Dissimilarity of two models; 0 for identical descriptors.
pub fn similarity(q: &CliDescriptor, t: &CliDescriptor) -> Result<f64, DescriptorError> {
    if q.scaling != t.scaling {
        return Err(DescriptorError::ModeMismatch(q.scaling, t.scaling));
    }
    hausdorff(&q.vectors, &t.vectors)
}

/// Level images of a normalized mesh that are large enough to serve as
/// features: at least `min_area_fraction` of the largest one's pixel count.
pub fn feature_images(
    normalized: &TriangleMesh,
    params: &CliParams,
) -> Result<Vec<LevelImage>, DescriptorError> {
    let mut images = extract_level_images(normalized, params.n_planes, params.resolution)?;
    let largest = images.iter().map(|l| l.image.count()).max().unwrap_or(0);
    let floor = params.min_area_fraction * largest as f64;
    images.retain(|l| l.image.count() as f64 >= floor);
    Ok(images)
}

/// Hu vectors of the feature images of an already normalized mesh, with the
/// plane index of each.
pub fn level_features(
    normalized: &TriangleMesh,
    params: &CliParams,
) -> Result<Vec<(usize, HuVector)>, DescriptorError> {
    Ok(feature_images(normalized, params)?
        .par_iter()
        .map(|l| (l.plane, hu_invariants(&l.image, params.scaling)))
        .collect())
}

/// Descriptor of a normalized mesh.
pub fn describe_normalized(
    normalized: &TriangleMesh,
    params: &CliParams,
) -> Result<CliDescriptor, DescriptorError> {
    let features: Vec<HuVector> = level_features(normalized, params)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    if features.is_empty() {
        return Err(DescriptorError::NoLevelImages);
    }
    Ok(select_characteristic(
        normalized.source_id(),
        &features,
        params.k_max,
        params.seed,
    ))
}

/// Full pipeline: pose normalization, slicing, Hu features, medoid selection.
pub fn describe_mesh(mesh: &TriangleMesh, params: &CliParams) -> Result<CliDescriptor, DescriptorError> {
    let (normalized, _) = normalize_pose(mesh)?;
    describe_normalized(&normalized, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(phi: [f64; 7]) -> HuVector {
        HuVector::new(phi, ScalingMode::SignedLog)
    }

    fn random_set(n: usize, rng: &mut ChaCha8Rng) -> Vec<HuVector> {
        (0..n)
            .map(|_| v(std::array::from_fn(|_| rng.random_range(-3.0..3.0))))
            .collect()
    }

    #[test]
    fn small_inputs_are_kept_whole() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let feats = random_set(10, &mut rng);
        let d = select_characteristic("m", &feats, 40, DEFAULT_SEED);
        assert_eq!(d.vectors, feats);
        assert_eq!(d.n_source_images, 10);
    }

    #[test]
    fn reduction_keeps_input_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let feats = random_set(300, &mut rng);
        let kept = select_characteristic_indices(&feats, 40, DEFAULT_SEED);
        assert!(!kept.is_empty() && kept.len() <= 40);
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
        let d = select_characteristic("m", &feats, 40, DEFAULT_SEED);
        for (i, vec) in kept.iter().zip(&d.vectors) {
            assert_eq!(&feats[*i], vec);
        }
    }

    #[test]
    fn identical_inputs_collapse() {
        let feats = vec![v([0.5; 7]); 300];
        let d = select_characteristic("m", &feats, 40, DEFAULT_SEED);
        assert_eq!(d.vectors.len(), 1);
    }

    #[test]
    fn hausdorff_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_set(12, &mut rng);
        assert_eq!(hausdorff(&a, &a), Ok(0.0));
        let zero = [v([0.0; 7])];
        let far = [v([3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0])];
        assert_eq!(hausdorff(&zero, &far), Ok(5.0));
        assert_eq!(hausdorff(&zero, &[]), Err(DescriptorError::EmptySet));
        let raw = [HuVector::new([0.0; 7], ScalingMode::Raw)];
        assert!(matches!(hausdorff(&zero, &raw), Err(DescriptorError::ModeMismatch(..))));
    }

    #[test]
    fn similarity_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = select_characteristic("q", &random_set(20, &mut rng), 40, 1);
        let t = select_characteristic("t", &random_set(30, &mut rng), 40, 1);
        assert_eq!(similarity(&q, &q), Ok(0.0));
        assert_eq!(similarity(&q, &t), similarity(&t, &q));
        let mut raw = t.clone();
        raw.scaling = ScalingMode::Raw;
        assert!(similarity(&q, &raw).is_err());
    }

    #[test]
    fn area_floor_drops_small_end_slices() {
        let (mesh, _) = normalize_pose(&crate::shapes::icosphere(3)).unwrap();
        let all = CliParams { min_area_fraction: 0.0, n_planes: 60, ..Default::default() };
        let trimmed = CliParams { n_planes: 60, ..Default::default() };
        let a = feature_images(&mesh, &all).unwrap();
        let b = feature_images(&mesh, &trimmed).unwrap();
        assert!(b.len() < a.len() && !b.is_empty());
        let largest = a.iter().map(|l| l.image.count()).max().unwrap();
        assert!(b.iter().all(|l| l.image.count() * 10 >= largest));
        assert_eq!(a.len(), 60);
    }
}
