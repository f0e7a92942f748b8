//! Shape descriptors for content-based 3D model retrieval.
//!
//! A mesh is pose-normalized, cut by planes perpendicular to its principal
//! axis, and each cross-section is rasterized and summarized by Hu's seven
//! moment invariants. K-means keeps a small set of characteristic slices, and
//! models are compared with the Hausdorff distance between those sets. The
//! [`baselines`] module provides 3D Zernike and surface-moment descriptors for
//! comparison.

pub mod baselines;
pub mod descriptor;
pub mod hu;
pub mod kmeans;
pub mod mesh;
pub mod pose;
pub mod quadrature;
pub mod raster;
pub mod shapes;
pub mod slicer;

pub use mesh::{parse_off, BoundingBox, MeshError, TriangleMesh, Vec3};
pub use pose::{normalize_pose, PoseError, PoseTransform};
