//! Comparison descriptors: 3D Zernike moments of a voxelized solid and
//! normalized surface moments.

pub mod expr;
pub mod surface;
pub mod voxel;
pub mod zernike;

pub use expr::ConfigError;
pub use surface::{
    normalize_surface_moments, surface_descriptor, surface_moments, InvariantConfig, SurfaceError,
    SurfaceMomentSet,
};
pub use voxel::{geometric_moments, voxelize_solid, MomentTable, VoxelGrid, Voxelization};
pub use zernike::{zernike_descriptor, ZernikeBasis, ZernikeDescriptor, ZernikeError, ZernikeMoments};
