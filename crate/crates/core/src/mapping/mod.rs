//! Receiver-side semantic mapping: backprojection of aligned RGB-D
//! pairs, Bayesian label fusion into a sparse voxel map, and export.

pub mod backproject;
pub mod export;
pub mod intrinsics;
pub mod morton;
pub mod octree;
pub mod segment;

pub use backproject::{backproject, integrate_pair, IntegrationStats};
pub use export::{map_export, map_to_ply, parse_ply, sidecar_path, PlyVertex};
pub use intrinsics::CameraIntrinsics;
pub use octree::{labeled_point, transform_to_world, LabeledPoint, SemanticOctree, VoxelCoord};
pub use segment::LabelPalette;
