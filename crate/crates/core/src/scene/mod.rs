//! Scene geometry: triangle meshes, voxel grids with an approximate signed
//! distance field, and BPS local-context features.

pub mod bps;
mod bvh;
pub mod mesh;
pub mod rooms;
pub mod voxel;

pub use bps::{bps_encode, bps_encode_points, BpsBasis, BpsFeature, DEFAULT_BASIS_SIZE, DEFAULT_CAGE_HALF_EXTENT};
pub use mesh::{load_mesh, parse_obj, ObjStats, TriangleMesh, UpAxis};
pub use voxel::{voxelize, VoxelGrid, DEFAULT_CELL_SIZE};

use crate::Result;

/// A scene ready for planning: the raw mesh and its voxelization.
#[derive(Debug, Clone)]
pub struct Scene {
    pub mesh: TriangleMesh,
    pub grid: VoxelGrid,
}

impl Scene {
    pub fn from_mesh(mesh: TriangleMesh, cell_size: f64) -> Result<Self> {
        let grid = voxelize(&mesh, cell_size)?;
        Ok(Scene { mesh, grid })
    }
}
