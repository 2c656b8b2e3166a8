//! Basis point set (BPS) encoding of local scene context.
//!
//! A fixed set of basis points is drawn uniformly inside the unit ball. A
//! scene crop (points inside an axis-aligned cubic cage) is scaled into the
//! same ball and each basis point records its distance to the nearest crop
//! point, clamped to 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::scene::mesh::TriangleMesh;

pub const DEFAULT_BASIS_SIZE: usize = 256;
/// Half the edge of the 2 m cubic cage.
pub const DEFAULT_CAGE_HALF_EXTENT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BpsBasis {
    seed: u64,
    points: Vec<Vec3>,
}

impl BpsBasis {
    /// Draws `n` points uniformly in the unit ball (rejection sampling).
    pub fn generate(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        while points.len() < n {
            let p = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if p.norm_squared() <= 1.0 {
                points.push(p);
            }
        }
        BpsBasis { seed, points }
    }

    pub fn from_points(seed: u64, points: Vec<Vec3>) -> Self {
        BpsBasis { seed, points }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpsFeature(pub Vec<f64>);

impl BpsFeature {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Encodes the mesh vertices around `center`.
pub fn bps_encode(mesh: &TriangleMesh, center: &Vec3, cage_half_extent: f64, basis: &[Vec3]) -> BpsFeature {
    bps_encode_points(mesh.vertices(), center, cage_half_extent, basis)
}

/// Encodes an arbitrary point cloud around `center`. Points inside the cube
/// of half-edge `cage_half_extent` are scaled by `1 / (half_extent * sqrt 3)`
/// so the whole cage fits in the unit ball.
pub fn bps_encode_points(points: &[Vec3], center: &Vec3, cage_half_extent: f64, basis: &[Vec3]) -> BpsFeature {
    let scale = 1.0 / (cage_half_extent * 3f64.sqrt());
    let crop: Vec<Vec3> = points
        .iter()
        .filter(|p| (*p - center).iter().all(|d| d.abs() <= cage_half_extent))
        .map(|p| (p - center) * scale)
        .collect();
    let distances = basis
        .iter()
        .map(|b| {
            crop.iter()
                .map(|q| (q - b).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
                .min(1.0)
        })
        .collect();
    BpsFeature(distances)
}
