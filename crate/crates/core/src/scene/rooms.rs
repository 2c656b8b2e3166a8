//! Procedurally generated scenes: the bundled test rooms and random rooms
//! used to synthesize training data.
//!
//! Every object is a closed, outward-oriented box whose faces are
//! tessellated on a regular lattice, so the scene is watertight and its
//! vertices sample the surfaces densely enough for BPS features.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Vec3;
use crate::scene::mesh::TriangleMesh;

/// Default lattice spacing of tessellated box faces (metres).
pub const DEFAULT_SPACING: f64 = 0.25;
pub const FLOOR_THICKNESS: f64 = 0.5;
pub const CHAIR_SIZE: f64 = 0.45;

/// Closed box mesh from `min` to `max` with faces subdivided so no lattice
/// step exceeds `spacing`. Triangles wind counter-clockwise seen from
/// outside.
pub fn box_mesh(min: Vec3, max: Vec3, spacing: f64) -> TriangleMesh {
    let ext = max - min;
    let n: [usize; 3] = std::array::from_fn(|a| ((ext[a] / spacing - 1e-9).ceil() as usize).max(1));
    let point = |l: [usize; 3]| {
        Vec3::new(
            min.x + ext.x * l[0] as f64 / n[0] as f64,
            min.y + ext.y * l[1] as f64 / n[1] as f64,
            min.z + ext.z * l[2] as f64 / n[2] as f64,
        )
    };

    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |l: [usize; 3], vertices: &mut Vec<Vec3>| {
        *index.entry(l).or_insert_with(|| {
            vertices.push(point(l));
            vertices.len() - 1
        })
    };

    for axis in 0..3 {
        let u = (axis + 1) % 3;
        let v = (axis + 2) % 3;
        for side in [0, n[axis]] {
            for iu in 0..n[u] {
                for iv in 0..n[v] {
                    let lat = |du: usize, dv: usize| {
                        let mut l = [0usize; 3];
                        l[axis] = side;
                        l[u] = iu + du;
                        l[v] = iv + dv;
                        l
                    };
                    let q = [
                        vid(lat(0, 0), &mut vertices),
                        vid(lat(1, 0), &mut vertices),
                        vid(lat(1, 1), &mut vertices),
                        vid(lat(0, 1), &mut vertices),
                    ];
                    // u x v = +axis, so this winding faces +axis.
                    if side == 0 {
                        faces.push([q[0], q[2], q[1]]);
                        faces.push([q[0], q[3], q[2]]);
                    } else {
                        faces.push([q[0], q[1], q[2]]);
                        faces.push([q[0], q[2], q[3]]);
                    }
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("box lattice indices are valid")
}

/// Accumulates boxes into one scene mesh.
#[derive(Debug, Clone)]
pub struct RoomBuilder {
    spacing: f64,
    mesh: TriangleMesh,
}

impl RoomBuilder {
    pub fn new(spacing: f64) -> Self {
        RoomBuilder {
            spacing,
            mesh: TriangleMesh::new(Vec::new(), Vec::new()).expect("empty mesh"),
        }
    }

    pub fn add_box(&mut self, min: Vec3, max: Vec3) -> &mut Self {
        self.mesh.append(&box_mesh(min, max, self.spacing));
        self
    }

    /// Floor slab whose top surface is `z = 0`.
    pub fn floor(&mut self, width: f64, depth: f64) -> &mut Self {
        self.add_box(Vec3::new(0.0, 0.0, -FLOOR_THICKNESS), Vec3::new(width, depth, 0.0))
    }

    /// Chair-sized box standing on the floor, centred at `(x, y)`.
    pub fn chair(&mut self, x: f64, y: f64) -> &mut Self {
        let h = 0.5 * CHAIR_SIZE;
        self.add_box(Vec3::new(x - h, y - h, 0.0), Vec3::new(x + h, y + h, CHAIR_SIZE))
    }

    pub fn build(&self) -> TriangleMesh {
        self.mesh.clone()
    }
}

/// The standard fixture: a 6 m x 5 m floor, a table in the middle, two
/// chairs and a tall shelf in one corner (which also gives the grid
/// headroom above standing bodies).
pub fn test_room() -> TriangleMesh {
    RoomBuilder::new(DEFAULT_SPACING)
        .floor(6.0, 5.0)
        .add_box(Vec3::new(2.4, 2.0, 0.0), Vec3::new(3.6, 3.0, 0.75))
        .chair(1.5, 3.5)
        .chair(4.5, 1.5)
        .add_box(Vec3::new(0.0, 4.5, 0.0), Vec3::new(0.5, 5.0, 2.0))
        .build()
}

/// Two identical chairs 4 m apart on a 6 m x 3 m floor, mirror-symmetric
/// about the shelf between them.
pub fn two_seats_room() -> TriangleMesh {
    RoomBuilder::new(DEFAULT_SPACING)
        .floor(6.0, 3.0)
        .chair(1.0, 1.5)
        .chair(5.0, 1.5)
        .add_box(Vec3::new(2.75, 2.5, 0.0), Vec3::new(3.25, 3.0, 2.0))
        .build()
}

/// A 6 m x 5 m floor with the only chair inside a sealed enclosure in the
/// far corner, so anything placed on the chair is unreachable from the open
/// floor.
pub fn walled_off_room() -> TriangleMesh {
    let mut b = RoomBuilder::new(DEFAULT_SPACING);
    b.floor(6.0, 5.0);
    let (x0, y0, x1, y1, t, h) = (2.75, 1.75, 6.0, 5.0, 0.25, 2.0);
    b.add_box(Vec3::new(x0, y0, 0.0), Vec3::new(x1, y0 + t, h));
    b.add_box(Vec3::new(x0, y1 - t, 0.0), Vec3::new(x1, y1, h));
    b.add_box(Vec3::new(x0, y0 + t, 0.0), Vec3::new(x0 + t, y1 - t, h));
    b.add_box(Vec3::new(x1 - t, y0 + t, 0.0), Vec3::new(x1, y1 - t, h));
    b.chair(4.375, 3.375);
    b.build()
}

/// A 15.5 m x 15.5 m hall with 7 m walls and scattered furniture. At the
/// default cell size it voxelizes to a 64 x 64 x 32 grid.
pub fn large_room() -> TriangleMesh {
    let (w, t, h) = (15.5, 0.25, 7.0);
    let mut b = RoomBuilder::new(DEFAULT_SPACING);
    b.floor(w, w);
    b.add_box(Vec3::new(0.0, 0.0, 0.0), Vec3::new(w, t, h));
    b.add_box(Vec3::new(0.0, w - t, 0.0), Vec3::new(w, w, h));
    b.add_box(Vec3::new(0.0, t, 0.0), Vec3::new(t, w - t, h));
    b.add_box(Vec3::new(w - t, t, 0.0), Vec3::new(w, w - t, h));
    for (x, y) in [(3.0, 3.0), (12.0, 4.0), (4.0, 11.5), (11.0, 12.0)] {
        b.add_box(Vec3::new(x - 0.8, y - 0.5, 0.0), Vec3::new(x + 0.8, y + 0.5, 0.75));
        b.chair(x - 1.2, y).chair(x + 1.2, y);
    }
    b.add_box(Vec3::new(7.0, 6.0, 0.0), Vec3::new(8.5, 9.5, 1.0));
    b.build()
}

/// Random room for synthetic training data: a floor of 4-8 m per side,
/// optional perimeter walls and up to five furniture boxes.
pub fn random_room(seed: u64) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: f64 = rng.random_range(4.0..8.0);
    let d: f64 = rng.random_range(4.0..8.0);
    let mut b = RoomBuilder::new(DEFAULT_SPACING);
    b.floor(w, d);
    if rng.random_bool(0.5) {
        let (t, h) = (0.2, 2.0);
        b.add_box(Vec3::new(0.0, 0.0, 0.0), Vec3::new(w, t, h));
        b.add_box(Vec3::new(0.0, d - t, 0.0), Vec3::new(w, d, h));
        b.add_box(Vec3::new(0.0, t, 0.0), Vec3::new(t, d - t, h));
        b.add_box(Vec3::new(w - t, t, 0.0), Vec3::new(w, d - t, h));
    }
    // Overlapping solids would confuse the parity sign test, so furniture
    // boxes are kept at least 0.3 m apart.
    let count = rng.random_range(1..=5);
    let mut placed: Vec<[f64; 4]> = Vec::new();
    for _ in 0..count * 10 {
        if placed.len() == count {
            break;
        }
        let sx: f64 = rng.random_range(0.4..1.6);
        let sy: f64 = rng.random_range(0.4..1.6);
        let sz: f64 = rng.random_range(0.4..1.0);
        let x = rng.random_range(0.5..(w - 0.5 - sx).max(0.6));
        let y = rng.random_range(0.5..(d - 0.5 - sy).max(0.6));
        let gap = 0.3;
        let clear = placed
            .iter()
            .all(|p| x > p[2] + gap || x + sx + gap < p[0] || y > p[3] + gap || y + sy + gap < p[1]);
        if clear {
            placed.push([x, y, x + sx, y + sy]);
            b.add_box(Vec3::new(x, y, 0.0), Vec3::new(x + sx, y + sy, sz));
        }
    }
    b.build()
}
