use crate::geometry::{Aabb, Vec3};
use crate::scene::bvh::{triangle_box_overlap, x_line_hit, Bvh, LineHit};
use crate::scene::mesh::TriangleMesh;
use crate::{Error, Result};

pub const DEFAULT_CELL_SIZE: f64 = 0.25;

/// Integer cell coordinates `(i, j, k)`; `k` is the vertical axis.
pub type Cell = [usize; 3];

/// Uniform voxel grid with occupancy and an approximate signed distance
/// sampled at cell centres. Cells are stored x-fastest:
/// `index = i + nx * (j + ny * k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    origin: Vec3,
    cell_size: f64,
    dims: [usize; 3],
    occupied: Vec<bool>,
    sdf: Vec<f64>,
}

impl VoxelGrid {
    pub fn from_parts(
        origin: Vec3,
        cell_size: f64,
        dims: [usize; 3],
        occupied: Vec<bool>,
        sdf: Vec<f64>,
    ) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cell size {cell_size} must be positive"
            )));
        }
        let n = dims.iter().product::<usize>();
        if n == 0 {
            return Err(Error::InvalidArgument(format!("grid dims {dims:?} must be positive")));
        }
        if occupied.len() != n || sdf.len() != n {
            return Err(Error::DimensionMismatch {
                context: "voxel grid",
                expected: n,
                found: occupied.len().min(sdf.len()),
            });
        }
        Ok(VoxelGrid {
            origin,
            cell_size,
            dims,
            occupied,
            sdf,
        })
    }

    /// A grid without geometry: nothing occupied, signed distance `+inf`.
    pub fn empty(origin: Vec3, cell_size: f64, dims: [usize; 3]) -> Result<Self> {
        let n = dims.iter().product();
        Self::from_parts(origin, cell_size, dims, vec![false; n], vec![f64::INFINITY; n])
    }

    /// Builds a grid from an occupancy mask alone. The distance field is
    /// unsigned: zero in occupied cells, otherwise the distance from the
    /// cell centre to the nearest occupied cell box (`+inf` if none).
    pub fn from_occupancy(origin: Vec3, cell_size: f64, dims: [usize; 3], occupied: Vec<bool>) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        let mut grid = Self::from_parts(origin, cell_size, dims, occupied, vec![f64::INFINITY; n])?;
        let boxes: Vec<Aabb> = (0..n)
            .filter(|&i| grid.occupied[i])
            .map(|i| grid.cell_box(grid.coords(i)))
            .collect();
        for idx in 0..n {
            if grid.occupied[idx] {
                grid.sdf[idx] = 0.0;
                continue;
            }
            let c = grid.center_of_index(idx);
            let d2 = boxes.iter().map(|b| b.distance_sq(&c)).fold(f64::INFINITY, f64::min);
            grid.sdf[idx] = d2.sqrt();
        }
        Ok(grid)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn index(&self, c: Cell) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub fn coords(&self, idx: usize) -> Cell {
        let [nx, ny, _] = self.dims;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn in_bounds(&self, i: i64, j: i64, k: i64) -> bool {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < self.dims[0]
            && (j as usize) < self.dims[1]
            && (k as usize) < self.dims[2]
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.occupied[self.index(c)]
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    /// Stored signed distance at the centre of cell `c`.
    pub fn sdf_value(&self, c: Cell) -> f64 {
        self.sdf[self.index(c)]
    }

    pub fn sdf_values(&self) -> &[f64] {
        &self.sdf
    }

    pub fn cell_center(&self, c: Cell) -> Vec3 {
        self.origin + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.cell_size
    }

    fn center_of_index(&self, idx: usize) -> Vec3 {
        self.cell_center(self.coords(idx))
    }

    pub fn cell_box(&self, c: Cell) -> Aabb {
        let min = self.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * self.cell_size;
        Aabb {
            min,
            max: min + Vec3::repeat(self.cell_size),
        }
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64) * self.cell_size;
        Aabb {
            min: self.origin,
            max: self.origin + ext,
        }
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: &Vec3) -> Option<Cell> {
        let g = (p - self.origin) / self.cell_size;
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = g[a].floor();
            if !(f >= 0.0) || f as usize >= self.dims[a] {
                return None;
            }
            c[a] = f as usize;
        }
        Some(c)
    }

    /// True if any cell holds a finite distance sample.
    pub fn has_geometry(&self) -> bool {
        self.sdf.iter().any(|v| v.is_finite())
    }

    /// Trilinear interpolation of the cell-centre distances. Outside the
    /// grid box the value at the nearest boundary point is extended by the
    /// distance to the box.
    pub fn sdf_at(&self, p: &Vec3) -> f64 {
        let b = self.bounds();
        let mut q = *p;
        for a in 0..3 {
            q[a] = q[a].clamp(b.min[a], b.max[a]);
        }
        let extra = (p - q).norm();

        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let n = self.dims[a];
            let u = ((q[a] - self.origin[a]) / self.cell_size - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = (u.floor() as usize).min(n.saturating_sub(2));
            base[a] = i0;
            frac[a] = if n == 1 { 0.0 } else { u - i0 as f64 };
        }

        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut c = base;
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    c[a] += 1;
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            acc += w * self.sdf[self.index(c)];
        }
        acc + extra
    }

    /// Central-difference gradient of [`sdf_at`](Self::sdf_at) with step `h`.
    pub fn sdf_gradient(&self, p: &Vec3, h: f64) -> Vec3 {
        let mut g = Vec3::zeros();
        for a in 0..3 {
            let mut hi = *p;
            let mut lo = *p;
            hi[a] += h;
            lo[a] -= h;
            g[a] = (self.sdf_at(&hi) - self.sdf_at(&lo)) / (2.0 * h);
        }
        g
    }

    /// The walking layer: the lowest layer `k >= 1` holding a free cell
    /// directly above an occupied one. If no such layer exists, layer 0
    /// (supported by the grid boundary) when it has a free cell.
    pub fn floor_layer(&self) -> Option<usize> {
        let [nx, ny, nz] = self.dims;
        for k in 1..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if !self.is_occupied([i, j, k]) && self.is_occupied([i, j, k - 1]) {
                        return Some(k);
                    }
                }
            }
        }
        (0..nx * ny).any(|c| !self.occupied[c]).then_some(0)
    }

    /// Height of the supporting surface under the centre of `c`: the first
    /// zero crossing of the distance field found scanning downward up to two
    /// cells below the cell centre, refined by bisection. Without a crossing
    /// (unsigned fields, boundary support) the estimate falls back to the
    /// centre height minus the clamped distance.
    pub fn support_height(&self, c: Cell) -> f64 {
        let center = self.cell_center(c);
        let d0 = self.sdf_at(&center);
        if !d0.is_finite() {
            return center.z - 0.5 * self.cell_size;
        }
        let step = 0.25 * self.cell_size;
        let at = |z: f64| self.sdf_at(&Vec3::new(center.x, center.y, z));
        if d0 > 0.0 {
            let mut prev_z = center.z;
            for s in 1..=10 {
                let z = center.z - step * s as f64;
                if at(z) <= 0.0 {
                    let (mut hi, mut lo) = (prev_z, z);
                    for _ in 0..40 {
                        let mid = 0.5 * (hi + lo);
                        if at(mid) > 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    return 0.5 * (hi + lo);
                }
                prev_z = z;
            }
        }
        center.z - d0.clamp(0.0, 1.5 * self.cell_size)
    }
}

/// Voxelizes a mesh. The grid covers the mesh bounding box padded by one
/// cell on every side. A cell is occupied iff some triangle touches its
/// box. Distances are to the nearest triangle; the sign comes from +x ray
/// parity against the closed components of the mesh, so open components
/// only ever contribute positive distance.
pub fn voxelize(mesh: &TriangleMesh, cell_size: f64) -> Result<VoxelGrid> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cell size {cell_size} must be positive"
        )));
    }
    if mesh.is_empty() {
        return Err(Error::InvalidMesh("mesh has no faces".into()));
    }
    let bb = mesh.aabb();
    let ext = bb.extent();
    if ext.iter().all(|&e| e <= 0.0) {
        return Err(Error::DegenerateMesh);
    }
    let mut dims = [0usize; 3];
    for a in 0..3 {
        dims[a] = ((ext[a] / cell_size - 1e-9).ceil().max(1.0) as usize) + 2;
    }
    let origin = bb.min - Vec3::repeat(cell_size);
    let n = dims.iter().product::<usize>();
    let mut grid = VoxelGrid::from_parts(origin, cell_size, dims, vec![false; n], vec![0.0; n])?;

    // Occupancy.
    let half = Vec3::repeat(0.5 * cell_size);
    let eps = 1e-9;
    for f in 0..mesh.faces().len() {
        let tri = mesh.triangle(f);
        let tb = Aabb::from_points(&tri);
        let lo: Vec<usize> = (0..3)
            .map(|a| (((tb.min[a] - origin[a]) / cell_size - eps).floor().max(0.0) as usize).min(dims[a] - 1))
            .collect();
        let hi: Vec<usize> = (0..3)
            .map(|a| (((tb.max[a] - origin[a]) / cell_size + eps).floor().max(0.0) as usize).min(dims[a] - 1))
            .collect();
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let idx = grid.index([i, j, k]);
                    if grid.occupied[idx] {
                        continue;
                    }
                    let c = grid.cell_center([i, j, k]);
                    if triangle_box_overlap(&c, &half, &tri) {
                        grid.occupied[idx] = true;
                    }
                }
            }
        }
    }

    // Unsigned distance.
    let all = Bvh::build((0..mesh.faces().len()).map(|f| mesh.triangle(f)).collect());
    for idx in 0..n {
        let c = grid.center_of_index(idx);
        grid.sdf[idx] = all.nearest_distance_sq(&c).unwrap_or(f64::INFINITY).sqrt();
    }

    // Sign from closed components.
    let closed = mesh.closed_faces();
    let closed_tris: Vec<[Vec3; 3]> = (0..mesh.faces().len())
        .filter(|&f| closed[f])
        .map(|f| mesh.triangle(f))
        .collect();
    if !closed_tris.is_empty() {
        let bvh = Bvh::build(closed_tris);
        let [nx, ny, nz] = dims;
        for k in 0..nz {
            for j in 0..ny {
                let c = grid.cell_center([0, j, k]);
                let hits = row_crossings(&bvh, c.y, c.z, cell_size);
                for i in 0..nx {
                    let x = origin.x + (i as f64 + 0.5) * cell_size;
                    let beyond = hits.len() - hits.partition_point(|&h| h <= x);
                    if beyond % 2 == 1 {
                        let idx = grid.index([i, j, k]);
                        grid.sdf[idx] = -grid.sdf[idx];
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Sorted x coordinates where the line through `(y, z)` crosses closed
/// surfaces. Lines grazing an edge are nudged by a small deterministic
/// offset and retried.
fn row_crossings(bvh: &Bvh, y: f64, z: f64, cell_size: f64) -> Vec<f64> {
    const JITTER: [(f64, f64); 4] = [(0.0, 0.0), (0.71, 0.37), (-0.53, 0.89), (0.29, -0.97)];
    let mut hits = Vec::new();
    for (attempt, (dy, dz)) in JITTER.iter().enumerate() {
        let (yy, zz) = (y + dy * 1e-5 * cell_size, z + dz * 1e-5 * cell_size);
        hits.clear();
        let mut grazed = false;
        bvh.for_each_on_x_line(yy, zz, |t| match x_line_hit(bvh.triangle(t), yy, zz) {
            LineHit::Hit(x) => hits.push(x),
            LineHit::Grazing => grazed = true,
            LineHit::Miss => {}
        });
        if !grazed || attempt + 1 == JITTER.len() {
            break;
        }
    }
    hits.sort_by(f64::total_cmp);
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::mesh::parse_obj;

    fn unit_cube() -> TriangleMesh {
        let text = include_str!("../../tests/data/unit_cube.obj");
        parse_obj(text).unwrap().0
    }

    #[test]
    fn unit_cube_grid_layout() {
        let g = voxelize(&unit_cube(), 0.5).unwrap();
        assert_eq!(g.dims(), [4, 4, 4]);
        assert_eq!(g.origin(), Vec3::repeat(-0.5));
        for k in 1..3 {
            for j in 1..3 {
                for i in 1..3 {
                    assert!(g.is_occupied([i, j, k]));
                }
            }
        }
    }

    #[test]
    fn sdf_exact_at_center_and_midpoint() {
        let dims = [2, 1, 1];
        let g = VoxelGrid::from_parts(Vec3::zeros(), 1.0, dims, vec![false; 2], vec![0.2, 0.4]).unwrap();
        assert_eq!(g.sdf_at(&Vec3::new(0.5, 0.5, 0.5)), 0.2);
        assert_eq!(g.sdf_at(&Vec3::new(1.5, 0.5, 0.5)), 0.4);
        assert!((g.sdf_at(&Vec3::new(1.0, 0.5, 0.5)) - 0.3).abs() < 1e-15);
        // Outside: boundary value plus distance to the box.
        assert!((g.sdf_at(&Vec3::new(3.0, 0.5, 0.5)) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn empty_grid_is_infinite() {
        let g = VoxelGrid::empty(Vec3::zeros(), 0.5, [3, 3, 3]).unwrap();
        assert_eq!(g.sdf_at(&Vec3::new(0.7, 0.2, 1.1)), f64::INFINITY);
        assert!(!g.has_geometry());
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(voxelize(&unit_cube(), 0.0), Err(Error::InvalidArgument(_))));
        let point = TriangleMesh::new(vec![Vec3::zeros(); 3], vec![[0, 1, 2]]).unwrap();
        assert!(matches!(voxelize(&point, 0.5), Err(Error::DegenerateMesh)));
    }

    #[test]
    fn floor_layer_rules() {
        let dims = [4, 4, 1];
        let g = VoxelGrid::empty(Vec3::zeros(), 1.0, dims).unwrap();
        assert_eq!(g.floor_layer(), Some(0));
        let mut occ = vec![false; 4 * 4 * 3];
        occ[..16].iter_mut().for_each(|o| *o = true);
        let g = VoxelGrid::from_occupancy(Vec3::zeros(), 1.0, [4, 4, 3], occ).unwrap();
        assert_eq!(g.floor_layer(), Some(1));
        let g = VoxelGrid::from_occupancy(Vec3::zeros(), 1.0, [2, 2, 1], vec![true; 4]).unwrap();
        assert_eq!(g.floor_layer(), None);
    }
}
