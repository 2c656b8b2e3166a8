use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::VoxelGrid;

pub const DEFAULT_RADIUS: f64 = 0.3;
pub const DEFAULT_HEIGHT: f64 = 1.7;
/// Height of the walking body's root above the floor surface.
pub const WALK_ROOT_HEIGHT: f64 = 0.9;

/// The eight horizontal moves, counter-clockwise from +x in 45 degree steps.
pub const DIRECTIONS: [[i64; 2]; 8] = [[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1]];

/// A floor-layer column `(i, j)`.
pub type Column = [usize; 2];

/// Index of the move `from -> to` in [`DIRECTIONS`], if they are neighbours.
pub fn direction_index(from: Column, to: Column) -> Option<usize> {
    let d = [to[0] as i64 - from[0] as i64, to[1] as i64 - from[1] as i64];
    DIRECTIONS.iter().position(|&dir| dir == d)
}

/// Floor-layer walkability with 8-connectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkableMap {
    nx: usize,
    ny: usize,
    floor: usize,
    origin: [f64; 3],
    cell_size: f64,
    walkable: Vec<bool>,
    support: Vec<f64>,
}

/// True when the cell box `(i, j)` at `k` lies within `radius` (2D) of the
/// point `(x, y)`.
fn box_within(grid: &VoxelGrid, i: usize, j: usize, x: f64, y: f64, radius: f64) -> bool {
    let cs = grid.cell_size();
    let o = grid.origin();
    let (x0, y0) = (o.x + i as f64 * cs, o.y + j as f64 * cs);
    let dx = (x0 - x).max(0.0).max(x - (x0 + cs));
    let dy = (y0 - y).max(0.0).max(y - (y0 + cs));
    dx * dx + dy * dy <= radius * radius
}

/// Marks floor cells where an upright cylinder of `radius` and `height`
/// standing on the floor layer meets no occupied cell. Space outside the
/// grid counts as free. A cell also needs support: an occupied cell
/// directly below, or the grid bottom when the floor is layer 0.
pub fn build_walkable(grid: &VoxelGrid, radius: f64, height: f64) -> Result<WalkableMap> {
    if !(radius >= 0.0 && height > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cylinder radius {radius} / height {height}"
        )));
    }
    let floor = grid.floor_layer().ok_or(Error::NoFreeFloor)?;
    let [nx, ny, nz] = grid.dims();
    let cs = grid.cell_size();
    let layers = ((height / cs - 1e-9).ceil() as usize).max(1);
    let k_end = (floor + layers).min(nz);
    let reach = (radius / cs).ceil() as i64 + 1;

    let mut walkable = vec![false; nx * ny];
    let mut support = vec![f64::NAN; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let cell = [i, j, floor];
            if grid.is_occupied(cell) || (floor > 0 && !grid.is_occupied([i, j, floor - 1])) {
                continue;
            }
            let c = grid.cell_center(cell);
            let mut blocked = false;
            'search: for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if !grid.in_bounds(ii, jj, 0) {
                        continue;
                    }
                    let (ii, jj) = (ii as usize, jj as usize);
                    if !box_within(grid, ii, jj, c.x, c.y, radius) {
                        continue;
                    }
                    if (floor..k_end).any(|k| grid.is_occupied([ii, jj, k])) {
                        blocked = true;
                        break 'search;
                    }
                }
            }
            if !blocked {
                walkable[i + nx * j] = true;
                support[i + nx * j] = grid.support_height(cell);
            }
        }
    }
    if !walkable.iter().any(|&w| w) {
        return Err(Error::NoFreeFloor);
    }
    let o = grid.origin();
    Ok(WalkableMap {
        nx,
        ny,
        floor,
        origin: [o.x, o.y, o.z],
        cell_size: cs,
        walkable,
        support,
    })
}

impl WalkableMap {
    pub fn dims(&self) -> [usize; 2] {
        [self.nx, self.ny]
    }

    pub fn floor_layer(&self) -> usize {
        self.floor
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn index(&self, c: Column) -> usize {
        c[0] + self.nx * c[1]
    }

    pub fn column(&self, idx: usize) -> Column {
        [idx % self.nx, idx / self.nx]
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny
    }

    pub fn is_walkable(&self, c: Column) -> bool {
        c[0] < self.nx && c[1] < self.ny && self.walkable[self.index(c)]
    }

    pub fn walkable_count(&self) -> usize {
        self.walkable.iter().filter(|&&w| w).count()
    }

    pub fn walkable_columns(&self) -> impl Iterator<Item = Column> + '_ {
        (0..self.walkable.len())
            .filter(|&i| self.walkable[i])
            .map(|i| self.column(i))
    }

    /// Height of the floor surface under a walkable column.
    pub fn support_height(&self, c: Column) -> Option<f64> {
        self.is_walkable(c).then(|| self.support[self.index(c)])
    }

    /// Centre of the column's floor-layer cell in the horizontal plane.
    pub fn column_center_xy(&self, c: Column) -> [f64; 2] {
        [
            self.origin[0] + (c[0] as f64 + 0.5) * self.cell_size,
            self.origin[1] + (c[1] as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Root position of a walking body above a walkable column.
    pub fn walk_point(&self, c: Column) -> Option<Vec3> {
        let z = self.support_height(c)?;
        let [x, y] = self.column_center_xy(c);
        Some(Vec3::new(x, y, z + WALK_ROOT_HEIGHT))
    }

    /// Column containing the horizontal position of `p`, if inside the grid.
    pub fn column_of(&self, p: &Vec3) -> Option<Column> {
        let i = ((p.x - self.origin[0]) / self.cell_size).floor();
        let j = ((p.y - self.origin[1]) / self.cell_size).floor();
        (self.in_bounds(i as i64, j as i64) && i >= 0.0 && j >= 0.0).then_some([i as usize, j as usize])
    }

    /// The walkable column nearest to `p` horizontally; ties go to the
    /// lowest column index.
    pub fn nearest_walkable(&self, p: &Vec3) -> Option<Column> {
        self.nearest_walkable_within(p, f64::INFINITY)
    }

    /// Nearest walkable column whose centre lies within `radius` (xy) of `p`.
    pub fn nearest_walkable_within(&self, p: &Vec3, radius: f64) -> Option<Column> {
        let mut best: Option<(f64, Column)> = None;
        for c in self.walkable_columns() {
            let [x, y] = self.column_center_xy(c);
            let d = (x - p.x).powi(2) + (y - p.y).powi(2);
            if d <= radius * radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
        best.map(|(_, c)| c)
    }

    /// Walkable 8-neighbours of `c` with their direction indices.
    pub fn neighbors(&self, c: Column) -> impl Iterator<Item = (usize, Column)> + '_ {
        DIRECTIONS.iter().enumerate().filter_map(move |(k, d)| {
            let (i, j) = (c[0] as i64 + d[0], c[1] as i64 + d[1]);
            if !self.in_bounds(i, j) {
                return None;
            }
            let n = [i as usize, j as usize];
            self.walkable[self.index(n)].then_some((k, n))
        })
    }

    /// Builds a map directly from a walkability mask on a flat floor at
    /// `z = 0` (used for synthetic planning problems).
    pub fn from_mask(nx: usize, ny: usize, cell_size: f64, walkable: Vec<bool>) -> Result<Self> {
        if walkable.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::DimensionMismatch {
                context: "walkable mask",
                expected: nx * ny,
                found: walkable.len(),
            });
        }
        let support = walkable.iter().map(|&w| if w { 0.0 } else { f64::NAN }).collect();
        Ok(WalkableMap {
            nx,
            ny,
            floor: 0,
            origin: [0.0, 0.0, -0.5 * cell_size],
            cell_size,
            walkable,
            support,
        })
    }
}
