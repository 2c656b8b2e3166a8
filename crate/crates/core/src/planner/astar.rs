use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::field::CostField;
use super::walkable::{Column, WalkableMap};
use crate::error::{Error, Result};

/// A planned path over floor-layer cells `[i, j, k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub cells: Vec<[usize; 3]>,
    pub cost: f64,
}

impl GridPath {
    pub fn columns(&self) -> impl Iterator<Item = Column> + '_ {
        self.cells.iter().map(|c| [c[0], c[1]])
    }

    /// Length of the cell-centre polyline in cell units.
    pub fn length_cells(&self) -> f64 {
        self.cells
            .windows(2)
            .map(|w| {
                let dx = w[1][0] as f64 - w[0][0] as f64;
                let dy = w[1][1] as f64 - w[0][1] as f64;
                (dx * dx + dy * dy).sqrt()
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // Reversed so the max-heap pops the smallest (f, h, index).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn step_length(dir: usize) -> f64 {
    if dir.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::SQRT_2
    }
}

/// A* over the walkable floor. Moving `p -> q` costs the step length in
/// cell units plus `1 - m(p, q)`; the heuristic is the Euclidean distance
/// to the goal in cell units. Open-set ties break on `(f, h, index)`.
///
/// The returned cost is recomputed from the path as
/// `axial + diagonal * sqrt(2) + sum(1 - m)`, so equal paths report equal
/// costs regardless of accumulation order.
pub fn astar(map: &WalkableMap, start: Column, goal: Column, field: &CostField) -> Result<GridPath> {
    for c in [start, goal] {
        if !map.is_walkable(c) {
            return Err(Error::NotWalkable { cell: c });
        }
    }
    let k = map.floor_layer();
    let [nx, ny] = map.dims();
    let n = nx * ny;
    let heuristic = |c: Column| {
        let dx = c[0] as f64 - goal[0] as f64;
        let dy = c[1] as f64 - goal[1] as f64;
        (dx * dx + dy * dy).sqrt()
    };

    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let s = map.index(start);
    let goal_idx = map.index(goal);
    g[s] = 0.0;
    let h0 = heuristic(start);
    open.push(Open { f: h0, h: h0, idx: s });

    while let Some(Open { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == goal_idx {
            break;
        }
        let c = map.column(idx);
        for (dir, q) in map.neighbors(c) {
            let qi = map.index(q);
            if closed[qi] {
                continue;
            }
            let cand = g[idx] + step_length(dir) + (1.0 - field.m(idx, dir));
            if cand < g[qi] {
                g[qi] = cand;
                parent[qi] = idx;
                let h = heuristic(q);
                open.push(Open {
                    f: cand + h,
                    h,
                    idx: qi,
                });
            }
        }
    }
    if !closed[goal_idx] {
        return Err(Error::NoPath { start, goal });
    }

    let mut rev = vec![goal_idx];
    while *rev.last().unwrap() != s {
        rev.push(parent[*rev.last().unwrap()]);
    }
    rev.reverse();
    let columns: Vec<Column> = rev.iter().map(|&i| map.column(i)).collect();
    let cost = path_cost(map, &columns, field);
    Ok(GridPath {
        cells: columns.iter().map(|c| [c[0], c[1], k]).collect(),
        cost,
    })
}

/// Cost of a column sequence under `field`, in canonical summation order.
pub fn path_cost(map: &WalkableMap, columns: &[Column], field: &CostField) -> f64 {
    let (mut axial, mut diagonal, mut extra) = (0u64, 0u64, 0.0);
    for w in columns.windows(2) {
        let dir = super::walkable::direction_index(w[0], w[1]).expect("consecutive path cells are neighbours");
        if dir.is_multiple_of(2) {
            axial += 1;
        } else {
            diagonal += 1;
        }
        extra += 1.0 - field.m(map.index(w[0]), dir);
    }
    axial as f64 + diagonal as f64 * std::f64::consts::SQRT_2 + extra
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::field::{field_random, field_standard};

    #[test]
    fn start_equals_goal() {
        let map = WalkableMap::from_mask(4, 4, 0.25, vec![true; 16]).unwrap();
        let p = astar(&map, [1, 2], [1, 2], &field_standard()).unwrap();
        assert_eq!(p.cells, vec![[1, 2, 0]]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn open_corner_to_corner_is_all_diagonal() {
        let map = WalkableMap::from_mask(10, 10, 0.25, vec![true; 100]).unwrap();
        let p = astar(&map, [0, 0], [9, 9], &field_standard()).unwrap();
        assert_eq!(p.cost, 9.0 * std::f64::consts::SQRT_2);
        assert_eq!(p.cells.len(), 10);
    }

    #[test]
    fn unreachable_goal_is_no_path() {
        let mut mask = vec![true; 25];
        for j in 0..5 {
            mask[2 + 5 * j] = false;
        }
        let map = WalkableMap::from_mask(5, 5, 0.25, mask).unwrap();
        assert!(matches!(
            astar(&map, [0, 0], [4, 4], &field_standard()),
            Err(Error::NoPath { .. })
        ));
        assert!(matches!(
            astar(&map, [2, 0], [4, 4], &field_standard()),
            Err(Error::NotWalkable { .. })
        ));
    }

    #[test]
    fn field_cost_is_bounded_by_length() {
        let map = WalkableMap::from_mask(12, 9, 0.25, vec![true; 108]).unwrap();
        let base = astar(&map, [0, 3], [11, 7], &field_standard()).unwrap();
        for seed in 0..10 {
            let p = astar(&map, [0, 3], [11, 7], &field_random(&map, seed)).unwrap();
            assert!(p.cost >= base.cost);
            assert!(p.cost <= base.cost + (base.cells.len() - 1) as f64 + 1e-9);
        }
    }
}
