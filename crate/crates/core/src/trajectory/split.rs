use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::anchors::{proxy_body, ActionLabel, Anchor, PoseSource};
use crate::error::{Error, Result};
use crate::geometry::yaw_to_6d;
use crate::planner::{GridPath, WalkableMap};
use crate::seed::derive_seed;
use crate::Vec3;

pub const DEFAULT_MAX_SEGMENT_LENGTH: f64 = 3.0;
/// Actions drawn for generated intermediate anchors.
pub const INTERMEDIATE_ACTIONS: [ActionLabel; 3] = [ActionLabel::Walk, ActionLabel::Stand, ActionLabel::Squat];

/// A piece of a planned path between two anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub cells: Vec<[usize; 3]>,
    pub start: Anchor,
    pub end: Anchor,
}

impl PathSegment {
    /// Length of the cell-centre polyline in metres.
    pub fn arc_length(&self, cell_size: f64) -> f64 {
        polyline_length(&self.cells) * cell_size
    }
}

fn cumulative(cells: &[[usize; 3]]) -> Vec<f64> {
    let mut out = vec![0.0];
    for w in cells.windows(2) {
        let dx = w[1][0] as f64 - w[0][0] as f64;
        let dy = w[1][1] as f64 - w[0][1] as f64;
        out.push(out[out.len() - 1] + dx.hypot(dy));
    }
    out
}

fn polyline_length(cells: &[[usize; 3]]) -> f64 {
    cumulative(cells).last().copied().unwrap_or(0.0)
}

/// Split indices for `n` pieces: the path cell closest in arc length to
/// each `k/n` fraction.
fn split_indices(cum: &[f64], n: usize) -> Vec<usize> {
    let total = cum[cum.len() - 1];
    let mut idx = vec![0];
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        let i = (0..cum.len())
            .min_by(|&a, &b| (cum[a] - target).abs().total_cmp(&(cum[b] - target).abs()))
            .expect("non-empty path");
        if i > idx[idx.len() - 1] && i < cum.len() - 1 {
            idx.push(i);
        }
    }
    idx.push(cum.len() - 1);
    idx
}

/// Splits `path` into pieces of equal arc length no longer than `max_len`
/// metres. Every split cell becomes an intermediate anchor whose action is
/// drawn from [`INTERMEDIATE_ACTIONS`] and whose pose comes from `poses`;
/// it faces along the path.
///
/// The piece count starts at `ceil(L / max_len)`; snapping split points to
/// cells can push a piece past `max_len`, in which case one more piece is
/// used.
pub fn split_path(
    path: &GridPath,
    map: &WalkableMap,
    start: &Anchor,
    end: &Anchor,
    max_len: f64,
    poses: &dyn PoseSource,
    seed: u64,
) -> Result<Vec<PathSegment>> {
    if path.cells.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty path".into()));
    }
    if !(max_len > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "max segment length must be positive, got {max_len}"
        )));
    }
    let cs = map.cell_size();
    let cum = cumulative(&path.cells);
    let total = cum[cum.len() - 1] * cs;
    let mut n = ((total / max_len).ceil() as usize).max(1);
    let idx = loop {
        let idx = split_indices(&cum, n);
        let fits = idx.windows(2).all(|w| (cum[w[1]] - cum[w[0]]) * cs <= max_len + 1e-9);
        if fits || n >= path.cells.len() {
            break idx;
        }
        n += 1;
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anchors = vec![*start];
    for (k, &i) in idx[1..idx.len() - 1].iter().enumerate() {
        let cell = path.cells[i];
        let col = [cell[0], cell[1]];
        let action = *INTERMEDIATE_ACTIONS.choose(&mut rng).expect("non-empty");
        let theta = poses.sample_pose(action, derive_seed(seed, 1, k as u64))?;
        let body = proxy_body(&theta, action);
        let [x, y] = map.column_center_xy(col);
        let support = map.support_height(col).ok_or(Error::NotWalkable { cell: col })?;
        let (p, q) = (path.cells[i - 1], path.cells[i + 1]);
        let yaw = (q[1] as f64 - p[1] as f64).atan2(q[0] as f64 - p[0] as f64);
        anchors.push(Anchor {
            t: Vec3::new(x, y, support + body.root_height),
            phi: yaw_to_6d(yaw),
            theta,
            action,
        });
    }
    anchors.push(*end);

    Ok(idx
        .windows(2)
        .zip(anchors.windows(2))
        .map(|(w, a)| PathSegment {
            cells: path.cells[w[0]..=w[1]].to_vec(),
            start: a[0],
            end: a[1],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchors::PoseVector;
    use crate::planner::{astar, field_standard};

    struct Zero;
    impl PoseSource for Zero {
        fn sample_pose(&self, _: ActionLabel, _: u64) -> Result<PoseVector> {
            Ok(PoseVector::zeros())
        }
    }

    fn corridor(n: usize) -> (WalkableMap, GridPath, Anchor, Anchor) {
        let map = WalkableMap::from_mask(n, 1, 0.25, vec![true; n]).unwrap();
        let path = astar(&map, [0, 0], [n - 1, 0], &field_standard()).unwrap();
        let anchor = |c: [usize; 2]| Anchor {
            t: map.walk_point(c).unwrap(),
            phi: yaw_to_6d(0.0),
            theta: PoseVector::zeros(),
            action: ActionLabel::Stand,
        };
        let (s, e) = (anchor([0, 0]), anchor([n - 1, 0]));
        (map, path, s, e)
    }

    #[test]
    fn short_path_is_one_segment() {
        let (map, path, s, e) = corridor(9);
        let segs = split_path(&path, &map, &s, &e, 3.0, &Zero, 1).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].cells, path.cells);
    }

    #[test]
    fn two_and_a_half_lengths_give_three_segments() {
        // 31 cells: 30 steps of 0.25 m = 7.5 m = 2.5 * 3 m.
        let (map, path, s, e) = corridor(31);
        let segs = split_path(&path, &map, &s, &e, 3.0, &Zero, 1).unwrap();
        assert_eq!(segs.len(), 3);
        let lens: Vec<f64> = segs.iter().map(|g| g.arc_length(0.25)).collect();
        let diag = 0.25 * 2f64.sqrt();
        for l in &lens {
            assert!((l - 2.5).abs() <= diag && *l <= 3.0, "{lens:?}");
        }
        for w in segs.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert!(INTERMEDIATE_ACTIONS.contains(&w[0].end.action));
        }
        assert_eq!(segs[0].start, s);
        assert_eq!(segs[2].end, e);
    }
}
