use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Frame, PathSegment, Trajectory, DEFAULT_FPS, DEFAULT_FRAMES};
use crate::anchors::ActionLabel;
use crate::error::{Error, Result};
use crate::geometry::{resample_uniform, Vec3};
use crate::planner::WalkableMap;
use crate::scene::VoxelGrid;
use crate::seed::derive_seed;

/// Spline samples per waypoint span before arc-length resampling.
const SPAN_SAMPLES: usize = 32;
/// Consecutive waypoints closer than this are merged.
const MERGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub frames: usize,
    pub fps: f64,
    /// Standard deviation of the lateral waypoint jitter (metres).
    pub jitter_scale: f64,
    /// Jittered attempts (each halving the scale) before falling back to
    /// the unjittered spline.
    pub max_attempts: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            frames: DEFAULT_FRAMES,
            fps: DEFAULT_FPS,
            jitter_scale: 0.1,
            max_attempts: 8,
        }
    }
}

/// Centripetal Catmull-Rom spline through `points`, sampled `per_span`
/// times per span. The ends use mirrored phantom points, so a straight
/// polyline stays straight.
pub fn catmull_rom(points: &[Vec3], per_span: usize) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = Vec::with_capacity(points.len());
    for p in points {
        if pts.last().is_none_or(|q: &Vec3| (p - q).norm() > MERGE_EPS) {
            pts.push(*p);
        }
    }
    if pts.len() < 2 {
        return pts;
    }
    let n = pts.len();
    let ext = |i: isize| -> Vec3 {
        if i < 0 {
            pts[0] * 2.0 - pts[1]
        } else if i as usize >= n {
            pts[n - 1] * 2.0 - pts[n - 2]
        } else {
            pts[i as usize]
        }
    };
    let mut out = vec![pts[0]];
    for s in 0..n - 1 {
        let s = s as isize;
        let (p0, p1, p2, p3) = (ext(s - 1), ext(s), ext(s + 1), ext(s + 2));
        let knot = |a: &Vec3, b: &Vec3| (b - a).norm().sqrt();
        let t0 = 0.0;
        let t1 = t0 + knot(&p0, &p1);
        let t2 = t1 + knot(&p1, &p2);
        let t3 = t2 + knot(&p2, &p3);
        for k in 1..=per_span {
            let u = t1 + (t2 - t1) * k as f64 / per_span as f64;
            let a1 = p0 * ((t1 - u) / (t1 - t0)) + p1 * ((u - t0) / (t1 - t0));
            let a2 = p1 * ((t2 - u) / (t2 - t1)) + p2 * ((u - t1) / (t2 - t1));
            let a3 = p2 * ((t3 - u) / (t3 - t2)) + p3 * ((u - t2) / (t3 - t2));
            let b1 = a1 * ((t2 - u) / (t2 - t0)) + a2 * ((u - t0) / (t2 - t0));
            let b2 = a2 * ((t3 - u) / (t3 - t1)) + a3 * ((u - t1) / (t3 - t1));
            out.push(b1 * ((t2 - u) / (t2 - t1)) + b2 * ((u - t1) / (t2 - t1)));
        }
        *out.last_mut().expect("just pushed") = pts[s as usize + 1];
    }
    out
}

fn waypoints(segment: &PathSegment, map: &WalkableMap) -> Result<Vec<Vec3>> {
    let mut pts = vec![segment.start.t];
    let n = segment.cells.len();
    for c in segment.cells.iter().take(n.saturating_sub(1)).skip(1) {
        let col = [c[0], c[1]];
        pts.push(map.walk_point(col).ok_or(Error::NotWalkable { cell: col })?);
    }
    pts.push(segment.end.t);
    Ok(pts)
}

fn frames_from(points: &[Vec3], config: &RefineConfig) -> Vec<Vec3> {
    let dense = catmull_rom(points, SPAN_SAMPLES);
    if dense.len() < 2 {
        return vec![points[0]; config.frames];
    }
    resample_uniform(&dense, config.frames)
}

/// Smooth `M`-frame root trajectory along a path segment.
///
/// Waypoints are the walk points of the segment's cells with the two ends
/// replaced by the anchor translations. Interior waypoints are pushed
/// sideways by seeded Gaussian jitter; a draw that puts any frame inside
/// geometry (`sdf < 0`) is retried at half the scale, and after
/// `max_attempts` the unjittered spline is used. The first and last frames
/// take the anchor orientations and actions; interior frames face along the
/// tangent and are labelled `walk`.
pub fn refine_path(
    segment: &PathSegment,
    map: &WalkableMap,
    grid: &VoxelGrid,
    seed: u64,
    config: &RefineConfig,
) -> Result<Trajectory> {
    if config.frames < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two frames, got {}",
            config.frames
        )));
    }
    let base = waypoints(segment, map)?;
    let free = |f: &[Vec3]| f.iter().all(|p| grid.sdf_at(p) >= 0.0);

    let mut chosen = None;
    if config.jitter_scale > 0.0 && base.len() > 2 {
        for attempt in 0..config.max_attempts {
            let scale = config.jitter_scale * 0.5f64.powi(attempt as i32);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, attempt as u64));
            let mut pts = base.clone();
            for i in 1..pts.len() - 1 {
                let d = base[i + 1] - base[i - 1];
                let lateral = Vec3::new(-d.y, d.x, 0.0)
                    .try_normalize(1e-12)
                    .unwrap_or_else(Vec3::zeros);
                pts[i] += lateral * (scale * rng.sample::<f64, _>(StandardNormal));
            }
            let f = frames_from(&pts, config);
            if free(&f) {
                chosen = Some(f);
                break;
            }
        }
    }
    let positions = match chosen {
        Some(f) => f,
        None => {
            let f = frames_from(&base, config);
            if !free(&f) {
                log::warn!("refined segment touches geometry even without jitter");
            }
            f
        }
    };

    let last = positions.len() - 1;
    let mut traj = Trajectory {
        frames: positions
            .iter()
            .enumerate()
            .map(|(i, &t)| Frame {
                t,
                phi: segment.start.phi,
                action: match i {
                    0 => segment.start.action,
                    i if i == last => segment.end.action,
                    _ => ActionLabel::Walk,
                },
            })
            .collect(),
        fps: config.fps,
    };
    traj.frames[last].phi = segment.end.phi;
    traj.update_headings();
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchors::{Anchor, PoseVector};
    use crate::geometry::{cumulative_lengths, yaw_to_6d};

    #[test]
    fn straight_line_stays_straight_and_uniform() {
        let pts = [Vec3::new(0.0, 0.0, 0.9), Vec3::new(2.0, 1.0, 0.9)];
        let f = frames_from(&pts, &RefineConfig::default());
        assert_eq!(f.len(), DEFAULT_FRAMES);
        let dir = (pts[1] - pts[0]).normalize();
        for p in &f {
            assert!((p - pts[0]).cross(&dir).norm() < 1e-9);
        }
        let cum = cumulative_lengths(&f);
        let step = cum[cum.len() - 1] / (f.len() - 1) as f64;
        for w in cum.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-6);
        }
        assert_eq!(f[0], pts[0]);
        assert_eq!(f[f.len() - 1], pts[1]);
    }

    #[test]
    fn collinear_unevenly_spaced_points_do_not_backtrack() {
        let pts: Vec<Vec3> = [0.0, 0.1, 2.0, 2.2, 5.0]
            .iter()
            .map(|&x| Vec3::new(x, 0.0, 0.0))
            .collect();
        let dense = catmull_rom(&pts, 16);
        for w in dense.windows(2) {
            assert!(w[1].x >= w[0].x - 1e-12);
        }
    }

    #[test]
    fn endpoints_take_anchor_state() {
        let map = WalkableMap::from_mask(8, 1, 0.25, vec![true; 8]).unwrap();
        let grid = VoxelGrid::empty(Vec3::new(0.0, 0.0, -1.0), 0.25, [8, 1, 12]).unwrap();
        let anchor = |x: f64, yaw: f64, action| Anchor {
            t: Vec3::new(x, 0.125, 0.9),
            phi: yaw_to_6d(yaw),
            theta: PoseVector::zeros(),
            action,
        };
        let seg = PathSegment {
            cells: (0..8).map(|i| [i, 0, 0]).collect(),
            start: anchor(0.1, 1.0, ActionLabel::Stand),
            end: anchor(1.9, -1.0, ActionLabel::Squat),
        };
        let t = refine_path(&seg, &map, &grid, 3, &RefineConfig::default()).unwrap();
        assert_eq!(t.frames[0].t, seg.start.t);
        assert_eq!(t.frames[59].t, seg.end.t);
        assert_eq!(t.frames[0].phi, seg.start.phi);
        assert_eq!(t.frames[59].phi, seg.end.phi);
        assert_eq!(t.frames[59].action, ActionLabel::Squat);
        assert_eq!(t.frames[30].action, ActionLabel::Walk);
    }
}
