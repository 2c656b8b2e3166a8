//! Seeded synthetic training data: a per-action Gaussian mixture of pose
//! vectors, walk traces in random rooms for the Neural Mapper, and snapped
//! placements for the Place Refiner.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::anchors::{proxy_body, ActionLabel, PoseSource, PoseVector, RefinerSample, POSE_DIM};
use crate::error::Result;
use crate::geometry::{cumulative_lengths, point_at_length, yaw_to_6d, Vec3};
use crate::planner::{
    astar, build_walkable, direction_target, field_standard, MapperSample, DEFAULT_HEIGHT, DEFAULT_RADIUS,
};
use crate::scene::{bps_encode, rooms, voxelize, BpsBasis, DEFAULT_CAGE_HALF_EXTENT};
use crate::seed::derive_seed;

/// Seed of the fixed component means.
pub const POSE_MIXTURE_SEED: u64 = 0x00C0_FFEE;
/// Standard deviation of every mixture component, per coordinate.
pub const POSE_COMPONENT_STD: f64 = 0.25;

/// Component means of the synthetic pose mixture, one per action in
/// [`ActionLabel::ALL`] order, drawn once from a standard normal.
pub fn pose_component_means() -> [[f64; POSE_DIM]; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(POSE_MIXTURE_SEED);
    std::array::from_fn(|_| std::array::from_fn(|_| rng.sample(StandardNormal)))
}

/// Action whose component mean is nearest (L2) to `theta`.
pub fn nearest_component(theta: &PoseVector) -> ActionLabel {
    let means = pose_component_means();
    let d = |m: &[f64; POSE_DIM]| m.iter().zip(&theta.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    ActionLabel::ALL
        .into_iter()
        .min_by(|a, b| d(&means[a.index()]).total_cmp(&d(&means[b.index()])))
        .expect("five actions")
}

/// `per_action` samples of every action, actions interleaved.
pub fn pose_dataset(per_action: usize, seed: u64) -> Vec<(PoseVector, ActionLabel)> {
    let means = pose_component_means();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, POSE_COMPONENT_STD).expect("positive std");
    let mut out = Vec::with_capacity(per_action * 5);
    for _ in 0..per_action {
        for a in ActionLabel::ALL {
            let m = &means[a.index()];
            out.push((PoseVector(std::array::from_fn(|i| m[i] + noise.sample(&mut rng))), a));
        }
    }
    out
}

/// Samples straight from the synthetic mixture; stands in for a trained
/// pose model when none is supplied.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticPosePrior;

impl PoseSource for SyntheticPosePrior {
    fn sample_pose(&self, action: ActionLabel, seed: u64) -> Result<PoseVector> {
        let m = pose_component_means()[action.index()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, POSE_COMPONENT_STD).expect("positive std");
        Ok(PoseVector(std::array::from_fn(|i| m[i] + noise.sample(&mut rng))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapperDataConfig {
    pub rooms: usize,
    pub episodes_per_room: usize,
    /// Standard deviation of the lateral waypoint jitter (metres).
    pub jitter: f64,
    /// Distance walked per frame (metres).
    pub frame_spacing: f64,
    /// Frames per training window.
    pub window: usize,
    /// Frames between consecutive window starts.
    pub stride: usize,
    pub seed: u64,
}

impl Default for MapperDataConfig {
    fn default() -> Self {
        MapperDataConfig {
            rooms: 16,
            episodes_per_room: 6,
            jitter: 0.12,
            frame_spacing: 0.04,
            window: 60,
            stride: 20,
            seed: 11,
        }
    }
}

/// Walk traces: shortest paths between random walkable cells of random
/// rooms, with jittered interior waypoints, resampled to constant speed and
/// cut into windows. Each window yields the BPS context at its first frame
/// and the normalized direction from its first to its last frame.
pub fn mapper_dataset(config: &MapperDataConfig, basis: &BpsBasis) -> Result<Vec<MapperSample>> {
    let mut out = Vec::new();
    for r in 0..config.rooms {
        let mesh = rooms::random_room(derive_seed(config.seed, 1, r as u64));
        let grid = voxelize(&mesh, crate::scene::DEFAULT_CELL_SIZE)?;
        let Ok(map) = build_walkable(&grid, DEFAULT_RADIUS, DEFAULT_HEIGHT) else {
            continue;
        };
        let cols: Vec<[usize; 2]> = map.walkable_columns().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 2, r as u64));
        let jitter = Normal::new(0.0, config.jitter.max(1e-12)).expect("positive std");
        for _ in 0..config.episodes_per_room {
            let (&s, &g) = (
                cols.choose(&mut rng).expect("walkable"),
                cols.choose(&mut rng).expect("walkable"),
            );
            let Ok(path) = astar(&map, s, g, &field_standard()) else {
                continue;
            };
            let mut pts: Vec<Vec3> = path.columns().map(|c| map.walk_point(c).expect("walkable")).collect();
            let n = pts.len();
            for i in 1..n.saturating_sub(1) {
                let d = pts[i + 1] - pts[i - 1];
                let lateral = Vec3::new(-d.y, d.x, 0.0)
                    .try_normalize(1e-12)
                    .unwrap_or_else(Vec3::zeros);
                pts[i] += lateral * jitter.sample(&mut rng);
            }
            let cum = cumulative_lengths(&pts);
            let total = cum[cum.len() - 1];
            let frames = (total / config.frame_spacing).floor() as usize + 1;
            if frames < config.window {
                continue;
            }
            let trace: Vec<Vec3> = (0..frames)
                .map(|f| point_at_length(&pts, &cum, f as f64 * config.frame_spacing))
                .collect();
            let mut start = 0;
            while start + config.window <= trace.len() {
                let (a, b) = (trace[start], trace[start + config.window - 1]);
                if let Some(direction) = direction_target(b.x - a.x, b.y - a.y) {
                    out.push(MapperSample {
                        feature: bps_encode(&mesh, &a, DEFAULT_CAGE_HALF_EXTENT, basis.points()),
                        direction,
                    });
                }
                start += config.stride;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinerDataConfig {
    pub rooms: usize,
    pub per_room: usize,
    pub seed: u64,
}

impl Default for RefinerDataConfig {
    fn default() -> Self {
        RefinerDataConfig {
            rooms: 8,
            per_room: 60,
            seed: 23,
        }
    }
}

/// Placement offsets: a true placement with continuous position and
/// heading is snapped to a randomly chosen neighbouring grid candidate
/// (one of the surrounding cell centres, one of the two bracketing 45
/// degree headings); the sample records the offset from candidate to truth.
pub fn refiner_dataset(config: &RefinerDataConfig, basis: &BpsBasis) -> Result<Vec<RefinerSample>> {
    let mut out = Vec::new();
    let prior = SyntheticPosePrior;
    let step = std::f64::consts::FRAC_PI_4;
    for r in 0..config.rooms {
        let mesh = rooms::random_room(derive_seed(config.seed, 1, r as u64));
        let grid = voxelize(&mesh, crate::scene::DEFAULT_CELL_SIZE)?;
        let Ok(map) = build_walkable(&grid, DEFAULT_RADIUS, DEFAULT_HEIGHT) else {
            continue;
        };
        let cols: Vec<[usize; 2]> = map.walkable_columns().collect();
        let cs = grid.cell_size();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 2, r as u64));
        for i in 0..config.per_room {
            let action = *ActionLabel::ALL.choose(&mut rng).expect("actions");
            let theta = prior.sample_pose(action, derive_seed(config.seed, 3, (r * config.per_room + i) as u64))?;
            let body = proxy_body(&theta, action);
            let col = *cols.choose(&mut rng).expect("walkable");
            let [cx, cy] = map.column_center_xy(col);
            let support = map.support_height(col).expect("walkable");
            let z = support + body.root_height;
            let truth = Vec3::new(
                cx + rng.random_range(-0.5..0.5) * cs,
                cy + rng.random_range(-0.5..0.5) * cs,
                z,
            );
            let yaw = rng.random_range(0.0..std::f64::consts::TAU);

            // Candidate: a cell centre adjacent to the true position.
            let fx = ((truth.x - cx) / cs).signum();
            let fy = ((truth.y - cy) / cs).signum();
            let (ox, oy) = *[(0.0, 0.0), (fx, 0.0), (0.0, fy), (fx, fy)]
                .choose(&mut rng)
                .expect("options");
            let cand = Vec3::new(cx + ox * cs, cy + oy * cs, z);
            let k = (yaw / step).floor() + if rng.random_bool(0.5) { 1.0 } else { 0.0 };
            let cand_phi = yaw_to_6d(k * step);
            let true_phi = yaw_to_6d(yaw);
            out.push(RefinerSample {
                theta,
                feature: bps_encode(&mesh, &cand, DEFAULT_CAGE_HALF_EXTENT, basis.points()),
                dt: [truth.x - cand.x, truth.y - cand.y, truth.z - cand.z],
                dphi: std::array::from_fn(|j| true_phi[j] - cand_phi[j]),
            });
        }
    }
    Ok(out)
}
