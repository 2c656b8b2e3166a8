use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::body::{proxy_body, ProxyBody};
use super::{ActionLabel, Anchor, PoseVector};
use crate::error::{Error, Result};
use crate::geometry::{yaw_to_6d, Vec3};
use crate::planner::{build_walkable, WalkableMap, DEFAULT_HEIGHT, DEFAULT_RADIUS};
use crate::scene::voxel::Cell;
use crate::scene::VoxelGrid;

/// Weights and sampling parameters of anchor placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementConfig {
    pub penetration_weight: f64,
    pub diversity_weight: f64,
    /// Length scale of the diversity kernel (metres).
    pub diversity_sigma: f64,
    /// Contact tolerance of the affordance term (metres).
    pub contact_tau: f64,
    pub temperature: f64,
    pub top_k: usize,
    pub diversity_enabled: bool,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            penetration_weight: 1.0,
            diversity_weight: 0.5,
            diversity_sigma: 1.0,
            contact_tau: 0.05,
            temperature: 0.1,
            top_k: 20,
            diversity_enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementCandidate {
    pub cell: Cell,
    pub orientation_index: usize,
    pub yaw: f64,
    /// Root position once scored (NaN before).
    pub t: Vec3,
    pub affordance: f64,
    pub penetration: f64,
    pub diversity_penalty: f64,
    pub total_score: f64,
}

impl PlacementCandidate {
    fn new(cell: Cell, orientation_index: usize) -> Self {
        PlacementCandidate {
            cell,
            orientation_index,
            yaw: orientation_index as f64 * std::f64::consts::FRAC_PI_4,
            t: Vec3::repeat(f64::NAN),
            affordance: 0.0,
            penetration: 0.0,
            diversity_penalty: 0.0,
            total_score: f64::NAN,
        }
    }

    pub fn yaw_deg(&self) -> f64 {
        self.orientation_index as f64 * 45.0
    }

    fn total(&self, config: &PlacementConfig) -> f64 {
        self.affordance
            - config.penetration_weight * self.penetration
            - config.diversity_weight * self.diversity_penalty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlacementScores {
    pub affordance: f64,
    pub penetration: f64,
    pub diversity_penalty: f64,
}

/// An anchor together with the candidate it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedAnchor {
    pub anchor: Anchor,
    pub cell: Cell,
    pub orientation_index: usize,
    pub scores: PlacementScores,
}

/// True when `c` is free and rests on something: an occupied cell below,
/// or the grid bottom when the floor is layer 0.
fn is_supported(grid: &VoxelGrid, c: Cell, bottom_supports: bool) -> bool {
    if grid.is_occupied(c) {
        return false;
    }
    if c[2] == 0 {
        bottom_supports
    } else {
        grid.is_occupied([c[0], c[1], c[2] - 1])
    }
}

/// One candidate per supported free cell and each of the eight yaws
/// `k * 45 deg`, in cell-index then orientation order.
pub fn enumerate_candidates(grid: &VoxelGrid) -> Vec<PlacementCandidate> {
    let bottom = grid.floor_layer() == Some(0);
    (0..grid.len())
        .map(|i| grid.coords(i))
        .filter(|&c| is_supported(grid, c, bottom))
        .flat_map(|c| (0..8).map(move |k| PlacementCandidate::new(c, k)))
        .collect()
}

/// Affordance and penetration of `body` with root at `t` and heading `yaw`.
pub fn score_pose(body: &ProxyBody, t: &Vec3, yaw: f64, grid: &VoxelGrid, tau: f64) -> (f64, f64) {
    let (s, c) = yaw.sin_cos();
    let rot = |p: &Vec3| Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z);
    let affordance = body
        .designated_contacts()
        .map(|cp| {
            let d = grid.sdf_at(&(t + rot(&cp.position)));
            (-(d * d) / (2.0 * tau * tau)).exp()
        })
        .sum();
    let penetration = body
        .capsules
        .iter()
        .flat_map(|cap| cap.sample_points())
        .map(|p| (-grid.sdf_at(&(t + rot(&p)))).max(0.0))
        .sum();
    (affordance, penetration)
}

/// Fills in the candidate's root position, affordance and penetration. The
/// root sits `body.root_height` above the support surface under the cell.
pub fn score_candidate(candidate: &mut PlacementCandidate, body: &ProxyBody, grid: &VoxelGrid, tau: f64) {
    let center = grid.cell_center(candidate.cell);
    let support = grid.support_height(candidate.cell);
    score_at_support(candidate, body, grid, tau, center, support);
}

fn score_at_support(
    c: &mut PlacementCandidate,
    body: &ProxyBody,
    grid: &VoxelGrid,
    tau: f64,
    center: Vec3,
    support: f64,
) {
    c.t = Vec3::new(center.x, center.y, support + body.root_height);
    let (a, p) = score_pose(body, &c.t, c.yaw, grid, tau);
    c.affordance = a;
    c.penetration = p;
}

/// Gaussian-kernel sum over previously placed anchors of the same action.
pub fn diversity_penalty(t: &Vec3, action: ActionLabel, placed: &[Anchor], sigma: f64) -> f64 {
    placed
        .iter()
        .filter(|a| a.action == action)
        .map(|a| (-(t - a.t).norm_squared() / (2.0 * sigma * sigma)).exp())
        .sum()
}

/// Softmax draw over `scores / temperature`.
pub fn sample_candidate(scores: &[f64], temperature: f64, rng: &mut impl Rng) -> usize {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| ((s - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    scores.len() - 1
}

/// Scene data shared by all placements: supported cells with their support
/// heights, and the walkable floor.
#[derive(Debug, Clone)]
pub struct PlacementSpace {
    cells: Vec<(Cell, Vec3, f64)>,
    walkable: Option<WalkableMap>,
}

impl PlacementSpace {
    pub fn new(grid: &VoxelGrid) -> Self {
        let bottom = grid.floor_layer() == Some(0);
        let cells = (0..grid.len())
            .map(|i| grid.coords(i))
            .filter(|&c| is_supported(grid, c, bottom))
            .map(|c| (c, grid.cell_center(c), grid.support_height(c)))
            .collect();
        PlacementSpace {
            cells,
            walkable: build_walkable(grid, DEFAULT_RADIUS, DEFAULT_HEIGHT).ok(),
        }
    }

    pub fn walkable(&self) -> Option<&WalkableMap> {
        self.walkable.as_ref()
    }

    fn allows(&self, c: Cell, action: ActionLabel) -> bool {
        if !action.needs_walkable() {
            return true;
        }
        match &self.walkable {
            Some(w) => c[2] == w.floor_layer() && w.is_walkable([c[0], c[1]]),
            None => false,
        }
    }

    /// All scored candidates for `body`, before the diversity penalty.
    pub fn score_all(&self, body: &ProxyBody, grid: &VoxelGrid, config: &PlacementConfig) -> Vec<PlacementCandidate> {
        let bounds = grid.bounds();
        let mut out = Vec::new();
        for &(cell, center, support) in &self.cells {
            if !self.allows(cell, body.action) {
                continue;
            }
            for k in 0..8 {
                let mut c = PlacementCandidate::new(cell, k);
                score_at_support(&mut c, body, grid, config.contact_tau, center, support);
                if bounds.contains(&c.t) && c.affordance.is_finite() && c.penetration.is_finite() {
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Places one anchor: score every admissible candidate, subtract the
/// diversity penalty against same-action anchors in `placed`, keep the
/// `top_k` best (ties to lower cell index, then orientation) and draw one
/// by softmax.
pub fn place_anchor(
    pose: &PoseVector,
    action: ActionLabel,
    grid: &VoxelGrid,
    space: &PlacementSpace,
    placed: &[Anchor],
    config: &PlacementConfig,
    seed: u64,
) -> Result<PlacedAnchor> {
    let body = proxy_body(pose, action);
    let mut candidates = space.score_all(&body, grid, config);
    for c in candidates.iter_mut() {
        if config.diversity_enabled {
            c.diversity_penalty = diversity_penalty(&c.t, action, placed, config.diversity_sigma);
        }
        c.total_score = c.total(config);
    }
    candidates.retain(|c| c.total_score.is_finite());
    if candidates.is_empty() {
        return Err(Error::NoPlacement {
            action: action.name().into(),
        });
    }
    let idx = |c: &PlacementCandidate| grid.index(c.cell);
    candidates.sort_by(|a, b| {
        b.total_score
            .total_cmp(&a.total_score)
            .then(idx(a).cmp(&idx(b)))
            .then(a.orientation_index.cmp(&b.orientation_index))
    });
    candidates.truncate(config.top_k.max(1));
    let scores: Vec<f64> = candidates.iter().map(|c| c.total_score).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = candidates[sample_candidate(&scores, config.temperature, &mut rng)];
    Ok(PlacedAnchor {
        anchor: Anchor {
            t: chosen.t,
            phi: yaw_to_6d(chosen.yaw),
            theta: *pose,
            action,
        },
        cell: chosen.cell,
        orientation_index: chosen.orientation_index,
        scores: PlacementScores {
            affordance: chosen.affordance,
            penetration: chosen.penetration,
            diversity_penalty: chosen.diversity_penalty,
        },
    })
}
