use super::Trajectory;
use crate::geometry::Vec3;
use crate::scene::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptConfig {
    pub iterations: usize,
    /// Initial step of every backtracking line search.
    pub step: f64,
    pub smoothness_weight: f64,
    pub clearance_weight: f64,
    /// Desired distance to geometry (metres).
    pub clearance: f64,
    /// Finite-difference step for the SDF gradient; `None` means a quarter
    /// of the cell size.
    pub fd_step: Option<f64>,
    pub max_halvings: usize,
}

impl Default for TrajectoryOptConfig {
    fn default() -> Self {
        TrajectoryOptConfig {
            iterations: 100,
            step: 1e-2,
            smoothness_weight: 1.0,
            clearance_weight: 10.0,
            clearance: 0.3,
            fd_step: None,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub smoothness: f64,
    pub clearance: f64,
    pub total: f64,
}

/// `w_s * sum |t[i-1] - 2 t[i] + t[i+1]|^2 + w_c * sum max(0, eps - sdf(t[i]))^2`.
pub fn trajectory_energy(points: &[Vec3], grid: &VoxelGrid, config: &TrajectoryOptConfig) -> EnergyParts {
    let smooth: f64 = points
        .windows(3)
        .map(|w| (w[0] - w[1] * 2.0 + w[2]).norm_squared())
        .sum();
    let clear: f64 = points
        .iter()
        .map(|p| (config.clearance - grid.sdf_at(p)).max(0.0).powi(2))
        .sum();
    let smoothness = config.smoothness_weight * smooth;
    let clearance = config.clearance_weight * clear;
    EnergyParts {
        smoothness,
        clearance,
        total: smoothness + clearance,
    }
}

/// Gradient of [`trajectory_energy`] with the endpoints held fixed (their
/// entries are zero). The SDF gradient is a central difference on the grid.
pub fn energy_gradient(points: &[Vec3], grid: &VoxelGrid, config: &TrajectoryOptConfig) -> Vec<Vec3> {
    let n = points.len();
    let h = config.fd_step.unwrap_or(grid.cell_size() / 4.0);
    let mut g = vec![Vec3::zeros(); n];
    for i in 1..n.saturating_sub(1) {
        let r = points[i - 1] - points[i] * 2.0 + points[i + 1];
        let w = 2.0 * config.smoothness_weight;
        g[i - 1] += r * w;
        g[i] -= r * (2.0 * w);
        g[i + 1] += r * w;
    }
    for (i, p) in points.iter().enumerate() {
        let v = config.clearance - grid.sdf_at(p);
        if v > 0.0 {
            g[i] -= grid.sdf_gradient(p, h) * (2.0 * config.clearance_weight * v);
        }
    }
    g[0] = Vec3::zeros();
    if n > 1 {
        g[n - 1] = Vec3::zeros();
    }
    g
}

/// Gradient descent with backtracking on [`trajectory_energy`], endpoints
/// fixed. A step is accepted only if it does not raise the energy and does
/// not move a frame with `sdf >= 0` to `sdf < 0`. Returns the optimized
/// trajectory (headings recomputed) and the energy after every accepted
/// iteration, starting with the initial energy.
pub fn optimize_trajectory(
    traj: &Trajectory,
    grid: &VoxelGrid,
    config: &TrajectoryOptConfig,
) -> (Trajectory, Vec<f64>) {
    let mut pts = traj.positions();
    let mut energy = trajectory_energy(&pts, grid, config).total;
    let mut trace = vec![energy];
    for _ in 0..config.iterations {
        let g = energy_gradient(&pts, grid, config);
        if g.iter().map(|v| v.norm_squared()).sum::<f64>() <= 1e-24 {
            break;
        }
        let mut alpha = config.step;
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let cand: Vec<Vec3> = pts.iter().zip(&g).map(|(p, d)| p - d * alpha).collect();
            let e = trajectory_energy(&cand, grid, config).total;
            let keeps_free = pts
                .iter()
                .zip(&cand)
                .all(|(a, b)| grid.sdf_at(a) < 0.0 || grid.sdf_at(b) >= 0.0);
            if e <= energy && keeps_free {
                accepted = Some((cand, e));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, e)) = accepted else {
            break;
        };
        pts = cand;
        energy = e;
        trace.push(e);
    }
    let mut out = traj.clone();
    for (f, p) in out.frames.iter_mut().zip(pts) {
        f.t = p;
    }
    out.update_headings();
    (out, trace)
}
