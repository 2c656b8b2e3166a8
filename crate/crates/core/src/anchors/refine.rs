use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::body::proxy_body;
use super::placement::score_pose;
use super::{Anchor, PoseVector, POSE_DIM};
use crate::error::{Error, Result};
use crate::geometry::{rotation_from_6d, rotation_to_6d, yaw_from_6d, Vec3};
use crate::nn::{train_cvae, BasisInfo, CvaeConfig, CvaeModel, ModelKind, Sample, TrainConfig, TrainReport};
use crate::scene::{
    bps_encode, BpsBasis, BpsFeature, TriangleMesh, VoxelGrid, DEFAULT_BASIS_SIZE, DEFAULT_CAGE_HALF_EXTENT,
};

/// Offset layout: `dt` (3) then `dphi` (6).
pub const REFINER_INPUT_DIM: usize = 9;
pub const MAX_REFINE_ATTEMPTS: usize = 8;

/// CVAE predicting the offset from a snapped candidate to a plausible
/// continuous placement, conditioned on the pose and local BPS context.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceRefiner {
    cvae: CvaeModel,
    basis: BpsBasis,
    cage_half_extent: f64,
}

impl PlaceRefiner {
    pub fn new(cvae: CvaeModel) -> Result<Self> {
        if cvae.kind() != ModelKind::Refiner {
            return Err(Error::ModelMismatch(format!(
                "expected a refiner checkpoint, found {:?}",
                cvae.kind()
            )));
        }
        let info = cvae
            .basis()
            .cloned()
            .ok_or_else(|| Error::ModelMismatch("refiner checkpoint has no basis record".into()))?;
        if cvae.input_dim() != REFINER_INPUT_DIM || cvae.condition_dim() != POSE_DIM + info.size {
            return Err(Error::ModelMismatch(format!(
                "refiner must map {} conditions to {REFINER_INPUT_DIM} offsets, found {} -> {}",
                POSE_DIM + info.size,
                cvae.condition_dim(),
                cvae.input_dim()
            )));
        }
        Ok(PlaceRefiner {
            basis: BpsBasis::generate(info.size, info.seed),
            cage_half_extent: info.cage_half_extent,
            cvae,
        })
    }

    pub fn untrained(basis_seed: u64, seed: u64) -> Result<Self> {
        let mut config = CvaeConfig::new(REFINER_INPUT_DIM, POSE_DIM + DEFAULT_BASIS_SIZE);
        config.condition_layers = 2;
        let mut cvae = CvaeModel::new(ModelKind::Refiner, config, seed)?;
        cvae.set_basis(Some(BasisInfo {
            seed: basis_seed,
            size: DEFAULT_BASIS_SIZE,
            cage_half_extent: DEFAULT_CAGE_HALF_EXTENT,
        }));
        PlaceRefiner::new(cvae)
    }

    pub fn cvae(&self) -> &CvaeModel {
        &self.cvae
    }

    pub fn basis(&self) -> &BpsBasis {
        &self.basis
    }

    pub fn feature(&self, mesh: &TriangleMesh, t: &Vec3) -> BpsFeature {
        bps_encode(mesh, t, self.cage_half_extent, self.basis.points())
    }

    pub fn condition(&self, theta: &PoseVector, feature: &BpsFeature) -> Vec<f64> {
        theta.0.iter().chain(feature.as_slice()).copied().collect()
    }

    /// Raw decoder offset for a given latent.
    pub fn decode_offset(
        &self,
        z: &[f64],
        theta: &PoseVector,
        feature: &BpsFeature,
    ) -> Result<[f64; REFINER_INPUT_DIM]> {
        let out = self.cvae.decode(z, &self.condition(theta, feature))?;
        Ok(std::array::from_fn(|i| out[i]))
    }
}

/// Applies a decoded offset: `dt` clamped to `max_step`, `phi + dphi`
/// re-orthonormalized. `None` when the orientation degenerates.
fn apply_offset(anchor: &Anchor, offset: &[f64; REFINER_INPUT_DIM], max_step: f64, grid: &VoxelGrid) -> Option<Anchor> {
    let mut dt = Vec3::new(offset[0], offset[1], offset[2]);
    let n = dt.norm();
    if n > max_step {
        dt *= max_step / n;
    }
    let phi: [f64; 6] = std::array::from_fn(|i| anchor.phi[i] + offset[3 + i]);
    let r = rotation_from_6d(&phi)?;
    let b = grid.bounds();
    let t = anchor.t + dt;
    let t = Vec3::new(
        t.x.clamp(b.min.x, b.max.x),
        t.y.clamp(b.min.y, b.max.y),
        t.z.clamp(b.min.z, b.max.z),
    );
    Some(Anchor {
        t,
        phi: rotation_to_6d(&r),
        theta: anchor.theta,
        action: anchor.action,
    })
}

/// Refines a placed anchor with one decoder sample. The translation offset
/// is clamped to one cell; if the orientation cannot be orthonormalized the
/// draw is repeated with derived seeds up to [`MAX_REFINE_ATTEMPTS`] times.
pub fn refine_placement(
    refiner: &PlaceRefiner,
    anchor: &Anchor,
    grid: &VoxelGrid,
    mesh: &TriangleMesh,
    seed: u64,
) -> Result<Anchor> {
    let feature = refiner.feature(mesh, &anchor.t);
    let condition = refiner.condition(&anchor.theta, &feature);
    for attempt in 0..MAX_REFINE_ATTEMPTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let out = refiner.cvae.sample(&condition, &mut rng)?;
        let offset: [f64; REFINER_INPUT_DIM] = std::array::from_fn(|i| out[i]);
        if let Some(a) = apply_offset(anchor, &offset, grid.cell_size(), grid) {
            return Ok(a);
        }
    }
    Err(Error::Orthonormalization {
        attempts: MAX_REFINE_ATTEMPTS,
    })
}

/// Like [`refine_placement`] but with an explicit latent and no retries.
pub fn refine_with_latent(
    refiner: &PlaceRefiner,
    anchor: &Anchor,
    grid: &VoxelGrid,
    mesh: &TriangleMesh,
    z: &[f64],
) -> Result<Anchor> {
    let feature = refiner.feature(mesh, &anchor.t);
    let offset = refiner.decode_offset(z, &anchor.theta, &feature)?;
    apply_offset(anchor, &offset, grid.cell_size(), grid).ok_or(Error::Orthonormalization { attempts: 1 })
}

/// One refiner training example: the true offset from a snapped candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinerSample {
    pub theta: PoseVector,
    pub feature: BpsFeature,
    pub dt: [f64; 3],
    pub dphi: [f64; 6],
}

pub fn train_place_refiner(
    data: &[RefinerSample],
    basis_seed: u64,
    model_seed: u64,
    config: &TrainConfig,
) -> Result<(PlaceRefiner, TrainReport)> {
    let refiner = PlaceRefiner::untrained(basis_seed, model_seed)?;
    let samples: Vec<Sample> = data
        .iter()
        .map(|s| Sample {
            input: s.dt.iter().chain(&s.dphi).copied().collect(),
            condition: refiner.condition(&s.theta, &s.feature),
        })
        .collect();
    let (cvae, report) = train_cvae(refiner.cvae, &samples, config)?;
    Ok((PlaceRefiner::new(cvae)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub iterations: usize,
    pub penetration_weight: f64,
    pub regularization: f64,
    pub contact_tau: f64,
    /// Finite-difference step for the gradient (metres).
    pub fd_step: f64,
    /// Longest trial step of the line search (metres).
    pub max_step: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            iterations: 10,
            penetration_weight: 1.0,
            regularization: 1.0,
            contact_tau: 0.05,
            fd_step: 1e-3,
            max_step: 0.1,
        }
    }
}

/// `E(t) = -affordance + w_p * penetration + w_r |t - t0|^2` with the
/// anchor's orientation and pose held fixed.
pub fn anchor_energy(anchor: &Anchor, t: &Vec3, t0: &Vec3, grid: &VoxelGrid, config: &OptimizeConfig) -> f64 {
    let body = proxy_body(&anchor.theta, anchor.action);
    let yaw = yaw_from_6d(&anchor.phi).unwrap_or(0.0);
    let (aff, pen) = score_pose(&body, t, yaw, grid, config.contact_tau);
    -aff + config.penetration_weight * pen + config.regularization * (t - t0).norm_squared()
}

/// Backtracking gradient descent on [`anchor_energy`] over the translation.
/// Returns the optimized anchor and the energy after each accepted step
/// (starting with the initial energy).
pub fn optimize_anchor(anchor: &Anchor, grid: &VoxelGrid, config: &OptimizeConfig) -> (Anchor, Vec<f64>) {
    let t0 = anchor.t;
    let energy = |t: &Vec3| anchor_energy(anchor, t, &t0, grid, config);
    let mut t = t0;
    let mut e = energy(&t);
    let mut trace = vec![e];
    let h = config.fd_step;
    for _ in 0..config.iterations {
        let g = Vec3::from_fn(|i, _| {
            let mut tp = t;
            let mut tm = t;
            tp[i] += h;
            tm[i] -= h;
            (energy(&tp) - energy(&tm)) / (2.0 * h)
        });
        let gn = g.norm();
        if !(gn > 1e-9) {
            break;
        }
        let dir = -g / gn;
        let mut step = config.max_step;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = t + dir * step;
            let et = energy(&trial);
            if et < e - 1e-4 * step * gn {
                t = trial;
                e = et;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(e);
    }
    let mut out = *anchor;
    out.t = t;
    (out, trace)
}
