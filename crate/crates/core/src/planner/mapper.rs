use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::field::{CostField, FieldKind};
use super::walkable::{WalkableMap, DIRECTIONS};
use crate::error::{Error, Result};
use crate::nn::{train_cvae, BasisInfo, CvaeConfig, CvaeModel, ModelKind, Sample, TrainConfig, TrainReport};
use crate::scene::{
    bps_encode_points, BpsBasis, BpsFeature, TriangleMesh, DEFAULT_BASIS_SIZE, DEFAULT_CAGE_HALF_EXTENT,
};

/// Sharpness of the soft one-hot over compass directions.
pub const KAPPA: f64 = 4.0;

/// Normalized moving direction `(d / |d| + 1) / 2`, the reconstruction
/// target; `None` for a zero displacement.
pub fn direction_target(dx: f64, dy: f64) -> Option<[f64; 2]> {
    let n = (dx * dx + dy * dy).sqrt();
    (n > 1e-12).then(|| [(dx / n + 1.0) / 2.0, (dy / n + 1.0) / 2.0])
}

/// Eight direction feasibilities from a decoded target: the direction
/// `2 * out - 1` defines an angle `a`, and compass direction `k` scores
/// `exp(KAPPA * (cos(a_k - a) - 1))`. A vanishing direction scores 1
/// everywhere.
pub fn direction_scores(out: &[f64]) -> [f64; 8] {
    let (dx, dy) = (2.0 * out[0] - 1.0, 2.0 * out[1] - 1.0);
    if dx.hypot(dy) < 1e-9 {
        return [1.0; 8];
    }
    let a = dy.atan2(dx);
    std::array::from_fn(|k| {
        let d = DIRECTIONS[k];
        let ak = (d[1] as f64).atan2(d[0] as f64);
        (KAPPA * ((ak - a).cos() - 1.0)).exp()
    })
}

/// The Neural Mapper: a CVAE reconstructing the 2D moving direction from
/// local BPS context.
#[derive(Debug, Clone, PartialEq)]
pub struct MapperModel {
    cvae: CvaeModel,
    basis: BpsBasis,
    cage_half_extent: f64,
}

impl MapperModel {
    pub fn new(cvae: CvaeModel) -> Result<Self> {
        if cvae.kind() != ModelKind::Mapper {
            return Err(Error::ModelMismatch(format!(
                "expected a mapper checkpoint, found {:?}",
                cvae.kind()
            )));
        }
        if cvae.input_dim() != 2 {
            return Err(Error::ModelMismatch(format!(
                "mapper must reconstruct 2 values, not {}",
                cvae.input_dim()
            )));
        }
        let info = cvae
            .basis()
            .cloned()
            .ok_or_else(|| Error::ModelMismatch("mapper checkpoint has no basis record".into()))?;
        if info.size != cvae.condition_dim() {
            return Err(Error::ModelMismatch(format!(
                "basis size {} does not match condition width {}",
                info.size,
                cvae.condition_dim()
            )));
        }
        Ok(MapperModel {
            basis: BpsBasis::generate(info.size, info.seed),
            cage_half_extent: info.cage_half_extent,
            cvae,
        })
    }

    /// Fresh, untrained mapper with the default architecture.
    pub fn untrained(basis_seed: u64, seed: u64) -> Result<Self> {
        let mut config = CvaeConfig::new(2, DEFAULT_BASIS_SIZE);
        config.condition_layers = 2;
        let mut cvae = CvaeModel::new(ModelKind::Mapper, config, seed)?;
        cvae.set_basis(Some(BasisInfo {
            seed: basis_seed,
            size: DEFAULT_BASIS_SIZE,
            cage_half_extent: DEFAULT_CAGE_HALF_EXTENT,
        }));
        MapperModel::new(cvae)
    }

    pub fn cvae(&self) -> &CvaeModel {
        &self.cvae
    }

    pub fn basis(&self) -> &BpsBasis {
        &self.basis
    }

    pub fn cage_half_extent(&self) -> f64 {
        self.cage_half_extent
    }

    /// BPS context around a walking body's root above `column`.
    pub fn feature(&self, points: &[crate::Vec3], map: &WalkableMap, column: [usize; 2]) -> Option<BpsFeature> {
        let center = map.walk_point(column)?;
        Some(bps_encode_points(
            points,
            &center,
            self.cage_half_extent,
            self.basis.points(),
        ))
    }

    /// Direction scores for one latent and context.
    pub fn scores(&self, z: &[f64], feature: &BpsFeature) -> Result<[f64; 8]> {
        let out = self.cvae.decode(z, feature.as_slice())?;
        Ok(direction_scores(&out))
    }

    pub fn draw_latent(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.cvae.latent_dim())
            .map(|_| rng.sample(StandardNormal))
            .collect()
    }
}

/// Scene-dependent part of the mapper evaluated once per map: the encoded
/// BPS condition of every walkable column, pushed through the condition
/// half of the decoder's first layer. Fields for new seeds then only need
/// the latent half and the remaining layers.
#[derive(Debug, Clone)]
pub struct MapperContext {
    columns: Vec<usize>,
    n_columns: usize,
    first_layer_condition: DMatrix<f64>,
}

impl MapperContext {
    /// `basis_seed` must match the seed the model was trained with.
    pub fn new(model: &MapperModel, map: &WalkableMap, mesh: &TriangleMesh, basis_seed: u64) -> Result<Self> {
        if model.basis.seed() != basis_seed {
            return Err(Error::BasisSeedMismatch {
                model: model.basis.seed(),
                call: basis_seed,
            });
        }
        let walkable: Vec<[usize; 2]> = map.walkable_columns().collect();
        let nb = model.basis.len();
        let mut features = DMatrix::zeros(walkable.len(), nb);
        for (r, &c) in walkable.iter().enumerate() {
            let f = model
                .feature(mesh.vertices(), map, c)
                .expect("walkable columns have a walk point");
            features.row_mut(r).copy_from_slice(f.as_slice());
        }
        let encoded = model.cvae.encode_condition(&features)?;
        let first = &model.cvae.decoder().layers()[0];
        let d = model.cvae.latent_dim();
        let w_cond = first.weights.rows(d, first.weights.nrows() - d);
        let first_layer_condition = &encoded * w_cond;
        let [nx, ny] = map.dims();
        Ok(MapperContext {
            columns: walkable.iter().map(|&c| map.index(c)).collect(),
            n_columns: nx * ny,
            first_layer_condition,
        })
    }

    /// Cost field for one planning episode: a single latent drawn from
    /// `seed` shared by every column.
    pub fn field(&self, model: &MapperModel, seed: u64) -> Result<CostField> {
        let z = model.draw_latent(seed);
        let layers = model.cvae.decoder().layers();
        let first = &layers[0];
        let d = z.len();
        let zrow = DMatrix::from_row_slice(1, d, &z);
        let latent_part = &zrow * first.weights.rows(0, d);
        let mut a = self.first_layer_condition.clone();
        for mut row in a.row_iter_mut() {
            row += &latent_part;
            row += first.bias.transpose();
        }
        a.apply(|v| *v = first.activation.apply(*v));
        for layer in &layers[1..] {
            let mut z = &a * &layer.weights;
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            z.apply(|v| *v = layer.activation.apply(*v));
            a = z;
        }
        let mut values = vec![[1.0; 8]; self.n_columns];
        for (r, &col) in self.columns.iter().enumerate() {
            values[col] = direction_scores(&[a[(r, 0)], a[(r, 1)]]);
        }
        Ok(CostField::from_columns(FieldKind::Mapper, Some(seed), values))
    }
}

/// Mapper field for one episode. Columns that are not walkable keep `m = 1`
/// (they are never expanded).
pub fn field_mapper(
    model: &MapperModel,
    map: &WalkableMap,
    mesh: &TriangleMesh,
    basis_seed: u64,
    seed: u64,
) -> Result<CostField> {
    MapperContext::new(model, map, mesh, basis_seed)?.field(model, seed)
}

/// One mapper training example.
#[derive(Debug, Clone, PartialEq)]
pub struct MapperSample {
    pub feature: BpsFeature,
    /// Normalized direction in `[0, 1]^2` (see [`direction_target`]).
    pub direction: [f64; 2],
}

/// Trains a fresh mapper on `data`; `model_seed` initializes the weights
/// and `config.seed` drives shuffling and noise.
pub fn train_mapper(
    data: &[MapperSample],
    basis_seed: u64,
    model_seed: u64,
    config: &TrainConfig,
) -> Result<(MapperModel, TrainReport)> {
    let model = MapperModel::untrained(basis_seed, model_seed)?;
    let samples: Vec<Sample> = data
        .iter()
        .map(|s| Sample {
            input: s.direction.to_vec(),
            condition: s.feature.0.clone(),
        })
        .collect();
    let (cvae, report) = train_cvae(model.cvae, &samples, config)?;
    Ok((MapperModel::new(cvae)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_and_scores_agree() {
        let t = direction_target(2.0, 0.0).unwrap();
        assert_eq!(t, [1.0, 0.5]);
        let s = direction_scores(&t);
        assert_eq!(s[0], 1.0);
        assert!(s[1..].iter().all(|&v| v < 1.0));
        assert!((s[4] - (-2.0 * KAPPA).exp()).abs() < 1e-12);
        assert!(direction_target(0.0, 0.0).is_none());
    }

    #[test]
    fn checkpoint_without_basis_is_rejected() {
        let cvae = CvaeModel::new(ModelKind::Mapper, CvaeConfig::new(2, 4), 0).unwrap();
        assert!(matches!(MapperModel::new(cvae), Err(Error::ModelMismatch(_))));
    }
}
