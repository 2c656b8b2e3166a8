use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ActionLabel, PoseVector, POSE_DIM};
use crate::error::{Error, Result};
use crate::nn::{train_cvae, CvaeConfig, CvaeModel, ModelKind, Sample, TrainConfig, TrainReport};

/// Anything that can produce an action-conditioned pose from a seed.
pub trait PoseSource {
    fn sample_pose(&self, action: ActionLabel, seed: u64) -> Result<PoseVector>;
}

/// Scene-agnostic pose generator: a CVAE over 32-dim pose vectors
/// conditioned on the one-hot action.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseModel {
    cvae: CvaeModel,
}

impl PoseModel {
    pub fn new(cvae: CvaeModel) -> Result<Self> {
        if cvae.kind() != ModelKind::Pose {
            return Err(Error::ModelMismatch(format!(
                "expected a pose checkpoint, found {:?}",
                cvae.kind()
            )));
        }
        if cvae.condition_dim() != ActionLabel::ALL.len() || cvae.input_dim() != POSE_DIM {
            return Err(Error::ModelMismatch(format!(
                "pose model must map {} actions to {POSE_DIM} values, found {} -> {}",
                ActionLabel::ALL.len(),
                cvae.condition_dim(),
                cvae.input_dim()
            )));
        }
        Ok(PoseModel { cvae })
    }

    pub fn untrained(seed: u64) -> Result<Self> {
        PoseModel::new(CvaeModel::new(
            ModelKind::Pose,
            CvaeConfig::new(POSE_DIM, ActionLabel::ALL.len()),
            seed,
        )?)
    }

    pub fn cvae(&self) -> &CvaeModel {
        &self.cvae
    }

    pub fn into_cvae(self) -> CvaeModel {
        self.cvae
    }
}

/// Decoder output for `z ~ N(0, I)` drawn from `seed` and the action's
/// one-hot condition.
pub fn sample_pose(model: &PoseModel, action: ActionLabel, seed: u64) -> Result<PoseVector> {
    if model.cvae.epochs_trained() == 0 {
        return Err(Error::ModelMismatch("pose model is untrained".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = model.cvae.sample(&action.one_hot(), &mut rng)?;
    PoseVector::from_slice(&out)
}

impl PoseSource for PoseModel {
    fn sample_pose(&self, action: ActionLabel, seed: u64) -> Result<PoseVector> {
        sample_pose(self, action, seed)
    }
}

/// Trains a fresh pose CVAE on `(pose, action)` pairs.
pub fn train_pose_model(
    data: &[(PoseVector, ActionLabel)],
    model_seed: u64,
    config: &TrainConfig,
) -> Result<(PoseModel, TrainReport)> {
    let model = PoseModel::untrained(model_seed)?;
    let samples: Vec<Sample> = data
        .iter()
        .map(|(p, a)| Sample {
            input: p.0.to_vec(),
            condition: a.one_hot().to_vec(),
        })
        .collect();
    let (cvae, report) = train_cvae(model.cvae, &samples, config)?;
    Ok((PoseModel::new(cvae)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untrained_model_is_rejected() {
        let m = PoseModel::untrained(1).unwrap();
        assert!(matches!(
            sample_pose(&m, ActionLabel::Sit, 3),
            Err(Error::ModelMismatch(_))
        ));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let cvae = CvaeModel::new(ModelKind::Mapper, CvaeConfig::new(32, 5), 0).unwrap();
        assert!(PoseModel::new(cvae).is_err());
    }
}
