use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::write_json;
use crate::anchors::{train_place_refiner, train_pose_model};
use crate::error::{Error, Result};
use crate::nn::{CvaeModel, TrainConfig, TrainReport};
use crate::planner::train_mapper;
use crate::scene::{BpsBasis, DEFAULT_BASIS_SIZE};
use crate::seed::derive_seed;
use crate::synth::{mapper_dataset, pose_dataset, refiner_dataset, MapperDataConfig, RefinerDataConfig};

/// Basis seed used by `train` unless overridden.
pub const DEFAULT_BASIS_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainTarget {
    Pose,
    Refiner,
    Mapper,
}

impl std::str::FromStr for TrainTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pose" => Ok(TrainTarget::Pose),
            "refiner" => Ok(TrainTarget::Refiner),
            "mapper" => Ok(TrainTarget::Mapper),
            other => Err(Error::InvalidArgument(format!(
                "unknown training target `{other}` (expected pose, refiner or mapper)"
            ))),
        }
    }
}

/// Synthetic-data and optimizer settings for one training run. All
/// randomness derives from `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub target: TrainTarget,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub basis_seed: u64,
    pub pose_per_action: usize,
    pub mapper: MapperDataConfig,
    pub refiner: RefinerDataConfig,
}

impl TrainOptions {
    pub fn new(target: TrainTarget, seed: u64) -> Self {
        TrainOptions {
            target,
            seed,
            epochs: match target {
                TrainTarget::Pose => 20,
                TrainTarget::Refiner => 10,
                TrainTarget::Mapper => 20,
            },
            batch_size: 8,
            basis_seed: DEFAULT_BASIS_SEED,
            pose_per_action: 200,
            mapper: MapperDataConfig::default(),
            refiner: RefinerDataConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: CvaeModel,
    pub report: TrainReport,
    pub samples: usize,
}

/// Generates the synthetic dataset for the target and trains a fresh model.
pub fn train_model(options: &TrainOptions) -> Result<Trained> {
    if options.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be positive".into()));
    }
    let data_seed = derive_seed(options.seed, 1, 0);
    let model_seed = derive_seed(options.seed, 2, 0);
    let config = TrainConfig {
        epochs: options.epochs,
        batch_size: options.batch_size,
        seed: derive_seed(options.seed, 3, 0),
        ..TrainConfig::default()
    };
    let basis = || BpsBasis::generate(DEFAULT_BASIS_SIZE, options.basis_seed);
    let (model, report, samples) = match options.target {
        TrainTarget::Pose => {
            let data = pose_dataset(options.pose_per_action, data_seed);
            let (m, r) = train_pose_model(&data, model_seed, &config)?;
            (m.into_cvae(), r, data.len())
        }
        TrainTarget::Mapper => {
            let cfg = MapperDataConfig {
                seed: data_seed,
                ..options.mapper
            };
            let data = mapper_dataset(&cfg, &basis())?;
            let (m, r) = train_mapper(&data, options.basis_seed, model_seed, &config)?;
            (m.cvae().clone(), r, data.len())
        }
        TrainTarget::Refiner => {
            let cfg = RefinerDataConfig {
                seed: data_seed,
                ..options.refiner
            };
            let data = refiner_dataset(&cfg, &basis())?;
            let (m, r) = train_place_refiner(&data, options.basis_seed, model_seed, &config)?;
            (m.cvae().clone(), r, data.len())
        }
    };
    Ok(Trained { model, report, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub target: TrainTarget,
    pub seed: u64,
    pub samples: usize,
    pub epochs: usize,
    pub loss: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub kl: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub trace: PathBuf,
    pub samples: usize,
    pub final_loss: f64,
}

/// Trains and writes the checkpoint to `out` and the per-epoch loss trace
/// next to it as `<stem>.loss.json`.
pub fn cmd_train(options: &TrainOptions, out: &Path) -> Result<TrainOutcome> {
    let trained = train_model(options)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    trained.model.save(out)?;
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let trace = out.with_file_name(format!("{stem}.loss.json"));
    let record = LossTrace {
        target: options.target,
        seed: options.seed,
        samples: trained.samples,
        epochs: options.epochs,
        loss: trained.report.loss.clone(),
        reconstruction: trained.report.reconstruction.clone(),
        kl: trained.report.kl.clone(),
    };
    write_json(&trace, &record)?;
    Ok(TrainOutcome {
        checkpoint: out.to_path_buf(),
        trace,
        samples: trained.samples,
        final_loss: trained.report.loss.last().copied().unwrap_or(f64::NAN),
    })
}
