//! End-to-end orchestration: configuration, the three stages plus metrics,
//! artifact export, and the training and evaluation entry points.
//!
//! Artifacts written to the output directory:
//!
//! - `anchors.json`: `{"anchors": [{sequence, index, action, t, phi, theta?, cell?, orientation_index?, scores?}]}`
//! - `paths.json`: `{"cell_size", "paths": [{sequence, pair, sample, field, seed?, reference, cells, cost}]}`
//! - `trajectories.json`: `{"trajectories": [{sequence, sample, fps, frames: [{t, phi, action}]}]}`
//! - `metrics.json`: see [`MetricsReport`]
//! - `manifest.json`: see [`RunManifest`]

mod config;
mod eval;
mod io;
mod obj;
mod records;
mod run;
mod train;

pub use config::{load_scene, ModelPaths, RunConfig, SampleCounts, StageToggles, BUILTIN_PREFIX, BUILTIN_SCENES};
pub use eval::{
    action_bodies, cmd_eval, evaluate, ClusterSummary, EvalData, EvalInputs, MetricsConfig, MetricsReport,
    PathGroupDeviation,
};
pub use io::{parse_json, read_json, to_json, write_json};
pub use obj::{export_obj, ObjExport};
pub use records::{AnchorRecord, AnchorsFile, FrameRecord, PathRecord, PathsFile, TrajectoriesFile, TrajectoryRecord};
pub use run::{
    execute, run_pipeline, stage_ids, RunManifest, RunOutput, RunSeeds, ANCHORS_FILE, APPROACH_RADIUS, MANIFEST_FILE,
    METRICS_FILE, PATHS_FILE, TRAJECTORIES_FILE,
};
pub use train::{cmd_train, train_model, TrainOptions, TrainOutcome, TrainTarget, Trained, DEFAULT_BASIS_SEED};
