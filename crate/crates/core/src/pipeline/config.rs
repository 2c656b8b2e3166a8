use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::read_json;
use crate::anchors::{ActionLabel, PlacementConfig};
use crate::error::{Error, Result};
use crate::planner::FieldKind;
use crate::scene::{load_mesh, rooms, TriangleMesh, UpAxis, DEFAULT_CELL_SIZE};
use crate::trajectory::{DEFAULT_FRAMES, DEFAULT_MAX_SEGMENT_LENGTH};

/// Prefix selecting one of the procedurally generated fixture scenes
/// instead of an OBJ file, e.g. `builtin:test-room`.
pub const BUILTIN_PREFIX: &str = "builtin:";
pub const BUILTIN_SCENES: [&str; 4] = ["test-room", "two-seats", "walled-off", "large-room"];

/// Loads a scene from an OBJ path or a `builtin:` name and converts it to
/// z-up.
pub fn load_scene(scene: &str, up_axis: UpAxis) -> Result<TriangleMesh> {
    if let Some(name) = scene.strip_prefix(BUILTIN_PREFIX) {
        return match name {
            "test-room" => Ok(rooms::test_room()),
            "two-seats" => Ok(rooms::two_seats_room()),
            "walled-off" => Ok(rooms::walled_off_room()),
            "large-room" => Ok(rooms::large_room()),
            other => Err(Error::InvalidArgument(format!(
                "unknown builtin scene `{other}` (expected one of {})",
                BUILTIN_SCENES.join(", ")
            ))),
        };
    }
    Ok(load_mesh(scene)?.to_z_up(up_axis))
}

/// Checkpoint files. Missing pose model: the synthetic pose prior is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelPaths {
    pub pose: Option<PathBuf>,
    pub refiner: Option<PathBuf>,
    pub mapper: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    /// Apply the learned placement refiner (needs `models.refiner`).
    pub refine_anchors: bool,
    /// Local penetration/regularization optimization of each anchor.
    pub optimize_anchors: bool,
    pub plan: bool,
    pub trajectory: bool,
    pub optimize_trajectory: bool,
    pub metrics: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            refine_anchors: false,
            optimize_anchors: true,
            plan: true,
            trajectory: true,
            optimize_trajectory: true,
            metrics: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCounts {
    /// Independent anchor sequences.
    pub anchors: usize,
    /// Planned paths (and trajectories) per consecutive anchor pair.
    pub paths: usize,
}

impl SampleCounts {
    pub fn uniform(n: usize) -> Self {
        SampleCounts { anchors: n, paths: n }
    }
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts::uniform(1)
    }
}

/// Everything a run depends on. The JSON form uses these field names;
/// every field except `scene` and `actions` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// OBJ path or `builtin:<name>`.
    pub scene: String,
    #[serde(default)]
    pub up_axis: UpAxis,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    pub actions: Vec<ActionLabel>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub samples: SampleCounts,
    #[serde(default = "default_field")]
    pub field: FieldKind,
    #[serde(default)]
    pub models: ModelPaths,
    /// Checked against the mapper/refiner checkpoints when set.
    #[serde(default)]
    pub basis_seed: Option<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub stages: StageToggles,
    #[serde(default)]
    pub placement: PlacementConfig,
    #[serde(default = "default_max_segment")]
    pub max_segment_length: f64,
    #[serde(default = "default_jitter")]
    pub jitter_scale: f64,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_clusters")]
    pub clusters: usize,
}

fn default_cell_size() -> f64 {
    DEFAULT_CELL_SIZE
}
fn default_field() -> FieldKind {
    FieldKind::Standard
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_max_segment() -> f64 {
    DEFAULT_MAX_SEGMENT_LENGTH
}
fn default_jitter() -> f64 {
    0.1
}
fn default_frames() -> usize {
    DEFAULT_FRAMES
}
fn default_clusters() -> usize {
    crate::metrics::DEFAULT_CLUSTERS
}

impl RunConfig {
    /// A config with defaults for everything but the scene and actions.
    pub fn new(scene: impl Into<String>, actions: Vec<ActionLabel>) -> Self {
        RunConfig {
            scene: scene.into(),
            up_axis: UpAxis::default(),
            cell_size: default_cell_size(),
            actions,
            seed: 0,
            samples: SampleCounts::default(),
            field: default_field(),
            models: ModelPaths::default(),
            basis_seed: None,
            out: default_out(),
            stages: StageToggles::default(),
            placement: PlacementConfig::default(),
            max_segment_length: default_max_segment(),
            jitter_scale: default_jitter(),
            frames: default_frames(),
            clusters: default_clusters(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let config: RunConfig = read_json(path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| {
            Err(Error::Schema {
                path: path.into(),
                message,
            })
        };
        if self.actions.is_empty() {
            return bad("actions", "the action sequence is empty".into());
        }
        if self.samples.anchors == 0 || self.samples.paths == 0 {
            return bad("samples", "sample counts must be at least 1".into());
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return bad("cell_size", format!("must be positive, got {}", self.cell_size));
        }
        if !(self.max_segment_length > 0.0) {
            return bad(
                "max_segment_length",
                format!("must be positive, got {}", self.max_segment_length),
            );
        }
        if !(self.jitter_scale >= 0.0) {
            return bad(
                "jitter_scale",
                format!("must be non-negative, got {}", self.jitter_scale),
            );
        }
        if self.frames < 2 {
            return bad("frames", format!("need at least 2 frames, got {}", self.frames));
        }
        if self.clusters == 0 {
            return bad("clusters", "must be at least 1".into());
        }
        if self.field == FieldKind::Mapper && self.models.mapper.is_none() {
            return bad("models.mapper", "the mapper field needs a mapper checkpoint".into());
        }
        if self.stages.refine_anchors && self.models.refiner.is_none() {
            return bad("models.refiner", "anchor refinement needs a refiner checkpoint".into());
        }
        Ok(())
    }
}
