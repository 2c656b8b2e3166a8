use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face index {index} out of range at line {line} ({count} vertices)")]
    IndexOutOfRange { line: usize, index: usize, count: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate mesh bounding box (zero extent in all axes)")]
    DegenerateMesh,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("stale or mismatched forward cache")]
    StaleCache,

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },

    #[error("model is not usable here: {0}")]
    ModelMismatch(String),

    #[error("scene has no placement for action {action}")]
    NoPlacement { action: String },

    #[error("scene has no free floor")]
    NoFreeFloor,

    #[error("no walkable cell within {radius} m of {point:?}")]
    NoApproach { point: [f64; 3], radius: f64 },

    #[error("cell {cell:?} is not walkable")]
    NotWalkable { cell: [usize; 2] },

    #[error("no path from {start:?} to {goal:?}")]
    NoPath { start: [usize; 2], goal: [usize; 2] },

    #[error("basis-point seed mismatch: model uses {model}, call uses {call}")]
    BasisSeedMismatch { model: u64, call: u64 },

    #[error("refined orientation could not be orthonormalized after {attempts} attempts")]
    Orthonormalization { attempts: usize },

    #[error("trajectory boundary mismatch of {gap} m between segments {index} and {next}", next = index + 1)]
    BoundaryMismatch { index: usize, gap: f64 },

    #[error("fewer points than K ({points} < {k})")]
    TooFewPoints { points: usize, k: usize },

    #[error("path endpoints do not match the reference")]
    EndpointMismatch,

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("{stage} stage failed (sample {sample}): {source}")]
    Stage {
        stage: Stage,
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Pipeline stage names, used to attribute failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Scene,
    Anchors,
    Planner,
    Trajectory,
    Metrics,
    Export,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Scene => "scene",
            Stage::Anchors => "anchors",
            Stage::Planner => "planner",
            Stage::Trajectory => "trajectory",
            Stage::Metrics => "metrics",
            Stage::Export => "export",
        };
        f.write_str(name)
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: Stage, sample: usize) -> Self {
        Error::Stage {
            stage,
            sample,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
