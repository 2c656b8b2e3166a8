//! Anchor placement: action-conditioned poses, candidate enumeration and
//! scoring, the same-action diversity penalty, and placement refinement.

mod body;
mod placement;
mod pose;
mod refine;

use serde::{Deserialize, Serialize};

pub use body::{proxy_body, Capsule, ContactLabel, ContactPoint, PosedBody, ProxyBody, CAPSULE_SAMPLES};
pub use placement::{
    diversity_penalty, enumerate_candidates, place_anchor, sample_candidate, score_candidate, score_pose, PlacedAnchor,
    PlacementCandidate, PlacementConfig, PlacementScores, PlacementSpace,
};
pub use pose::{sample_pose, train_pose_model, PoseModel, PoseSource};
pub use refine::{
    anchor_energy, optimize_anchor, refine_placement, refine_with_latent, train_place_refiner, OptimizeConfig,
    PlaceRefiner, RefinerSample, MAX_REFINE_ATTEMPTS, REFINER_INPUT_DIM,
};

use crate::error::{Error, Result};
use crate::geometry::{rotation_from_6d, Vec3};

pub const POSE_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionLabel {
    Sit,
    Lie,
    Stand,
    Walk,
    Squat,
}

impl ActionLabel {
    pub const ALL: [ActionLabel; 5] = [
        ActionLabel::Sit,
        ActionLabel::Lie,
        ActionLabel::Stand,
        ActionLabel::Walk,
        ActionLabel::Squat,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn one_hot(self) -> [f64; 5] {
        let mut v = [0.0; 5];
        v[self.index()] = 1.0;
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionLabel::Sit => "sit",
            ActionLabel::Lie => "lie",
            ActionLabel::Stand => "stand",
            ActionLabel::Walk => "walk",
            ActionLabel::Squat => "squat",
        }
    }

    /// Standing-type actions need a walkable floor cell.
    pub fn needs_walkable(self) -> bool {
        matches!(self, ActionLabel::Stand | ActionLabel::Walk | ActionLabel::Squat)
    }
}

impl std::fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ActionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActionLabel::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown action '{s}' (expected sit, lie, stand, walk or squat)"
            ))
        })
    }
}

/// Abstract 32-dimensional pose latent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseVector(pub [f64; POSE_DIM]);

impl PoseVector {
    pub fn zeros() -> Self {
        PoseVector([0.0; POSE_DIM])
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; POSE_DIM] = v.try_into().map_err(|_| Error::DimensionMismatch {
            context: "pose vector",
            expected: POSE_DIM,
            found: v.len(),
        })?;
        if arr.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("pose vector must be finite".into()));
        }
        Ok(PoseVector(arr))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One human-scene interaction: root translation, 6D orientation, pose and
/// action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub t: Vec3,
    pub phi: [f64; 6],
    pub theta: PoseVector,
    pub action: ActionLabel,
}

impl Anchor {
    pub fn rotation(&self) -> Option<nalgebra::Matrix3<f64>> {
        rotation_from_6d(&self.phi)
    }

    /// The proxy body placed at this anchor.
    pub fn posed_body(&self) -> Option<PosedBody> {
        Some(proxy_body(&self.theta, self.action).posed(&self.t, &self.rotation()?))
    }
}
