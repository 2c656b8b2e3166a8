//! JSON export schemas. Each file type has a loader that validates shapes
//! and reports the field path of the first violation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::read_json;
use crate::anchors::{ActionLabel, Anchor, PlacedAnchor, PlacementScores, PoseVector};
use crate::error::{Error, Result};
use crate::geometry::rotation_from_6d;
use crate::planner::{FieldKind, GridPath};
use crate::trajectory::{Frame, Trajectory};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorRecord {
    /// Anchor sequence (independent sample) this anchor belongs to.
    pub sequence: usize,
    /// Position in the action sequence.
    pub index: usize,
    pub action: ActionLabel,
    pub t: [f64; 3],
    pub phi: [f64; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<PoseVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<PlacementScores>,
}

impl AnchorRecord {
    pub fn from_placed(sequence: usize, index: usize, placed: &PlacedAnchor) -> Self {
        let a = &placed.anchor;
        AnchorRecord {
            sequence,
            index,
            action: a.action,
            t: [a.t.x, a.t.y, a.t.z],
            phi: a.phi,
            theta: Some(a.theta),
            cell: Some(placed.cell),
            orientation_index: Some(placed.orientation_index),
            scores: Some(placed.scores),
        }
    }

    /// The anchor, with a zero pose when none was recorded.
    pub fn anchor(&self) -> Anchor {
        Anchor {
            t: Vec3::from(self.t),
            phi: self.phi,
            theta: self.theta.unwrap_or_else(PoseVector::zeros),
            action: self.action,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorsFile {
    pub anchors: Vec<AnchorRecord>,
}

impl AnchorsFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: AnchorsFile = read_json(path)?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.anchors.iter().enumerate() {
            finite(&a.t, || format!("anchors[{i}].t"))?;
            finite(&a.phi, || format!("anchors[{i}].phi"))?;
            if rotation_from_6d(&a.phi).is_none() {
                return Err(Error::Schema {
                    path: format!("anchors[{i}].phi"),
                    message: "rotation columns are parallel or zero".into(),
                });
            }
            if let Some(theta) = &a.theta {
                finite(&theta.0, || format!("anchors[{i}].theta"))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathRecord {
    pub sequence: usize,
    /// Index of the anchor pair `(pair, pair + 1)`.
    pub pair: usize,
    pub sample: usize,
    pub field: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// The standard-field path deviation is measured against.
    #[serde(default)]
    pub reference: bool,
    pub cells: Vec<[usize; 3]>,
    pub cost: f64,
}

impl PathRecord {
    pub fn path(&self) -> GridPath {
        GridPath {
            cells: self.cells.clone(),
            cost: self.cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsFile {
    pub cell_size: f64,
    pub paths: Vec<PathRecord>,
}

impl PathsFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: PathsFile = read_json(path)?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::Schema {
                path: "cell_size".into(),
                message: format!("must be positive, got {}", self.cell_size),
            });
        }
        for (i, p) in self.paths.iter().enumerate() {
            if p.cells.is_empty() {
                return Err(Error::Schema {
                    path: format!("paths[{i}].cells"),
                    message: "path has no cells".into(),
                });
            }
            for (j, w) in p.cells.windows(2).enumerate() {
                let step = (0..2).map(|a| w[0][a].abs_diff(w[1][a])).max().unwrap_or(0);
                if step != 1 {
                    return Err(Error::Schema {
                        path: format!("paths[{i}].cells[{}]", j + 1),
                        message: "consecutive cells must be 8-neighbours".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub t: [f64; 3],
    pub phi: [f64; 6],
    pub action: ActionLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRecord {
    pub sequence: usize,
    pub sample: usize,
    pub fps: f64,
    pub frames: Vec<FrameRecord>,
}

impl TrajectoryRecord {
    pub fn from_trajectory(sequence: usize, sample: usize, traj: &Trajectory) -> Self {
        TrajectoryRecord {
            sequence,
            sample,
            fps: traj.fps,
            frames: traj
                .frames
                .iter()
                .map(|f| FrameRecord {
                    t: [f.t.x, f.t.y, f.t.z],
                    phi: f.phi,
                    action: f.action,
                })
                .collect(),
        }
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            frames: self
                .frames
                .iter()
                .map(|f| Frame {
                    t: Vec3::from(f.t),
                    phi: f.phi,
                    action: f.action,
                })
                .collect(),
            fps: self.fps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesFile {
    pub trajectories: Vec<TrajectoryRecord>,
}

impl TrajectoriesFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: TrajectoriesFile = read_json(path)?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.trajectories.iter().enumerate() {
            if t.frames.is_empty() {
                return Err(Error::Schema {
                    path: format!("trajectories[{i}].frames"),
                    message: "trajectory has no frames".into(),
                });
            }
            if !(t.fps > 0.0) {
                return Err(Error::Schema {
                    path: format!("trajectories[{i}].fps"),
                    message: format!("must be positive, got {}", t.fps),
                });
            }
            for (j, f) in t.frames.iter().enumerate() {
                finite(&f.t, || format!("trajectories[{i}].frames[{j}].t"))?;
                if rotation_from_6d(&f.phi).is_none() {
                    return Err(Error::Schema {
                        path: format!("trajectories[{i}].frames[{j}].phi"),
                        message: "rotation columns are parallel, zero or non-finite".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn finite(values: &[f64], path: impl FnOnce() -> String) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Schema {
            path: path(),
            message: "non-finite value".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::io::parse_json;

    #[test]
    fn anchors_without_theta_parse() {
        let f: AnchorsFile = parse_json(
            r#"{"anchors": [{"sequence": 0, "index": 0, "action": "sit",
                "t": [1, 2, 0.5], "phi": [1, 0, 0, 0, 1, 0]}]}"#,
        )
        .unwrap();
        f.validate().unwrap();
        assert!(f.anchors[0].theta.is_none());
        assert_eq!(f.anchors[0].anchor().theta, PoseVector::zeros());
    }

    #[test]
    fn schema_errors_carry_paths() {
        let err = parse_json::<AnchorsFile>(
            r#"{"anchors": [{"sequence": 0, "index": 0, "action": "fly", "t": [0,0,0], "phi": [1,0,0,0,1,0]}]}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref path, .. } if path == "anchors[0].action"),
            "{err}"
        );

        let bad = PathsFile {
            cell_size: 0.25,
            paths: vec![PathRecord {
                sequence: 0,
                pair: 0,
                sample: 0,
                field: FieldKind::Standard,
                seed: None,
                reference: false,
                cells: vec![[0, 0, 0], [2, 0, 0]],
                cost: 2.0,
            }],
        };
        assert!(matches!(bad.validate(), Err(Error::Schema { path, .. }) if path == "paths[0].cells[1]"));
    }
}
