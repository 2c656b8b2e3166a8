use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::load_scene;
use super::records::{AnchorsFile, PathRecord, PathsFile, TrajectoriesFile};
use crate::anchors::{proxy_body, ActionLabel, Anchor, PoseSource, ProxyBody};
use crate::error::{Error, Result};
use crate::geometry::resample_uniform;
use crate::metrics::{
    anchor_diversity, apd, contact, frechet_gaussian, non_collision, path_deviation_std, standardize_pooled,
    ClusterReport, DiversityMode, DEFAULT_CLUSTERS, DEFAULT_CONTACT_TAU, DEVIATION_FRACTIONS,
};
use crate::scene::{voxelize, UpAxis, VoxelGrid, DEFAULT_CELL_SIZE};
use crate::seed::derive_seed;
use crate::synth::SyntheticPosePrior;
use crate::trajectory::{Trajectory, DEFAULT_FRAMES};

/// Seed stage id for the per-action bodies used by the scene scores.
const BODY_STAGE: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub clusters: usize,
    pub seed: u64,
    pub fractions: [f64; 5],
    pub contact_tau: f64,
    /// Frames per trajectory after arc-length resampling for APD.
    pub apd_frames: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            clusters: DEFAULT_CLUSTERS,
            seed: 0,
            fractions: DEVIATION_FRACTIONS,
            contact_tau: DEFAULT_CONTACT_TAU,
            apd_frames: DEFAULT_FRAMES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub samples: usize,
    pub entropy: f64,
    pub mean_distance: f64,
}

impl From<&ClusterReport> for ClusterSummary {
    fn from(r: &ClusterReport) -> Self {
        ClusterSummary {
            samples: r.assignments.len(),
            entropy: r.entropy,
            mean_distance: r.mean_distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGroupDeviation {
    pub sequence: usize,
    pub pair: usize,
    pub samples: usize,
    pub std: [f64; 5],
}

/// The metrics JSON report. Metrics without usable input are `null` and
/// explained in `notes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: MetricsConfig,
    pub anchor_count: usize,
    pub anchor_diversity_full: Option<ClusterSummary>,
    pub anchor_diversity_position: Option<ClusterSummary>,
    pub path_deviation: Vec<PathGroupDeviation>,
    pub path_deviation_mean: Option<[f64; 5]>,
    pub apd: Option<f64>,
    pub frechet: Option<f64>,
    pub non_collision: Option<f64>,
    pub contact: Option<f64>,
    pub notes: Vec<String>,
}

/// Inputs to [`evaluate`]; every part is optional.
#[derive(Default)]
pub struct EvalData<'a> {
    pub anchors: Option<&'a [(Anchor, bool)]>,
    pub paths: Option<&'a PathsFile>,
    pub trajectories: Option<&'a [(usize, Trajectory)]>,
    pub reference_trajectories: Option<&'a [Trajectory]>,
    pub grid: Option<&'a VoxelGrid>,
}

/// One proxy body per action, posed from `poses`.
pub fn action_bodies(poses: &dyn PoseSource, seed: u64) -> Result<[ProxyBody; 5]> {
    let mut out = Vec::with_capacity(5);
    for a in ActionLabel::ALL {
        let theta = poses.sample_pose(a, derive_seed(seed, BODY_STAGE, a.index() as u64))?;
        out.push(proxy_body(&theta, a));
    }
    Ok(out.try_into().expect("five actions"))
}

fn frame_features(traj: &Trajectory) -> impl Iterator<Item = Vec<f64>> + '_ {
    traj.frames.iter().map(|f| f.t.iter().chain(&f.phi).copied().collect())
}

/// Computes every metric the inputs allow. With `strict`, too few anchors
/// for the cluster count is an error; otherwise the cluster metrics are
/// skipped with a note.
pub fn evaluate(
    data: &EvalData,
    bodies: &[ProxyBody; 5],
    config: &MetricsConfig,
    strict: bool,
) -> Result<MetricsReport> {
    let mut report = MetricsReport {
        config: *config,
        anchor_count: 0,
        anchor_diversity_full: None,
        anchor_diversity_position: None,
        path_deviation: Vec::new(),
        path_deviation_mean: None,
        apd: None,
        frechet: None,
        non_collision: None,
        contact: None,
        notes: Vec::new(),
    };

    if let Some(anchors) = data.anchors {
        report.anchor_count = anchors.len();
        let list: Vec<Anchor> = anchors.iter().map(|(a, _)| *a).collect();
        if anchors.len() < config.clusters && !strict {
            report.notes.push(format!(
                "anchor diversity skipped: {} anchors, fewer than K = {}",
                anchors.len(),
                config.clusters
            ));
        } else {
            let pos = anchor_diversity(&list, DiversityMode::Position, config.clusters, config.seed)?;
            report.anchor_diversity_position = Some((&pos).into());
            if anchors.iter().all(|(_, has_theta)| *has_theta) {
                let full = anchor_diversity(&list, DiversityMode::Full, config.clusters, config.seed)?;
                report.anchor_diversity_full = Some((&full).into());
            } else {
                report
                    .notes
                    .push("full anchor diversity skipped: some anchors have no pose".into());
            }
        }
    }

    if let Some(paths) = data.paths {
        // (sequence, pair) -> (reference, samples)
        type Group<'a> = (Option<&'a PathRecord>, Vec<&'a PathRecord>);
        let mut groups: BTreeMap<(usize, usize), Group> = BTreeMap::new();
        for p in &paths.paths {
            let g = groups.entry((p.sequence, p.pair)).or_default();
            if p.reference && g.0.is_none() {
                g.0 = Some(p);
            } else {
                g.1.push(p);
            }
        }
        for ((sequence, pair), (reference, samples)) in groups {
            if samples.len() < 2 {
                continue;
            }
            let reference = reference.unwrap_or(samples[0]).path();
            let sampled: Vec<_> = samples.iter().map(|p| p.path()).collect();
            let r = path_deviation_std(&sampled, &reference, paths.cell_size)?;
            report.path_deviation.push(PathGroupDeviation {
                sequence,
                pair,
                samples: sampled.len(),
                std: r.std,
            });
        }
        if report.path_deviation.is_empty() {
            report
                .notes
                .push("path deviation skipped: no group with two or more sampled paths".into());
        } else {
            let n = report.path_deviation.len() as f64;
            let mut mean = [0.0; 5];
            for g in &report.path_deviation {
                for (m, s) in mean.iter_mut().zip(&g.std) {
                    *m += s / n;
                }
            }
            report.path_deviation_mean = Some(mean);
        }
    }

    if let Some(trajs) = data.trajectories {
        let mut groups: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
        for (sequence, t) in trajs {
            let flat = resample_uniform(&t.positions(), config.apd_frames)
                .iter()
                .flat_map(|p| p.iter().copied().collect::<Vec<_>>())
                .collect();
            groups.entry(*sequence).or_default().push(flat);
        }
        let values: Vec<f64> = groups
            .values()
            .filter(|g| g.len() >= 2)
            .map(|g| apd(g))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            report
                .notes
                .push("apd skipped: no sequence with two or more trajectories".into());
        } else {
            report.apd = Some(values.iter().sum::<f64>() / values.len() as f64);
        }

        if let Some(reference) = data.reference_trajectories {
            let a: Vec<Vec<f64>> = trajs.iter().flat_map(|(_, t)| frame_features(t)).collect();
            let b: Vec<Vec<f64>> = reference.iter().flat_map(frame_features).collect();
            let (a, b) = standardize_pooled(&a, &b);
            report.frechet = Some(frechet_gaussian(&a, &b)?);
        }

        if let Some(grid) = data.grid {
            let (mut nc, mut ct) = (0.0, 0.0);
            for (_, t) in trajs {
                let per_frame: Vec<ProxyBody> = t.frames.iter().map(|f| bodies[f.action.index()].clone()).collect();
                nc += non_collision(t, &per_frame, grid)?;
                ct += contact(t, &per_frame, grid, config.contact_tau)?;
            }
            if !trajs.is_empty() {
                report.non_collision = Some(nc / trajs.len() as f64);
                report.contact = Some(ct / trajs.len() as f64);
            }
        }
    }
    Ok(report)
}

/// Files for the `eval` command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalInputs {
    pub anchors: Option<PathBuf>,
    pub paths: Option<PathBuf>,
    pub trajectories: Option<PathBuf>,
    pub reference_trajectories: Option<PathBuf>,
    /// Scene for the collision and contact scores.
    pub scene: Option<String>,
    pub up_axis: UpAxis,
    pub cell_size: Option<f64>,
}

/// Evaluates exported artifacts. Anchors without a pose fall back to the
/// position-only diversity mode; bodies for the scene scores come from the
/// synthetic pose prior.
pub fn cmd_eval(inputs: &EvalInputs, config: &MetricsConfig) -> Result<MetricsReport> {
    let anchors = match &inputs.anchors {
        Some(p) => Some(
            AnchorsFile::load(p)?
                .anchors
                .iter()
                .map(|r| (r.anchor(), r.theta.is_some()))
                .collect::<Vec<_>>(),
        ),
        None => None,
    };
    let paths = inputs.paths.as_ref().map(PathsFile::load).transpose()?;
    let load_trajs = |p: &PathBuf| -> Result<Vec<(usize, Trajectory)>> {
        Ok(TrajectoriesFile::load(p)?
            .trajectories
            .iter()
            .map(|r| (r.sequence, r.trajectory()))
            .collect())
    };
    let trajs = inputs.trajectories.as_ref().map(load_trajs).transpose()?;
    let reference: Option<Vec<Trajectory>> = inputs
        .reference_trajectories
        .as_ref()
        .map(|p| load_trajs(p).map(|v| v.into_iter().map(|(_, t)| t).collect()))
        .transpose()?;
    if reference.is_some() && trajs.is_none() {
        return Err(Error::InvalidArgument(
            "reference trajectories need --trajectories".into(),
        ));
    }
    let grid = match &inputs.scene {
        Some(s) => Some(voxelize(
            &load_scene(s, inputs.up_axis)?,
            inputs.cell_size.unwrap_or(DEFAULT_CELL_SIZE),
        )?),
        None => None,
    };
    let bodies = action_bodies(&SyntheticPosePrior, config.seed)?;
    let data = EvalData {
        anchors: anchors.as_deref(),
        paths: paths.as_ref(),
        trajectories: trajs.as_deref(),
        reference_trajectories: reference.as_deref(),
        grid: grid.as_ref(),
    };
    evaluate(&data, &bodies, config, true)
}
