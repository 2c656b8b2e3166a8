use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{load_scene, RunConfig};
use super::eval::{action_bodies, evaluate, EvalData, MetricsConfig, MetricsReport};
use super::io::{to_json, write_json};
use super::records::{AnchorRecord, AnchorsFile, PathRecord, PathsFile, TrajectoriesFile, TrajectoryRecord};
use crate::anchors::{
    optimize_anchor, place_anchor, refine_placement, Anchor, OptimizeConfig, PlaceRefiner, PlacedAnchor,
    PlacementSpace, PoseModel, PoseSource,
};
use crate::error::{Error, Result, Stage};
use crate::nn::CvaeModel;
use crate::planner::{
    astar, build_walkable, field_random, field_shared, field_standard, CostField, FieldKind, GridPath, MapperContext,
    MapperModel, WalkableMap, DEFAULT_HEIGHT, DEFAULT_RADIUS,
};
use crate::scene::{voxelize, TriangleMesh, VoxelGrid};
use crate::seed::derive_seed;
use crate::synth::SyntheticPosePrior;
use crate::trajectory::{
    optimize_trajectory, refine_path, split_path, stitch, RefineConfig, Trajectory, TrajectoryOptConfig, DEFAULT_FPS,
};

/// Stage ids mixed into [`derive_seed`]. Changing them changes every
/// derived seed, so they are fixed.
pub mod stage_ids {
    pub const POSE: u64 = 1;
    pub const PLACEMENT: u64 = 2;
    pub const REFINE: u64 = 3;
    pub const FIELD: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const TRAJECTORY: u64 = 6;
}

pub const ANCHORS_FILE: &str = "anchors.json";
pub const PATHS_FILE: &str = "paths.json";
pub const TRAJECTORIES_FILE: &str = "trajectories.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Seeds used by a run, in sample order. Anchor `i` of sequence `s` has
/// sample index `s * N + i`; path sample `p` of pair `j` of sequence `s`
/// has `(s * (N - 1) + j) * P + p`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub master: u64,
    pub poses: Vec<u64>,
    pub placements: Vec<u64>,
    pub fields: Vec<u64>,
    pub trajectories: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub seeds: RunSeeds,
    pub artifacts: Vec<String>,
    /// Wall-clock milliseconds per stage; the only non-reproducible field.
    pub timings_ms: BTreeMap<String, f64>,
}

/// In-memory results of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub anchors: Vec<Vec<PlacedAnchor>>,
    pub paths: Vec<PathRecord>,
    pub trajectories: Vec<(usize, usize, Trajectory)>,
    pub metrics: Option<MetricsReport>,
    pub seeds: RunSeeds,
    pub timings_ms: BTreeMap<String, f64>,
    pub cell_size: f64,
}

struct Models {
    pose: Box<dyn PoseSource>,
    refiner: Option<PlaceRefiner>,
    mapper: Option<MapperModel>,
}

fn check_basis(expected: Option<u64>, model: u64) -> Result<()> {
    match expected {
        Some(call) if call != model => Err(Error::BasisSeedMismatch { model, call }),
        _ => Ok(()),
    }
}

fn load_models(config: &RunConfig) -> Result<Models> {
    let pose: Box<dyn PoseSource> = match &config.models.pose {
        Some(p) => Box::new(PoseModel::new(CvaeModel::load(p)?)?),
        None => Box::new(SyntheticPosePrior),
    };
    let refiner = match (&config.models.refiner, config.stages.refine_anchors) {
        (Some(p), true) => {
            let r = PlaceRefiner::new(CvaeModel::load(p)?)?;
            check_basis(config.basis_seed, r.basis().seed())?;
            Some(r)
        }
        _ => None,
    };
    let mapper = match (&config.models.mapper, config.field) {
        (Some(p), FieldKind::Mapper) => {
            let m = MapperModel::new(CvaeModel::load(p)?)?;
            check_basis(config.basis_seed, m.basis().seed())?;
            Some(m)
        }
        _ => None,
    };
    Ok(Models { pose, refiner, mapper })
}

struct Timer(BTreeMap<String, f64>, Instant);

impl Timer {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.insert(stage.into(), (now - self.1).as_secs_f64() * 1e3);
        self.1 = now;
    }
}

fn place_sequences(
    config: &RunConfig,
    models: &Models,
    mesh: &TriangleMesh,
    grid: &VoxelGrid,
    space: &PlacementSpace,
    seeds: &mut RunSeeds,
) -> Result<Vec<Vec<PlacedAnchor>>> {
    let n = config.actions.len();
    let mut placed: Vec<Anchor> = Vec::new();
    let mut sequences = Vec::with_capacity(config.samples.anchors);
    for s in 0..config.samples.anchors {
        let mut seq = Vec::with_capacity(n);
        for (i, &action) in config.actions.iter().enumerate() {
            let idx = s * n + i;
            let stage = |e: Error| e.in_stage(Stage::Anchors, idx);
            let pose_seed = derive_seed(config.seed, stage_ids::POSE, idx as u64);
            let place_seed = derive_seed(config.seed, stage_ids::PLACEMENT, idx as u64);
            seeds.poses.push(pose_seed);
            seeds.placements.push(place_seed);
            let theta = models.pose.sample_pose(action, pose_seed).map_err(stage)?;
            let same: Vec<Anchor> = placed.iter().filter(|a| a.action == action).copied().collect();
            let mut p =
                place_anchor(&theta, action, grid, space, &same, &config.placement, place_seed).map_err(stage)?;
            if let Some(refiner) = &models.refiner {
                let seed = derive_seed(config.seed, stage_ids::REFINE, idx as u64);
                p.anchor = refine_placement(refiner, &p.anchor, grid, mesh, seed).map_err(stage)?;
            }
            if config.stages.optimize_anchors {
                p.anchor = optimize_anchor(&p.anchor, grid, &OptimizeConfig::default()).0;
            }
            placed.push(p.anchor);
            seq.push(p);
        }
        sequences.push(seq);
    }
    Ok(sequences)
}

/// Anchors farther than this (xy) from every walkable column cannot be
/// approached.
pub const APPROACH_RADIUS: f64 = 1.5;

fn anchor_column(map: &WalkableMap, anchor: &Anchor) -> Result<[usize; 2]> {
    map.nearest_walkable_within(&anchor.t, APPROACH_RADIUS)
        .ok_or(Error::NoApproach {
            point: [anchor.t.x, anchor.t.y, anchor.t.z],
            radius: APPROACH_RADIUS,
        })
}

#[allow(clippy::too_many_arguments)]
fn plan_paths(
    config: &RunConfig,
    models: &Models,
    mesh: &TriangleMesh,
    map: &WalkableMap,
    sequences: &[Vec<PlacedAnchor>],
    seeds: &mut RunSeeds,
) -> Result<Vec<PathRecord>> {
    let n = config.actions.len();
    let per_pair = config.samples.paths;
    let context = match &models.mapper {
        Some(m) => Some(MapperContext::new(m, map, mesh, m.basis().seed()).map_err(|e| e.in_stage(Stage::Planner, 0))?),
        None => None,
    };
    let mut out = Vec::new();
    for (s, seq) in sequences.iter().enumerate() {
        for pair in 0..n.saturating_sub(1) {
            let group = s * (n - 1) + pair;
            let stage = |e: Error| e.in_stage(Stage::Planner, group * per_pair);
            let start = anchor_column(map, &seq[pair].anchor).map_err(stage)?;
            let goal = anchor_column(map, &seq[pair + 1].anchor).map_err(stage)?;
            let reference = astar(map, start, goal, &field_standard()).map_err(stage)?;
            out.push(record(s, pair, 0, None, true, &field_standard(), reference));
            for p in 0..per_pair {
                let idx = group * per_pair + p;
                let stage = |e: Error| e.in_stage(Stage::Planner, idx);
                let seed = derive_seed(config.seed, stage_ids::FIELD, idx as u64);
                seeds.fields.push(seed);
                let field = match config.field {
                    FieldKind::Standard => field_standard(),
                    FieldKind::Random => field_random(map, seed),
                    FieldKind::Shared => field_shared(seed),
                    FieldKind::Mapper => {
                        let model = models.mapper.as_ref().expect("validated config has a mapper");
                        context
                            .as_ref()
                            .expect("built with the model")
                            .field(model, seed)
                            .map_err(stage)?
                    }
                };
                let path = astar(map, start, goal, &field).map_err(stage)?;
                out.push(record(s, pair, p, Some(seed), false, &field, path));
            }
        }
    }
    Ok(out)
}

fn record(
    sequence: usize,
    pair: usize,
    sample: usize,
    seed: Option<u64>,
    reference: bool,
    field: &CostField,
    path: GridPath,
) -> PathRecord {
    PathRecord {
        sequence,
        pair,
        sample,
        field: field.kind(),
        seed,
        reference,
        cells: path.cells,
        cost: path.cost,
    }
}

#[allow(clippy::too_many_arguments)]
fn build_trajectories(
    config: &RunConfig,
    models: &Models,
    grid: &VoxelGrid,
    map: &WalkableMap,
    sequences: &[Vec<PlacedAnchor>],
    paths: &[PathRecord],
    seeds: &mut RunSeeds,
) -> Result<Vec<(usize, usize, Trajectory)>> {
    let n = config.actions.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    let per_pair = config.samples.paths;
    let refine_cfg = RefineConfig {
        frames: config.frames,
        fps: DEFAULT_FPS,
        jitter_scale: config.jitter_scale,
        ..RefineConfig::default()
    };
    let opt_cfg = TrajectoryOptConfig::default();
    let lookup: BTreeMap<(usize, usize, usize), &PathRecord> = paths
        .iter()
        .filter(|p| !p.reference)
        .map(|p| ((p.sequence, p.pair, p.sample), p))
        .collect();
    let mut out = Vec::new();
    for (s, seq) in sequences.iter().enumerate() {
        for p in 0..per_pair {
            let mut pieces = Vec::new();
            for pair in 0..n - 1 {
                let idx = (s * (n - 1) + pair) * per_pair + p;
                let stage = |e: Error| e.in_stage(Stage::Trajectory, idx);
                let path = lookup[&(s, pair, p)].path();
                let split_seed = derive_seed(config.seed, stage_ids::SPLIT, idx as u64);
                let segments = split_path(
                    &path,
                    map,
                    &seq[pair].anchor,
                    &seq[pair + 1].anchor,
                    config.max_segment_length,
                    models.pose.as_ref(),
                    split_seed,
                )
                .map_err(stage)?;
                let traj_seed = derive_seed(config.seed, stage_ids::TRAJECTORY, idx as u64);
                seeds.trajectories.push(traj_seed);
                for (k, segment) in segments.iter().enumerate() {
                    let t = refine_path(segment, map, grid, derive_seed(traj_seed, 0, k as u64), &refine_cfg)
                        .map_err(stage)?;
                    let t = if config.stages.optimize_trajectory {
                        optimize_trajectory(&t, grid, &opt_cfg).0
                    } else {
                        t
                    };
                    pieces.push(t);
                }
            }
            let whole = stitch(&pieces).map_err(|e| e.in_stage(Stage::Trajectory, s * per_pair + p))?;
            out.push((s, p, whole));
        }
    }
    Ok(out)
}

/// Runs every enabled stage in memory.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut timer = Timer(BTreeMap::new(), Instant::now());
    let models = load_models(config)?;
    timer.lap("models");

    let scene_err = |e: Error| e.in_stage(Stage::Scene, 0);
    let mesh = load_scene(&config.scene, config.up_axis).map_err(scene_err)?;
    let grid = voxelize(&mesh, config.cell_size).map_err(scene_err)?;
    let space = PlacementSpace::new(&grid);
    timer.lap("scene");

    let mut seeds = RunSeeds {
        master: config.seed,
        ..RunSeeds::default()
    };
    let anchors = place_sequences(config, &models, &mesh, &grid, &space, &mut seeds)?;
    timer.lap("anchors");

    let plan = config.stages.plan && config.actions.len() > 1;
    let map = if plan {
        match space.walkable() {
            Some(m) => Some(m.clone()),
            None => {
                Some(build_walkable(&grid, DEFAULT_RADIUS, DEFAULT_HEIGHT).map_err(|e| e.in_stage(Stage::Planner, 0))?)
            }
        }
    } else {
        None
    };
    let paths = match &map {
        Some(map) => plan_paths(config, &models, &mesh, map, &anchors, &mut seeds)?,
        None => Vec::new(),
    };
    timer.lap("planner");

    let trajectories = match &map {
        Some(map) if config.stages.trajectory => {
            build_trajectories(config, &models, &grid, map, &anchors, &paths, &mut seeds)?
        }
        _ => Vec::new(),
    };
    timer.lap("trajectory");

    let metrics = if config.stages.metrics {
        let anchor_list: Vec<(Anchor, bool)> = anchors.iter().flatten().map(|p| (p.anchor, true)).collect();
        let paths_file = PathsFile {
            cell_size: config.cell_size,
            paths: paths.clone(),
        };
        let trajs: Vec<(usize, Trajectory)> = trajectories.iter().map(|(s, _, t)| (*s, t.clone())).collect();
        let data = EvalData {
            anchors: Some(&anchor_list),
            paths: plan.then_some(&paths_file),
            trajectories: (!trajs.is_empty()).then_some(&trajs[..]),
            reference_trajectories: None,
            grid: Some(&grid),
        };
        let bodies = action_bodies(models.pose.as_ref(), config.seed).map_err(|e| e.in_stage(Stage::Metrics, 0))?;
        let metrics_cfg = MetricsConfig {
            clusters: config.clusters,
            seed: config.seed,
            ..MetricsConfig::default()
        };
        Some(evaluate(&data, &bodies, &metrics_cfg, false).map_err(|e| e.in_stage(Stage::Metrics, 0))?)
    } else {
        None
    };
    timer.lap("metrics");

    Ok(RunOutput {
        anchors,
        paths,
        trajectories,
        metrics,
        seeds,
        timings_ms: timer.0,
        cell_size: config.cell_size,
    })
}

impl RunOutput {
    pub fn anchors_file(&self) -> AnchorsFile {
        AnchorsFile {
            anchors: self
                .anchors
                .iter()
                .enumerate()
                .flat_map(|(s, seq)| {
                    seq.iter()
                        .enumerate()
                        .map(move |(i, p)| AnchorRecord::from_placed(s, i, p))
                })
                .collect(),
        }
    }

    pub fn paths_file(&self) -> PathsFile {
        PathsFile {
            cell_size: self.cell_size,
            paths: self.paths.clone(),
        }
    }

    pub fn trajectories_file(&self) -> TrajectoriesFile {
        TrajectoriesFile {
            trajectories: self
                .trajectories
                .iter()
                .map(|(s, p, t)| TrajectoryRecord::from_trajectory(*s, *p, t))
                .collect(),
        }
    }

    /// Serialized artifacts as `(file name, contents)` in write order.
    pub fn artifacts(&self, config: &RunConfig) -> Result<Vec<(&'static str, String)>> {
        let mut out = vec![(ANCHORS_FILE, to_json(&self.anchors_file())?)];
        if config.stages.plan && config.actions.len() > 1 {
            out.push((PATHS_FILE, to_json(&self.paths_file())?));
            if config.stages.trajectory {
                out.push((TRAJECTORIES_FILE, to_json(&self.trajectories_file())?));
            }
        }
        if let Some(m) = &self.metrics {
            out.push((METRICS_FILE, to_json(m)?));
        }
        Ok(out)
    }
}

fn write_all(dir: &Path, files: &[(&str, String)], manifest: &RunManifest, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in files {
        let path = dir.join(name);
        written.push(path.clone());
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    written.push(path.clone());
    write_json(&path, manifest)
}

/// Runs the pipeline and writes its artifacts and manifest to
/// `config.out`. On failure no artifacts of this run are left behind.
pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest> {
    let output = execute(config)?;
    let files = output.artifacts(config).map_err(|e| e.in_stage(Stage::Export, 0))?;
    let mut artifacts: Vec<String> = files.iter().map(|(n, _)| n.to_string()).collect();
    artifacts.push(MANIFEST_FILE.into());
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seeds: output.seeds,
        artifacts,
        timings_ms: output.timings_ms,
    };
    let mut written = Vec::new();
    if let Err(e) = write_all(&config.out, &files, &manifest, &mut written) {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        return Err(e.in_stage(Stage::Export, 0));
    }
    Ok(manifest)
}
