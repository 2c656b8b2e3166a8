//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails. Criteria run one after another so the
//! wall-clock budgets are measured without contention.

use std::cell::OnceCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scenemotion::anchors::{
    place_anchor, sample_pose, ActionLabel, Anchor, PlacementConfig, PlacementSpace, PoseModel, PoseSource,
};
use scenemotion::geometry::yaw_to_6d;
use scenemotion::metrics::{apd, frechet_gaussian, kmeans, path_deviation_std};
use scenemotion::nn::{check_cvae_gradients, CvaeModel, Sample};
use scenemotion::pipeline::{
    run_pipeline, train_model, RunConfig, RunManifest, SampleCounts, TrainOptions, TrainTarget, MANIFEST_FILE,
};
use scenemotion::planner::{
    astar, build_walkable, field_random, field_standard, FieldKind, GridPath, MapperContext, MapperModel, WalkableMap,
    DEFAULT_HEIGHT, DEFAULT_RADIUS, DIRECTIONS,
};
use scenemotion::scene::{rooms, voxelize, TriangleMesh, VoxelGrid};
use scenemotion::synth::{nearest_component, SyntheticPosePrior};
use scenemotion::trajectory::{
    energy_gradient, optimize_trajectory, refine_path, trajectory_energy, PathSegment, RefineConfig,
    TrajectoryOptConfig,
};
use scenemotion::Vec3;

const TRAIN_SEED: u64 = 2024;
const PLANNER_BUDGET: Duration = Duration::from_secs(5);
const MAPPER_BUDGET: Duration = Duration::from_secs(30);
const POSE_BUDGET: Duration = Duration::from_secs(60);
const PIPELINE_BUDGET: Duration = Duration::from_secs(60);
const GRAD_TOLERANCE: f64 = 1e-4;
const TRAJ_GRAD_TOLERANCE: f64 = 1e-3;
const MAPPER_EPOCHS: usize = 10;
const POSE_PER_ACTION: usize = 100;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn(&Fixtures) -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Room {
    mesh: TriangleMesh,
    grid: VoxelGrid,
    map: WalkableMap,
}

impl Room {
    fn new(mesh: TriangleMesh) -> Self {
        let grid = voxelize(&mesh, 0.25).expect("fixture voxelizes");
        let map = build_walkable(&grid, DEFAULT_RADIUS, DEFAULT_HEIGHT).expect("fixture has floor");
        Room { mesh, grid, map }
    }

    /// The two walkable columns farthest apart along x, on the middle row
    /// band; fixed anchors for the path criteria.
    fn fixed_endpoints(&self) -> ([usize; 2], [usize; 2]) {
        let cols: Vec<[usize; 2]> = self.map.walkable_columns().collect();
        let key = |c: &[usize; 2]| (c[0] as i64 - 2).abs() + (c[1] as i64 - 2).abs();
        let start = *cols.iter().min_by_key(|c| key(c)).unwrap();
        let [nx, ny] = self.map.dims();
        let far = |c: &[usize; 2]| (c[0] as i64 - nx as i64 + 3).abs() + (c[1] as i64 - ny as i64 + 3).abs();
        let goal = *cols.iter().min_by_key(|c| far(c)).unwrap();
        (start, goal)
    }
}

#[derive(Default)]
struct Fixtures {
    test_room: OnceCell<Room>,
    pose: OnceCell<(PoseModel, Duration)>,
    mapper: OnceCell<(MapperModel, Duration)>,
    refiner: OnceCell<CvaeModel>,
}

impl Fixtures {
    fn test_room(&self) -> &Room {
        self.test_room.get_or_init(|| Room::new(rooms::test_room()))
    }

    fn pose(&self) -> &(PoseModel, Duration) {
        self.pose.get_or_init(|| {
            let t = Instant::now();
            let mut opts = TrainOptions::new(TrainTarget::Pose, TRAIN_SEED);
            opts.pose_per_action = POSE_PER_ACTION;
            let trained = train_model(&opts).expect("pose training");
            (PoseModel::new(trained.model).unwrap(), t.elapsed())
        })
    }

    fn mapper(&self) -> &(MapperModel, Duration) {
        self.mapper.get_or_init(|| {
            let t = Instant::now();
            let mut opts = TrainOptions::new(TrainTarget::Mapper, TRAIN_SEED);
            opts.epochs = MAPPER_EPOCHS;
            let trained = train_model(&opts).expect("mapper training");
            (MapperModel::new(trained.model).unwrap(), t.elapsed())
        })
    }

    fn refiner(&self) -> &CvaeModel {
        self.refiner.get_or_init(|| {
            train_model(&TrainOptions::new(TrainTarget::Refiner, TRAIN_SEED))
                .expect("refiner training")
                .model
        })
    }
}

// ---------------------------------------------------------------------------
// 1. A* with m = 1 against an exact Dijkstra

/// A path cost `axial + diagonal * sqrt(2)` kept as integers so that
/// comparisons are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ExactCost {
    axial: i64,
    diagonal: i64,
}

impl ExactCost {
    fn value(self) -> f64 {
        self.axial as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }
}

impl Ord for ExactCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of p + q * sqrt(2)
        let p = self.axial - other.axial;
        let q = self.diagonal - other.diagonal;
        let sign = |v: i64| v.cmp(&0);
        match (sign(p), sign(q)) {
            (a, b) if a == b => a,
            (Ordering::Equal, b) => b,
            (a, Ordering::Equal) => a,
            (a, _) => {
                let l = p * p;
                let r = 2 * q * q;
                if a == Ordering::Greater {
                    l.cmp(&r)
                } else {
                    r.cmp(&l)
                }
            }
        }
    }
}

impl PartialOrd for ExactCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(map: &WalkableMap, start: [usize; 2], goal: [usize; 2]) -> Option<ExactCost> {
    let [nx, ny] = map.dims();
    let mut best: Vec<Option<ExactCost>> = vec![None; nx * ny];
    let mut heap = BinaryHeap::new();
    let zero = ExactCost { axial: 0, diagonal: 0 };
    best[map.index(start)] = Some(zero);
    heap.push(std::cmp::Reverse((zero, map.index(start))));
    while let Some(std::cmp::Reverse((d, idx))) = heap.pop() {
        if best[idx] != Some(d) {
            continue;
        }
        let c = map.column(idx);
        if c == goal {
            return Some(d);
        }
        for (k, dir) in DIRECTIONS.iter().enumerate() {
            let (i, j) = (c[0] as i64 + dir[0], c[1] as i64 + dir[1]);
            if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                continue;
            }
            let q = [i as usize, j as usize];
            if !map.is_walkable(q) {
                continue;
            }
            let mut nd = d;
            if k % 2 == 0 {
                nd.axial += 1;
            } else {
                nd.diagonal += 1;
            }
            let qi = map.index(q);
            if best[qi].is_none_or(|b| nd < b) {
                best[qi] = Some(nd);
                heap.push(std::cmp::Reverse((nd, qi)));
            }
        }
    }
    None
}

fn criterion_1(_: &Fixtures) -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut solved = 0;
    for m in 0..50 {
        let nx = rng.random_range(4..=32);
        let ny = rng.random_range(4..=32);
        let density = rng.random_range(0.0..0.35);
        let mask: Vec<bool> = (0..nx * ny).map(|_| rng.random::<f64>() >= density).collect();
        let map = WalkableMap::from_mask(nx, ny, 0.25, mask).map_err(err)?;
        let cols: Vec<[usize; 2]> = map.walkable_columns().collect();
        ensure(cols.len() >= 2, format!("map {m} has fewer than two walkable cells"))?;
        let s = cols[rng.random_range(0..cols.len())];
        let g = cols[rng.random_range(0..cols.len())];
        match (astar(&map, s, g, &field_standard()), dijkstra(&map, s, g)) {
            (Ok(path), Some(d)) => {
                ensure(
                    path.cost == d.value(),
                    format!("map {m}: astar {} != dijkstra {}", path.cost, d.value()),
                )?;
                solved += 1;
            }
            (Err(_), None) => {}
            (a, d) => return Err(format!("map {m}: astar {:?} vs dijkstra {:?}", a.map(|p| p.cost), d)),
        }
    }
    let el = t.elapsed();
    ensure(el < PLANNER_BUDGET, format!("took {el:?}"))?;
    Ok(format!("50 maps ({solved} connected) exact match in {el:.2?}"))
}

// ---------------------------------------------------------------------------
// 2. Standard A* is deterministic

fn criterion_2(fx: &Fixtures) -> Check {
    let room = fx.test_room();
    let (s, g) = room.fixed_endpoints();
    let reference = astar(&room.map, s, g, &field_standard()).map_err(err)?;
    let runs: Vec<GridPath> = (0..100)
        .map(|_| astar(&room.map, s, g, &field_standard()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let report = path_deviation_std(&runs, &reference, room.map.cell_size()).map_err(err)?;
    ensure(report.std == [0.0; 5], format!("std {:?}", report.std))?;
    Ok(format!("std {:?}", report.std))
}

// ---------------------------------------------------------------------------
// 3. Mapper paths are diverse and walkable

fn mapper_paths(fx: &Fixtures, episodes: u64) -> Result<Vec<GridPath>, String> {
    let room = fx.test_room();
    let (model, _) = fx.mapper();
    let (s, g) = room.fixed_endpoints();
    let ctx = MapperContext::new(model, &room.map, &room.mesh, model.basis().seed()).map_err(err)?;
    (0..episodes)
        .map(|k| astar(&room.map, s, g, &ctx.field(model, 1000 + k).map_err(err)?).map_err(err))
        .collect()
}

fn criterion_3(fx: &Fixtures) -> Check {
    let (_, train_time) = fx.mapper();
    let t = Instant::now();
    let room = fx.test_room();
    let (s, g) = room.fixed_endpoints();
    let reference = astar(&room.map, s, g, &field_standard()).map_err(err)?;
    let paths = mapper_paths(fx, 100)?;
    let report = path_deviation_std(&paths, &reference, room.map.cell_size()).map_err(err)?;
    let cells = paths.iter().map(|p| p.cells.len()).sum::<usize>();
    let bad = paths
        .iter()
        .flat_map(|p| p.columns())
        .filter(|&c| !room.map.is_walkable(c))
        .count();
    let el = t.elapsed() + *train_time;
    ensure(report.std.iter().all(|&v| v > 0.0), format!("std {:?}", report.std))?;
    ensure(bad == 0, format!("{bad} of {cells} path cells not walkable"))?;
    ensure(el < MAPPER_BUDGET, format!("took {el:?}"))?;
    Ok(format!(
        "std {:.3?} m, {cells} cells all walkable, {el:.2?} including {train_time:.2?} training",
        report.std
    ))
}

// ---------------------------------------------------------------------------
// 4. Mapper paths turn less than random-field paths

fn mean_heading_change(path: &GridPath) -> f64 {
    let cols: Vec<[usize; 2]> = path.columns().collect();
    let dirs: Vec<f64> = cols
        .windows(2)
        .map(|w| (w[1][1] as f64 - w[0][1] as f64).atan2(w[1][0] as f64 - w[0][0] as f64))
        .collect();
    if dirs.len() < 2 {
        return 0.0;
    }
    let total: f64 = dirs
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]).rem_euclid(std::f64::consts::TAU);
            d.min(std::f64::consts::TAU - d)
        })
        .sum();
    total / (dirs.len() - 1) as f64
}

/// One-sided sign test: `P(X >= wins)` for `X ~ Binomial(n, 1/2)`.
fn sign_test(wins: usize, n: usize) -> f64 {
    let mut p = 0.0;
    let mut c = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            c *= (n - k + 1) as f64 / k as f64;
        }
        if k >= wins {
            p += c;
        }
    }
    p / 2f64.powi(n as i32)
}

fn criterion_4(fx: &Fixtures) -> Check {
    let room = fx.test_room();
    let (model, _) = fx.mapper();
    let ctx = MapperContext::new(model, &room.map, &room.mesh, model.basis().seed()).map_err(err)?;
    let cols: Vec<[usize; 2]> = room.map.walkable_columns().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut wins, mut losses) = (0, 0);
    let (mut sum_m, mut sum_r) = (0.0, 0.0);
    let mut episodes = 0;
    while episodes < 100 {
        let s = cols[rng.random_range(0..cols.len())];
        let g = cols[rng.random_range(0..cols.len())];
        if (s[0] as f64 - g[0] as f64).hypot(s[1] as f64 - g[1] as f64) < 8.0 {
            continue;
        }
        let seed = 5000 + episodes as u64;
        let pm = astar(&room.map, s, g, &ctx.field(model, seed).map_err(err)?).map_err(err)?;
        let pr = astar(&room.map, s, g, &field_random(&room.map, seed)).map_err(err)?;
        let (hm, hr) = (mean_heading_change(&pm), mean_heading_change(&pr));
        sum_m += hm;
        sum_r += hr;
        match hm.partial_cmp(&hr) {
            Some(Ordering::Less) => wins += 1,
            Some(Ordering::Greater) => losses += 1,
            _ => {}
        }
        episodes += 1;
    }
    let p = sign_test(wins, wins + losses);
    ensure(
        p < 0.05,
        format!("mapper lower in {wins}, higher in {losses}: p = {p:.3e}"),
    )?;
    Ok(format!(
        "mean heading change {:.3} vs {:.3} rad; {wins} wins / {losses} losses, p = {p:.2e}",
        sum_m / 100.0,
        sum_r / 100.0
    ))
}

// ---------------------------------------------------------------------------
// 5. Gradient checks

fn random_samples(model: &CvaeModel, one_hot: bool, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    let batch = rng.random_range(1..=6);
    (0..batch)
        .map(|_| Sample {
            input: (0..model.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            condition: if one_hot {
                let hot = rng.random_range(0..model.condition_dim());
                (0..model.condition_dim())
                    .map(|i| if i == hot { 1.0 } else { 0.0 })
                    .collect()
            } else {
                (0..model.condition_dim()).map(|_| rng.random_range(0.0..1.5)).collect()
            },
        })
        .collect()
}

/// Trajectory with every coordinate at least `margin` cells away from the
/// interpolation lattice of cell centres.
fn off_lattice_points(grid: &VoxelGrid, n: usize, margin: f64, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let o = grid.origin();
    let cs = grid.cell_size();
    let dims = grid.dims();
    let mut pick = |a: usize, lo: usize, hi: usize| {
        let i = rng.random_range(lo..hi) as f64;
        let f = rng.random_range(margin..1.0 - margin);
        o[a] + (i + 0.5 + f) * cs
    };
    (0..n)
        .map(|_| {
            Vec3::new(
                pick(0, 1, dims[0] - 2),
                pick(1, 1, dims[1] - 2),
                pick(2, 1, dims[2].min(8) - 2),
            )
        })
        .collect()
}

fn criterion_5(fx: &Fixtures) -> Check {
    let nets: [(&str, &CvaeModel, bool); 3] = [
        ("pose", fx.pose().0.cvae(), true),
        ("mapper", fx.mapper().0.cvae(), false),
        ("refiner", fx.refiner(), false),
    ];
    let mut worst = Vec::new();
    for (name, model, one_hot) in nets {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut max_err: f64 = 0.0;
        for config in 0..20u64 {
            let data = random_samples(model, one_hot, &mut rng);
            let e = check_cvae_gradients(model, &data, 1.0, 64, 100 + config).map_err(err)?;
            max_err = max_err.max(e);
        }
        ensure(max_err < GRAD_TOLERANCE, format!("{name} relative error {max_err:.2e}"))?;
        worst.push(format!("{name} {max_err:.1e}"));
    }

    let room = fx.test_room();
    let cfg = TrajectoryOptConfig::default();
    let margin = 0.25 + 0.05;
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let mut traj_err: f64 = 0.0;
    let mut active = 0;
    for _ in 0..20 {
        let pts = off_lattice_points(&room.grid, 12, margin, &mut rng);
        let g = energy_gradient(&pts, &room.grid, &cfg);
        for i in 1..pts.len() - 1 {
            let slack = cfg.clearance - room.grid.sdf_at(&pts[i]);
            if slack.abs() < 1e-3 {
                continue;
            }
            if slack > 0.0 {
                active += 1;
            }
            for a in 0..3 {
                let mut hi = pts.clone();
                let mut lo = pts.clone();
                hi[i][a] += h;
                lo[i][a] -= h;
                let fd = (trajectory_energy(&hi, &room.grid, &cfg).total
                    - trajectory_energy(&lo, &room.grid, &cfg).total)
                    / (2.0 * h);
                let rel = (g[i][a] - fd).abs() / g[i][a].abs().max(fd.abs()).max(1.0);
                traj_err = traj_err.max(rel);
            }
        }
    }
    ensure(active > 0, "no frame had an active clearance term")?;
    ensure(
        traj_err < TRAJ_GRAD_TOLERANCE,
        format!("trajectory gradient error {traj_err:.2e}"),
    )?;
    worst.push(format!("trajectory {traj_err:.1e} ({active} active clearance frames)"));
    Ok(format!("max relative error: {}", worst.join(", ")))
}

// ---------------------------------------------------------------------------
// 6. Pose CVAE respects its condition

fn criterion_6(fx: &Fixtures) -> Check {
    let (model, train_time) = fx.pose();
    let t = Instant::now();
    let mut correct = 0;
    for i in 0..500u64 {
        let action = ActionLabel::ALL[(i % 5) as usize];
        let pose = sample_pose(model, action, 90_000 + i).map_err(err)?;
        if nearest_component(&pose) == action {
            correct += 1;
        }
    }
    let el = t.elapsed() + *train_time;
    ensure(correct >= 450, format!("{correct}/500 nearest to the conditioned mean"))?;
    ensure(el < POSE_BUDGET, format!("took {el:?}"))?;
    Ok(format!("{correct}/500 correct in {el:.2?} including training"))
}

// ---------------------------------------------------------------------------
// 7. The diversity penalty moves the second sit anchor

fn seat_of(a: &Anchor) -> i8 {
    if a.t.x < 3.0 {
        0
    } else {
        1
    }
}

fn criterion_7(_: &Fixtures) -> Check {
    let room = Room::new(rooms::two_seats_room());
    let space = PlacementSpace::new(&room.grid);
    let on = PlacementConfig::default();
    let off = PlacementConfig {
        diversity_enabled: false,
        ..on
    };
    let (mut alt_on, mut alt_off) = (0, 0);
    for seed in 0..100u64 {
        let pose1 = SyntheticPosePrior
            .sample_pose(ActionLabel::Sit, 7_000 + seed)
            .map_err(err)?;
        let pose2 = SyntheticPosePrior
            .sample_pose(ActionLabel::Sit, 8_000 + seed)
            .map_err(err)?;
        let first = place_anchor(&pose1, ActionLabel::Sit, &room.grid, &space, &[], &on, 2 * seed).map_err(err)?;
        let placed = [first.anchor];
        for (cfg, count) in [(&on, &mut alt_on), (&off, &mut alt_off)] {
            let second =
                place_anchor(&pose2, ActionLabel::Sit, &room.grid, &space, &placed, cfg, 2 * seed + 1).map_err(err)?;
            if seat_of(&second.anchor) != seat_of(&first.anchor) {
                *count += 1;
            }
        }
    }
    ensure(
        alt_on >= 90 && alt_on > alt_off,
        format!("alternate seat: penalty on {alt_on}/100, off {alt_off}/100"),
    )?;
    Ok(format!("alternate seat: penalty on {alt_on}/100, off {alt_off}/100"))
}

// ---------------------------------------------------------------------------
// 8. Metric closed forms

fn criterion_8(_: &Fixtures) -> Check {
    let points: Vec<Vec<f64>> = (0..20)
        .flat_map(|c| (0..5).map(move |i| vec![100.0 * c as f64 + 0.01 * i as f64, 0.0]))
        .collect();
    let report = kmeans(&points, 20, 3, 100).map_err(err)?;
    let h = report.entropy;
    ensure((h - 20f64.ln()).abs() < 1e-9, format!("entropy {h} vs ln 20"))?;

    let a = vec![vec![-1.0], vec![0.0], vec![1.0]];
    let b = vec![vec![0.0], vec![1.0], vec![2.0]];
    let fd = frechet_gaussian(&a, &b).map_err(err)?;
    ensure((fd - 1.0).abs() < 1e-6, format!("1D Frechet distance {fd}"))?;

    let d = apd(&[vec![0.0], vec![1.0], vec![2.0]]).map_err(err)?;
    ensure(d == 4.0 / 3.0, format!("apd {d}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..6).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let self_fd = frechet_gaussian(&x, &x).map_err(err)?;
    ensure(self_fd.abs() < 1e-8, format!("FD(A, A) = {self_fd:e}"))?;
    Ok(format!(
        "entropy - ln 20 = {:.1e}, FD = {fd}, apd = {d}, FD(A, A) = {self_fd:.1e}",
        h - 20f64.ln()
    ))
}

// ---------------------------------------------------------------------------
// 9. Trajectory contracts

fn walk_anchor(map: &WalkableMap, c: [usize; 2], yaw: f64, action: ActionLabel, rng: &mut ChaCha8Rng) -> Anchor {
    let p = map.walk_point(c).expect("walkable column");
    let cs = map.cell_size();
    let offset = Vec3::new(rng.random_range(-0.3..0.3) * cs, rng.random_range(-0.3..0.3) * cs, 0.0);
    Anchor {
        t: p + offset,
        phi: yaw_to_6d(yaw),
        theta: SyntheticPosePrior
            .sample_pose(action, rng.random())
            .expect("prior samples"),
        action,
    }
}

fn criterion_9(fx: &Fixtures) -> Check {
    let room = fx.test_room();
    let cols: Vec<[usize; 2]> = room.map.walkable_columns().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let refine_cfg = RefineConfig::default();
    let opt_cfg = TrajectoryOptConfig::default();
    let (mut max_end, mut min_sdf, mut accepted_steps) = (0.0f64, f64::INFINITY, 0);
    for seg_idx in 0..50u64 {
        let (s, g) = loop {
            let s = cols[rng.random_range(0..cols.len())];
            let g = cols[rng.random_range(0..cols.len())];
            if s != g {
                break (s, g);
            }
        };
        let path = astar(&room.map, s, g, &field_random(&room.map, seg_idx)).map_err(err)?;
        let segment = PathSegment {
            cells: path.cells.clone(),
            start: walk_anchor(&room.map, s, rng.random_range(-3.0..3.0), ActionLabel::Stand, &mut rng),
            end: walk_anchor(&room.map, g, rng.random_range(-3.0..3.0), ActionLabel::Walk, &mut rng),
        };
        let traj = refine_path(&segment, &room.map, &room.grid, 300 + seg_idx, &refine_cfg).map_err(err)?;
        let (opt, trace) = optimize_trajectory(&traj, &room.grid, &opt_cfg);
        for t in [&traj, &opt] {
            let first = t.frames[0].t;
            let last = t.frames[t.len() - 1].t;
            max_end = max_end
                .max((first - segment.start.t).norm())
                .max((last - segment.end.t).norm());
            for f in &t.frames {
                min_sdf = min_sdf.min(room.grid.sdf_at(&f.t));
            }
        }
        ensure(
            trace.windows(2).all(|w| w[1] <= w[0]),
            format!("segment {seg_idx}: objective increased"),
        )?;
        accepted_steps += trace.len() - 1;
    }
    ensure(max_end <= 1e-9, format!("endpoint error {max_end:e}"))?;
    ensure(min_sdf >= 0.0, format!("min sdf {min_sdf}"))?;
    Ok(format!(
        "endpoint error {max_end:.1e}, min sdf {min_sdf:.3}, {accepted_steps} monotone optimizer steps"
    ))
}

// ---------------------------------------------------------------------------
// 10. End-to-end determinism on a large grid

fn artifact_bytes(dir: &Path, manifest: &RunManifest) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for name in &manifest.artifacts {
        if name == MANIFEST_FILE {
            let mut m = manifest.clone();
            m.timings_ms.clear();
            m.config.out = Default::default();
            out.push((name.clone(), serde_json::to_vec(&m).map_err(err)?));
        } else {
            out.push((name.clone(), std::fs::read(dir.join(name)).map_err(err)?));
        }
    }
    Ok(out)
}

fn criterion_10(fx: &Fixtures) -> Check {
    let (model, _) = fx.mapper();
    let dir = tempfile::tempdir().map_err(err)?;
    let checkpoint = dir.path().join("mapper.json");
    model.cvae().save(&checkpoint).map_err(err)?;

    let mut runs = Vec::new();
    let mut first_time = Duration::ZERO;
    let mut grid_dims = [0; 3];
    for r in 0..2 {
        let mut config = RunConfig::new("builtin:large-room", vec![ActionLabel::Sit, ActionLabel::Stand]);
        config.samples = SampleCounts::uniform(10);
        config.field = FieldKind::Mapper;
        config.models.mapper = Some(checkpoint.clone());
        config.seed = 10;
        config.out = dir.path().join(format!("run{r}"));
        let t = Instant::now();
        let manifest = run_pipeline(&config).map_err(err)?;
        if r == 0 {
            first_time = t.elapsed();
            grid_dims = voxelize(&rooms::large_room(), config.cell_size).map_err(err)?.dims();
        }
        runs.push(artifact_bytes(&config.out, &manifest)?);
    }
    ensure(grid_dims == [64, 64, 32], format!("grid {grid_dims:?}"))?;
    ensure(first_time < PIPELINE_BUDGET, format!("took {first_time:?}"))?;
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        ensure(a == b, format!("{name} differs between runs"))?;
    }
    let total: usize = runs[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "grid {grid_dims:?}, {first_time:.2?}, {} artifacts ({total} bytes) byte-identical",
        runs[0].len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("planner optimality oracle", criterion_1),
        ("standard A* deviation is zero", criterion_2),
        ("mapper path diversity", criterion_3),
        ("mapper coherence ordering", criterion_4),
        ("gradient checks", criterion_5),
        ("pose CVAE conditioning", criterion_6),
        ("diversity penalty", criterion_7),
        ("metric closed forms", criterion_8),
        ("trajectory contracts", criterion_9),
        ("end-to-end determinism and budget", criterion_10),
    ];
    let fixtures = Fixtures::default();
    let mut failed = 0;
    let mut out = std::io::stdout().lock();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (status, detail) = match check(&fixtures) {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        writeln!(out, "[{status}] {:>2}. {name}: {detail} [{:.1?}]", i + 1, t.elapsed()).unwrap();
        out.flush().unwrap();
    }
    writeln!(out, "acceptance: {} passed, {failed} failed", criteria.len() - failed).unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
