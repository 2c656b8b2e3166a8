use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scenemotion::anchors::ActionLabel;
use scenemotion::error::Stage;
use scenemotion::pipeline::{
    cmd_eval, cmd_train, export_obj, run_pipeline, to_json, EvalInputs, MetricsConfig, ObjExport, RunConfig,
    SampleCounts, TrainOptions, TrainTarget,
};
use scenemotion::planner::FieldKind;
use scenemotion::scene::UpAxis;
use scenemotion::Error;

#[derive(Parser)]
#[command(name = "scenemotion", version, about = "Diverse scene-aware motion planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Place anchors, plan paths, refine trajectories and evaluate.
    Run(RunArgs),
    /// Train a model on seeded synthetic data.
    Train(TrainArgs),
    /// Compute metrics over exported artifacts.
    Eval(EvalArgs),
    /// Write the scene and trajectories to an OBJ file for inspection.
    ExportObj(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// OBJ file or `builtin:<name>` (test-room, two-seats, walled-off, large-room).
    #[arg(long)]
    scene: Option<String>,
    /// Comma-separated action sequence, e.g. `sit,stand`.
    #[arg(long, value_delimiter = ',')]
    actions: Option<Vec<ActionLabel>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Anchor sequences and paths per anchor pair.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    cell_size: Option<f64>,
    /// standard, random, shared or mapper.
    #[arg(long)]
    field: Option<FieldKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    up_axis: Option<UpAxis>,
    #[arg(long)]
    pose_model: Option<PathBuf>,
    #[arg(long)]
    mapper_model: Option<PathBuf>,
    /// Enables anchor refinement with this checkpoint.
    #[arg(long)]
    refiner_model: Option<PathBuf>,
    #[arg(long)]
    no_trajectory: bool,
    #[arg(long)]
    no_metrics: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// pose, refiner or mapper.
    what: TrainTarget,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path; the loss trace goes next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    basis_seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    anchors: Option<PathBuf>,
    #[arg(long)]
    paths: Option<PathBuf>,
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// Reference trajectories for the Fréchet distance.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Scene for the collision and contact scores.
    #[arg(long)]
    scene: Option<String>,
    #[arg(long, default_value = "z")]
    up_axis: UpAxis,
    #[arg(long)]
    cell_size: Option<f64>,
    /// Number of k-means clusters.
    #[arg(long, default_value_t = 20)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    scene: Option<String>,
    #[arg(long, default_value = "z")]
    up_axis: UpAxis,
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// Draw proxy-body capsules every N frames (0 = none).
    #[arg(long, default_value_t = 0)]
    capsules: usize,
    #[arg(long)]
    out: PathBuf,
}

fn run_config(args: RunArgs) -> scenemotion::Result<RunConfig> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let scene = args
                .scene
                .clone()
                .ok_or_else(|| Error::InvalidArgument("--scene is required without --config".into()))?;
            RunConfig::new(scene, Vec::new())
        }
    };
    if let Some(v) = args.scene {
        config.scene = v;
    }
    if let Some(v) = args.actions {
        config.actions = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.samples {
        config.samples = SampleCounts::uniform(v);
    }
    if let Some(v) = args.cell_size {
        config.cell_size = v;
    }
    if let Some(v) = args.field {
        config.field = v;
    }
    if let Some(v) = args.out {
        config.out = v;
    }
    if let Some(v) = args.up_axis {
        config.up_axis = v;
    }
    if let Some(v) = args.pose_model {
        config.models.pose = Some(v);
    }
    if let Some(v) = args.mapper_model {
        config.models.mapper = Some(v);
    }
    if let Some(v) = args.refiner_model {
        config.models.refiner = Some(v);
        config.stages.refine_anchors = true;
    }
    if args.no_trajectory {
        config.stages.trajectory = false;
    }
    if args.no_metrics {
        config.stages.metrics = false;
    }
    config.validate()?;
    Ok(config)
}

/// 2 config, 3 scene, 4 planning infeasible, 5 training failure, 1 other.
fn exit_code(err: &Error) -> u8 {
    if let Error::Stage {
        stage: Stage::Scene, ..
    } = err
    {
        return 3;
    }
    match err.root() {
        Error::InvalidArgument(_)
        | Error::Schema { .. }
        | Error::Json(_)
        | Error::ModelMismatch(_)
        | Error::BasisSeedMismatch { .. }
        | Error::DimensionMismatch { .. }
        | Error::TooFewPoints { .. }
        | Error::EndpointMismatch
        | Error::Io { .. } => 2,
        Error::Parse { .. } | Error::IndexOutOfRange { .. } | Error::InvalidMesh(_) | Error::DegenerateMesh => 3,
        Error::NoPath { .. }
        | Error::NoApproach { .. }
        | Error::NotWalkable { .. }
        | Error::NoFreeFloor
        | Error::NoPlacement { .. } => 4,
        Error::NonFiniteLoss { .. } => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_config(args).and_then(|c| run_pipeline(&c)).map(|m| {
            for a in &m.artifacts {
                println!("{}", m.config.out.join(a).display());
            }
        }),
        Command::Train(args) => {
            let mut options = TrainOptions::new(args.what, args.seed);
            if let Some(e) = args.epochs {
                options.epochs = e;
            }
            if let Some(b) = args.basis_seed {
                options.basis_seed = b;
            }
            match cmd_train(&options, &args.out) {
                Ok(o) => {
                    println!(
                        "{} ({} samples, final loss {:.6})",
                        o.checkpoint.display(),
                        o.samples,
                        o.final_loss
                    );
                    println!("{}", o.trace.display());
                    Ok(())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    let code = match exit_code(&e) {
                        2 => 2,
                        _ => 5,
                    };
                    return ExitCode::from(code);
                }
            }
        }
        Command::Eval(args) => {
            let inputs = EvalInputs {
                anchors: args.anchors,
                paths: args.paths,
                trajectories: args.trajectories,
                reference_trajectories: args.reference,
                scene: args.scene,
                up_axis: args.up_axis,
                cell_size: args.cell_size,
            };
            let config = MetricsConfig {
                clusters: args.clusters,
                seed: args.seed,
                ..MetricsConfig::default()
            };
            cmd_eval(&inputs, &config).and_then(|r| {
                let text = to_json(&r)?;
                match &args.out {
                    Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
                        path: p.clone(),
                        source: e,
                    }),
                    None => {
                        print!("{text}");
                        Ok(())
                    }
                }
            })
        }
        Command::ExportObj(args) => export_obj(&ObjExport {
            scene: args.scene,
            up_axis: args.up_axis,
            trajectories: args.trajectories,
            capsule_stride: args.capsules,
            out: args.out,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
