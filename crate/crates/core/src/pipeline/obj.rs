use std::fmt::Write as _;
use std::path::PathBuf;

use super::config::load_scene;
use super::eval::action_bodies;
use super::records::TrajectoriesFile;
use crate::error::{Error, Result};
use crate::geometry::rotation_from_6d;
use crate::scene::UpAxis;
use crate::synth::SyntheticPosePrior;

/// What the `export-obj` command writes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjExport {
    pub scene: Option<String>,
    pub up_axis: UpAxis,
    pub trajectories: Option<PathBuf>,
    /// Also draw the proxy-body capsule axes of every `capsule_stride`-th
    /// frame; 0 disables them.
    pub capsule_stride: usize,
    pub out: PathBuf,
}

/// Writes the scene triangles (z-up) and the trajectory polylines (`l`
/// elements) into one OBJ file for inspection.
pub fn export_obj(export: &ObjExport) -> Result<()> {
    let mut text = String::new();
    let mut base = 0usize;
    if let Some(scene) = &export.scene {
        let mesh = load_scene(scene, export.up_axis)?;
        text.push_str("o scene\n");
        for v in mesh.vertices() {
            let _ = writeln!(text, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in mesh.faces() {
            let _ = writeln!(text, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        base = mesh.vertices().len();
    }
    if let Some(path) = &export.trajectories {
        let file = TrajectoriesFile::load(path)?;
        let bodies = action_bodies(&SyntheticPosePrior, 0)?;
        for (i, rec) in file.trajectories.iter().enumerate() {
            let _ = writeln!(text, "o trajectory_{i}");
            for f in &rec.frames {
                let _ = writeln!(text, "v {} {} {}", f.t[0], f.t[1], f.t[2]);
            }
            let idx: Vec<String> = (1..=rec.frames.len()).map(|k| (base + k).to_string()).collect();
            let _ = writeln!(text, "l {}", idx.join(" "));
            base += rec.frames.len();
            if export.capsule_stride == 0 {
                continue;
            }
            for f in rec.frames.iter().step_by(export.capsule_stride) {
                let r = rotation_from_6d(&f.phi).ok_or(Error::Orthonormalization { attempts: 1 })?;
                let t = crate::Vec3::from(f.t);
                for c in &bodies[f.action.index()].capsules {
                    let (a, b) = (t + r * c.a, t + r * c.b);
                    let _ = writeln!(
                        text,
                        "v {} {} {}\nv {} {} {}\nl {} {}",
                        a.x,
                        a.y,
                        a.z,
                        b.x,
                        b.y,
                        b.z,
                        base + 1,
                        base + 2
                    );
                    base += 2;
                }
            }
        }
    }
    std::fs::write(&export.out, text).map_err(|e| Error::io(&export.out, e))
}
