//! Turning grid paths into smooth root trajectories: splitting long paths at
//! intermediate anchors, spline refinement with seeded jitter, smoothness and
//! clearance optimization, and stitching segments back together.

mod optimize;
mod refine;
mod split;

pub use optimize::{energy_gradient, optimize_trajectory, trajectory_energy, EnergyParts, TrajectoryOptConfig};
pub use refine::{catmull_rom, refine_path, RefineConfig};
pub use split::{split_path, PathSegment, DEFAULT_MAX_SEGMENT_LENGTH, INTERMEDIATE_ACTIONS};

use crate::anchors::ActionLabel;
use crate::error::{Error, Result};
use crate::geometry::{yaw_to_6d, Vec3};

pub const DEFAULT_FRAMES: usize = 60;
pub const DEFAULT_FPS: f64 = 30.0;
/// Largest allowed distance between consecutive frame translations (metres).
pub const DEFAULT_MAX_STEP: f64 = 0.2;
/// Largest allowed translation gap at a stitched junction (metres).
pub const STITCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: Vec3,
    pub phi: [f64; 6],
    pub action: ActionLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub fps: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Largest distance between consecutive frame translations.
    pub fn max_step(&self) -> f64 {
        self.frames
            .windows(2)
            .map(|w| (w[1].t - w[0].t).norm())
            .fold(0.0, f64::max)
    }

    /// Recomputes interior headings from the horizontal tangent; the first
    /// and last frames keep their (anchor) orientation. Frames without a
    /// horizontal tangent reuse the previous heading.
    pub fn update_headings(&mut self) {
        let n = self.frames.len();
        for i in 1..n.saturating_sub(1) {
            let d = self.frames[i + 1].t - self.frames[i - 1].t;
            if d.x.hypot(d.y) > 1e-9 {
                self.frames[i].phi = yaw_to_6d(d.y.atan2(d.x));
            } else {
                self.frames[i].phi = self.frames[i - 1].phi;
            }
        }
    }
}

/// Sinusoidal encoding of a 1-based frame index: entry `2i` is
/// `sin(p / 10000^(2i/width))` and `2i + 1` the matching cosine, with
/// `p = step - 1`.
pub fn positional_encoding(step: usize, width: usize) -> Result<Vec<f64>> {
    if !width.is_multiple_of(2) || width == 0 {
        return Err(Error::InvalidArgument(format!(
            "encoding width must be even and positive, got {width}"
        )));
    }
    if step == 0 {
        return Err(Error::InvalidArgument("frame steps start at 1".into()));
    }
    let p = (step - 1) as f64;
    let mut out = Vec::with_capacity(width);
    for i in 0..width / 2 {
        let freq = 10000f64.powf(-((2 * i) as f64) / width as f64);
        out.push((p * freq).sin());
        out.push((p * freq).cos());
    }
    Ok(out)
}

/// Concatenates consecutive trajectories, dropping the duplicated boundary
/// frame at every junction.
pub fn stitch(parts: &[Trajectory]) -> Result<Trajectory> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to stitch".into()))?;
    let mut out = first.clone();
    for (i, next) in parts.iter().enumerate().skip(1) {
        let (Some(a), Some(b)) = (out.frames.last(), next.frames.first()) else {
            return Err(Error::InvalidArgument(format!("trajectory {i} is empty")));
        };
        let gap = (a.t - b.t).norm();
        if gap > STITCH_TOLERANCE {
            return Err(Error::BoundaryMismatch { index: i, gap });
        }
        out.frames.extend_from_slice(&next.frames[1..]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(from: f64, n: usize) -> Trajectory {
        Trajectory {
            frames: (0..n)
                .map(|i| Frame {
                    t: Vec3::new(from + i as f64 * 0.1, 0.0, 0.9),
                    phi: yaw_to_6d(0.0),
                    action: ActionLabel::Walk,
                })
                .collect(),
            fps: DEFAULT_FPS,
        }
    }

    #[test]
    fn encoding_at_first_step() {
        let e = positional_encoding(1, 8).unwrap();
        assert_eq!(e, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(positional_encoding(1, 7).is_err());
    }

    #[test]
    fn encoding_is_bounded_and_injective() {
        let codes: Vec<Vec<f64>> = (1..=DEFAULT_FRAMES)
            .map(|s| positional_encoding(s, 4).unwrap())
            .collect();
        for (i, a) in codes.iter().enumerate() {
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
            for b in &codes[i + 1..] {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn stitch_counts_and_gaps() {
        let a = line(0.0, 60);
        let b = line(5.9, 60);
        let c = line(11.8, 60);
        let s = stitch(&[a.clone(), b.clone(), c]).unwrap();
        assert_eq!(s.len(), 3 * 60 - 2);
        assert_eq!(stitch(&[a.clone(), b]).unwrap().len(), 2 * 60 - 1);
        let far = line(7.0, 60);
        assert!(matches!(
            stitch(&[a, far]),
            Err(Error::BoundaryMismatch { index: 1, .. })
        ));
    }
}
