use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anchors::{Anchor, POSE_DIM};
use crate::error::{Error, Result};

pub const DEFAULT_CLUSTERS: usize = 20;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub assignments: Vec<usize>,
    /// `-sum p ln p` over cluster-size fractions.
    pub entropy: f64,
    /// Mean L2 distance from each sample to its cluster centre.
    pub mean_distance: f64,
    /// Total within-cluster squared distance after every assignment step.
    pub objective: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means with k-means++ seeding and Lloyd iterations until the
/// assignment stops changing or `max_iter` is reached. Empty clusters keep
/// their previous centre.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<ClusterReport> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            context: "k-means point",
            expected: dim,
            found: p.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut objective = vec![points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &centers[a]))
        .sum()];
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for ((c, s), &n) in centers.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        objective.push(points.iter().zip(&next).map(|(p, &a)| sq_dist(p, &centers[a])).sum());
        if next == assignments {
            break;
        }
        assignments = next;
    }

    let mut counts = vec![0usize; k];
    for &a in &assignments {
        counts[a] += 1;
    }
    let n = points.len() as f64;
    let entropy = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0);
    let mean_distance = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &centers[a]).sqrt())
        .sum::<f64>()
        / n;
    Ok(ClusterReport {
        k,
        assignments,
        entropy,
        mean_distance,
        objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiversityMode {
    /// Pose, translation and orientation.
    Full,
    /// Translation and orientation only.
    Position,
}

/// Scales a block of columns to mean per-coordinate variance 1 after
/// centring. Constant blocks are only centred.
fn standardize_block(rows: &mut [Vec<f64>], range: std::ops::Range<usize>) {
    let n = rows.len() as f64;
    let width = range.len() as f64;
    let mut var = 0.0;
    for c in range.clone() {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        for r in rows.iter_mut() {
            r[c] -= mean;
        }
        var += rows.iter().map(|r| r[c] * r[c]).sum::<f64>() / n;
    }
    let scale = (var / width).sqrt();
    if scale > 0.0 {
        for r in rows.iter_mut() {
            for v in &mut r[range.clone()] {
                *v /= scale;
            }
        }
    }
}

/// Feature rows `(theta, t, phi)` or `(t, phi)`, each block standardized.
pub fn anchor_features(anchors: &[Anchor], mode: DiversityMode) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = anchors
        .iter()
        .map(|a| {
            let mut r = Vec::new();
            if mode == DiversityMode::Full {
                r.extend_from_slice(&a.theta.0);
            }
            r.extend(a.t.iter());
            r.extend_from_slice(&a.phi);
            r
        })
        .collect();
    if rows.is_empty() {
        return rows;
    }
    let theta = if mode == DiversityMode::Full { POSE_DIM } else { 0 };
    if theta > 0 {
        standardize_block(&mut rows, 0..theta);
    }
    standardize_block(&mut rows, theta..theta + 3);
    standardize_block(&mut rows, theta + 3..theta + 9);
    rows
}

pub fn anchor_diversity(anchors: &[Anchor], mode: DiversityMode, k: usize, seed: u64) -> Result<ClusterReport> {
    kmeans(&anchor_features(anchors, mode), k, seed, DEFAULT_MAX_ITER)
}
