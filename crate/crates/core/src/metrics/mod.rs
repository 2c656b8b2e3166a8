//! Evaluation metrics: cluster-based anchor diversity, path deviation at
//! fixed arc-length fractions, average pairwise distance, the Fréchet
//! distance between fitted Gaussians, and per-frame collision and contact
//! scores.

mod cluster;
mod scene;

pub use cluster::{anchor_diversity, anchor_features, kmeans, ClusterReport, DiversityMode, DEFAULT_CLUSTERS};
pub use scene::{contact, non_collision, DEFAULT_CONTACT_TAU};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::GridPath;

/// Arc-length fractions at which path deviation is measured.
pub const DEVIATION_FRACTIONS: [f64; 5] = [1.0 / 6.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 5.0 / 6.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDeviationReport {
    pub fractions: [f64; 5],
    pub std: [f64; 5],
}

/// Point at arc-length fraction `f` of the cell-centre polyline, in cell
/// units.
fn point_at_fraction(path: &GridPath, f: f64) -> [f64; 2] {
    let pts: Vec<[f64; 2]> = path.cells.iter().map(|c| [c[0] as f64, c[1] as f64]).collect();
    let seg: Vec<f64> = pts
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .collect();
    let total: f64 = seg.iter().sum();
    let mut remaining = f * total;
    for (i, &l) in seg.iter().enumerate() {
        if remaining <= l && l > 0.0 {
            let u = remaining / l;
            return [
                pts[i][0] + u * (pts[i + 1][0] - pts[i][0]),
                pts[i][1] + u * (pts[i + 1][1] - pts[i][1]),
            ];
        }
        remaining -= l;
    }
    pts[pts.len() - 1]
}

/// Population standard deviation, over the sampled paths, of the distance
/// between each path's fraction point and the reference's, in metres.
pub fn path_deviation_std(samples: &[GridPath], reference: &GridPath, cell_size: f64) -> Result<PathDeviationReport> {
    if samples.len() < 2 {
        return Err(Error::TooFewPoints {
            points: samples.len(),
            k: 2,
        });
    }
    let ends = |p: &GridPath| (p.cells.first().copied(), p.cells.last().copied());
    if reference.cells.is_empty() || samples.iter().any(|p| ends(p) != ends(reference)) {
        return Err(Error::EndpointMismatch);
    }
    let mut std = [0.0; 5];
    for (slot, &f) in std.iter_mut().zip(&DEVIATION_FRACTIONS) {
        let r = point_at_fraction(reference, f);
        let d: Vec<f64> = samples
            .iter()
            .map(|p| {
                let q = point_at_fraction(p, f);
                (q[0] - r[0]).hypot(q[1] - r[1]) * cell_size
            })
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        *slot = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    }
    Ok(PathDeviationReport {
        fractions: DEVIATION_FRACTIONS,
        std,
    })
}

fn check_dims(samples: &[Vec<f64>], context: &'static str) -> Result<usize> {
    let dim = samples.first().map_or(0, Vec::len);
    for s in samples {
        if s.len() != dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: dim,
                found: s.len(),
            });
        }
    }
    Ok(dim)
}

/// Mean L2 distance over all unordered pairs.
pub fn apd(samples: &[Vec<f64>]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewPoints {
            points: samples.len(),
            k: 2,
        });
    }
    check_dims(samples, "apd sample")?;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            sum += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

fn moments(set: &[Vec<f64>], dim: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = set.len();
    let mut mean = DVector::zeros(dim);
    for s in set {
        mean += DVector::from_column_slice(s);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for s in set {
        let d = DVector::from_column_slice(s) - &mean;
        cov += &d * d.transpose();
    }
    cov /= (n - 1) as f64;
    (mean, cov)
}

/// Square root of a symmetric PSD matrix, negative eigenvalues clipped.
fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Fréchet distance between Gaussians fitted to two sample sets (sample
/// covariance with `n - 1`):
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`.
///
/// The cross term uses `tr((S_a^(1/2) S_b S_a^(1/2))^(1/2))`, which equals
/// the trace of `(S_a S_b)^(1/2)` and only needs symmetric square roots.
pub fn frechet_gaussian(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let dim = check_dims(a, "fréchet sample")?;
    let dim_b = check_dims(b, "fréchet sample")?;
    if dim != dim_b {
        return Err(Error::DimensionMismatch {
            context: "fréchet sets",
            expected: dim,
            found: dim_b,
        });
    }
    for set in [a, b] {
        if set.len() < dim + 1 || set.len() < 2 {
            return Err(Error::TooFewPoints {
                points: set.len(),
                k: (dim + 1).max(2),
            });
        }
    }
    let (ma, sa) = moments(a, dim);
    let (mb, sb) = moments(b, dim);
    let ra = sqrt_psd(&sa);
    let cross = sqrt_psd(&(&ra * &sb * &ra)).trace();
    let value = (ma - mb).norm_squared() + sa.trace() + sb.trace() - 2.0 * cross;
    Ok(value.max(0.0))
}

/// Standardizes both sets per coordinate with the pooled mean and
/// (population) standard deviation; constant coordinates are only
/// centred.
pub fn standardize_pooled(a: &[Vec<f64>], b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let dim = a.first().or(b.first()).map_or(0, Vec::len);
    let n = (a.len() + b.len()) as f64;
    let mut mean = vec![0.0; dim];
    for s in a.iter().chain(b) {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; dim];
    for s in a.iter().chain(b) {
        for ((d, v), m) in sd.iter_mut().zip(s).zip(&mean) {
            *d += (v - m).powi(2) / n;
        }
    }
    let scale: Vec<f64> = sd.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    let apply = |set: &[Vec<f64>]| -> Vec<Vec<f64>> {
        set.iter()
            .map(|s| s.iter().zip(&mean).zip(&scale).map(|((v, m), k)| (v - m) / k).collect())
            .collect()
    };
    (apply(a), apply(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(cells: &[[usize; 2]]) -> GridPath {
        GridPath {
            cells: cells.iter().map(|c| [c[0], c[1], 0]).collect(),
            cost: 0.0,
        }
    }

    #[test]
    fn apd_small_cases() {
        assert_eq!(apd(&[vec![0.0], vec![2.0]]).unwrap(), 2.0);
        assert_eq!(apd(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap(), 4.0 / 3.0);
        assert_eq!(apd(&vec![vec![1.0, 2.0]; 4]).unwrap(), 0.0);
        assert!(apd(&[vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn frechet_one_dimensional_closed_form() {
        let a = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let b = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!((frechet_gaussian(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(frechet_gaussian(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn frechet_diagonal_matches_axis_formula() {
        // Axis-aligned "cross" sets give diagonal sample covariances.
        let set = |c: [f64; 2], s: [f64; 2]| {
            vec![
                vec![c[0] + s[0], c[1]],
                vec![c[0] - s[0], c[1]],
                vec![c[0], c[1] + s[1]],
                vec![c[0], c[1] - s[1]],
            ]
        };
        let a = set([0.0, 1.0], [1.0, 2.0]);
        let b = set([3.0, -1.0], [0.5, 3.0]);
        // Sample variance of {+s, -s, 0, 0} is 2 s^2 / 3.
        let var = |s: f64| 2.0 * s * s / 3.0;
        let mut expected = 3.0f64.powi(2) + 2.0f64.powi(2);
        for (x, y) in [(1.0, 0.5), (2.0, 3.0)] {
            expected += (var(x).sqrt() - var(y).sqrt()).powi(2);
        }
        assert!((frechet_gaussian(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn frechet_needs_enough_samples() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!(matches!(frechet_gaussian(&a, &a), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn identical_paths_have_zero_deviation() {
        let p = path(&[[0, 0], [1, 1], [2, 1], [3, 1], [4, 2]]);
        let r = path_deviation_std(&vec![p.clone(); 100], &p, 0.25).unwrap();
        assert_eq!(r.std, [0.0; 5]);
    }

    #[test]
    fn symmetric_detours_and_two_point_spread() {
        let reference = path(&[[0, 2], [1, 2], [2, 2], [3, 2], [4, 2]]);
        let up = path(&[[0, 2], [1, 3], [2, 3], [3, 3], [4, 2]]);
        let down = path(&[[0, 2], [1, 1], [2, 1], [3, 1], [4, 2]]);
        let r = path_deviation_std(&[up.clone(), down], &reference, 1.0).unwrap();
        assert!(r.std[2].abs() < 1e-12);
        // Midpoint distances {0, 1}: population std 0.5; at 2 m cells {0, 2} gives 1.
        let r = path_deviation_std(&[reference.clone(), up], &reference, 2.0).unwrap();
        assert!((r.std[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_endpoints_are_rejected() {
        let a = path(&[[0, 0], [1, 0]]);
        let b = path(&[[0, 0], [2, 0]]);
        assert!(matches!(
            path_deviation_std(&[a.clone(), b], &a, 1.0),
            Err(Error::EndpointMismatch)
        ));
    }

    proptest! {
        #[test]
        fn frechet_is_symmetric_and_non_negative(
            a in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 4..12),
            b in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 4..12),
        ) {
            let ab = frechet_gaussian(&a, &b).unwrap();
            let ba = frechet_gaussian(&b, &a).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-8 * (1.0 + ab));
        }

        #[test]
        fn apd_ignores_order(mut s in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2), 2..10)) {
            let before = apd(&s).unwrap();
            s.reverse();
            prop_assert!((apd(&s).unwrap() - before).abs() < 1e-12);
        }
    }
}
