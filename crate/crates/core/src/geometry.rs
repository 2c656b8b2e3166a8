//! Small geometric helpers shared across modules: points, axis-aligned
//! boxes and the 6D continuous rotation representation.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;

/// Cross-product norm below which the two 6D columns are treated as parallel.
pub const PARALLEL_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_sq(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let v = if p[a] < self.min[a] {
                self.min[a] - p[a]
            } else if p[a] > self.max[a] {
                p[a] - self.max[a]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

/// 6D rotation for a yaw about +z: the first two columns of `Rz(yaw)`.
pub fn yaw_to_6d(yaw: f64) -> [f64; 6] {
    let (s, c) = yaw.sin_cos();
    [c, s, 0.0, -s, c, 0.0]
}

/// Gram-Schmidt orthonormalization of a 6D rotation into a rotation matrix.
///
/// Returns `None` when the two columns are (nearly) parallel or zero.
pub fn rotation_from_6d(phi: &[f64; 6]) -> Option<Matrix3<f64>> {
    let a1 = Vec3::new(phi[0], phi[1], phi[2]);
    let a2 = Vec3::new(phi[3], phi[4], phi[5]);
    if !a1.iter().chain(a2.iter()).all(|v| v.is_finite()) {
        return None;
    }
    let n1 = a1.norm();
    let n2 = a2.norm();
    if n1 == 0.0 || n2 == 0.0 || a1.cross(&a2).norm() <= PARALLEL_EPS * n1 * n2 {
        return None;
    }
    let b1 = a1 / n1;
    let u2 = a2 - b1 * b1.dot(&a2);
    let b2 = u2.normalize();
    let b3 = b1.cross(&b2);
    Some(Matrix3::from_columns(&[b1, b2, b3]))
}

/// The 6D representation of a rotation matrix (its first two columns).
pub fn rotation_to_6d(r: &Matrix3<f64>) -> [f64; 6] {
    [r[(0, 0)], r[(1, 0)], r[(2, 0)], r[(0, 1)], r[(1, 1)], r[(2, 1)]]
}

/// Heading (rotation about +z) of the forward axis of a 6D rotation.
pub fn yaw_from_6d(phi: &[f64; 6]) -> Option<f64> {
    let r = rotation_from_6d(phi)?;
    let f = r.column(0);
    if f[0].hypot(f[1]) < PARALLEL_EPS {
        return None;
    }
    Some(f[1].atan2(f[0]))
}

/// Smallest absolute difference between two angles, in radians.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Cumulative arc length at each vertex of a polyline.
pub fn cumulative_lengths(points: &[Vec3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut s = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s += (p - points[i - 1]).norm();
        }
        out.push(s);
    }
    out
}

/// Point at arc length `s` along a polyline with precomputed cumulative
/// lengths; `s` is clamped to the polyline.
pub fn point_at_length(points: &[Vec3], cumulative: &[f64], s: f64) -> Vec3 {
    let total = *cumulative.last().expect("non-empty polyline");
    if s <= 0.0 || points.len() == 1 {
        return points[0];
    }
    if s >= total {
        return points[points.len() - 1];
    }
    let i = cumulative.partition_point(|&c| c <= s).clamp(1, points.len() - 1);
    let seg = cumulative[i] - cumulative[i - 1];
    let u = if seg > 0.0 { (s - cumulative[i - 1]) / seg } else { 0.0 };
    points[i - 1] + (points[i] - points[i - 1]) * u
}

/// Resamples a polyline at `n >= 2` points equally spaced in arc length,
/// keeping both endpoints exactly.
pub fn resample_uniform(points: &[Vec3], n: usize) -> Vec<Vec3> {
    let cum = cumulative_lengths(points);
    let total = cum[cum.len() - 1];
    let mut out: Vec<Vec3> = (0..n)
        .map(|i| point_at_length(points, &cum, total * i as f64 / (n - 1) as f64))
        .collect();
    out[0] = points[0];
    out[n - 1] = points[points.len() - 1];
    out
}
