//! Bounding volume hierarchy over triangles, used by the voxelizer for
//! nearest-surface distance and +x ray-parity queries.

use crate::geometry::{Aabb, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: `start..start + count` into `order`. Inner: `count == 0` and
    /// children at `start` and `start + 1`.
    start: usize,
    count: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Bvh {
    tris: Vec<[Vec3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn build(tris: Vec<[Vec3; 3]>) -> Self {
        let mut bvh = Bvh {
            order: (0..tris.len()).collect(),
            nodes: Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1),
            tris,
        };
        if bvh.tris.is_empty() {
            return bvh;
        }
        let bounds: Vec<Aabb> = bvh.tris.iter().map(Aabb::from_points).collect();
        let centroids: Vec<Vec3> = bvh.tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        bvh.nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        });
        let n = bvh.order.len();
        bvh.split(0, 0, n, &bounds, &centroids);
        bvh
    }

    fn split(&mut self, node: usize, lo: usize, hi: usize, bounds: &[Aabb], centroids: &[Vec3]) {
        let mut b = Aabb::empty();
        let mut cb = Aabb::empty();
        for &t in &self.order[lo..hi] {
            b = b.merge(&bounds[t]);
            cb.grow(&centroids[t]);
        }
        self.nodes[node].bounds = b;
        if hi - lo <= LEAF_SIZE {
            self.nodes[node].start = lo;
            self.nodes[node].count = hi - lo;
            return;
        }
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (lo + hi) / 2;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        let left = self.nodes.len();
        for _ in 0..2 {
            self.nodes.push(Node {
                bounds: Aabb::empty(),
                start: 0,
                count: 0,
            });
        }
        self.nodes[node].start = left;
        self.nodes[node].count = 0;
        self.split(left, lo, mid, bounds, centroids);
        self.split(left + 1, mid, hi, bounds, centroids);
    }

    pub fn triangle(&self, i: usize) -> &[Vec3; 3] {
        &self.tris[i]
    }

    /// Squared distance from `p` to the nearest triangle, or `None` for an
    /// empty hierarchy.
    pub fn nearest_distance_sq(&self, p: &Vec3) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.distance_sq(p) >= best {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let q = closest_point_on_triangle(p, &self.tris[t]);
                    best = best.min((q - p).norm_squared());
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let dl = self.nodes[l].bounds.distance_sq(p);
                let dr = self.nodes[r].bounds.distance_sq(p);
                // Visit the nearer child first (pushed last).
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(best)
    }

    /// Calls `visit` for every triangle whose bounds straddle the line
    /// parallel to +x through `(y, z)`.
    pub fn for_each_on_x_line(&self, y: f64, z: f64, mut visit: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let b = &node.bounds;
            if y < b.min.y || y > b.max.y || z < b.min.z || z > b.max.z {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    visit(t);
                }
            } else {
                stack.push(node.start);
                stack.push(node.start + 1);
            }
        }
    }
}

/// Outcome of intersecting the line `{(x, y, z)}` (x free) with a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LineHit {
    Miss,
    Hit(f64),
    /// The line passes within tolerance of an edge or vertex, or the
    /// triangle is edge-on; parity is unreliable.
    Grazing,
}

pub(crate) fn x_line_hit(tri: &[Vec3; 3], y: f64, z: f64) -> LineHit {
    let [a, b, c] = tri;
    // Barycentric coordinates in the yz projection.
    let det = (b.y - a.y) * (c.z - a.z) - (c.y - a.y) * (b.z - a.z);
    let scale = ((b - a).norm() * (c - a).norm()).max(f64::MIN_POSITIVE);
    let tol = 1e-9;
    if det.abs() <= tol * scale {
        // Edge-on in projection: only matters if the line actually touches it.
        let bb = Aabb::from_points(tri);
        if y >= bb.min.y && y <= bb.max.y && z >= bb.min.z && z <= bb.max.z {
            return LineHit::Grazing;
        }
        return LineHit::Miss;
    }
    let l1 = ((y - a.y) * (c.z - a.z) - (c.y - a.y) * (z - a.z)) / det;
    let l2 = ((b.y - a.y) * (z - a.z) - (y - a.y) * (b.z - a.z)) / det;
    let l0 = 1.0 - l1 - l2;
    let m = l0.min(l1).min(l2);
    if m < -tol {
        LineHit::Miss
    } else if m <= tol {
        LineHit::Grazing
    } else {
        LineHit::Hit(l0 * a.x + l1 * b.x + l2 * c.x)
    }
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
pub(crate) fn closest_point_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Separating-axis triangle/box overlap test (Akenine-Möller). Touching
/// counts as overlapping.
pub(crate) fn triangle_box_overlap(center: &Vec3, half: &Vec3, tri: &[Vec3; 3]) -> bool {
    let v = [tri[0] - center, tri[1] - center, tri[2] - center];
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let axes = [Vec3::x(), Vec3::y(), Vec3::z()];

    // Nine edge cross-product axes.
    for edge in &e {
        for axis in &axes {
            let a = axis.cross(edge);
            if a.norm_squared() < 1e-30 {
                continue;
            }
            let p = [a.dot(&v[0]), a.dot(&v[1]), a.dot(&v[2])];
            let r = half.x * a.x.abs() + half.y * a.y.abs() + half.z * a.z.abs();
            let lo = p[0].min(p[1]).min(p[2]);
            let hi = p[0].max(p[1]).max(p[2]);
            if lo > r || hi < -r {
                return false;
            }
        }
    }
    // Box face normals.
    for k in 0..3 {
        let lo = v[0][k].min(v[1][k]).min(v[2][k]);
        let hi = v[0][k].max(v[1][k]).max(v[2][k]);
        if lo > half[k] || hi < -half[k] {
            return false;
        }
    }
    // Triangle normal.
    let n = e[0].cross(&e[1]);
    let d = n.dot(&v[0]);
    let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
    d.abs() <= r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Vec3; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn closest_point_regions() {
        let t = tri();
        let q = closest_point_on_triangle(&Vec3::new(0.2, 0.2, 1.0), &t);
        assert!((q - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-12);
        assert_eq!(closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &t), t[0]);
        let q = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &t);
        assert!((q - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut tris = Vec::new();
        for i in 0..20 {
            let o = Vec3::new(i as f64 * 0.37, (i * 7 % 5) as f64 * 0.5, (i * 3 % 4) as f64 * 0.3);
            tris.push([o, o + Vec3::new(0.3, 0.1, 0.0), o + Vec3::new(0.0, 0.2, 0.4)]);
        }
        let bvh = Bvh::build(tris.clone());
        for k in 0..50 {
            let p = Vec3::new(k as f64 * 0.17 - 1.0, (k % 7) as f64 * 0.4 - 0.5, (k % 3) as f64 - 0.7);
            let brute = tris
                .iter()
                .map(|t| (closest_point_on_triangle(&p, t) - p).norm_squared())
                .fold(f64::INFINITY, f64::min);
            assert!((bvh.nearest_distance_sq(&p).unwrap() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn box_overlap_cases() {
        let t = tri();
        let half = Vec3::repeat(0.1);
        assert!(triangle_box_overlap(&Vec3::new(0.1, 0.1, 0.0), &half, &t));
        assert!(!triangle_box_overlap(&Vec3::new(0.1, 0.1, 0.5), &half, &t));
        assert!(!triangle_box_overlap(&Vec3::new(0.8, 0.8, 0.0), &half, &t));
        // Touching the plane from above counts.
        assert!(triangle_box_overlap(&Vec3::new(0.1, 0.1, 0.1), &half, &t));
    }

    #[test]
    fn line_hits() {
        let t = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 1.0),
        ];
        assert_eq!(x_line_hit(&t, 0.2, 0.2), LineHit::Hit(1.0));
        assert_eq!(x_line_hit(&t, 0.0, 0.5), LineHit::Grazing);
        assert_eq!(x_line_hit(&t, 0.8, 0.8), LineHit::Miss);
    }
}
