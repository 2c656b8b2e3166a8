use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::geometry::{Aabb, Vec3};
use crate::{Error, Result};

/// Which input axis points up. Internally everything is z-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpAxis {
    Y,
    #[default]
    Z,
}

impl std::str::FromStr for UpAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "y" => Ok(UpAxis::Y),
            "z" => Ok(UpAxis::Z),
            other => Err(Error::InvalidArgument(format!("unknown up axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

/// Bookkeeping from an OBJ parse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ObjStats {
    /// Lines of a type outside the supported subset (`vn`, `vt`, `o`, ...).
    pub ignored_lines: usize,
    /// Polygons with more than three corners that were fan-triangulated.
    pub triangulated_polygons: usize,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {v:?}")));
        }
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidMesh(format!("face {f:?} references a vertex beyond {n}")));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Appends another mesh, re-indexing its faces.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
    }

    /// Converts a y-up mesh to the internal z-up convention.
    pub fn to_z_up(mut self, from: UpAxis) -> Self {
        if from == UpAxis::Y {
            for v in &mut self.vertices {
                *v = Vec3::new(v.x, -v.z, v.y);
            }
        }
        self
    }

    /// Per-face flag: does the face belong to a closed (watertight)
    /// connected component? Vertices are welded by exact position first so
    /// that duplicated seam vertices do not break closedness.
    pub fn closed_faces(&self) -> Vec<bool> {
        let mut weld: HashMap<[u64; 3], usize> = HashMap::new();
        let canon: Vec<usize> = self
            .vertices
            .iter()
            .map(|v| {
                let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
                let next = weld.len();
                *weld.entry(key).or_insert(next)
            })
            .collect();

        let mut uf = UnionFind::new(weld.len());
        let mut edge_count: HashMap<(usize, usize), (u32, i32)> = HashMap::new();
        for f in &self.faces {
            let c = [canon[f[0]], canon[f[1]], canon[f[2]]];
            uf.union(c[0], c[1]);
            uf.union(c[1], c[2]);
            for e in 0..3 {
                let (a, b) = (c[e], c[(e + 1) % 3]);
                let (key, dir) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
                let entry = edge_count.entry(key).or_insert((0, 0));
                entry.0 += 1;
                entry.1 += dir;
            }
        }

        // A component is closed when every edge is used by an even number
        // of faces with balanced orientation. Touching boxes share edges
        // four times and still bound a solid.
        let mut open_root = vec![false; weld.len()];
        for (&(a, _), &(count, balance)) in &edge_count {
            if count % 2 != 0 || balance != 0 {
                open_root[uf.find(a)] = true;
            }
        }
        self.faces
            .iter()
            .map(|f| {
                let c = canon[f[0]];
                let degenerate = canon[f[0]] == canon[f[1]] || canon[f[1]] == canon[f[2]] || canon[f[0]] == canon[f[2]];
                !degenerate && !open_root[uf.find(c)]
            })
            .collect()
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Reads a mesh from an OBJ file. See [`parse_obj`] for the accepted subset.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (mesh, stats) = parse_obj(&text)?;
    if stats.ignored_lines > 0 {
        log::warn!(
            "{}: ignored {} unsupported OBJ lines",
            path.display(),
            stats.ignored_lines
        );
    }
    Ok(mesh)
}

/// Parses the OBJ subset: `v x y z` and `f i j k [l ...]` with 1-based
/// indices (`i/t/n` forms keep the position index). Polygons are
/// fan-triangulated. Comments and blank lines are skipped, other
/// statements are counted in [`ObjStats::ignored_lines`].
pub fn parse_obj(text: &str) -> Result<(TriangleMesh, ObjStats)> {
    let mut vertices = Vec::new();
    let mut polys: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut stats = ObjStats::default();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = tokens.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *slot = tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad coordinate `{tok}`"),
                    })?;
                    if !slot.is_finite() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("non-finite coordinate `{tok}`"),
                        });
                    }
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: usize = head.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad face index `{tok}`"),
                    })?;
                    if i == 0 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "face indices are 1-based".into(),
                        });
                    }
                    idx.push(i - 1);
                }
                if idx.len() < 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "face needs at least three vertices".into(),
                    });
                }
                polys.push((line_no, idx));
            }
            Some(_) => stats.ignored_lines += 1,
            None => {}
        }
    }

    let count = vertices.len();
    let mut faces = Vec::with_capacity(polys.len());
    for (line, idx) in polys {
        if let Some(&bad) = idx.iter().find(|&&i| i >= count) {
            return Err(Error::IndexOutOfRange {
                line,
                index: bad + 1,
                count,
            });
        }
        if idx.len() > 3 {
            stats.triangulated_polygons += 1;
        }
        for k in 1..idx.len() - 1 {
            faces.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    Ok((TriangleMesh { vertices, faces }, stats))
}
