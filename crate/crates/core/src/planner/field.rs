use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::walkable::WalkableMap;

/// Which construction produced a cost field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Standard,
    Random,
    Shared,
    Mapper,
}

impl std::str::FromStr for FieldKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(FieldKind::Standard),
            "random" => Ok(FieldKind::Random),
            "shared" => Ok(FieldKind::Shared),
            "mapper" => Ok(FieldKind::Mapper),
            other => Err(format!(
                "unknown field kind '{other}' (expected standard, random, shared or mapper)"
            )),
        }
    }
}

impl std::fmt::Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FieldKind::Standard => "standard",
            FieldKind::Random => "random",
            FieldKind::Shared => "shared",
            FieldKind::Mapper => "mapper",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Uniform,
    Shared([f64; 8]),
    PerColumn(Vec<[f64; 8]>),
}

/// Per-directed-edge feasibility `m(p, q)` in `[0, 1]`, stored per source
/// column and move direction.
#[derive(Debug, Clone, PartialEq)]
pub struct CostField {
    kind: FieldKind,
    seed: Option<u64>,
    values: Values,
}

impl CostField {
    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Feasibility of leaving column index `from` in direction `dir`.
    pub fn m(&self, from: usize, dir: usize) -> f64 {
        match &self.values {
            Values::Uniform => 1.0,
            Values::Shared(u) => u[dir],
            Values::PerColumn(v) => v[from][dir],
        }
    }

    /// Field from explicit per-column 8-vectors (values clamped to [0, 1]).
    pub fn from_columns(kind: FieldKind, seed: Option<u64>, mut values: Vec<[f64; 8]>) -> Self {
        for v in values.iter_mut().flatten() {
            *v = v.clamp(0.0, 1.0);
        }
        CostField {
            kind,
            seed,
            values: Values::PerColumn(values),
        }
    }
}

/// `m = 1` everywhere: plain shortest paths.
pub fn field_standard() -> CostField {
    CostField {
        kind: FieldKind::Standard,
        seed: None,
        values: Values::Uniform,
    }
}

/// Independent uniform `[0, 1]` value per column and direction, drawn in
/// column-index order.
pub fn field_random(map: &WalkableMap, seed: u64) -> CostField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [nx, ny] = map.dims();
    let values = (0..nx * ny)
        .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
        .collect();
    CostField {
        kind: FieldKind::Random,
        seed: Some(seed),
        values: Values::PerColumn(values),
    }
}

/// One uniform 8-vector shared by every column.
pub fn field_shared(seed: u64) -> CostField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CostField {
        kind: FieldKind::Shared,
        seed: Some(seed),
        values: Values::Shared(std::array::from_fn(|_| rng.random::<f64>())),
    }
}
