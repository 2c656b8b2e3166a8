//! Walkability maps and A* with stochastic per-edge cost fields.

mod astar;
mod field;
mod mapper;
mod walkable;

pub use astar::{astar, path_cost, GridPath};
pub use field::{field_random, field_shared, field_standard, CostField, FieldKind};
pub use mapper::{
    direction_scores, direction_target, field_mapper, train_mapper, MapperContext, MapperModel, MapperSample, KAPPA,
};
pub use walkable::{
    build_walkable, direction_index, Column, WalkableMap, DEFAULT_HEIGHT, DEFAULT_RADIUS, DIRECTIONS, WALK_ROOT_HEIGHT,
};
