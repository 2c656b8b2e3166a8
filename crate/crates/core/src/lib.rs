//! Scene-aware motion planning from a target action sequence.
//!
//! The crate is organised along the three stages of the planner plus the
//! evaluation suite:
//!
//! - [`scene`]: OBJ ingestion, voxel occupancy with an approximate signed
//!   distance field, and basis-point-set (BPS) local context features.
//! - [`nn`]: a small dense-network engine (MLPs, CVAE, Adam) with manual
//!   backpropagation in double precision.
//! - [`anchors`]: action-conditioned pose sampling and placement of
//!   human-scene interaction anchors.
//! - [`planner`]: walkability maps and A* with stochastic per-edge cost
//!   fields, including the learned Neural Mapper field.
//! - [`trajectory`]: path splitting, spline refinement, optimisation and
//!   stitching into frame sequences.
//! - [`metrics`]: diversity and plausibility metrics.
//! - [`pipeline`]: end-to-end orchestration, training and evaluation entry
//!   points used by the CLI.

// NaN-rejecting checks are written as `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anchors;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod planner;
pub mod scene;
pub mod seed;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::Vec3;
