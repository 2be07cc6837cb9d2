//! Kinodynamic motion planning with funnel control.
//!
//! A geometric planner searches an extended free space, where each
//! configuration must remain collision-free over the box of tracking errors
//! a prescribed-performance controller is guaranteed to keep. The resulting
//! path is smoothed, re-validated, and tracked by a model-free funnel
//! controller on a simulated plant.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config_space;
pub mod error;
pub mod funnel;
pub mod geometry;
pub mod pipeline;
pub mod planners;
pub mod plant;
pub mod trajectory;
pub mod world;

pub use config_space::{Configuration, Signature};
pub use error::{KdfError, Result};
