//! Dual-system media consumption model.
//!
//! A user alternates between an impulsive system 1, which keeps consuming
//! whenever an item hooks it, and a forward-looking system 2, which only
//! consumes while items still add value. The crate provides the closed-form
//! engagement and utility evaluators for the linear feed, step-level Monte
//! Carlo oracles for every closed form, optimization over content manifolds,
//! and the satiation, survey, population and tree-feed extensions.

pub mod cli;
pub mod dist;
pub mod error;
pub mod gamma;
pub mod manifold;
pub mod model;
pub mod population;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod survey;
pub mod tree;

pub use dist::{DistKind, ValueDist};
pub use error::{Error, Result};
pub use model::{ContentParams, ModelPoint, OutsideOption};

/// Library version string written into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
