//! Adversarial planar instances for weighted Lloyd's k-means.
//!
//! A chain of `t` gadgets, each waking the one below it twice per "day",
//! drives Lloyd's algorithm through a number of iterations exponential in
//! `t`. The crate builds the chain, runs the algorithm deterministically and
//! checks every iteration against the gadgets' stage machine.

pub mod commands;
pub mod construction;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod scalar;
pub mod verifier;

pub use construction::{
    build_chain, build_chain_data_point_seeded, ConstructionParams, Instance, Variant,
};
pub use engine::{run, RunOptions, RunResult};
pub use error::{Error, Result};
pub use geometry::{Label, Point, WeightedPoint};
pub use scalar::{DoubleDouble, Precision, Scalar};
pub use verifier::{analyze, Stage, StageTimeline};
