//! Numerical laboratory for phygital dynamics.
//!
//! The state of every entity lives in a block-structured space
//! `[physical | digital | social]` with `k` coordinates per block. On top of
//! that space the crate provides:
//!
//! - [`bundle`]: fiber transport, holonomy and gluing of local sections,
//! - [`finsler`]: Randers-type asymmetric cost geometry, geodesics and distances,
//! - [`mass`]: PSD mass tensors, rank taxonomy and pseudoinverse response,
//! - [`dynamics`]: the three-term equation of motion over a coupled world,
//! - [`thermo`]: energy pools, frictional transduction and entropy accounting,
//! - [`temporal`]: Lie brackets of temporal flows, shear and synchronization cost,
//! - [`ecology`]: synthetic agents and the threshold / convergence experiments.
//!
//! Everything is deterministic: no operation draws randomness internally.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod dynamics;
pub mod ecology;
mod error;
pub mod finsler;
pub mod linalg;
pub mod mass;
pub mod state;
pub mod temporal;
pub mod thermo;

pub use error::{Error, Result};
pub use mass::MassTensor;
pub use state::{Block, DimensionLayout, Entity, EntityKind, PhygitalState};
