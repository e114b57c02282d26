//! Simulation and analysis toolkit for shape-changing planar swimmers whose
//! rigid motion is linear in the shape rate, `q' = F(q, s) s'`.
//!
//! * [`se2`] and [`geometry`]: placements, twists and the two-ellipse scallop.
//! * [`engine`]: fixed-step integration, reparameterisation, field contracts.
//! * [`cover`]: universal-cover lifts and the boundedness verdict.
//! * [`lowre`]: resistive-force grand resistance matrices.
//! * [`highre`]: potential-flow panel solver, added mass and obstacle dynamics.
//! * [`scenario`]: configuration files and batch runs.

pub mod cover;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod highre;
pub mod lowre;
pub mod paths;
pub mod scenario;
pub mod se2;
pub mod synthetic;

pub use error::{Result, SwimError};
pub use se2::{BodyTwist, Pose};
