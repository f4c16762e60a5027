//! Gait body-image measurement toolkit.
//!
//! Models walking kinematics with PCA, synthesizes point-light walkers
//! blended between a participant's own gait and normative gait, measures
//! gait deviation with principal angles between loading subspaces, runs the
//! selection-session protocol, and computes gait-parameter and trend
//! statistics.
//!
//! The pipeline, module by module:
//!
//! * [`mocap`]: load joint-center trajectories and force-plate records,
//!   low-pass filter, detect heel strikes and toe-offs, cut gait cycles.
//! * [`model`]: participant PCA model and sinusoidal normative model.
//! * [`synthesis`]: blend the two models and project to point-light frames.
//! * [`similarity`]: principal angles and gait-deviation metrics.
//! * [`params`]: step times, step lengths, trunk motion, symmetry indices.
//! * [`stats`]: random-intercept mixed model and selection summaries.
//! * [`session`]: the event-sourced experiment protocol and its HTTP API.
//! * [`pipeline`]: batch stages, configuration and the synthetic demo cohort.

pub mod error;
pub mod joints;
pub mod mocap;
pub mod model;
pub mod params;
pub mod pipeline;
pub mod session;
pub mod similarity;
pub mod stats;
pub mod synthesis;

pub use error::{Error, Result};
