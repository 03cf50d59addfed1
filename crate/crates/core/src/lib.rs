//! Discrete p-harmonic analysis on weighted graphs.
//!
//! The crate models a continuum domain as a fine weighted graph (a
//! "manifold proxy"), extracts separated nets from it, transfers functions
//! between net and proxy through a partition of unity and ball averaging,
//! solves p-Dirichlet boundary problems by convex minimization, and runs
//! quantitative verification experiments for the energy-comparison and
//! convergence inequalities that make those transfers well behaved.

pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod generate;
pub mod geometry;
pub mod net;
pub mod report;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{BallVolumeProfile, ProxySpace, SpaceKind};
