//! Simulation and verification toolkit for interacting transformations of
//! spatial Poisson point processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`config_space`]: points, finite configurations, the addition operator,
//!   finite-difference gradients and Poisson stochastic integrals.
//! * [`intensity`]: intensity measures on windows of the plane or line,
//!   Poisson sampling and deterministic quadrature.
//! * [`partitions`]: set partitions and the joint moment identities.
//! * [`geometry`]: convex hulls, interior tests and inscribed disks.
//! * [`transforms`]: interacting transformations, iterated maps and the
//!   vanishing-condition checker.
//! * [`experiments`]: paired Monte Carlo checks, zero-type decay curves and
//!   mixing tables.
//! * [`catalog`]: named, serialisable descriptions of measures, functions,
//!   integrands and transformations.

pub mod catalog;
pub mod config_space;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod intensity;
pub mod partitions;
pub mod stats;
pub mod transforms;

pub use config_space::{Configuration, Functional, Point, RandomIntegrand};
pub use error::{Error, Result};
pub use experiments::{DecayCurve, DecayRow, MixingRow, StatReport};
pub use geometry::HullData;
pub use intensity::{IntensityMeasure, MeasureKind, Quadrature, Region, TestFunction};
pub use partitions::{ExponentMatrix, SetPartition};
pub use stats::{Estimate, MonteCarlo};
pub use transforms::{AngleRule, MixingSchedule, Orbit, Transformation};
