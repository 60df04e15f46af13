//! Collision-aware model predictive control for planar mobile robots with
//! ellipsoidal footprints and obstacles.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: solid ellipsoids as shape matrices, planar poses.
//! - [`overlap`]: a closed-form overlap measure for planar ellipsoid pairs
//!   (sign decides separation), its minimizer, pose gradients, and an
//!   n-dimensional numerical fallback.
//! - [`kinematics`]: omnidirectional and differential-drive robot models with
//!   exact zero-order-hold discretization.
//! - [`ocp`]: condensed finite-horizon optimal control problems whose state
//!   constraints keep the overlap measure negative.
//! - [`solver`]: a deterministic augmented Lagrangian / projected L-BFGS
//!   solver with a wall-clock budget.
//! - [`simulation`]: closed-loop scenario runs with CSV logging, optionally
//!   under measurement noise.
//! - [`scenario`]: the JSON scenario file format.
//! - [`verify`]: randomized property suites backed by implementation-
//!   independent oracles (rasterization, grids, finite differences).
//!
//! Runnable walkthroughs live in `examples/`; the `ellipsoid-mpc` binary
//! exposes the same functionality as subcommands (`run`, `overlap`, `curve`,
//! `verify`).

pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod ocp;
pub mod overlap;
pub mod scenario;
pub mod simulation;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Ellipsoid, PlanarPose};
