//! Multiview point-cloud registration by planar bundle adjustment.
//!
//! Scans are cut into voxels, each voxel's points are summarized per frame
//! as a Gaussian, and the frame poses are refined jointly with
//! Levenberg-Marquardt against an eigenvalue-weighted point-to-plane
//! objective. Feature planes are re-fit from the merged summaries after every
//! step, so the per-iteration cost depends on the number of features and
//! frames rather than on the number of raw points.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod objective;
pub mod pipeline;
pub mod plane;
pub mod simulator;
pub mod solver;
pub mod stats;
pub mod voxelmap;

pub use error::{Error, Result};
pub use geometry::{exp_se3, log_se3, sorted_eigendecomposition, EigenDecomp, Pose, Twist};
pub use plane::{check_optimal_conditions, estimate_plane, ConditionReport, PlaneParam};
pub use pipeline::{register, PipelineConfig};
pub use solver::{solve, ObjectiveKind, Problem, SolveReport, SolverConfig};
pub use stats::{aggregate, compute_stats, transform_stats, AggregateStats, LocalStats, WorldStats};
