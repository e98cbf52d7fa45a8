//! Particle-based cloth simulation.

pub mod constraints;
pub mod params;
pub mod procedures;
pub mod solver;

pub use constraints::{build_constraints, Constraint, ConstraintKind};
pub use params::{PhysicsRanges, SimParams};
pub use procedures::{deform_procedure, drop, drop_from, flip, flip_rigid, fold, place_for_drop, DeformConfig, FoldArc};
pub use solver::{settle, step, SimState, Settle};
