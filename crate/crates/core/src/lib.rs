//! Exact detection of multiple positive zeros of augmented vertically
//! parametrized polynomial systems.
//!
//! The pipeline: reduce the coefficient matrix to its kernel description,
//! partition rows and columns, enumerate orientations and candidate sign
//! matrices, search the oriented ground set by exact rational cone
//! programming, and — when a certificate is found — construct and verify an
//! explicit witness of two distinct positive zeros.

pub mod cones;
pub mod engine;
pub mod model;
pub mod rational;
pub mod reduction;
pub mod signs;
pub mod witness;

pub use cones::{ConstraintSystem, Relation};
pub use engine::{decide, Certificate, EngineError, EngineOptions, Stats, Verdict, VerdictKind};
pub use model::{
    emit_matrices, network_to_system, parse_network, parse_system, AugmentedVerticalSystem,
    ModelError, ReactionNetwork,
};
pub use rational::{rat, rat_int, sign_of, LinAlgError, Rat, RatMatrix};
pub use reduction::{induces_forest, Reduction, PartitionMode};
pub use signs::{Orientation, SignMatrix};
pub use witness::{
    decimal_string, default_tolerance, exp_approx, verify_witness, VerifyReport, Witness,
    WitnessError,
};
