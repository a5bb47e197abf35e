//! Outer approximations of the time-`h` map on cubes, invariant parts,
//! isolation checks, and construction and verification of index pairs.

mod map;
mod pair;

pub use map::{
    combinatorial_boundary, invariant_part, isolating_check, outer_approximation, IsolationCheck, MapJson,
    MultivaluedCubeMap,
};
pub use pair::{
    build_index_pair, thicken_exit_set, transversality_certificate, verify_index_pair, BuiltPair, ConditionResult,
    IndexPairDiagnostics, IsolationEvidence,
};

use thiserror::Error;

use crate::cubical::Cube;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexPairError {
    #[error("{} cube images could not be validated (first failure: {reason})", cubes.len())]
    Unvalidated { cubes: Vec<Cube>, reason: String },
    #[error("cube {0:?} lies outside the domain of the outer approximation")]
    NotInDomain(Cube),
    #[error("refinement needed: {0}")]
    Refinement(String),
}
