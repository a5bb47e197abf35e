//! Movability of lifted cubes under the short-time flow, movable section
//! bases, the contiguous-cycle systems that produce the matrix `A` with
//! witness chains, and the full-period transport cross-check.

mod basis;
mod mask;
mod system;
mod transport;
mod witness;

pub use basis::{movable_basis, movable_section_pair, SectionBasis};
pub use mask::{base_cube, movability_mask, tube_flags, MovabilityMask, TubeCertificate};
pub use system::{
    coefficient_matrix, lift_chain, solve_slice, ContiguitySolution, ContiguitySystem, SliceSolve, SolutionJson,
};
pub use transport::corollary_transport;
pub use witness::{
    assemble_a, check_solution, compose_halves, contiguity_witness, verify_witness, ContiguityRun, ContiguityWitness,
    HalfComposition, WitnessJson, WitnessViolation,
};

use thiserror::Error;

use crate::cubical::{Cube, CubicalError};
use crate::homology::HomologyError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContiguityError {
    #[error(transparent)]
    Cubical(#[from] CubicalError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error("{missing} degree-{degree} classes have no movable representative; refine s, shrink h, or thicken N")]
    NotMovable { degree: usize, missing: usize },
    #[error("contiguity system in degree {degree} is infeasible: {residual_rows} rows remain, first at {cube:?}; refine s, shrink h, or thicken N")]
    Infeasible {
        degree: usize,
        cube: Option<Cube>,
        residual_rows: usize,
    },
    #[error("no solution for basis cycle {column} in degree {degree}")]
    MissingSolve { degree: usize, column: usize },
    #[error("transport cross-check unavailable: {0}")]
    TransportUnavailable(String),
    #[error("malformed witness data: {0}")]
    Json(String),
}
