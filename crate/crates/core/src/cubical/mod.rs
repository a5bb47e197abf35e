//! Elementary cubes, face-closed cubical sets and pairs on a dyadic grid,
//! angular sections, and the lift to the cover over one angular period.

mod chain;
mod cube;
mod grid;
mod pair;

pub use chain::{boundary_chain, Chain, ChainJson};
pub use cube::{Cube, CubeJson, MAX_DIM};
pub use grid::{cubes_of_dim, top_cubes, CubeSet, Grid};
pub use pair::{lift_to_cover, section_restrict, CoveringGrid, CubePair, CubeSetJson, PairJson};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CubicalError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("grid has no angular axis")]
    NoAngularAxis,
    #[error("section index {a} is not a period boundary (0 or {period})")]
    InteriorSection { a: i32, period: i32 },
    #[error("set is not closed under faces: {0:?} missing")]
    NotClosed(Cube),
    #[error("L is not contained in N: {0:?}")]
    NotSubset(Cube),
    #[error("malformed cube data: {0}")]
    Json(String),
}
