pub mod algebra;
pub mod contiguity;
pub mod cubical;
pub mod flow;
pub mod homology;
pub mod index_pair;
pub mod pipeline;
