//! κ-entanglement, logarithmic negativity and exact PPT entanglement cost of
//! finite-dimensional bipartite states.

pub mod linalg;
pub mod sdp;
pub mod measures;
pub mod states;
pub mod channels;
