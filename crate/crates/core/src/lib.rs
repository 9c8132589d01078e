//! Exact spectral computations over the Laurent series field ℚ((t)).

pub mod fredholm;
pub mod hahn;
pub mod linalg;
pub mod operators;
pub mod scalars;
pub mod spectral;
pub mod suite;
pub mod textio;
pub mod verdict;
