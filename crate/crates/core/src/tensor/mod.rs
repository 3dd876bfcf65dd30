//! Multipartite density-operator arithmetic.

pub mod io;
pub mod linalg;
pub mod ops;
pub mod random;
pub mod state;

pub use linalg::{CMat, CVec, C64};
pub use ops::{tensor_product, trace_distance, Isometry};
pub use random::{haar_isometry, haar_unitary, random_density, RngSeed};
pub use state::{MultipartiteState, StateKind, Subsystem};
