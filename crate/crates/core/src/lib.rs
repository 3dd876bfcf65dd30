pub mod classical;
pub mod cli;
pub mod compression;
pub mod conjectures;
pub mod entropy;
pub mod error;
pub mod measures;
pub mod mindep;
pub mod states;
pub mod tensor;

pub use error::{Error, Result};
