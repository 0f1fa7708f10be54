pub mod dfs;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod cli;
pub mod model;
pub mod observables;

pub use error::{Error, Result};
