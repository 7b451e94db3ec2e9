pub mod analysis;
pub mod cli;
pub mod barycenter;
pub mod constructions;
pub mod domains;
pub mod error;
pub mod flow;
pub mod functional;
pub mod grid;
pub mod io;

pub use error::{Error, Result};
