pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod qmat;
pub mod thermo;
pub mod witness;

pub use error::{Error, Result};
