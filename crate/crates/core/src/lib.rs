pub mod acceptance;
pub mod cli;
pub mod config;
pub mod crit;
pub mod error;
pub mod field;
pub mod flow;
pub mod hyp;
pub mod quad;
pub mod radon;
pub mod surface;

pub use error::{Error, Result};
