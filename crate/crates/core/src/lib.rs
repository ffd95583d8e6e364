pub mod cli;
pub mod discord;
pub mod eof_bound;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod optimize;
pub mod povm;
pub mod scan;
pub mod states;
pub mod tolerance;

pub use error::{Error, Result};
