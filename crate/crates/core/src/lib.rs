pub mod approximator;
pub mod cli;
pub mod dyadic;
pub mod embedding;
pub mod error;
pub mod kaczmarz;
pub mod model_io;
pub mod par;
pub mod registry;
pub mod rng;
pub mod smolyak;
pub mod verify;

pub use error::{Error, Result};

/// A point of the unit square, `[x, y]`.
pub type Point = [f64; 2];
