pub mod bca;
pub mod constants;
pub mod error;
pub mod fib;
pub mod spectral;
pub mod target;
pub mod yield_pipeline;

pub use error::{Error, Result};
