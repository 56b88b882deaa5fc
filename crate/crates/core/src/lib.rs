pub mod askey_wilson;
pub mod asep;
pub mod coupling;
pub mod error;
pub mod laplace;
pub mod limit;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
