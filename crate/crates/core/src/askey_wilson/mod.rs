//! Askey–Wilson measures and the associated Markov process.

mod generating;
mod measure;
mod process;

pub use generating::{generating_function_aw, generating_function_aw_with, generating_function_exact, GfMethod, MAX_POINTS};
pub use measure::{aw_atoms, aw_density, Atom, AwMeasure, AwParams};
pub use process::{aw_marginal, aw_transition, marginal_params, transition_params};
