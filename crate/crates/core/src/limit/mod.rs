//! Limit objects: kernels, the tilted processes and their samplers.

mod density;
mod importance;
mod kernels;
mod norm;
mod params;
mod sampler;

pub use density::{eta_density_direct, eta_joint_density, TimeGrid};
pub use importance::{importance_sample_x, ImportanceOptions, MinimumRule, WeightedPaths};
pub(crate) use kernels::biane;
pub use kernels::{
    biane_kernel, first_passage, h_fn, killed_kernel, killed_laplace, ln_first_passage, ln_killed_kernel,
};
pub use norm::{norm_const, norm_const_quadrature, DIAGONAL_SWITCH};
pub use params::{extreal, Branch, LimitParams};
pub use sampler::{sample_eta, EtaPaths, EtaSampler};

