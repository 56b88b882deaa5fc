//! The open ASEP: parametrization, generator, exact stationary law,
//! simulation and height functions.

mod config;
mod generator;
mod gillespie;
mod mpa;
mod params;
mod schedule;

pub use config::{height, height_at, hole_transform, Configuration, HeightPath, Position};
pub use generator::{stationary_exact, stationary_exact_capped, Generator, Stationary, DEFAULT_CAP};
pub use gillespie::{
    gillespie_run, sample_stationary, AsepChain, BurninOptions, ExactSampler, Horizon, SampleMethod,
};
pub use mpa::TasepSampler;
pub use params::{boundary_from_rates, kappa_pm, rates_from_boundary, AsepRates, BoundaryParams};
pub use schedule::{triple_point, TriplePointSchedule};
