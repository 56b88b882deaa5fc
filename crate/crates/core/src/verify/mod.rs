//! End-to-end experiments linking the finite system to its limit.

mod converge;
mod finite;
mod lemmas;

pub use converge::{
    convergence_experiment, limit_height_samples, rn_crosscheck, ConvergenceReport, ExactEntry, ExperimentConfig, KsEntry, McEntry,
    MomentRow, RnReport, Skipped, SCHEMA,
};
pub use finite::{
    finite_n_laplace, height_draws, jittered_scaled, FiniteValue, LaplaceMode, Observable, StationarySource, REPLICAS,
};
pub use lemmas::{
    lemma1_check, lemma2_check, marginal_limit, pi_n, rescaled_marginal, rescaled_transition, transition_limit,
    RatioReport, RatioRow,
};
