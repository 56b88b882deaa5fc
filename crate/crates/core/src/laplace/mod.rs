//! Laplace transforms of the limit process, the dual representation
//! through the Biane process, and the auxiliary integral identities.

mod duality;
mod identities;
mod psi;
mod query;

pub use duality::{dual_identity_check, f_hat, f_kernel, g_hat, DualVariant};
pub use identities::{
    c_ac_closed, f_kernel_check, identity_suite, DUAL_TOL, FH_TOL, PSI_TOL, laplace_h_chain, lemma_cac_check, lemma_fh_check, IdentityReport,
};
pub use psi::{bm_laplace, biane_integral, eta_laplace, limit_laplace, psi, MAX_DIM};
pub use query::{LaplaceQuery, BOUNDARY_MARGIN};
