//! Numerical laboratory for the almost Mathieu operator
//!
//! ```text
//! (H u)_n = u_{n+1} + u_{n-1} + 2 λ cos 2π(θ + nα) u_n
//! ```
//!
//! The crate is organised bottom-up:
//!
//! - [`frequency`]: exact continued-fraction arithmetic for the frequency α
//!   (convergents, Δ_n, the finite-depth β proxy, Liouville constructions
//!   and certified reduction of nα mod 1).
//! - [`operator`]: finite-box Hamiltonians, log-scaled box determinants
//!   `P_k` and membership in the sets `A_{k,r}`.
//! - [`green`]: box Green functions (Cramer ratios and a dense oracle),
//!   `(t, k)`-regularity and the block resolvent expansion.
//! - [`resonance`]: resonant/non-resonant sites, uniformity of phase sets,
//!   sine-sum estimates and exceptional-phase screening.
//! - [`localization`]: eigenpairs of large boxes, decay-rate fits and
//!   Lyapunov exponents.
//! - [`precise`]: fixed-point refinement of eigenpairs for identities that
//!   double precision cannot resolve.

pub mod error;
pub mod frequency;
pub mod green;
pub mod localization;
pub mod operator;
pub mod precise;
pub mod resonance;
pub mod tridiag;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

mod numeric;

pub use error::{Error, Result};
pub use frequency::{
    construct_liouville, construct_liouville_with, convergents, estimate_beta, reduce_mod_1,
    BetaEstimate, Convergent, FrequencySpec, LiouvilleRule, Reduced, Rotation,
};
pub use green::{
    block_expand, block_expand_refined, classify_regular, green_cramer, green_decay_rate, green_direct,
    iterate_expansion, BoxGreen, ExpansionRule, ExpansionTrace, LogValue, RegularityVerdict,
};
pub use localization::{
    eigensolve, fit_decay, lyapunov, DecayConfig, DecayReport, Eigenpair, Selector,
};
pub use operator::{box_hamiltonian, det_p, det_p_sites, growth_rate, in_a, Interval, LogDet, ModelParams};
pub use precise::{refine_eigenpair, RefinedEigenpair};
pub use resonance::{
    classify_site, is_exceptional_phase, sine_sum_check, uniformity_product, ResonanceReport,
    UniformityReport,
};
