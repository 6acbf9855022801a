//! Exact engines for two- and (2+1)-pointed quasimap intersection numbers of
//! degree-`k` hypersurfaces in `CP^{N-1}`.
//!
//! Three independent routes compute the same numbers:
//!
//! * [`localization`]: fixed-point sums over ordered compositions of the degree,
//!   evaluated in a truncated polynomial ring with generic rational weights;
//! * [`residue`]: iterated residues of a rational integrand in `d + 1` variables;
//! * [`closed_form`]: ε-expansion coefficients of the hypergeometric series
//!   `∏(r + Nε) / ∏(r + ε)^N`.
//!
//! [`verification`] cross-checks the routes and the identities that relate them.

pub mod algebra;
pub mod closed_form;
pub mod combinatorics;
pub mod error;
pub mod localization;
pub mod rational;
pub mod residue;
pub mod verification;

pub use algebra::{Affine, EpsilonSeries, TruncatedPoly};
pub use combinatorics::{compositions, generate_weights, validate_weights, Composition, WeightSpec};
pub use error::{Error, Result};
pub use localization::IntersectionQuery;
pub use rational::Rational;
