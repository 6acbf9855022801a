//! Exact algebra: the truncated ring `Q[h_0..h_l]/(h_i^N)` that carries every
//! localization integrand, affine forms in the `h_i`, and truncated ε-series.

mod affine;
mod poly;
mod series;

pub use affine::Affine;
pub use poly::TruncatedPoly;
pub use series::EpsilonSeries;
