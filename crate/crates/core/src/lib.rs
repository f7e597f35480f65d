//! Numerical laboratory for beta-transformations `T_b(x) = b x mod 1`:
//! certified orbits, beta-expansions, the Parry measure, Weyl sums along
//! orbits of generic points, self-similar measures, and a stationary-coding
//! counterexample to a near-diagonal decay condition.

pub mod beta_shift;
pub mod counterexample;
pub mod orbit_fourier;
pub mod parry;
pub mod precision;
pub mod scalar;
pub mod selfsimilar;
pub mod source;

pub use orbit_fourier::WeylSeries64;
pub use precision::{BetaNumber, DyadicInterval, Enclosure, ExactPoint, PrecisionBudget, PrecisionError};
pub use selfsimilar::SelfSimilar64;
pub use source::{ExactSource, FloatSource};

/// Weyl sums in single precision.
pub type WeylSeries32 = orbit_fourier::WeylSeries<f32>;
/// Self-similar measure evaluated in single precision.
pub type SelfSimilar32 = selfsimilar::SelfSimilarMeasure<f32>;
