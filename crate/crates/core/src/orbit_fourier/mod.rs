//! Exponential sums along `T_b` orbits and the quantities built from them.

mod exponent;
mod independence;
mod lemma32;
mod weyl;

use thiserror::Error;

pub use exponent::{optimize_exponent_grid, predicted_exponent, ExponentOptimum};
pub use independence::{check_independence, Independence};
pub use lemma32::{lemma32_check, Lemma32Config, Lemma32Measure, Lemma32Report, MIN_CLOUD};
pub use weyl::{
    empirical_parry_distance, invariance_defect, mean_decay_profile, parry_distance, weyl_sums, wiener_atom_estimate,
    DecayConfig, DecayProfile, InvarianceDefect, WeylRow, WeylSeries, WeylSeries64, PROXY_DEFINITION,
};

use crate::parry::ParryError;
use crate::precision::PrecisionError;
use crate::source::SourceError;

/// Largest frequency accepted by [`weyl_sums`].
pub const MAX_FREQUENCY: i64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitFourierError {
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Parry(#[from] ParryError),
    #[error("frequency {0} exceeds the supported range")]
    FrequencyTooLarge(i64),
    #[error("checkpoints must be a non-empty list of positive lengths")]
    BadCheckpoints,
    #[error("log {b} / log {a} is rational: the bases are multiplicatively dependent")]
    Dependent { a: u64, b: String },
    #[error("source alphabet {source_alphabet} differs from a = {a}")]
    AlphabetMismatch { source_alphabet: usize, a: u64 },
    #[error("at least {0} samples are required")]
    TooFewSamples(usize),
    #[error("exponent inputs need 0 < alpha <= beta")]
    InvalidExponentInput,
    #[error("grid resolution must be at least 100 per axis")]
    CoarseGrid,
    #[error("frequency must be non-zero")]
    ZeroFrequency,
    #[error("radius must be positive")]
    InvalidRadius,
    #[error("interval must satisfy c < d")]
    InvalidInterval,
    #[error("sample cloud looks atomic ({distinct:.3} of points distinct)")]
    Atomic { distinct: f64 },
    #[error("sample cloud needs at least {0} points")]
    TooFewPoints(usize),
}
