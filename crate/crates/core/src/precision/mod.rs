//! Certified arithmetic for iterating `T_b`.
//!
//! Orbit errors grow like `b^n`, so intervals start at roughly
//! `N log2 b + 64` fractional bits and restart at double precision whenever a
//! step cannot decide its digit. Rational and quadratic bases also carry an
//! exact path in `Q(sqrt d)`, which doubles as an oracle for the interval path.

mod beta;
mod dyadic;
mod orbit;
mod quadratic;

use thiserror::Error;

pub use beta::{BetaKind, BetaNumber, BetaSummary, BigFloat, DEFAULT_BASE_BITS};
pub use dyadic::DyadicInterval;
pub use orbit::{
    interval_orbit, tb_apply, tb_orbit, tb_orbit_with, Enclosure, Orbit, OrbitMode, OrbitPath, PrecisionBudget,
};
pub(crate) use orbit::{interval_prefix, run_orbit, OrbitSink};
pub use quadratic::{square_free_part, ExactPoint, QuadraticNumber};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecisionError {
    #[error("malformed beta descriptor {0:?}")]
    Malformed(String),
    #[error("base must exceed 1, got {0}")]
    NotAboveOne(String),
    #[error("enclosure of {0} straddles an integer at {1} bits")]
    StraddlesInteger(String, u32),
    #[error("enclosure of b*x contains an integer")]
    AmbiguousBranch,
    #[error("precision exhausted at {bits} bits (step {step})")]
    PrecisionExhausted { bits: u32, step: usize },
    #[error("orbit length and digit count must be positive")]
    InvalidLength,
    #[error("point outside [0, 1]")]
    OutOfRange,
    #[error("exact arithmetic unavailable for these operands")]
    NotExact,
    #[error("operands live in different quadratic fields")]
    IncompatibleField,
}
