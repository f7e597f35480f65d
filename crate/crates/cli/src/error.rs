use betalab::beta_shift::BetaShiftError;
use betalab::counterexample::CounterexampleError;
use betalab::orbit_fourier::OrbitFourierError;
use betalab::parry::ParryError;
use betalab::selfsimilar::SelfSimilarError;
use betalab::source::SourceError;
use betalab::PrecisionError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Precision(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Precision(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Precision(m) => write!(f, "precision exhausted: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn exhausted(e: &PrecisionError) -> bool {
    matches!(
        e,
        PrecisionError::PrecisionExhausted { .. }
            | PrecisionError::AmbiguousBranch
            | PrecisionError::StraddlesInteger(..)
    )
}

fn from_precision(e: &PrecisionError) -> CliError {
    if exhausted(e) {
        CliError::Precision(e.to_string())
    } else {
        CliError::Usage(e.to_string())
    }
}

impl From<PrecisionError> for CliError {
    fn from(e: PrecisionError) -> Self {
        from_precision(&e)
    }
}

impl From<BetaShiftError> for CliError {
    fn from(e: BetaShiftError) -> Self {
        match &e {
            BetaShiftError::Precision(p) => from_precision(p),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ParryError> for CliError {
    fn from(e: ParryError) -> Self {
        match &e {
            ParryError::Precision(p) => from_precision(p),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OrbitFourierError> for CliError {
    fn from(e: OrbitFourierError) -> Self {
        match e {
            OrbitFourierError::Precision(p) => p.into(),
            OrbitFourierError::Parry(p) => p.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SelfSimilarError> for CliError {
    fn from(e: SelfSimilarError) -> Self {
        match e {
            SelfSimilarError::BetaShift(b) => b.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CounterexampleError> for CliError {
    fn from(e: CounterexampleError) -> Self {
        CliError::Usage(e.to_string())
    }
}
