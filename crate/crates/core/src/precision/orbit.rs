//! Certified iteration of `T_b(x) = b x mod 1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::beta::BetaNumber;
use super::dyadic::{ceil_shift, DyadicInterval};
use super::quadratic::ExactPoint;
use super::PrecisionError;

/// A point of `[0, 1]` known to lie in a dyadic interval, possibly with its exact value.
#[derive(Clone, Debug, PartialEq)]
pub struct Enclosure {
    interval: DyadicInterval,
    exact: Option<ExactPoint>,
}

impl Enclosure {
    pub fn from_interval(interval: DyadicInterval) -> Self {
        Self { interval, exact: None }
    }

    pub fn from_exact(x: ExactPoint, bits: u32) -> Self {
        Self { interval: x.enclosure(bits), exact: Some(x) }
    }

    pub fn rational(q: BigRational) -> Self {
        Self::from_exact(ExactPoint::Rational(q), 128)
    }

    /// `p / q` as an exact point.
    pub fn ratio(p: i64, q: i64) -> Self {
        Self::rational(BigRational::new(p.into(), q.into()))
    }

    /// The seed `1` used for the orbit of one.
    pub fn one() -> Self {
        Self::rational(BigRational::one())
    }

    pub fn zero() -> Self {
        Self::rational(BigRational::zero())
    }

    /// The exact dyadic value of an `f64`.
    pub fn from_f64(x: f64) -> Self {
        Self::rational(BigRational::from_float(x).expect("finite f64"))
    }

    pub fn interval(&self) -> &DyadicInterval {
        &self.interval
    }

    pub fn exact(&self) -> Option<&ExactPoint> {
        self.exact.as_ref()
    }

    /// Interval at `bits` fractional bits; exact points are re-enclosed tightly.
    pub fn interval_at(&self, bits: u32) -> DyadicInterval {
        match &self.exact {
            Some(x) => x.enclosure(bits),
            None => self.interval.with_bits(bits),
        }
    }

    pub fn lo(&self) -> BigRational {
        self.interval.lo()
    }

    pub fn hi(&self) -> BigRational {
        self.interval.hi()
    }

    pub fn to_f64(&self) -> f64 {
        match &self.exact {
            Some(x) => x.to_f64(),
            None => self.interval.mid_f64(),
        }
    }

    pub fn is_certified_zero(&self) -> bool {
        match &self.exact {
            Some(x) => x.is_zero(),
            None => self.interval.is_zero(),
        }
    }

    /// True when `hi - lo <= 10^-digits`.
    pub fn within_decimal(&self, digits: u32) -> bool {
        self.interval.width_within_decimal(digits)
    }

    pub fn certified_decimal_string(&self, max: u32) -> String {
        self.interval.certified_decimal_string(max)
    }

    fn check_unit(&self) -> Result<(), PrecisionError> {
        let lo_ok = self.interval.lo_raw().sign() != num_bigint::Sign::Minus;
        let hi_ok = self.interval.hi_raw() <= &(BigInt::one() << self.interval.bits());
        if lo_ok && hi_ok {
            Ok(())
        } else {
            Err(PrecisionError::OutOfRange)
        }
    }
}

/// Precision schedule for one orbit computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PrecisionBudget {
    pub initial_bits: u32,
    pub max_bits: u32,
}

impl PrecisionBudget {
    /// `ceil(N log2 b) + 64` bits plus room for the requested decimal digits.
    pub fn for_orbit(b: &BetaNumber, n: usize, digits: u32) -> Self {
        let growth = (n as f64 * b.log2_upper()).ceil() as u32;
        let digit_bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32;
        let initial_bits = growth + 64 + digit_bits;
        Self { initial_bits, max_bits: initial_bits.saturating_mul(16).max(4096) }
    }

    pub fn doubled(self) -> Self {
        Self { initial_bits: self.initial_bits.saturating_mul(2), max_bits: self.max_bits.saturating_mul(2) }
    }
}

/// Which arithmetic produced an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitPath {
    Exact,
    Interval,
}

/// How `tb_orbit` picks its arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitMode {
    /// Exact when cheap, interval otherwise (falling back to exact if the interval path stalls).
    Auto,
    Exact,
    Interval,
}

/// Points `T^1 x0, ..., T^N x0` and digits `floor(b T^i x0)` for `i = 0..N`.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub points: Vec<Enclosure>,
    pub digits: Vec<u32>,
    pub bits_used: u32,
    pub path: OrbitPath,
}

/// Receives orbit points as they are produced; `reset` is called on every restart.
pub(crate) trait OrbitSink {
    fn reset(&mut self);
    fn push(&mut self, point: &DyadicInterval, exact: Option<&ExactPoint>, digit: u32);
}

struct CollectSink {
    points: Vec<Enclosure>,
    digits: Vec<u32>,
}

impl OrbitSink for CollectSink {
    fn reset(&mut self) {
        self.points.clear();
        self.digits.clear();
    }

    fn push(&mut self, point: &DyadicInterval, exact: Option<&ExactPoint>, digit: u32) {
        self.points.push(Enclosure { interval: point.clone(), exact: exact.cloned() });
        self.digits.push(digit);
    }
}

fn digit_bits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 8
}

fn compatible(b: &ExactPoint, x: &ExactPoint) -> bool {
    match (b.field(), x.field()) {
        (Some(d1), Some(d2)) => d1 == d2,
        _ => true,
    }
}

fn exact_step(b: &ExactPoint, x: &ExactPoint) -> Result<(ExactPoint, BigInt), PrecisionError> {
    let y = b.checked_mul(x)?;
    let k = y.floor();
    Ok((y.sub_integer(&k), k))
}

/// `b * x` over intervals at a common precision, reduced mod 1.
fn interval_step(b: &DyadicInterval, x: &DyadicInterval) -> Result<(DyadicInterval, BigInt), PrecisionError> {
    let p = x.bits();
    debug_assert_eq!(b.bits(), p);
    let lo = (b.lo_raw() * x.lo_raw()) >> p;
    let hi = ceil_shift(&(b.hi_raw() * x.hi_raw()), p);
    let k = &lo >> p;
    if (&hi >> p) != k {
        return Err(PrecisionError::AmbiguousBranch);
    }
    let shift = &k << p;
    Ok((DyadicInterval::from_parts(lo - &shift, hi - shift, p), k))
}

fn digit_u32(k: &BigInt) -> u32 {
    k.to_u32().expect("digit fits u32")
}

/// One application of `T_b`: the enclosure of `{b x}` and the digit `floor(b x)`.
pub fn tb_apply(b: &BetaNumber, x: &Enclosure) -> Result<(Enclosure, u32), PrecisionError> {
    x.check_unit()?;
    let bits = x.interval.bits();
    if let (Some(be), Some(xe)) = (b.exact(), x.exact()) {
        if compatible(&be, xe) {
            let (y, k) = exact_step(&be, xe)?;
            return Ok((Enclosure::from_exact(y, bits), digit_u32(&k)));
        }
    }
    let (y, k) = interval_step(&b.enclosure_at(bits), &x.interval)?;
    Ok((Enclosure::from_interval(y), digit_u32(&k)))
}

fn validate(x0: &Enclosure, n: usize, digits: u32) -> Result<(), PrecisionError> {
    if n == 0 || digits == 0 {
        return Err(PrecisionError::InvalidLength);
    }
    x0.check_unit()
}

pub(crate) fn run_exact(
    b: &ExactPoint,
    x0: &ExactPoint,
    n: usize,
    digits: u32,
    sink: &mut impl OrbitSink,
) -> Result<u32, PrecisionError> {
    let bits = digit_bits(digits);
    sink.reset();
    let mut x = x0.clone();
    for _ in 0..n {
        let (y, k) = exact_step(b, &x)?;
        sink.push(&y.enclosure(bits), Some(&y), digit_u32(&k));
        x = y;
    }
    Ok(bits)
}

/// Interval iteration starting at `bits`; fails with the offending step index.
fn run_interval_at(
    b: &BetaNumber,
    x0: &Enclosure,
    n: usize,
    digits: u32,
    bits: u32,
    sink: &mut impl OrbitSink,
) -> Result<(), usize> {
    sink.reset();
    let b_full = b.enclosure_at(bits);
    let mut b_cur = b_full.clone();
    let mut x = x0.interval_at(bits);
    for i in 0..n {
        let (y, k) = interval_step(&b_cur, &x).map_err(|_| i)?;
        if !y.width_within_decimal(digits) {
            return Err(i);
        }
        sink.push(&y, None, digit_u32(&k));
        // bits far below the current width carry no information; drop them
        let spread = y.width_ulp_bits();
        x = if spread > 64 {
            let target = y.bits() - (spread as u32 - 32);
            b_cur = b_full.with_bits(target);
            y.with_bits(target)
        } else {
            y
        };
    }
    Ok(())
}

pub(crate) fn run_interval(
    b: &BetaNumber,
    x0: &Enclosure,
    n: usize,
    digits: u32,
    budget: PrecisionBudget,
    sink: &mut impl OrbitSink,
) -> Result<u32, PrecisionError> {
    let mut bits = budget.initial_bits;
    loop {
        match run_interval_at(b, x0, n, digits, bits, sink) {
            Ok(()) => return Ok(bits),
            Err(step) => {
                if bits >= budget.max_bits {
                    return Err(PrecisionError::PrecisionExhausted { bits, step });
                }
                bits = bits.saturating_mul(2).min(budget.max_bits);
            }
        }
    }
}

fn prefers_exact(b: &BetaNumber, x0: &ExactPoint, n: usize) -> bool {
    if n <= 256 {
        return true;
    }
    let small_seed = match x0 {
        ExactPoint::Rational(q) => q.numer().bits() + q.denom().bits() <= 512,
        ExactPoint::Quadratic(_) => true,
    };
    b.is_algebraic_integer() && small_seed
}

pub(crate) fn run_orbit(
    b: &BetaNumber,
    x0: &Enclosure,
    n: usize,
    digits: u32,
    mode: OrbitMode,
    budget: PrecisionBudget,
    sink: &mut impl OrbitSink,
) -> Result<(u32, OrbitPath), PrecisionError> {
    validate(x0, n, digits)?;
    let exact_pair = match (b.exact(), x0.exact()) {
        (Some(be), Some(xe)) if compatible(&be, xe) => Some((be, xe.clone())),
        _ => None,
    };
    match (mode, exact_pair) {
        (OrbitMode::Exact, Some((be, xe))) => Ok((run_exact(&be, &xe, n, digits, sink)?, OrbitPath::Exact)),
        (OrbitMode::Exact, None) => Err(PrecisionError::NotExact),
        (OrbitMode::Interval, _) => Ok((run_interval(b, x0, n, digits, budget, sink)?, OrbitPath::Interval)),
        (OrbitMode::Auto, Some((be, xe))) => {
            if prefers_exact(b, &xe, n) {
                return Ok((run_exact(&be, &xe, n, digits, sink)?, OrbitPath::Exact));
            }
            // a short budget: exact landings on branch points exhaust it quickly
            let quick = PrecisionBudget { initial_bits: budget.initial_bits, max_bits: budget.initial_bits * 2 };
            match run_interval(b, x0, n, digits, quick, sink) {
                Ok(bits) => Ok((bits, OrbitPath::Interval)),
                Err(PrecisionError::PrecisionExhausted { .. }) => {
                    Ok((run_exact(&be, &xe, n, digits, sink)?, OrbitPath::Exact))
                }
                Err(e) => Err(e),
            }
        }
        (OrbitMode::Auto, None) => Ok((run_interval(b, x0, n, digits, budget, sink)?, OrbitPath::Interval)),
    }
}

/// Orbit of length `n` with every point certified to `digits` decimals.
pub fn tb_orbit(b: &BetaNumber, x0: &Enclosure, n: usize, digits: u32) -> Result<Orbit, PrecisionError> {
    tb_orbit_with(b, x0, n, digits, OrbitMode::Auto, PrecisionBudget::for_orbit(b, n, digits))
}

pub fn tb_orbit_with(
    b: &BetaNumber,
    x0: &Enclosure,
    n: usize,
    digits: u32,
    mode: OrbitMode,
    budget: PrecisionBudget,
) -> Result<Orbit, PrecisionError> {
    let mut sink = CollectSink { points: Vec::with_capacity(n), digits: Vec::with_capacity(n) };
    let (bits_used, path) = run_orbit(b, x0, n, digits, mode, budget, &mut sink)?;
    Ok(Orbit { points: sink.points, digits: sink.digits, bits_used, path })
}

/// Interval-only orbit (never consults exact values), for cross-checking the exact path.
pub fn interval_orbit(
    b: &BetaNumber,
    x0: &Enclosure,
    n: usize,
    digits: u32,
    budget: PrecisionBudget,
) -> Result<Orbit, PrecisionError> {
    tb_orbit_with(b, x0, n, digits, OrbitMode::Interval, budget)
}

/// Longest certified prefix of the interval orbit at a fixed precision.
pub(crate) fn interval_prefix(b: &BetaNumber, x0: &Enclosure, n: usize, bits: u32) -> (Vec<Enclosure>, Vec<u32>) {
    let mut sink = CollectSink { points: Vec::new(), digits: Vec::new() };
    // digits = 1 keeps the width test from cutting the prefix short
    let _ = run_interval_at(b, x0, n, 1, bits, &mut sink);
    (sink.points, sink.digits)
}
