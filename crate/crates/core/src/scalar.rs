//! Scalar abstractions shared by the measure and Fourier code.
//!
//! Floating-point code is written against [`Real`] (implemented for `f32`
//! and `f64`); exact cylinder arithmetic is written against [`Scalar`],
//! which additionally admits `BigRational`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};
use serde::Serialize;

/// floating point: f32 or f64
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal fits every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real always converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field elements usable for exact or approximate probability bookkeeping.
pub trait Scalar:
    Clone + Num + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Tolerance used when checking that a row sums to one.
    fn stochastic_tolerance() -> Self;

    /// Parse a probability written as `p/q`, an integer, or a decimal literal.
    fn parse_probability(text: &str) -> Option<Self>;
}

impl Scalar for f64 {
    fn stochastic_tolerance() -> Self {
        1e-12
    }

    fn parse_probability(text: &str) -> Option<Self> {
        parse_rational(text).and_then(|q| q.to_f64())
    }
}

impl Scalar for BigRational {
    fn stochastic_tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn parse_probability(text: &str) -> Option<Self> {
        parse_rational(text)
    }
}

/// Parse `p/q`, `p`, or a plain decimal such as `0.125` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
        || (int_part.is_empty() && frac_part.is_empty())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::from(0) } else { digits.parse().ok()? };
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let q = BigRational::new(numer, denom);
    Some(if negative { -q } else { q })
}

/// A closed interval `[lo, hi]` of floating-point values with outward padding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Real> Bounds<F> {
    pub fn new(lo: F, hi: F) -> Self {
        debug_assert!(lo <= hi, "inverted bounds");
        Self { lo, hi }
    }

    pub fn point(x: F) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> F {
        self.hi - self.lo
    }

    pub fn mid(&self) -> F {
        (self.lo + self.hi) / F::lit(2.0)
    }

    pub fn contains(&self, x: F) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Widen by `ulps` relative machine epsilons plus an absolute floor.
    pub fn pad(self, ulps: F) -> Self {
        let eps = F::epsilon() * ulps;
        let tiny = F::min_positive_value();
        Self { lo: self.lo - self.lo.abs() * eps - tiny, hi: self.hi + self.hi.abs() * eps + tiny }
    }

    pub fn plus(self, other: Self) -> Self {
        Self { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    /// Quotient of two positive intervals.
    pub fn div_positive(self, other: Self) -> Self {
        debug_assert!(other.lo > F::zero());
        Self { lo: self.lo / other.hi, hi: self.hi / other.lo }
    }
}

/// Complex value together with a certified (or estimated) error radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate<F> {
    pub value: num_complex::Complex<F>,
    pub radius: F,
}

/// `e(x) = exp(2 pi i x)`, reducing the argument mod 1 first.
pub fn unit_phase<F: Real>(x: F) -> num_complex::Complex<F> {
    let frac = x - x.floor();
    let (s, c) = (F::TAU() * frac).sin_cos();
    num_complex::Complex::new(c, s)
}

/// Ordinary least-squares slope and intercept of `ys` against `xs`.
pub fn least_squares<F: Real>(xs: &[F], ys: &[F]) -> Option<(F, F)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = F::from_usize(xs.len())?;
    let mx = xs.iter().fold(F::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(F::zero(), |a, &y| a + y) / n;
    let (mut sxy, mut sxx) = (F::zero(), F::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    if sxx == F::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Median of a slice (average of the two middle values for even lengths).
pub fn median<F: Real>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median of NaN"));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / F::lit(2.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rational_forms() {
        assert_eq!(parse_rational("3/6"), Some(BigRational::new(1.into(), 2.into())));
        assert_eq!(parse_rational("0.125"), Some(BigRational::new(1.into(), 8.into())));
        assert_eq!(parse_rational("-2"), Some(BigRational::from_integer((-2).into())));
        assert_eq!(parse_rational(".5"), Some(BigRational::new(1.into(), 2.into())));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let (slope, icpt) = least_squares(&xs, &ys).unwrap();
        assert!((slope - 2.0).abs() < 1e-12 && (icpt + 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_phase_is_periodic() {
        let a = unit_phase(0.25_f64);
        let b = unit_phase(7.25_f64);
        assert!((a - b).norm() < 1e-12);
        assert!((a.im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }
}
