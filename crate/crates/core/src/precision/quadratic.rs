//! Exact arithmetic in real quadratic fields `Q(sqrt d)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::dyadic::DyadicInterval;
use super::PrecisionError;

/// `u + v * sqrt(d)` with `v != 0` and `d > 1` square-free.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadraticNumber {
    u: BigRational,
    v: BigRational,
    d: BigInt,
}

/// Split `n = s^2 * f` with `f` square-free; returns `(s, f)`.
pub fn square_free_part(n: &BigInt) -> (BigInt, BigInt) {
    assert!(n.is_positive());
    let mut rest = n.clone();
    let mut square = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= rest {
        let pp = &p * &p;
        while (&rest % &pp).is_zero() {
            rest /= &pp;
            square *= &p;
        }
        p += 1;
    }
    (square, rest)
}

impl QuadraticNumber {
    /// Builds `u + v sqrt(d)`; `d` must already be square-free and `v` non-zero.
    pub fn new(u: BigRational, v: BigRational, d: BigInt) -> Self {
        assert!(!v.is_zero(), "quadratic number with zero irrational part");
        assert!(d > BigInt::one(), "quadratic field needs d > 1");
        Self { u, v, d }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.u
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.v
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.d
    }

    /// Sign of `a + c sqrt(d)` for rationals `a`, `c`.
    pub(crate) fn sign_of(a: &BigRational, c: &BigRational, d: &BigInt) -> Ordering {
        let zero = BigRational::zero();
        let sa = a.cmp(&zero);
        let sc = c.cmp(&zero);
        match (sa, sc) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            _ => {
                // opposite signs: compare a^2 with c^2 d
                let lhs = a * a;
                let rhs = c * c * BigRational::from_integer(d.clone());
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => sc,
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn signum(&self) -> Ordering {
        Self::sign_of(&self.u, &self.v, &self.d)
    }

    pub fn cmp_rational(&self, q: &BigRational) -> Ordering {
        Self::sign_of(&(&self.u - q), &self.v, &self.d)
    }

    /// Dyadic enclosure of width at most `2^-bits` (plus one ulp of rounding).
    pub fn enclosure(&self, bits: u32) -> DyadicInterval {
        let guard = bits + self.v.numer().bits() as u32 + self.v.denom().bits() as u32 + 8;
        let root = (&self.d << (2 * guard)).sqrt();
        let root_hi = &root + 1;
        let scale = BigInt::one() << guard;
        let (s_lo, s_hi) = if self.v.is_negative() { (root_hi, root) } else { (root, root_hi) };
        let lo = &self.u + &self.v * BigRational::new(s_lo, scale.clone());
        let hi = &self.u + &self.v * BigRational::new(s_hi, scale);
        let lo_iv = DyadicInterval::from_rational(&lo, bits);
        let hi_iv = DyadicInterval::from_rational(&hi, bits);
        DyadicInterval::from_parts(lo_iv.lo_raw().clone(), hi_iv.hi_raw().clone(), bits)
    }

    pub fn floor(&self) -> BigInt {
        let mut bits = 32;
        loop {
            if let Some(k) = self.enclosure(bits).common_floor() {
                return k;
            }
            bits *= 2;
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.enclosure(80).mid_f64()
    }

    pub(crate) fn checked_mul(&self, other: &Self) -> Result<Self, PrecisionError> {
        if self.d != other.d {
            return Err(PrecisionError::IncompatibleField);
        }
        let d = BigRational::from_integer(self.d.clone());
        let u = &self.u * &other.u + &self.v * &other.v * d;
        let v = &self.u * &other.v + &self.v * &other.u;
        // v = 0 only when one factor is zero, which `QuadraticNumber` excludes
        Ok(Self { u, v, d: self.d.clone() })
    }

    pub fn scale(&self, q: &BigRational) -> Option<Self> {
        (!q.is_zero()).then(|| Self { u: &self.u * q, v: &self.v * q, d: self.d.clone() })
    }
}

impl Add<&BigRational> for &QuadraticNumber {
    type Output = QuadraticNumber;
    fn add(self, q: &BigRational) -> QuadraticNumber {
        QuadraticNumber { u: &self.u + q, v: self.v.clone(), d: self.d.clone() }
    }
}

impl Sub<&BigRational> for &QuadraticNumber {
    type Output = QuadraticNumber;
    fn sub(self, q: &BigRational) -> QuadraticNumber {
        QuadraticNumber { u: &self.u - q, v: self.v.clone(), d: self.d.clone() }
    }
}

impl Neg for &QuadraticNumber {
    type Output = QuadraticNumber;
    fn neg(self) -> QuadraticNumber {
        QuadraticNumber { u: -&self.u, v: -&self.v, d: self.d.clone() }
    }
}

impl Mul<&BigRational> for &QuadraticNumber {
    type Output = ExactPoint;
    fn mul(self, q: &BigRational) -> ExactPoint {
        match self.scale(q) {
            Some(x) => ExactPoint::Quadratic(x),
            None => ExactPoint::Rational(BigRational::zero()),
        }
    }
}

impl fmt::Debug for QuadraticNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QuadraticNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})+({})*sqrt{}", self.u, self.v, self.d)
    }
}

/// An exactly known real number: rational or quadratic irrational.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ExactPoint {
    Rational(BigRational),
    Quadratic(QuadraticNumber),
}

impl ExactPoint {
    pub fn integer(k: i64) -> Self {
        ExactPoint::Rational(BigRational::from_integer(k.into()))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExactPoint::Rational(q) if q.is_zero())
    }

    pub fn signum(&self) -> Ordering {
        match self {
            ExactPoint::Rational(q) => q.cmp(&BigRational::zero()),
            ExactPoint::Quadratic(x) => x.signum(),
        }
    }

    pub fn floor(&self) -> BigInt {
        match self {
            ExactPoint::Rational(q) => q.floor().to_integer(),
            ExactPoint::Quadratic(x) => x.floor(),
        }
    }

    pub fn cmp_rational(&self, q: &BigRational) -> Ordering {
        match self {
            ExactPoint::Rational(p) => p.cmp(q),
            ExactPoint::Quadratic(x) => x.cmp_rational(q),
        }
    }

    pub fn enclosure(&self, bits: u32) -> DyadicInterval {
        match self {
            ExactPoint::Rational(q) => DyadicInterval::from_rational(q, bits),
            ExactPoint::Quadratic(x) => x.enclosure(bits),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactPoint::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
            ExactPoint::Quadratic(x) => x.to_f64(),
        }
    }

    pub fn sub_integer(&self, k: &BigInt) -> Self {
        let k = BigRational::from_integer(k.clone());
        match self {
            ExactPoint::Rational(q) => ExactPoint::Rational(q - k),
            ExactPoint::Quadratic(x) => ExactPoint::Quadratic(x - &k),
        }
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PrecisionError> {
        Ok(match (self, other) {
            (ExactPoint::Rational(a), ExactPoint::Rational(b)) => ExactPoint::Rational(a * b),
            (ExactPoint::Rational(a), ExactPoint::Quadratic(x))
            | (ExactPoint::Quadratic(x), ExactPoint::Rational(a)) => x * a,
            (ExactPoint::Quadratic(x), ExactPoint::Quadratic(y)) => {
                let p = x.checked_mul(y)?;
                if p.v.is_zero() {
                    ExactPoint::Rational(p.u)
                } else {
                    ExactPoint::Quadratic(p)
                }
            }
        })
    }

    /// Fields must agree for exact products: returns the discriminant if any.
    pub fn field(&self) -> Option<&BigInt> {
        match self {
            ExactPoint::Rational(_) => None,
            ExactPoint::Quadratic(x) => Some(&x.d),
        }
    }
}

impl fmt::Debug for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExactPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactPoint::Rational(q) => write!(f, "{q}"),
            ExactPoint::Quadratic(x) => write!(f, "{x}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn phi() -> QuadraticNumber {
        QuadraticNumber::new(rat(1, 2), rat(1, 2), BigInt::from(5))
    }

    #[test]
    fn golden_ratio_squares_to_itself_plus_one() {
        let p = ExactPoint::Quadratic(phi());
        let sq = p.checked_mul(&p).unwrap();
        let expected = ExactPoint::Quadratic(&phi() + &rat(1, 1));
        assert_eq!(sq, expected);
    }

    #[test]
    fn conjugate_product_is_rational() {
        // (1 + sqrt2)(sqrt2 - 1) = 1
        let a = QuadraticNumber::new(rat(1, 1), rat(1, 1), BigInt::from(2));
        let b = QuadraticNumber::new(rat(-1, 1), rat(1, 1), BigInt::from(2));
        let p = ExactPoint::Quadratic(a).checked_mul(&ExactPoint::Quadratic(b)).unwrap();
        assert_eq!(p, ExactPoint::integer(1));
    }

    #[test]
    fn floor_and_sign() {
        assert_eq!(phi().floor(), BigInt::one());
        let neg = QuadraticNumber::new(rat(2, 1), rat(-1, 1), BigInt::from(5));
        assert_eq!(neg.signum(), Ordering::Less); // 2 - sqrt5 < 0
        assert_eq!(neg.floor(), BigInt::from(-1));
    }

    #[test]
    fn enclosure_is_tight_and_sound() {
        let iv = phi().enclosure(100);
        let (lo, hi) = iv.to_f64_bounds();
        assert!(lo <= 1.618_033_988_749_895 && 1.618_033_988_749_894 <= hi);
        assert!(iv.width() <= rat(2, 1) * BigRational::new(1.into(), BigInt::one() << 100));
        assert_eq!(phi().cmp_rational(&rat(16180339, 10000000)), Ordering::Greater);
        assert_eq!(phi().cmp_rational(&rat(16180340, 10000000)), Ordering::Less);
    }

    #[test]
    fn square_free_split() {
        assert_eq!(square_free_part(&BigInt::from(72)), (BigInt::from(6), BigInt::from(2)));
        assert_eq!(square_free_part(&BigInt::from(5)), (BigInt::one(), BigInt::from(5)));
    }
}
