use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use regex::Regex;
use serde::Serialize;

use super::dyadic::DyadicInterval;
use super::quadratic::{square_free_part, ExactPoint, QuadraticNumber};
use super::PrecisionError;

/// Default fractional bits for the stored enclosure of a base.
pub const DEFAULT_BASE_BITS: u32 = 128;

/// A decimal literal `mantissa * 10^exponent` together with its requested precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFloat {
    pub mantissa: BigInt,
    pub exponent: i32,
    pub bits: u32,
}

impl BigFloat {
    fn value(&self) -> BigRational {
        let ten = BigInt::from(10);
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa * num_traits::pow(ten, self.exponent as usize))
        } else {
            BigRational::new(self.mantissa.clone(), num_traits::pow(ten, (-self.exponent) as usize))
        }
    }

    /// Error radius of the stored enclosure, `2^-bits`.
    pub fn radius(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::one() << self.bits)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BetaKind {
    Rational(BigRational),
    Quadratic(QuadraticNumber),
    BigFloat(BigFloat),
}

/// A certified base `b > 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct BetaNumber {
    kind: BetaKind,
    descriptor: String,
    enclosure: DyadicInterval,
    floor: u64,
    integer: bool,
}

#[derive(Serialize)]
pub struct BetaSummary {
    pub descriptor: String,
    pub kind: &'static str,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub floor_b: u64,
    pub ceil_b: u64,
    pub bits: u32,
}

fn quad_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:(?P<u>[+-]?\d+(?:/\d+)?)(?P<sign>[+-]))?(?P<v>\d+(?:/\d+)?\*?)?sqrt\(?(?P<d>\d+)\)?$")
            .expect("static regex")
    })
}

fn dec_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?P<int>\d+)\.(?P<frac>\d+)(?:@(?P<bits>\d+))?$").expect("static regex"))
}

fn parse_fraction(text: &str) -> Option<BigRational> {
    let text = text.trim_end_matches('*');
    match text.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.parse().ok()?;
            let n: BigInt = n.parse().ok()?;
            (!d.is_zero()).then(|| BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(text.parse().ok()?)),
    }
}

/// Split `(inner)/w` into `inner` and `w`; bare expressions get `w = 1`.
fn split_outer_division(text: &str) -> Option<(&str, BigInt)> {
    if let Some(rest) = text.strip_prefix('(') {
        let close = rest.rfind(')')?;
        let inner = &rest[..close];
        let tail = &rest[close + 1..];
        if tail.is_empty() {
            return Some((inner, BigInt::one()));
        }
        let w: BigInt = tail.strip_prefix('/')?.parse().ok()?;
        return (!w.is_zero()).then_some((inner, w));
    }
    Some((text, BigInt::one()))
}

impl BetaNumber {
    /// Parse a base descriptor: `INT`, `p/q`, `(u+v*sqrtD)/w`, or `d.ddd[@bits]`.
    pub fn parse(descriptor: &str) -> Result<Self, PrecisionError> {
        let compact: String = descriptor.chars().filter(|c| !c.is_whitespace()).collect();
        let malformed = || PrecisionError::Malformed(descriptor.to_string());
        if compact.is_empty() {
            return Err(malformed());
        }
        let kind = if compact.contains("sqrt") {
            let (inner, w) = split_outer_division(&compact).ok_or_else(malformed)?;
            let caps = quad_regex().captures(inner).ok_or_else(malformed)?;
            let u = match caps.name("u") {
                Some(m) => parse_fraction(m.as_str()).ok_or_else(malformed)?,
                None => BigRational::zero(),
            };
            let mut v = match caps.name("v") {
                Some(m) => parse_fraction(m.as_str()).ok_or_else(malformed)?,
                None => BigRational::one(),
            };
            if caps.name("sign").map(|s| s.as_str()) == Some("-") {
                v = -v;
            }
            let d: BigInt = caps["d"].parse().map_err(|_| malformed())?;
            if d.is_zero() {
                return Err(malformed());
            }
            let (square, core) = square_free_part(&d);
            let w = BigRational::from_integer(w);
            let u = u / &w;
            let v = v * BigRational::from_integer(square) / &w;
            if core.is_one() || v.is_zero() {
                BetaKind::Rational(u + v)
            } else {
                BetaKind::Quadratic(QuadraticNumber::new(u, v, core))
            }
        } else if let Some(caps) = dec_regex().captures(&compact) {
            let frac = &caps["frac"];
            let mantissa: BigInt = format!("{}{}", &caps["int"], frac).parse().map_err(|_| malformed())?;
            let bits = match caps.name("bits") {
                Some(m) => m.as_str().parse().map_err(|_| malformed())?,
                None => DEFAULT_BASE_BITS,
            };
            BetaKind::BigFloat(BigFloat { mantissa, exponent: -(frac.len() as i32), bits })
        } else {
            BetaKind::Rational(parse_fraction(&compact).ok_or_else(malformed)?)
        };
        Self::from_kind(kind, compact)
    }

    pub fn from_rational(q: BigRational) -> Result<Self, PrecisionError> {
        let descriptor = q.to_string();
        Self::from_kind(BetaKind::Rational(q), descriptor)
    }

    pub fn from_integer(k: u64) -> Result<Self, PrecisionError> {
        Self::from_rational(BigRational::from_integer(k.into()))
    }

    /// Exact dyadic base equal to the given `f64`.
    pub fn from_f64(x: f64) -> Result<Self, PrecisionError> {
        let q = BigRational::from_float(x).ok_or_else(|| PrecisionError::Malformed(x.to_string()))?;
        let descriptor = format!("{x}");
        Self::from_kind(BetaKind::Rational(q), descriptor)
    }

    fn from_kind(kind: BetaKind, descriptor: String) -> Result<Self, PrecisionError> {
        let bits = match &kind {
            BetaKind::BigFloat(f) => f.bits,
            _ => DEFAULT_BASE_BITS,
        };
        let enclosure = Self::enclosure_of(&kind, bits);
        let one = BigInt::one() << bits;
        let exact_above_one = match &kind {
            BetaKind::Rational(q) => q > &BigRational::one(),
            BetaKind::Quadratic(x) => x.cmp_rational(&BigRational::one()).is_gt(),
            BetaKind::BigFloat(f) => f.value() > BigRational::one(),
        };
        if !exact_above_one || enclosure.lo_raw() <= &one {
            return Err(PrecisionError::NotAboveOne(descriptor));
        }
        let (floor, integer) = match &kind {
            BetaKind::Rational(q) => (q.floor().to_integer(), q.is_integer()),
            BetaKind::Quadratic(x) => (x.floor(), false),
            BetaKind::BigFloat(f) => {
                let v = f.value();
                if v.is_integer() {
                    return Err(PrecisionError::StraddlesInteger(descriptor, bits));
                }
                match enclosure.common_floor() {
                    Some(k) => (k, false),
                    None => return Err(PrecisionError::StraddlesInteger(descriptor, bits)),
                }
            }
        };
        let floor = floor.to_u64().ok_or_else(|| PrecisionError::Malformed(descriptor.clone()))?;
        Ok(Self { kind, descriptor, enclosure, floor, integer })
    }

    fn enclosure_of(kind: &BetaKind, bits: u32) -> DyadicInterval {
        match kind {
            BetaKind::Rational(q) => DyadicInterval::from_rational(q, bits),
            BetaKind::Quadratic(x) => x.enclosure(bits),
            BetaKind::BigFloat(f) => {
                // the literal widened by its declared radius 2^-f.bits, which must
                // survive regeneration at a finer working precision
                let iv = DyadicInterval::from_rational(&f.value(), bits);
                let pad = BigInt::one() << bits.saturating_sub(f.bits);
                let lo = iv.lo_raw() - &pad;
                let hi = iv.hi_raw() + pad;
                DyadicInterval::from_parts(lo, hi, bits)
            }
        }
    }

    pub fn kind(&self) -> &BetaKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BetaKind::Rational(_) => "rational",
            BetaKind::Quadratic(_) => "quadratic",
            BetaKind::BigFloat(_) => "bigfloat",
        }
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Stored enclosure at the default precision.
    pub fn enclosure(&self) -> &DyadicInterval {
        &self.enclosure
    }

    /// Enclosure regenerated at `bits` fractional bits.
    pub fn enclosure_at(&self, bits: u32) -> DyadicInterval {
        Self::enclosure_of(&self.kind, bits)
    }

    pub fn floor_b(&self) -> u64 {
        self.floor
    }

    pub fn ceil_b(&self) -> u64 {
        if self.integer {
            self.floor
        } else {
            self.floor + 1
        }
    }

    pub fn is_integer(&self) -> bool {
        self.integer
    }

    /// Exact value for rational and quadratic kinds.
    pub fn exact(&self) -> Option<ExactPoint> {
        match &self.kind {
            BetaKind::Rational(q) => Some(ExactPoint::Rational(q.clone())),
            BetaKind::Quadratic(x) => Some(ExactPoint::Quadratic(x.clone())),
            BetaKind::BigFloat(_) => None,
        }
    }

    /// Rational and quadratic integers keep exact orbits of bounded height.
    pub fn is_algebraic_integer(&self) -> bool {
        match &self.kind {
            BetaKind::Rational(q) => q.is_integer(),
            BetaKind::Quadratic(x) => {
                let two = BigRational::from_integer(2.into());
                let trace = x.rational_part() * &two;
                let d = BigRational::from_integer(x.discriminant().clone());
                let norm = x.rational_part() * x.rational_part() - x.irrational_part() * x.irrational_part() * d;
                trace.is_integer() && norm.is_integer()
            }
            BetaKind::BigFloat(_) => false,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.enclosure.mid_f64()
    }

    pub fn ln(&self) -> f64 {
        self.to_f64().ln()
    }

    /// An upper bound on `log2 b`.
    pub fn log2_upper(&self) -> f64 {
        let (_, hi) = self.enclosure.with_bits(64).to_f64_bounds();
        hi.log2() * (1.0 + 1e-12) + 1e-12
    }

    pub fn summary(&self) -> BetaSummary {
        let (lo, hi) = self.enclosure.to_f64_bounds();
        BetaSummary {
            descriptor: self.descriptor.clone(),
            kind: self.kind_name(),
            value: self.to_f64(),
            lo,
            hi,
            floor_b: self.floor_b(),
            ceil_b: self.ceil_b(),
            bits: self.enclosure.bits(),
        }
    }
}

impl fmt::Debug for BetaNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BetaNumber({} ~ {})", self.descriptor, self.to_f64())
    }
}

impl fmt::Display for BetaNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor)
    }
}

impl std::str::FromStr for BetaNumber {
    type Err = PrecisionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_base() {
        let b = BetaNumber::parse("2").unwrap();
        assert_eq!(b.floor_b(), 2);
        assert_eq!(b.ceil_b(), 2);
        assert!(matches!(b.kind(), BetaKind::Rational(_)));
    }

    #[test]
    fn golden_ratio_forms_agree() {
        let a = BetaNumber::parse("(1+sqrt5)/2").unwrap();
        let b = BetaNumber::parse("(1 + 1*sqrt(5))/2").unwrap();
        assert_eq!(a.exact(), b.exact());
        let (lo, hi) = a.enclosure().to_f64_bounds();
        assert!(lo >= 1.618_033_9 && hi <= 1.618_034_0);
        assert_eq!((a.floor_b(), a.ceil_b()), (1, 2));
        assert!(a.is_algebraic_integer());
    }

    #[test]
    fn square_factors_are_pulled_out() {
        let b = BetaNumber::parse("1+sqrt8").unwrap(); // 1 + 2 sqrt2
        match b.kind() {
            BetaKind::Quadratic(x) => {
                assert_eq!(x.discriminant(), &BigInt::from(2));
                assert_eq!(x.irrational_part(), &BigRational::from_integer(2.into()));
            }
            other => panic!("unexpected {other:?}"),
        }
        let r = BetaNumber::parse("(1+sqrt9)/2").unwrap();
        assert_eq!(r.exact(), Some(ExactPoint::integer(2)));
    }

    #[test]
    fn rejects_small_and_malformed() {
        assert!(matches!(BetaNumber::parse("1.0"), Err(PrecisionError::NotAboveOne(_))));
        assert!(matches!(BetaNumber::parse("1"), Err(PrecisionError::NotAboveOne(_))));
        assert!(matches!(BetaNumber::parse("1/2"), Err(PrecisionError::NotAboveOne(_))));
        assert!(matches!(BetaNumber::parse("(1-sqrt5)/2"), Err(PrecisionError::NotAboveOne(_))));
        assert!(matches!(BetaNumber::parse("two"), Err(PrecisionError::Malformed(_))));
        assert!(matches!(BetaNumber::parse("3/0"), Err(PrecisionError::Malformed(_))));
        assert!(matches!(BetaNumber::parse("2.0@64"), Err(PrecisionError::StraddlesInteger(..))));
    }

    #[test]
    fn decimal_literal_with_precision() {
        let b = BetaNumber::parse("1.8@200").unwrap();
        assert_eq!(b.enclosure().bits(), 200);
        assert!(b.exact().is_none());
        assert_eq!(b.floor_b(), 1);
        let (lo, hi) = b.enclosure().to_f64_bounds();
        assert!(lo < 1.8 && 1.8 < hi);
        assert!(BetaNumber::parse("2.5").unwrap().enclosure().bits() == DEFAULT_BASE_BITS);
    }

    #[test]
    fn declared_radius_survives_finer_precision() {
        let b = BetaNumber::parse("1.7@64").unwrap();
        let radius = BigRational::new(BigInt::one(), BigInt::one() << 64);
        let v = BigRational::new(17.into(), 10.into());
        for bits in [64, 128, 1024] {
            let e = b.enclosure_at(bits);
            assert!(e.lo() <= &v - &radius && e.hi() >= &v + &radius);
        }
    }
}
