use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Closed interval `[lo / 2^bits, hi / 2^bits]` with big-integer endpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    lo: BigInt,
    hi: BigInt,
    bits: u32,
}

pub(crate) fn ceil_shift(x: &BigInt, shift: u32) -> BigInt {
    // floor(-x / 2^s) = -ceil(x / 2^s)
    -((-x) >> shift)
}

impl DyadicInterval {
    pub fn from_parts(lo: BigInt, hi: BigInt, bits: u32) -> Self {
        assert!(lo <= hi, "dyadic interval endpoints out of order");
        Self { lo, hi, bits }
    }

    /// Tightest interval at `bits` fractional bits containing `q`.
    pub fn from_rational(q: &BigRational, bits: u32) -> Self {
        let scaled = q.numer() << bits;
        let (quot, rem) = scaled.div_mod_floor(q.denom());
        let hi = if rem.is_zero() { quot.clone() } else { &quot + 1 };
        Self { lo: quot, hi, bits }
    }

    pub fn from_integer(k: i64, bits: u32) -> Self {
        let v = BigInt::from(k) << bits;
        Self { lo: v.clone(), hi: v, bits }
    }

    pub fn zero(bits: u32) -> Self {
        Self::from_integer(0, bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lo_raw(&self) -> &BigInt {
        &self.lo
    }

    pub fn hi_raw(&self) -> &BigInt {
        &self.hi
    }

    pub fn lo(&self) -> BigRational {
        BigRational::new(self.lo.clone(), BigInt::one() << self.bits)
    }

    pub fn hi(&self) -> BigRational {
        BigRational::new(self.hi.clone(), BigInt::one() << self.bits)
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(&self.hi - &self.lo, BigInt::one() << self.bits)
    }

    /// Number of bits in the width counted in ulps (0 for a point).
    pub fn width_ulp_bits(&self) -> u64 {
        (&self.hi - &self.lo).bits()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_zero(&self) -> bool {
        self.lo.is_zero() && self.hi.is_zero()
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lo() <= q && q <= &self.hi()
    }

    /// True when `hi - lo <= 10^-digits`.
    pub fn width_within_decimal(&self, digits: u32) -> bool {
        let width = &self.hi - &self.lo;
        width * num_traits::pow(BigInt::from(10), digits as usize) <= BigInt::one() << self.bits
    }

    /// Re-express at a different precision; coarsening rounds outward, refining is exact.
    pub fn with_bits(&self, bits: u32) -> Self {
        if bits >= self.bits {
            let s = bits - self.bits;
            Self { lo: &self.lo << s, hi: &self.hi << s, bits }
        } else {
            let s = self.bits - bits;
            Self { lo: &self.lo >> s, hi: ceil_shift(&self.hi, s), bits }
        }
    }

    /// `floor` of every element, if it is the same across the interval.
    pub fn common_floor(&self) -> Option<BigInt> {
        let a = &self.lo >> self.bits;
        let b = &self.hi >> self.bits;
        (a == b).then_some(a)
    }

    pub fn floor_lo(&self) -> BigInt {
        &self.lo >> self.bits
    }

    pub fn floor_hi(&self) -> BigInt {
        &self.hi >> self.bits
    }

    fn endpoint_f64(v: &BigInt, bits: u32, upward: bool) -> f64 {
        let keep = 64u32;
        let (shifted, scale) = if bits > keep {
            let s = bits - keep;
            let w = if upward { ceil_shift(v, s) } else { v >> s };
            (w, keep)
        } else {
            (v.clone(), bits)
        };
        let approx =
            shifted.to_f64().unwrap_or(if shifted.sign() == Sign::Minus { f64::NEG_INFINITY } else { f64::INFINITY })
                * (2f64).powi(-(scale as i32));
        if approx == 0.0 && shifted.is_zero() {
            return 0.0;
        }
        if upward {
            approx.next_up()
        } else {
            approx.next_down()
        }
    }

    /// Outward-rounded `f64` bounds.
    pub fn to_f64_bounds(&self) -> (f64, f64) {
        if self.is_point() && self.lo.bits() <= 53 {
            let v = self.lo.to_f64().unwrap() * (2f64).powi(-(self.bits as i32));
            if self.bits <= 1000 {
                return (v, v);
            }
        }
        (Self::endpoint_f64(&self.lo, self.bits, false), Self::endpoint_f64(&self.hi, self.bits, true))
    }

    pub fn mid_f64(&self) -> f64 {
        let sum: BigInt = &self.lo + &self.hi;
        let keep = 64u32;
        let total = self.bits + 1;
        if total > keep {
            let s = total - keep;
            (&sum >> s).to_f64().unwrap() * (2f64).powi(-(keep as i32))
        } else {
            sum.to_f64().unwrap() * (2f64).powi(-(total as i32))
        }
    }

    /// Number of decimal fraction digits shared by both endpoints, up to `max`.
    pub fn certified_decimals(&self, max: u32) -> u32 {
        let agree = |k: u32| {
            let p = num_traits::pow(BigInt::from(10), k as usize);
            ((&self.lo * &p) >> self.bits) == ((&self.hi * &p) >> self.bits)
        };
        if self.common_floor().is_none() {
            return 0;
        }
        let (mut good, mut bad) = (0u32, max + 1);
        if agree(max) {
            return max;
        }
        while bad - good > 1 {
            let mid = (good + bad) / 2;
            if agree(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    }

    /// Decimal rendering `I.ddd` with only the certified fraction digits.
    pub fn certified_decimal_string(&self, max: u32) -> String {
        let k = self.certified_decimals(max);
        let Some(int_part) = self.common_floor() else {
            return format!("[{}, {}]", self.to_f64_bounds().0, self.to_f64_bounds().1);
        };
        let p = num_traits::pow(BigInt::from(10), k as usize);
        let scaled = (&self.lo * &p) >> self.bits;
        let frac = scaled - &int_part * &p;
        if k == 0 {
            return int_part.to_string();
        }
        format!("{}.{:0>width$}", int_part, frac.abs().to_string(), width = k as usize)
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_f64_bounds();
        write!(f, "[{lo:e}, {hi:e}]@{}b", self.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_enclosure_brackets_value() {
        let third = q(1, 3);
        let iv = DyadicInterval::from_rational(&third, 40);
        assert!(iv.contains(&third));
        assert!(iv.width() <= q(1, 1 << 40));
        let half = DyadicInterval::from_rational(&q(1, 2), 8);
        assert!(half.is_point());
    }

    #[test]
    fn coarsening_rounds_outward() {
        let iv = DyadicInterval::from_rational(&q(2, 7), 200);
        let coarse = iv.with_bits(30);
        assert!(coarse.contains(&q(2, 7)));
        assert!(coarse.lo() <= iv.lo() && coarse.hi() >= iv.hi());
        assert_eq!(coarse.with_bits(60).lo(), coarse.lo());
    }

    #[test]
    fn certified_digits_of_one_third() {
        let iv = DyadicInterval::from_rational(&q(1, 3), 120);
        assert_eq!(iv.certified_decimal_string(20), "0.33333333333333333333");
        let (lo, hi) = iv.to_f64_bounds();
        assert!(lo < 1.0 / 3.0 + 1e-16 && hi > 1.0 / 3.0 - 1e-16 && lo <= hi);
    }

    #[test]
    fn common_floor_detects_straddle() {
        let iv = DyadicInterval::from_parts(BigInt::from(255), BigInt::from(257), 8);
        assert!(iv.common_floor().is_none());
        let iv = DyadicInterval::from_parts(BigInt::from(256), BigInt::from(300), 8);
        assert_eq!(iv.common_floor(), Some(BigInt::one()));
    }
}
