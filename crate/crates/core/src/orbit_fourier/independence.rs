use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::OrbitFourierError;
use crate::precision::{BetaKind, BetaNumber};

/// How multiplicative independence of `a` and `b` was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Independence {
    /// Decided exactly from the representation of `b`.
    Verified,
    /// Taken on trust (decimal bases).
    Asserted,
}

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `p^s = a^r` for some positive `r, s` iff the exponent vectors are proportional.
fn integers_dependent(p: u64, a: u64) -> bool {
    let fp = factor(p);
    let fa = factor(a);
    if fp.len() != fa.len() || fp.iter().zip(&fa).any(|(x, y)| x.0 != y.0) {
        return false;
    }
    let (e0, f0) = (fp[0].1 as u64, fa[0].1 as u64);
    fp.iter().zip(&fa).all(|(x, y)| x.1 as u64 * f0 == y.1 as u64 * e0)
}

fn rational_dependent(q: &BigRational, a: u64) -> Option<bool> {
    if !q.is_integer() {
        // a power of a non-integer rational is never an integer
        return Some(false);
    }
    q.to_integer().to_u64().map(|p| integers_dependent(p, a))
}

/// Decide whether `log b / log a` is irrational where the representation allows it.
pub fn check_independence(a: u64, b: &BetaNumber) -> Result<Independence, OrbitFourierError> {
    let dependent = || OrbitFourierError::Dependent { a, b: b.descriptor().to_string() };
    let verdict = match b.kind() {
        BetaKind::Rational(q) => rational_dependent(q, a),
        BetaKind::Quadratic(x) => {
            if x.rational_part().is_zero() {
                // b^2 = v^2 d is rational
                let sq =
                    x.irrational_part() * x.irrational_part() * BigRational::from_integer(x.discriminant().clone());
                rational_dependent(&sq, a)
            } else {
                // u + v sqrt(d) with u, v != 0 has no rational power
                Some(false)
            }
        }
        BetaKind::BigFloat(_) => None,
    };
    match verdict {
        Some(true) => Err(dependent()),
        Some(false) => Ok(Independence::Verified),
        None => Ok(Independence::Asserted),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(s: &str) -> BetaNumber {
        BetaNumber::parse(s).unwrap()
    }

    #[test]
    fn decides_known_cases() {
        assert!(matches!(check_independence(2, &beta("4")), Err(OrbitFourierError::Dependent { .. })));
        assert!(matches!(check_independence(8, &beta("4")), Err(OrbitFourierError::Dependent { .. })));
        assert!(matches!(check_independence(2, &beta("sqrt2")), Err(OrbitFourierError::Dependent { .. })));
        assert_eq!(check_independence(2, &beta("3")).unwrap(), Independence::Verified);
        assert_eq!(check_independence(6, &beta("12")).unwrap(), Independence::Verified);
        assert_eq!(check_independence(2, &beta("5/2")).unwrap(), Independence::Verified);
        assert_eq!(check_independence(2, &beta("(1+sqrt5)/2")).unwrap(), Independence::Verified);
        assert_eq!(check_independence(3, &beta("sqrt2")).unwrap(), Independence::Verified);
        assert_eq!(check_independence(2, &beta("1.8")).unwrap(), Independence::Asserted);
    }
}
