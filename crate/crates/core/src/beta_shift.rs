//! Beta-expansions, classification of the base, and Parry's admissibility criterion.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::precision::{interval_prefix, tb_orbit, BetaNumber, Enclosure, ExactPoint, PrecisionBudget, PrecisionError};

/// Decimal digits certified for expansion orbits.
const EXPANSION_DIGITS: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BetaShiftError {
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error("digit {digit} outside the alphabet 0..{ceil}")]
    DigitOutOfRange { digit: u32, ceil: u64 },
    #[error("point must lie in [0, 1)")]
    NotInUnitInterval,
    #[error("depth or length below the minimum of {0}")]
    InvalidDepth(usize),
    #[error("a must be at least 2")]
    InvalidAlphabet,
    #[error("orbit value straddles 0; m_b cannot be bounded below")]
    Undetermined,
    #[error("comparison word too short for a word of length {0}")]
    RuleTooShort(usize),
    #[error("malformed digit word {0:?}")]
    MalformedWord(String),
}

/// A finite digit word together with the orbit enclosures that produced it.
#[derive(Clone, Debug)]
pub struct BExpansion {
    pub base: BetaNumber,
    pub digits: Vec<u32>,
    pub orbit: Vec<Enclosure>,
    pub of_one: bool,
}

impl BExpansion {
    pub fn word(&self) -> String {
        format_word(&self.digits, self.base.ceil_b())
    }

    /// `sum digits[i] b^-(i+1)` in floating point.
    pub fn value_f64(&self) -> f64 {
        let b = self.base.to_f64();
        let mut scale = 1.0;
        let mut total = 0.0;
        for &d in &self.digits {
            scale /= b;
            total += d as f64 * scale;
        }
        total
    }
}

/// Comma-free for alphabets of at most ten symbols, comma-separated otherwise.
pub fn format_word(digits: &[u32], ceil_b: u64) -> String {
    if ceil_b <= 10 && digits.iter().all(|&d| d < 10) {
        digits.iter().map(|d| char::from(b'0' + *d as u8)).collect()
    } else {
        digits.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

pub fn parse_word(text: &str) -> Result<Vec<u32>, BetaShiftError> {
    let text = text.trim();
    let bad = || BetaShiftError::MalformedWord(text.to_string());
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if text.contains(',') {
        text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
    } else {
        text.chars().map(|c| c.to_digit(10).ok_or_else(bad)).collect()
    }
}

fn below_one(x: &Enclosure) -> bool {
    match x.exact() {
        Some(e) => e.cmp_rational(&BigRational::one()).is_lt() && e.signum().is_ge(),
        None => x.hi() < BigRational::one() && !x.lo().is_negative(),
    }
}

/// First `len` greedy digits of `x` in base `b`.
pub fn greedy_expansion(b: &BetaNumber, x: &Enclosure, len: usize) -> Result<BExpansion, BetaShiftError> {
    if len == 0 {
        return Err(BetaShiftError::InvalidDepth(1));
    }
    if !below_one(x) {
        return Err(BetaShiftError::NotInUnitInterval);
    }
    let orbit = tb_orbit(b, x, len, EXPANSION_DIGITS)?;
    Ok(BExpansion { base: b.clone(), digits: orbit.digits, orbit: orbit.points, of_one: false })
}

/// Digits of `1`: `b_0 = floor(b)`, then `floor(b r_n)` with `r_0 = {b}`.
pub fn expansion_of_one(b: &BetaNumber, len: usize) -> Result<BExpansion, BetaShiftError> {
    if len == 0 {
        return Err(BetaShiftError::InvalidDepth(1));
    }
    let orbit = tb_orbit(b, &Enclosure::one(), len, EXPANSION_DIGITS)?;
    Ok(BExpansion { base: b.clone(), digits: orbit.digits, orbit: orbit.points, of_one: true })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Simple,
    SimpleParry,
    Parry,
    SpecifiedWitness { max_zero_run: usize },
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Evidence {
    /// Smallest `n >= 1` with `T_b^n(1) = 0`.
    pub hit_zero_at: Option<usize>,
    /// `(preperiod, period)` of `r_n = T_b^(n+1)(1)` when exactly periodic.
    pub period: Option<(usize, usize)>,
    /// Longest run of zeros in the expansion of one, excluding a terminal zero tail.
    pub max_zero_run: usize,
    /// Number of orbit steps actually certified.
    pub certified_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NumberClass {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub depth: usize,
    pub evidence: Evidence,
    pub digits: String,
}

fn zero_runs(digits: &[u32]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &d in digits {
        if d == 0 {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Classify `b` from its orbit of one up to `depth` steps.
pub fn classify(b: &BetaNumber, depth: usize) -> Result<NumberClass, BetaShiftError> {
    if depth < 2 {
        return Err(BetaShiftError::InvalidDepth(2));
    }
    let ceil = b.ceil_b();
    if b.exact().is_some() {
        let one = Enclosure::one();
        let orbit = tb_orbit(b, &one, depth, EXPANSION_DIGITS)?;
        let mut seen: HashMap<&ExactPoint, usize> = HashMap::new();
        let mut hit_zero_at = None;
        let mut period = None;
        for (i, p) in orbit.points.iter().enumerate() {
            let e = p.exact().expect("exact base with exact seed stays exact");
            if e.is_zero() {
                hit_zero_at = Some(i + 1);
                break;
            }
            if let Some(&j) = seen.get(e) {
                period = Some((j, i - j));
                break;
            }
            seen.insert(e, i);
        }
        let digits = &orbit.digits;
        let (verdict, run_digits) = match (hit_zero_at, period) {
            (Some(h), _) => (Verdict::Simple, &digits[..h]),
            (None, Some((0, _))) => (Verdict::SimpleParry, &digits[..]),
            (None, Some(_)) => (Verdict::Parry, &digits[..]),
            (None, None) => (Verdict::SpecifiedWitness { max_zero_run: zero_runs(digits) }, &digits[..]),
        };
        let evidence = Evidence { hit_zero_at, period, max_zero_run: zero_runs(run_digits), certified_depth: depth };
        return Ok(NumberClass { verdict, depth, evidence, digits: format_word(digits, ceil.max(b.floor_b() + 1)) });
    }
    // bigfloat: take whatever prefix the interval path certifies
    let budget = PrecisionBudget::for_orbit(b, depth, EXPANSION_DIGITS);
    let (points, digits) = match tb_orbit(b, &Enclosure::one(), depth, EXPANSION_DIGITS) {
        Ok(o) => (o.points, o.digits),
        Err(PrecisionError::PrecisionExhausted { .. }) => interval_prefix(b, &Enclosure::one(), depth, budget.max_bits),
        Err(e) => return Err(e.into()),
    };
    let hit_zero_at = points.iter().position(Enclosure::is_certified_zero).map(|i| i + 1);
    let certified_depth = digits.len();
    let run_digits = match hit_zero_at {
        Some(h) => &digits[..h],
        None => &digits[..],
    };
    let max_zero_run = zero_runs(run_digits);
    let verdict = if hit_zero_at.is_some() {
        Verdict::Simple
    } else if certified_depth == 0 {
        Verdict::Undetermined
    } else {
        Verdict::SpecifiedWitness { max_zero_run }
    };
    Ok(NumberClass {
        verdict,
        depth,
        evidence: Evidence { hit_zero_at, period: None, max_zero_run, certified_depth },
        digits: format_word(&digits, ceil),
    })
}

/// Comparison word for Parry's criterion.
#[derive(Clone, Debug)]
pub struct AdmissibilityRule {
    pub base: BetaNumber,
    pub comparison_word: Vec<u32>,
    pub quasi_greedy: bool,
    /// `(preperiod, period)` when the comparison word is known to repeat forever.
    pub periodic: Option<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Admissibility {
    Admissible,
    /// Some suffix agrees with the comparison word on its whole length.
    AdmissibleToDepth,
    Inadmissible,
}

impl Admissibility {
    pub fn is_admissible(self) -> bool {
        self != Admissibility::Inadmissible
    }
}

impl AdmissibilityRule {
    /// Expansion of one to `depth` digits; simple bases use the quasi-greedy word.
    pub fn new(b: &BetaNumber, depth: usize) -> Result<Self, BetaShiftError> {
        let depth = depth.max(2);
        let class = classify(b, depth)?;
        let expansion = expansion_of_one(b, depth)?;
        let digits = expansion.digits;
        if let Some(h) = class.evidence.hit_zero_at {
            let mut block = digits[..h].to_vec();
            *block.last_mut().expect("h >= 1") -= 1;
            let word = (0..depth).map(|i| block[i % h]).collect();
            return Ok(Self { base: b.clone(), comparison_word: word, quasi_greedy: true, periodic: Some((0, h)) });
        }
        // r_j = r_i with r_n = T^(n+1)(1) makes digits periodic from index j + 1
        let periodic = class.evidence.period.map(|(j, p)| (j + 1, p));
        Ok(Self { base: b.clone(), comparison_word: digits, quasi_greedy: false, periodic })
    }

    /// Symbol `i` of the (possibly periodically extended) comparison word.
    pub fn symbol(&self, i: usize) -> Option<u32> {
        if let Some(&d) = self.comparison_word.get(i) {
            return Some(d);
        }
        let (pre, per) = self.periodic?;
        Some(self.comparison_word[pre + (i - pre) % per])
    }
}

/// Parry's criterion on a finite word: every suffix must sort strictly below the comparison word.
pub fn check_admissible(word: &[u32], rule: &AdmissibilityRule) -> Result<Admissibility, BetaShiftError> {
    let ceil = rule.base.ceil_b();
    if let Some(&digit) = word.iter().find(|&&d| d as u64 >= ceil) {
        return Err(BetaShiftError::DigitOutOfRange { digit, ceil });
    }
    let mut tied = false;
    for start in 0..word.len() {
        let mut order = Ordering::Equal;
        for (k, &w) in word[start..].iter().enumerate() {
            let c = rule.symbol(k).ok_or(BetaShiftError::RuleTooShort(word.len()))?;
            order = w.cmp(&c);
            if order != Ordering::Equal {
                break;
            }
        }
        match order {
            Ordering::Greater => return Ok(Admissibility::Inadmissible),
            Ordering::Equal => tied = true,
            Ordering::Less => {}
        }
    }
    Ok(if tied { Admissibility::AdmissibleToDepth } else { Admissibility::Admissible })
}

pub fn is_admissible(word: &[u32], rule: &AdmissibilityRule) -> Result<bool, BetaShiftError> {
    check_admissible(word, rule).map(Admissibility::is_admissible)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecificationConstants {
    #[serde(serialize_with = "serialize_rational")]
    pub m_b_lower: BigRational,
    pub m_b_approx: f64,
    pub discontinuity_budget: u64,
    /// True when the orbit of one hit zero, so the minimum ran over a finite set.
    pub simple: bool,
}

fn serialize_rational<S: serde::Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

/// Lower bound for `m_b = inf { r_n > 0 }` over `depth` steps and the count `ceil(a / m_b)`.
pub fn specification_constants(b: &BetaNumber, a: u64, depth: usize) -> Result<SpecificationConstants, BetaShiftError> {
    if a < 2 {
        return Err(BetaShiftError::InvalidAlphabet);
    }
    if depth == 0 {
        return Err(BetaShiftError::InvalidDepth(1));
    }
    let orbit = tb_orbit(b, &Enclosure::one(), depth, EXPANSION_DIGITS)?;
    let mut m_b: Option<BigRational> = None;
    let mut simple = false;
    for p in &orbit.points {
        if p.is_certified_zero() {
            simple = true;
            break;
        }
        let lo = p.lo();
        if !lo.is_positive() {
            return Err(BetaShiftError::Undetermined);
        }
        if m_b.as_ref().is_none_or(|m| &lo < m) {
            m_b = Some(lo);
        }
    }
    let m_b_lower = m_b.unwrap_or_else(BigRational::one);
    let ratio = BigRational::from_integer(BigInt::from(a)) / &m_b_lower;
    let budget = ratio.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
    let m_b_approx = m_b_lower.to_f64().unwrap_or(f64::NAN);
    Ok(SpecificationConstants { m_b_lower, m_b_approx, discontinuity_budget: budget, simple })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(s: &str) -> BetaNumber {
        BetaNumber::parse(s).unwrap()
    }

    #[test]
    fn greedy_examples() {
        let e = greedy_expansion(&beta("2"), &Enclosure::ratio(1, 3), 4).unwrap();
        assert_eq!(e.word(), "0101");
        let phi = beta("(1+sqrt5)/2");
        // 1/phi = phi - 1
        let inv = ExactPoint::Quadratic(crate::precision::QuadraticNumber::new(
            BigRational::new((-1).into(), 2.into()),
            BigRational::new(1.into(), 2.into()),
            5.into(),
        ));
        let e = greedy_expansion(&phi, &Enclosure::from_exact(inv, 64), 4).unwrap();
        assert_eq!(e.word(), "1000");
        assert_eq!(greedy_expansion(&beta("5/2"), &Enclosure::zero(), 3).unwrap().word(), "000");
        assert_eq!(greedy_expansion(&phi, &Enclosure::one(), 3).unwrap_err(), BetaShiftError::NotInUnitInterval);
    }

    #[test]
    fn expansions_of_one() {
        let e = expansion_of_one(&beta("2"), 3).unwrap();
        assert_eq!(e.digits, [2, 0, 0]);
        let e = expansion_of_one(&beta("(1+sqrt5)/2"), 4).unwrap();
        assert_eq!(e.digits, [1, 1, 0, 0]);
        assert!((e.orbit[0].to_f64() - 0.618_033_988_749_895).abs() < 1e-14);
        let e = expansion_of_one(&beta("1+sqrt2"), 4).unwrap();
        assert_eq!(e.digits, [2, 1, 0, 0]);
        assert!((e.orbit[0].to_f64() - (2f64.sqrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn classification_examples() {
        let c = classify(&beta("2"), 10).unwrap();
        assert_eq!((c.verdict, c.evidence.hit_zero_at), (Verdict::Simple, Some(1)));
        let c = classify(&beta("(1+sqrt5)/2"), 10).unwrap();
        assert_eq!((c.verdict, c.evidence.hit_zero_at), (Verdict::Simple, Some(2)));
        assert!(c.digits.starts_with("110"));
        // phi^2: r_0 = 1/phi is a fixed point of T
        let c = classify(&beta("(3+sqrt5)/2"), 10).unwrap();
        assert_eq!(c.verdict, Verdict::SimpleParry);
        assert_eq!(c.evidence.period, Some((0, 1)));
        let c = classify(&beta("1.8"), 64).unwrap();
        assert!(matches!(c.verdict, Verdict::SpecifiedWitness { .. } | Verdict::Undetermined));
        assert_eq!(classify(&beta("2"), 1).unwrap_err(), BetaShiftError::InvalidDepth(2));
    }

    #[test]
    fn golden_mean_admissibility() {
        let rule = AdmissibilityRule::new(&beta("(1+sqrt5)/2"), 8).unwrap();
        assert!(rule.quasi_greedy);
        assert_eq!(&rule.comparison_word[..4], &[1, 0, 1, 0]);
        assert!(is_admissible(&[1, 0, 1, 0, 1, 0], &rule).unwrap());
        assert!(!is_admissible(&[0, 1, 1, 0], &rule).unwrap());
        assert!(is_admissible(&[], &rule).unwrap());
        assert!(matches!(is_admissible(&[2], &rule), Err(BetaShiftError::DigitOutOfRange { digit: 2, ceil: 2 })));
        // symbols beyond the stored depth follow the period
        assert_eq!(rule.symbol(100), Some(1));
    }

    #[test]
    fn specification_examples() {
        let c = specification_constants(&beta("(1+sqrt5)/2"), 2, 16).unwrap();
        assert_eq!(c.discontinuity_budget, 4);
        assert!((c.m_b_approx - 0.618_033_988).abs() < 1e-6);
        let c = specification_constants(&beta("2"), 3, 16).unwrap();
        assert_eq!((c.m_b_lower.clone(), c.discontinuity_budget), (BigRational::one(), 3));
        let c = specification_constants(&beta("1+sqrt2"), 2, 16).unwrap();
        assert_eq!(c.discontinuity_budget, 5);
    }

    #[test]
    fn word_round_trip() {
        assert_eq!(format_word(&[1, 0, 2], 3), "102");
        assert_eq!(format_word(&[11, 0], 12), "11,0");
        assert_eq!(parse_word("11,0").unwrap(), vec![11, 0]);
        assert_eq!(parse_word("102").unwrap(), vec![1, 0, 2]);
        assert!(parse_word("1x").is_err());
    }
}
