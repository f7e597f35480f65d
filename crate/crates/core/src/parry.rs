//! The Parry measure of `T_b`, from the explicit density `sum_{x < T^n(1)} b^-n`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::precision::{tb_orbit, BetaNumber, DyadicInterval, Enclosure, PrecisionError};
use crate::scalar::{unit_phase, Bounds};

/// Decimal digits certified for each orbit value `T^n(1)`.
const ORBIT_DIGITS: u32 = 24;
/// Bits used when reducing `m r_n` modulo one.
const PHASE_BITS: u32 = 96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParryError {
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error("tolerance must be positive and finite")]
    InvalidTolerance,
    #[error("tolerance {requested} is finer than the construction tolerance {built}")]
    ToleranceBelowConstruction { requested: f64, built: f64 },
    #[error("interval must satisfy 0 <= u < v <= 1")]
    InvalidInterval,
    #[error("point must lie in [0, 1)")]
    OutOfRange,
    #[error("sample count must be positive")]
    EmptySample,
}

/// One orbit value `r = T_b^n(1)` with its floating-point bounds and weight `b^-n`.
#[derive(Clone, Debug)]
struct OrbitTerm {
    value: Enclosure,
    lo: f64,
    hi: f64,
    mid: f64,
    weight: Bounds<f64>,
}

/// Truncated Parry density for a base `b`.
#[derive(Clone, Debug)]
pub struct ParryDensity {
    base: BetaNumber,
    terms: Vec<OrbitTerm>,
    tail_bound: f64,
    normalizer: Bounds<f64>,
    built_tol: f64,
    terminates: bool,
    /// Breakpoints `0 = x_0 < ... < x_K = 1` with unnormalized CDF values at each.
    cdf_table: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub density: f64,
    pub cdf: f64,
}

fn ulp_pad(b: Bounds<f64>) -> Bounds<f64> {
    b.pad(4.0)
}

impl ParryDensity {
    /// Builds the series with enough terms that its tail is at most `tol / 2`.
    pub fn new(base: &BetaNumber, tol: f64) -> Result<Self, ParryError> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ParryError::InvalidTolerance);
        }
        let (b_lo, b_hi) = base.enclosure().to_f64_bounds();
        // smallest N with b^-N / (b - 1) <= tol / 2
        let needed = ((2.0 / (tol * (b_lo - 1.0))).ln() / b_lo.ln()).ceil().max(1.0) as usize + 1;
        let orbit = tb_orbit(base, &Enclosure::one(), needed, ORBIT_DIGITS)?;
        let mut terms = Vec::with_capacity(needed + 1);
        let one = Enclosure::one();
        let mut weight = Bounds::point(1.0);
        let inv = Bounds::new(1.0 / b_hi, 1.0 / b_lo).pad(2.0);
        let mut terminates = false;
        for (n, value) in std::iter::once(&one).chain(orbit.points.iter()).enumerate() {
            if n > 0 {
                weight = ulp_pad(Bounds::new(weight.lo * inv.lo, weight.hi * inv.hi));
            }
            if value.is_certified_zero() {
                terminates = true;
                break;
            }
            let (lo, hi) = value.interval().to_f64_bounds();
            terms.push(OrbitTerm { value: value.clone(), lo, hi, mid: value.to_f64(), weight });
        }
        let n_terms = terms.len();
        let tail_bound =
            if terminates { 0.0 } else { (b_hi / b_lo).max(1.0) * b_lo.powi(-(n_terms as i32 - 1)) / (b_lo - 1.0) };
        let mut z = Bounds::point(0.0);
        for t in &terms {
            z = z.plus(Bounds::new(t.weight.lo * t.lo.max(0.0), t.weight.hi * t.hi.min(1.0)));
        }
        let normalizer = ulp_pad(Bounds::new(z.lo, z.hi + tail_bound));
        let mut density = Self {
            base: base.clone(),
            terms,
            tail_bound,
            normalizer,
            built_tol: tol,
            terminates,
            cdf_table: Vec::new(),
        };
        density.cdf_table = density.build_cdf_table();
        Ok(density)
    }

    fn build_cdf_table(&self) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = self.terms.iter().map(|t| t.mid.clamp(0.0, 1.0)).collect();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        cuts.dedup();
        cuts.into_iter().map(|x| (x, self.unnormalized_cdf_mid(x))).collect()
    }

    fn unnormalized_cdf_mid(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.weight.mid() * x.min(t.mid)).sum()
    }

    pub fn base(&self) -> &BetaNumber {
        &self.base
    }

    /// Number of series terms kept (including `n = 0`).
    pub fn truncation(&self) -> usize {
        self.terms.len()
    }

    /// Upper bound on the omitted part of the series (zero when the orbit of one hits zero).
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn terminates(&self) -> bool {
        self.terminates
    }

    pub fn tolerance(&self) -> f64 {
        self.built_tol
    }

    /// Floating-point values of `T^n(1)` for the kept terms.
    pub fn orbit_values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.mid).collect()
    }

    fn check_tol(&self, tol: f64) -> Result<(), ParryError> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ParryError::InvalidTolerance);
        }
        if tol < self.built_tol {
            return Err(ParryError::ToleranceBelowConstruction { requested: tol, built: self.built_tol });
        }
        Ok(())
    }

    /// Certified `x < r` for an orbit value `r`.
    fn below(&self, x: f64, term: &OrbitTerm) -> Result<bool, ParryError> {
        if x < term.lo {
            return Ok(true);
        }
        if x >= term.hi {
            return Ok(false);
        }
        let q = BigRational::from_float(x).expect("finite probe");
        if let Some(e) = term.value.exact() {
            return Ok(e.cmp_rational(&q) == Ordering::Greater);
        }
        let iv = term.value.interval();
        if iv.lo() > q {
            return Ok(true);
        }
        if iv.hi() <= q {
            return Ok(false);
        }
        Err(PrecisionError::PrecisionExhausted { bits: iv.bits(), step: 0 }.into())
    }

    /// The unnormalized density at `x`, as an interval of width at most `tol`.
    pub fn density_at(&self, x: f64, tol: f64) -> Result<Bounds<f64>, ParryError> {
        self.check_tol(tol)?;
        if !(0.0..1.0).contains(&x) {
            return Err(ParryError::OutOfRange);
        }
        let mut acc = Bounds::point(0.0);
        for t in &self.terms {
            if self.below(x, t)? {
                acc = acc.plus(t.weight);
            }
        }
        Ok(ulp_pad(Bounds::new(acc.lo, acc.hi + self.tail_bound)))
    }

    /// `Z = sum_n b^-n T^n(1)`.
    pub fn normalizer(&self, tol: f64) -> Result<Bounds<f64>, ParryError> {
        self.check_tol(tol)?;
        Ok(self.normalizer)
    }

    /// Unnormalized mass `sum_n b^-n |[u, v) ∩ [0, r_n)|` with outward bounds.
    fn raw_mass(&self, u: f64, v: f64) -> Bounds<f64> {
        let mut acc = Bounds::point(0.0);
        for t in &self.terms {
            // length is monotone in r, so the r bounds give the length bounds
            let len_lo = (v.min(t.lo) - u.min(t.lo)).max(0.0);
            let len_hi = (v.min(t.hi) - u.min(t.hi)).max(0.0);
            acc = acc.plus(Bounds::new(t.weight.lo * len_lo, t.weight.hi * len_hi));
        }
        ulp_pad(Bounds::new(acc.lo, acc.hi + self.tail_bound * (v - u)))
    }

    /// Parry-measure mass of `[u, v)`.
    pub fn interval_mass(&self, u: f64, v: f64, tol: f64) -> Result<Bounds<f64>, ParryError> {
        self.check_tol(tol)?;
        if !(0.0 <= u && u < v && v <= 1.0) {
            return Err(ParryError::InvalidInterval);
        }
        let raw = self.raw_mass(u, v);
        Ok(ulp_pad(raw.div_positive(self.normalizer)))
    }

    /// Mass of `T_b^{-1}[u, v)`, summed over the branch preimages.
    pub fn preimage_mass(&self, u: f64, v: f64, tol: f64) -> Result<Bounds<f64>, ParryError> {
        self.check_tol(tol)?;
        let mut acc = Bounds::point(0.0);
        for (lo, hi) in branch_preimages(self.base.to_f64(), self.base.ceil_b(), u, v) {
            acc = acc.plus(self.interval_mass(lo, hi, tol)?);
        }
        Ok(acc)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        self.unnormalized_cdf_mid(x) / self.cdf_table.last().expect("table").1
    }

    /// `∫ e(m x) f(x) dx / Z` in closed form; `m = 0` gives exactly one.
    pub fn fourier(&self, m: i64, tol: f64) -> Result<(Complex64, f64), ParryError> {
        self.check_tol(tol)?;
        if m == 0 {
            return Ok((Complex64::new(1.0, 0.0), 0.0));
        }
        let two_pi_m = std::f64::consts::TAU * m as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for t in &self.terms {
            let phase = frac_of_multiple(t.value.interval(), m);
            let term = (unit_phase(phase) - 1.0) / Complex64::new(0.0, two_pi_m);
            let w = t.weight.mid();
            acc += term * w;
            // d/dr of the antiderivative has modulus one
            err += w * (t.hi - t.lo) + t.weight.width() + 4.0 * f64::EPSILON * w;
        }
        let z = self.normalizer.mid();
        let value = acc / z;
        let radius =
            (err + self.tail_bound) / self.normalizer.lo + value.norm() * self.normalizer.width() / self.normalizer.lo;
        Ok((value, radius))
    }

    /// Inverse-CDF sampling from the piecewise-linear distribution function.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>, ParryError> {
        if n == 0 {
            return Err(ParryError::EmptySample);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = self.cdf_table.last().expect("table").1;
        Ok((0..n)
            .map(|_| {
                let target = rng.random::<f64>() * total;
                let k = self.cdf_table.partition_point(|&(_, c)| c <= target).clamp(1, self.cdf_table.len() - 1);
                let (x0, c0) = self.cdf_table[k - 1];
                let (x1, c1) = self.cdf_table[k];
                let slope = (c1 - c0) / (x1 - x0);
                (x0 + (target - c0) / slope).clamp(x0, x1.next_down())
            })
            .collect())
    }

    /// Rows `(x, f(x), F(x))` on the grid `i / points`, `i < points`.
    pub fn table(&self, points: usize) -> Result<Vec<DensityRow>, ParryError> {
        (0..points)
            .map(|i| {
                let x = i as f64 / points as f64;
                let f = self.density_at(x, self.built_tol)?;
                Ok(DensityRow { x, density: f.mid(), cdf: self.cdf(x) })
            })
            .collect()
    }

    /// Constant-density pieces `(lo, hi, normalized density)` covering `[0, 1)`.
    pub fn pieces(&self) -> Vec<(f64, f64, f64)> {
        let total = self.cdf_table.last().expect("table").1;
        self.cdf_table
            .windows(2)
            .map(|w| {
                let (x0, c0) = w[0];
                let (x1, c1) = w[1];
                (x0, x1, (c1 - c0) / (x1 - x0) / total)
            })
            .collect()
    }
}

/// Fractional part of `m r` for an enclosed `r`, as a float.
pub(crate) fn frac_of_multiple(r: &DyadicInterval, m: i64) -> f64 {
    let iv = r.with_bits(PHASE_BITS);
    let scaled = iv.lo_raw() * BigInt::from(m);
    let modulus = BigInt::one() << PHASE_BITS;
    let reduced = ((scaled % &modulus) + &modulus) % &modulus;
    reduced.to_f64().expect("bounded") / modulus.to_f64().expect("finite")
}

/// `T_b^{-1}[u, v)` as the pieces `[(k+u)/b, (k+v)/b) ∩ [0, 1)` for `k < ceil(b)`.
pub fn branch_preimages(b: f64, ceil_b: u64, u: f64, v: f64) -> Vec<(f64, f64)> {
    (0..ceil_b)
        .filter_map(|k| {
            let lo = (k as f64 + u) / b;
            let hi = ((k as f64 + v) / b).min(1.0);
            (lo < hi).then_some((lo, hi))
        })
        .collect()
}
