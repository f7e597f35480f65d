//! Self-similar measures of the two-map system `x/b`, `x/b + 1/b` with `b > 2`.
//!
//! These are `T_b`-invariant, singular, and (for suitable `b`) have Fourier
//! transform tending to zero, so they sit alongside the Parry measure as
//! further invariant Rajchman measures.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::beta_shift::{is_admissible, AdmissibilityRule, BetaShiftError};
use crate::parry::branch_preimages;
use crate::precision::BetaNumber;
use crate::scalar::{least_squares, median, unit_phase, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelfSimilarError {
    #[error("self-similar base must exceed 2, got {0}")]
    BaseTooSmall(String),
    #[error("weights must be nonnegative and sum to 1")]
    BadWeights,
    #[error("sampling depth must be positive")]
    ZeroDepth,
    #[error("invariance grid needs at least {0} intervals")]
    GridTooSmall(usize),
    #[error("decay profile needs xi_max >= {0}")]
    XiTooSmall(f64),
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error(transparent)]
    BetaShift(#[from] BetaShiftError),
}

/// Minimum number of grid intervals in the invariance check.
pub const MIN_GRID: usize = 32;
/// Minimum `xi_max` for a decay profile.
pub const MIN_XI_MAX: f64 = 1e3;
/// Frequency samples per unit of `xi` inside each decay window.
const WINDOW_DENSITY: f64 = 16.0;

/// `mu = p0 (x/b)_* mu + p1 (x/b + 1/b)_* mu`.
#[derive(Clone, Debug)]
pub struct SelfSimilarMeasure<F> {
    base: BetaNumber,
    b: F,
    p0: F,
    p1: F,
}

pub type SelfSimilar64 = SelfSimilarMeasure<f64>;

#[derive(Clone, Debug, Serialize)]
pub struct SingularityWitness {
    pub level: u32,
    pub coverage_fraction: f64,
    pub total_length: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceRow {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    pub preimage_mass: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SsmInvariance {
    pub defect: f64,
    /// Largest `|defect| / sigma` over the grid.
    pub max_z: f64,
    pub samples: usize,
    pub rows: Vec<InvarianceRow>,
    pub within_budget: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayWindow {
    pub lo: f64,
    pub hi: f64,
    pub max_abs: f64,
    pub argmax: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SsmDecayProfile {
    pub windows: Vec<DecayWindow>,
    /// `c` in `max |mu^| ~ (log xi)^-c`, fitted over window upper ends.
    pub fitted_c: Option<f64>,
    /// Slope of `ln max` against the window index.
    pub log_slope: Option<f64>,
    /// Median window maximum over the last third of windows divided by that over the first third.
    pub tail_ratio: Option<f64>,
    pub decreasing: bool,
}

/// A profile counts as decreasing when the log-slope is negative and the
/// tail ratio is at most this.
pub const DECREASE_RATIO: f64 = 0.75;

fn check_weights<F: Real>(p0: F, p1: F) -> Result<(), SelfSimilarError> {
    let ok = p0 >= F::zero() && p1 >= F::zero() && (p0 + p1 - F::one()).abs() <= F::epsilon() * F::lit(4.0);
    ok.then_some(()).ok_or(SelfSimilarError::BadWeights)
}

impl<F: Real> SelfSimilarMeasure<F> {
    pub fn new(base: &BetaNumber, p0: F, p1: F) -> Result<Self, SelfSimilarError> {
        if base.enclosure().lo() <= num_rational::BigRational::from_integer(2.into()) {
            return Err(SelfSimilarError::BaseTooSmall(base.descriptor().to_string()));
        }
        check_weights(p0, p1)?;
        Ok(Self { b: F::lit(base.to_f64()), base: base.clone(), p0, p1 })
    }

    /// The `b = 2` boundary case, where `p = (1/2, 1/2)` gives Lebesgue measure.
    pub fn boundary_oracle(p0: F, p1: F) -> Result<Self, SelfSimilarError> {
        check_weights(p0, p1)?;
        let base = BetaNumber::from_integer(2).expect("2 > 1");
        Ok(Self { b: F::lit(2.0), base, p0, p1 })
    }

    pub fn base(&self) -> &BetaNumber {
        &self.base
    }

    pub fn weights(&self) -> (F, F) {
        (self.p0, self.p1)
    }

    /// Number of factors after which the remaining product is within `tol` of 1.
    fn factors(&self, xi: F, tol: F) -> usize {
        // sum_{k>K} 2 pi p1 |xi| b^-k <= tol
        let lead = F::TAU() * self.p1 * xi.abs() / (self.b - F::one());
        if lead <= tol {
            return 0;
        }
        ((lead / tol).ln() / self.b.ln()).ceil().to_usize().unwrap_or(0)
    }

    /// `prod_{k>=1} (p0 + p1 e(xi b^-k))`, truncated once the tail is within `tol`.
    pub fn fourier(&self, xi: F, tol: F) -> Result<Complex<F>, SelfSimilarError> {
        if tol <= F::zero() {
            return Err(SelfSimilarError::BadTolerance);
        }
        let mut out = Complex::new(F::one(), F::zero());
        if self.p1 == F::zero() {
            return Ok(out);
        }
        let mut theta = xi;
        for _ in 0..self.factors(xi, tol) {
            theta = theta / self.b;
            out = out * (unit_phase(theta) * self.p1 + self.p0);
        }
        Ok(out)
    }

    /// `|mu^(xi) - (p0 + p1 e(xi/b)) mu^(xi/b)|`.
    pub fn selfsim_residual(&self, xi: F) -> F {
        let tol = F::epsilon();
        let lhs = self.fourier(xi, tol).expect("positive tolerance");
        let inner = self.fourier(xi / self.b, tol).expect("positive tolerance");
        let factor = unit_phase(xi / self.b) * self.p1 + self.p0;
        (lhs - factor * inner).norm()
    }

    /// `x = sum_{i <= depth} w_i b^-i` with i.i.d. digits, `P(w_i = 1) = p1`.
    pub fn sample(&self, n: usize, depth: usize, seed: u64) -> Result<Vec<f64>, SelfSimilarError> {
        if depth == 0 {
            return Err(SelfSimilarError::ZeroDepth);
        }
        let b = self.b.as_f64();
        let p1 = self.p1.as_f64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut digits = vec![0u8; depth];
        Ok((0..n)
            .map(|_| {
                for w in digits.iter_mut() {
                    *w = u8::from(rng.random::<f64>() < p1);
                }
                digits.iter().rev().fold(0.0, |acc, &w| (acc + w as f64) / b)
            })
            .collect())
    }

    /// Upper bound on the distance from a depth-`depth` sample to its limit point.
    pub fn truncation_error(&self, depth: usize) -> f64 {
        let b = self.b.as_f64();
        b.powi(-(depth as i32)) / (b - 1.0)
    }

    /// Fraction of `samples` in the `2^level` level cylinders, and the cylinders' total length.
    pub fn singularity_witness(&self, samples: &[f64], level: u32) -> Result<SingularityWitness, SelfSimilarError> {
        let b = self.b.as_f64();
        if b <= 2.0 {
            return Err(SelfSimilarError::BaseTooSmall(self.base.descriptor().to_string()));
        }
        let top = 1.0 / (b - 1.0);
        let slack = 8.0 * f64::EPSILON * b.powi(level as i32);
        let inside = samples
            .iter()
            .filter(|&&x| {
                let mut y = x;
                for _ in 0..level {
                    if !(-slack..=top + slack).contains(&y) {
                        return false;
                    }
                    // the two level-one pieces are separated by the gap (1/(b(b-1)), 1/b)
                    y *= b;
                    if y >= 1.0 - slack {
                        y -= 1.0;
                    }
                }
                (-slack..=top + slack).contains(&y)
            })
            .count();
        Ok(SingularityWitness {
            level,
            coverage_fraction: if samples.is_empty() { 1.0 } else { inside as f64 / samples.len() as f64 },
            total_length: (2.0 / b).powi(level as i32) / (b - 1.0),
            samples: samples.len(),
        })
    }

    /// Empirical `|mu(T_b^-1 A) - mu(A)|` over grid intervals `A`, with binomial sigma.
    pub fn invariance_check(
        &self,
        grid: &[(f64, f64)],
        samples: usize,
        depth: usize,
        seed: u64,
    ) -> Result<SsmInvariance, SelfSimilarError> {
        if grid.len() < MIN_GRID {
            return Err(SelfSimilarError::GridTooSmall(MIN_GRID));
        }
        let mut pts = self.sample(samples, depth, seed)?;
        pts.sort_by(f64::total_cmp);
        let n = pts.len() as f64;
        let count = |u: f64, v: f64| (pts.partition_point(|&x| x < v) - pts.partition_point(|&x| x < u)) as f64;
        let b = self.b.as_f64();
        let ceil_b = self.base.ceil_b();
        let rows: Vec<InvarianceRow> = grid
            .iter()
            .map(|&(lo, hi)| {
                let mass = count(lo, hi) / n;
                let preimage_mass =
                    branch_preimages(b, ceil_b, lo, hi).iter().map(|&(u, v)| count(u, v)).sum::<f64>() / n;
                InvarianceRow { lo, hi, mass, preimage_mass, sigma: ((mass + preimage_mass) / n).sqrt() }
            })
            .collect();
        let defect = rows.iter().map(|r| (r.mass - r.preimage_mass).abs()).fold(0.0, f64::max);
        let max_z = rows
            .iter()
            .map(|r| {
                let d = (r.mass - r.preimage_mass).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d / r.sigma.max(1.0 / n)
                }
            })
            .fold(0.0, f64::max);
        Ok(SsmInvariance { defect, max_z, samples, rows, within_budget: max_z <= 4.0 })
    }

    /// Maxima of `|mu^|` over `[2^j, 2^(j+1)]` for windows inside `[1, xi_max]`.
    pub fn decay_profile(&self, xi_max: f64) -> Result<SsmDecayProfile, SelfSimilarError> {
        if xi_max.is_nan() || xi_max < MIN_XI_MAX {
            return Err(SelfSimilarError::XiTooSmall(MIN_XI_MAX));
        }
        let count = xi_max.log2().floor() as u32;
        let tol = F::lit(1e-12);
        let windows: Vec<DecayWindow> = (0..count)
            .into_par_iter()
            .map(|j| {
                let (lo, hi) = (2f64.powi(j as i32), 2f64.powi(j as i32 + 1));
                let steps = ((hi - lo) * WINDOW_DENSITY) as usize;
                let mut best = (0.0f64, lo);
                for i in 0..=steps {
                    let xi = lo + (hi - lo) * i as f64 / steps as f64;
                    let v = self.fourier(F::lit(xi), tol).expect("positive tolerance").norm().as_f64();
                    if v > best.0 {
                        best = (v, xi);
                    }
                }
                DecayWindow { lo, hi, max_abs: best.0, argmax: best.1 }
            })
            .collect();
        let logs: Vec<f64> = windows.iter().map(|w| w.max_abs.ln()).collect();
        let fitted_c = if windows.iter().all(|w| w.max_abs > 0.0) {
            let lnln: Vec<f64> = windows.iter().map(|w| w.hi.ln().ln()).collect();
            least_squares(&lnln, &logs).map(|(s, _)| -s)
        } else {
            None
        };
        let idx: Vec<f64> = (0..windows.len()).map(|j| j as f64).collect();
        let log_slope = least_squares(&idx, &logs).map(|(s, _)| s);
        let third = windows.len() / 3;
        let tail_ratio = (third > 0)
            .then(|| {
                let maxima: Vec<f64> = windows.iter().map(|w| w.max_abs).collect();
                let head = median(&maxima[..third])?;
                let tail = median(&maxima[maxima.len() - third..])?;
                (head > 0.0).then_some(tail / head)
            })
            .flatten();
        let decreasing = matches!((log_slope, tail_ratio), (Some(s), Some(r)) if s < 0.0 && r <= DECREASE_RATIO);
        Ok(SsmDecayProfile { windows, fitted_c, log_slope, tail_ratio, decreasing })
    }

    /// Check that `count` random 0/1 words of length `depth` are admissible for `b`.
    pub fn admissibility_spot_check(&self, count: usize, depth: usize, seed: u64) -> Result<bool, SelfSimilarError> {
        let rule = AdmissibilityRule::new(&self.base, depth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let word: Vec<u32> = (0..depth).map(|_| rng.random_range(0..2)).collect();
            if !is_admissible(&word, &rule)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `n` equal intervals covering `[0, 1)`.
pub fn uniform_grid(n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|i| (i as f64 / n as f64, (i + 1) as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ssm(b: &str, p0: f64) -> SelfSimilar64 {
        SelfSimilarMeasure::new(&BetaNumber::parse(b).unwrap(), p0, 1.0 - p0).unwrap()
    }

    #[test]
    fn constructor_guards() {
        let two = BetaNumber::parse("2").unwrap();
        assert!(matches!(SelfSimilar64::new(&two, 0.5, 0.5), Err(SelfSimilarError::BaseTooSmall(_))));
        let b = BetaNumber::parse("11/5").unwrap();
        assert!(matches!(SelfSimilar64::new(&b, 0.5, 0.6), Err(SelfSimilarError::BadWeights)));
        assert!(SelfSimilar64::new(&b, 1.0, 0.0).is_ok());
    }

    #[test]
    fn fourier_trivial_cases() {
        let m = ssm("11/5", 0.4);
        assert_eq!(m.fourier(0.0, 1e-12).unwrap(), Complex::new(1.0, 0.0));
        let dirac = ssm("11/5", 1.0);
        assert_eq!(dirac.fourier(123.4, 1e-12).unwrap(), Complex::new(1.0, 0.0));
        assert_eq!(dirac.selfsim_residual(77.0), 0.0);
        assert!(m.fourier(1.0, 0.0).is_err());
    }

    #[test]
    fn lebesgue_oracle_at_the_boundary() {
        let leb = SelfSimilar64::boundary_oracle(0.5, 0.5).unwrap();
        for m in 1..50 {
            assert!(leb.fourier(m as f64, 1e-14).unwrap().norm() < 1e-12);
        }
        // int_0^1 e(xi x) dx = (e(xi) - 1) / (2 pi i xi)
        let xi = 0.3;
        let exact = (unit_phase(xi) - 1.0) / Complex::new(0.0, std::f64::consts::TAU * xi);
        assert!((leb.fourier(xi, 1e-15).unwrap() - exact).norm() < 1e-12);
    }

    #[test]
    fn fourier_matches_sample_mean() {
        let m = ssm("11/5", 0.4);
        let pts = m.sample(200_000, 40, 3).unwrap();
        for xi in [0.7, 3.0, 11.0] {
            let emp: Complex<f64> = pts.iter().map(|&x| unit_phase(xi * x)).sum::<Complex<f64>>() / pts.len() as f64;
            assert!((emp - m.fourier(xi, 1e-12).unwrap()).norm() < 0.01);
        }
    }

    #[test]
    fn samples_stay_in_attractor_hull() {
        let m = ssm("11/5", 0.4);
        let pts = m.sample(20_000, 30, 9).unwrap();
        assert!(pts.iter().all(|&x| (0.0..=1.0 / 1.2).contains(&x)));
        let first_zero = pts.iter().filter(|&&x| x < 1.0 / 2.2).count() as f64 / pts.len() as f64;
        let sigma = (0.4f64 * 0.6 / pts.len() as f64).sqrt();
        assert!((first_zero - 0.4).abs() <= 3.0 * sigma);
        assert!(ssm("11/5", 1.0).sample(10, 5, 1).unwrap().iter().all(|&x| x == 0.0));
        assert!(m.sample(1, 0, 1).is_err());
    }

    #[test]
    fn witness_geometry() {
        let m = ssm("11/5", 0.5);
        let pts = m.sample(5000, 40, 1).unwrap();
        let w = m.singularity_witness(&pts, 12).unwrap();
        assert!((w.total_length - (2.0f64 / 2.2).powi(12) / 1.2).abs() < 1e-15);
        assert!((w.total_length - 0.265).abs() < 1e-3);
        assert_eq!(w.coverage_fraction, 1.0);
        let w0 = m.singularity_witness(&pts, 0).unwrap();
        assert!((w0.total_length - 1.0 / 1.2).abs() < 1e-15 && w0.coverage_fraction == 1.0);
        let three = ssm("3", 0.5);
        let w = three.singularity_witness(&three.sample(100, 30, 2).unwrap(), 10).unwrap();
        assert!((w.total_length - 0.00867).abs() < 1e-5);
        // points in the gap are rejected
        assert_eq!(m.singularity_witness(&[0.42], 1).unwrap().coverage_fraction, 0.0);
    }

    #[test]
    fn invariance_of_trivial_and_full_intervals() {
        let dirac = ssm("5/2", 1.0);
        let rep = dirac.invariance_check(&uniform_grid(64), 1000, 20, 1).unwrap();
        assert_eq!(rep.defect, 0.0);
        let m = ssm("5/2", 0.5);
        let mut grid = uniform_grid(40);
        grid.push((0.0, 1.0));
        let rep = m.invariance_check(&grid, 10_000, 30, 2).unwrap();
        let whole = rep.rows.last().unwrap();
        assert_eq!(whole.mass, whole.preimage_mass);
        assert!(m.invariance_check(&uniform_grid(8), 100, 10, 1).is_err());
    }

    #[test]
    fn dirac_decay_profile_is_flat() {
        let p = ssm("11/5", 1.0).decay_profile(1e3).unwrap();
        assert!(p.windows.iter().all(|w| w.max_abs == 1.0));
        assert_eq!(p.fitted_c, Some(0.0));
        assert!(!p.decreasing);
        assert!(ssm("11/5", 0.5).decay_profile(10.0).is_err());
    }

    #[test]
    fn binary_words_are_admissible() {
        assert!(ssm("11/5", 0.5).admissibility_spot_check(200, 40, 4).unwrap());
    }

    proptest! {
        #[test]
        fn functional_equation_residual(xi in 1.0f64..1e4, p0 in 0.05f64..0.95) {
            prop_assert!(ssm("11/5", p0).selfsim_residual(xi) <= 1e-10);
        }

        #[test]
        fn fourier_is_bounded(xi in -1e5f64..1e5) {
            prop_assert!(ssm("11/5", 0.3).fourier(xi, 1e-12).unwrap().norm() <= 1.0 + 1e-12);
        }
    }
}
