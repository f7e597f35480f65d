use num_complex::{Complex, Complex64};
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_independence, predicted_exponent, Independence, OrbitFourierError, MAX_FREQUENCY};
use crate::parry::ParryDensity;
use crate::precision::{
    run_orbit, BetaNumber, DyadicInterval, Enclosure, ExactPoint, OrbitMode, OrbitPath, OrbitSink, PrecisionBudget,
};
use crate::scalar::{least_squares, unit_phase, Real, Scalar};
use crate::source::{MarkovSource, SampledPoint};

/// Decimal digits certified for each orbit point feeding a Weyl sum.
const WEYL_DIGITS: u32 = 15;
/// Consecutive frequencies reuse `e(m x) = e((m-1) x) e(x)` for at most this many steps.
const LADDER_RESEED: usize = 32;

pub const PROXY_DEFINITION: &str = "limsup_N |S_N(m)| proxied by max over checkpoints {N/4, N/2, N}";

/// Normalized exponential sums `S_N(m) = (1/N) sum_{i<N} e(m T_b^i x0)`.
#[derive(Clone, Debug)]
pub struct WeylSeries<F> {
    pub base: String,
    pub checkpoints: Vec<usize>,
    pub frequencies: Vec<i64>,
    /// `values[c][j]` is `S_{checkpoints[c]}(frequencies[j])`.
    pub values: Vec<Vec<Complex<F>>>,
    /// Error bound for each frequency, from orbit widths and rounding.
    pub radius: Vec<F>,
    /// `log b / log a` when the seed came from a base-`a` source.
    pub log_ratio: Option<f64>,
    pub path: OrbitPath,
    pub bits_used: u32,
    /// Largest orbit enclosure width.
    pub orbit_width: f64,
    points: Vec<f64>,
}

pub type WeylSeries64 = WeylSeries<f64>;

#[derive(Clone, Debug, Serialize)]
pub struct WeylRow {
    pub m: i64,
    pub n: usize,
    pub abs: f64,
    pub re: f64,
    pub im: f64,
    pub radius: f64,
}

impl<F: Real> WeylSeries<F> {
    /// Orbit points `x_0, ..., x_N` as floats.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        *self.checkpoints.last().expect("non-empty checkpoints")
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, n: usize, m: i64) -> Option<Complex<F>> {
        let c = self.checkpoints.iter().position(|&k| k == n)?;
        let j = self.frequencies.iter().position(|&k| k == m)?;
        Some(self.values[c][j])
    }

    pub fn rows(&self) -> Vec<WeylRow> {
        let mut out = Vec::new();
        for (j, &m) in self.frequencies.iter().enumerate() {
            for (c, &n) in self.checkpoints.iter().enumerate() {
                let v = self.values[c][j];
                out.push(WeylRow {
                    m,
                    n,
                    abs: v.norm().as_f64(),
                    re: v.re.as_f64(),
                    im: v.im.as_f64(),
                    radius: self.radius[j].as_f64(),
                });
            }
        }
        out
    }
}

struct FloatSink {
    points: Vec<f64>,
    max_width: f64,
}

impl OrbitSink for FloatSink {
    fn reset(&mut self) {
        self.points.clear();
        self.max_width = 0.0;
    }

    fn push(&mut self, point: &DyadicInterval, exact: Option<&ExactPoint>, _digit: u32) {
        let (lo, hi) = point.to_f64_bounds();
        self.max_width = self.max_width.max(hi - lo);
        self.points.push(match exact {
            Some(e) => e.to_f64(),
            None => point.mid_f64(),
        });
    }
}

/// `x_0` followed by `N` certified orbit points, as floats.
fn float_orbit(b: &BetaNumber, x0: &Enclosure, n: usize) -> Result<(Vec<f64>, f64, OrbitPath, u32), OrbitFourierError> {
    let mut sink = FloatSink { points: Vec::with_capacity(n + 1), max_width: 0.0 };
    let budget = PrecisionBudget::for_orbit(b, n, WEYL_DIGITS);
    let (bits, path) = run_orbit(b, x0, n, WEYL_DIGITS, OrbitMode::Auto, budget, &mut sink)?;
    let mut points = Vec::with_capacity(n + 1);
    points.push(x0.to_f64());
    points.extend_from_slice(&sink.points);
    Ok((points, sink.max_width, path, bits))
}

/// Evaluation order for a frequency list: sorted, with ladder steps where `m` increments by one.
struct PhasePlan {
    order: Vec<usize>,
    ladder: Vec<bool>,
}

impl PhasePlan {
    fn new(ms: &[i64]) -> Self {
        let mut order: Vec<usize> = (0..ms.len()).collect();
        order.sort_by_key(|&j| ms[j]);
        let mut ladder = vec![false; ms.len()];
        let mut run = 0;
        for w in 1..order.len() {
            if ms[order[w]] == ms[order[w - 1]] + 1 && run + 1 < LADDER_RESEED {
                ladder[w] = true;
                run += 1;
            } else {
                run = 0;
            }
        }
        Self { order, ladder }
    }
}

fn phase_f64(m: i64, x: f64) -> Complex64 {
    let t = m as f64 * x;
    unit_phase(t - t.floor())
}

/// Running sums of `e(m x_i)` stored at each checkpoint, divided by the checkpoint.
fn accumulate<F: Real>(points: &[f64], checkpoints: &[usize], ms: &[i64]) -> Vec<Vec<Complex<F>>> {
    let plan = PhasePlan::new(ms);
    let mut sums = vec![Complex64::new(0.0, 0.0); ms.len()];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut scratch = vec![Complex64::new(0.0, 0.0); ms.len()];
    for (i, &x) in points.iter().enumerate().take(*checkpoints.last().unwrap_or(&0)) {
        let step = phase_f64(1, x);
        for (w, &j) in plan.order.iter().enumerate() {
            let e = if plan.ladder[w] { scratch[plan.order[w - 1]] * step } else { phase_f64(ms[j], x) };
            scratch[j] = e;
            sums[j] += e;
        }
        while next < checkpoints.len() && checkpoints[next] == i + 1 {
            let n = checkpoints[next] as f64;
            out.push(
                sums.iter()
                    .zip(ms)
                    .map(|(s, &m)| {
                        if m == 0 {
                            Complex::new(F::one(), F::zero())
                        } else {
                            Complex::new(F::lit(s.re / n), F::lit(s.im / n))
                        }
                    })
                    .collect(),
            );
            next += 1;
        }
    }
    out
}

fn normalize_checkpoints(checkpoints: &[usize]) -> Result<Vec<usize>, OrbitFourierError> {
    let mut cps: Vec<usize> = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    if cps.is_empty() || cps[0] == 0 {
        return Err(OrbitFourierError::BadCheckpoints);
    }
    Ok(cps)
}

fn check_frequencies(ms: &[i64]) -> Result<(), OrbitFourierError> {
    match ms.iter().find(|m| m.abs() > MAX_FREQUENCY) {
        Some(&m) => Err(OrbitFourierError::FrequencyTooLarge(m)),
        None => Ok(()),
    }
}

/// Weyl sums at every checkpoint and frequency from one certified orbit pass.
pub fn weyl_sums<F: Real>(
    b: &BetaNumber,
    x0: &Enclosure,
    checkpoints: &[usize],
    ms: &[i64],
) -> Result<WeylSeries<F>, OrbitFourierError> {
    let cps = normalize_checkpoints(checkpoints)?;
    check_frequencies(ms)?;
    let n = *cps.last().expect("non-empty");
    let (points, width, path, bits_used) = float_orbit(b, x0, n)?;
    let values = accumulate::<F>(&points, &cps, ms);
    let round = (n as f64 + 2.0 * LADDER_RESEED as f64) * f64::EPSILON;
    let radius = ms
        .iter()
        .map(|&m| {
            if m == 0 {
                F::zero()
            } else {
                F::lit(std::f64::consts::TAU * m.abs() as f64 * (width + f64::EPSILON) + round)
            }
        })
        .collect();
    Ok(WeylSeries {
        base: b.descriptor().to_string(),
        checkpoints: cps,
        frequencies: ms.to_vec(),
        values,
        radius,
        log_ratio: None,
        path,
        bits_used,
        orbit_width: width,
        points,
    })
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn empirical_coefficient(points: &[f64], m: i64) -> Complex64 {
    let n = points.len() as f64;
    let re = compensated_sum(points.iter().map(|&x| phase_f64(m, x).re));
    let im = compensated_sum(points.iter().map(|&x| phase_f64(m, x).im));
    Complex64::new(re / n, im / n)
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceDefect {
    pub defect: f64,
    pub worst_m: i64,
    pub n: usize,
    /// The telescoping bound `2/N`.
    pub bound: f64,
    /// Floating-point allowance added to the bound when judging.
    pub roundoff: f64,
    pub within_bound: bool,
}

/// `max_{1 <= |m| <= degree} |E_{lambda_N} e_m - E_{lambda_N} (e_m o T_b)|` at the final checkpoint.
pub fn invariance_defect<F: Real>(series: &WeylSeries<F>, test_degree: u32) -> InvarianceDefect {
    let n = series.len();
    let pts = &series.points;
    let mut defect = 0.0f64;
    let mut worst_m = 0;
    for m in 1..=test_degree as i64 {
        let here = empirical_coefficient(&pts[..n], m);
        let shifted = empirical_coefficient(&pts[1..=n], m);
        let d = (here - shifted).norm();
        if d > defect {
            defect = d;
            worst_m = m;
        }
    }
    let bound = 2.0 / n as f64;
    let roundoff = 16.0 * f64::EPSILON;
    InvarianceDefect { defect, worst_m, n, bound, roundoff, within_bound: defect <= bound + roundoff }
}

fn weighted_gap(points: &[f64], density: &ParryDensity, max_m: u32) -> Result<f64, OrbitFourierError> {
    let tol = density.tolerance();
    let mut total = 0.0;
    for m in 1..=max_m as i64 {
        let emp = empirical_coefficient(points, m);
        let (parry, _) = density.fourier(m, tol)?;
        // negative frequencies contribute the same by conjugate symmetry
        total += 2.0 * (emp - parry).norm_sqr() / (1.0 + (m * m) as f64);
    }
    Ok(total)
}

/// `sum_{|m| <= M} |lambda_N(m) - parry(m)|^2 / (1 + m^2)` for the orbit measure at the final checkpoint.
pub fn parry_distance<F: Real>(
    series: &WeylSeries<F>,
    density: &ParryDensity,
    max_m: u32,
) -> Result<f64, OrbitFourierError> {
    weighted_gap(&series.points[..series.len()], density, max_m)
}

/// The same distance for an arbitrary point cloud.
pub fn empirical_parry_distance(points: &[f64], density: &ParryDensity, max_m: u32) -> Result<f64, OrbitFourierError> {
    if points.is_empty() {
        return Err(OrbitFourierError::TooFewPoints(1));
    }
    weighted_gap(points, density, max_m)
}

/// Cesaro mean `(1/(2M+1)) sum_{|m| <= M} |c_m|^2` for conjugate-symmetric coefficients `c_0..c_M`.
pub fn wiener_atom_estimate<F: Real>(coeffs: &[Complex<F>]) -> F {
    let Some((c0, rest)) = coeffs.split_first() else {
        return F::zero();
    };
    let two = F::lit(2.0);
    let sum = rest.iter().fold(c0.norm_sqr(), |acc, c| acc + two * c.norm_sqr());
    sum / F::from_usize(2 * rest.len() + 1).expect("small")
}

#[derive(Clone, Debug)]
pub struct DecayConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayProfile {
    pub frequencies: Vec<i64>,
    /// Sample mean of the limsup proxy for each frequency.
    pub d: Vec<f64>,
    pub sample_count: usize,
    pub n: usize,
    pub checkpoints: Vec<usize>,
    pub fitted_exponent: Option<f64>,
    pub predicted_exponent: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub independence: Independence,
    pub log_ratio: f64,
    pub proxy: &'static str,
    pub seed: u64,
    pub source_digits: usize,
}

impl DecayProfile {
    /// Median of `D(m)` over `lo <= m <= hi`.
    pub fn median_over(&self, lo: i64, hi: i64) -> Option<f64> {
        let vals: Vec<f64> =
            self.frequencies.iter().zip(&self.d).filter(|(&m, _)| lo <= m && m <= hi).map(|(_, &v)| v).collect();
        crate::scalar::median(&vals)
    }
}

/// Sample mean over source-generic points of `max_{N' in {N/4, N/2, N}} |S_N'(m)|`.
pub fn mean_decay_profile<S: Scalar>(
    src: &MarkovSource<S>,
    b: &BetaNumber,
    a: u64,
    ms: &[i64],
    config: &DecayConfig,
) -> Result<DecayProfile, OrbitFourierError> {
    if src.alphabet() as u64 != a {
        return Err(OrbitFourierError::AlphabetMismatch { source_alphabet: src.alphabet(), a });
    }
    if config.samples < 16 {
        return Err(OrbitFourierError::TooFewSamples(16));
    }
    check_frequencies(ms)?;
    let independence = check_independence(a, b)?;
    let n = config.n;
    let cps = normalize_checkpoints(&[(n / 4).max(1), (n / 2).max(1), n])?;
    let budget = PrecisionBudget::for_orbit(b, n, WEYL_DIGITS);
    let source_digits = (budget.initial_bits as f64 / (a as f64).log2()).ceil() as usize + 8;

    let one_sample = |i: usize| -> Result<Vec<f64>, OrbitFourierError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        let digits = src.sample_digits_with(source_digits, &mut rng);
        let x0 = Enclosure::rational(SampledPoint::from_digits(digits, src.alphabet()).value);
        let (points, _, _, _) = float_orbit(b, &x0, n)?;
        let vals = accumulate::<f64>(&points, &cps, ms);
        Ok((0..ms.len()).map(|j| vals.iter().map(|row| row[j].norm()).fold(0.0, f64::max)).collect())
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers.max(1)).build().expect("thread pool");
    let per_sample: Vec<Vec<f64>> =
        pool.install(|| (0..config.samples).into_par_iter().map(one_sample).collect::<Result<_, _>>())?;
    // fixed summation order keeps the result independent of the worker count
    let mut d = vec![0.0; ms.len()];
    for row in &per_sample {
        for (acc, v) in d.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for v in &mut d {
        *v /= config.samples as f64;
    }
    for (v, &m) in d.iter_mut().zip(ms) {
        if m == 0 {
            *v = 1.0;
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        ms.iter().zip(&d).filter(|(&m, &v)| m != 0 && v > 0.0).map(|(&m, &v)| ((m.abs() as f64).ln(), v.ln())).unzip();
    let fitted_exponent = least_squares(&xs, &ys).map(|(s, _)| s);
    let fit = src.fit_condition_exponents(10).ok();
    let (alpha_hat, beta_hat) = match &fit {
        Some(f) => (Some(f.alpha_hat), Some(f.beta_hat)),
        None => (None, None),
    };
    let predicted = fit.and_then(|f| predicted_exponent(f.alpha_hat, f.beta_hat.max(f.alpha_hat)).ok());
    Ok(DecayProfile {
        frequencies: ms.to_vec(),
        d,
        sample_count: config.samples,
        n,
        checkpoints: cps,
        fitted_exponent,
        predicted_exponent: predicted,
        alpha_hat,
        beta_hat,
        independence,
        log_ratio: b.ln() / (a as f64).ln(),
        proxy: PROXY_DEFINITION,
        seed: config.seed,
        source_digits: source_digits.to_usize().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(s: &str) -> BetaNumber {
        BetaNumber::parse(s).unwrap()
    }

    #[test]
    fn one_third_under_doubling() {
        let s: WeylSeries64 = weyl_sums(&beta("2"), &Enclosure::ratio(1, 3), &[10_000], &[0, 1]).unwrap();
        let v = s.value(10_000, 1).unwrap();
        assert!((v + 0.5).norm() <= 2.0 / 10_000.0);
        assert_eq!(s.value(10_000, 0).unwrap(), Complex64::new(1.0, 0.0));
        let d = invariance_defect(&s, 8);
        assert!(d.defect < 1e-12);
    }

    #[test]
    fn fixed_point_sums_are_one() {
        let s: WeylSeries64 = weyl_sums(&beta("(1+sqrt5)/2"), &Enclosure::zero(), &[5, 50], &[1, 7, -3]).unwrap();
        for row in &s.values {
            for v in row {
                assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            }
        }
        assert_eq!(invariance_defect(&s, 4).defect, 0.0);
    }

    #[test]
    fn ladder_matches_direct_phases() {
        let ms: Vec<i64> = (1..100).chain([500, 3, 1000]).collect();
        let pts: Vec<f64> = (0..200).map(|i| (i as f64 * 0.618_033_988_7).fract()).collect();
        let fast = accumulate::<f64>(&pts, &[200], &ms);
        for (j, &m) in ms.iter().enumerate() {
            let direct = empirical_coefficient(&pts, m);
            assert!((fast[0][j] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn frequency_and_checkpoint_validation() {
        let b = beta("2");
        let x = Enclosure::ratio(1, 3);
        assert!(matches!(weyl_sums::<f64>(&b, &x, &[], &[1]), Err(OrbitFourierError::BadCheckpoints)));
        assert!(matches!(
            weyl_sums::<f64>(&b, &x, &[10], &[MAX_FREQUENCY + 1]),
            Err(OrbitFourierError::FrequencyTooLarge(_))
        ));
    }

    #[test]
    fn wiener_examples() {
        let dirac = vec![Complex64::new(1.0, 0.0); 11];
        assert!((wiener_atom_estimate(&dirac) - 1.0).abs() < 1e-15);
        let mut leb = vec![Complex64::new(0.0, 0.0); 11];
        leb[0] = Complex64::new(1.0, 0.0);
        assert!((wiener_atom_estimate(&leb) - 1.0 / 21.0).abs() < 1e-15);
        let mut mix = vec![Complex64::new(0.5, 0.0); 1001];
        mix[0] = Complex64::new(1.0, 0.0);
        assert!((wiener_atom_estimate(&mix) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn parry_distance_of_fixed_point_is_positive() {
        let b = beta("(1+sqrt5)/2");
        let density = ParryDensity::new(&b, 1e-10).unwrap();
        let s: WeylSeries64 = weyl_sums(&b, &Enclosure::zero(), &[100], &[1]).unwrap();
        assert!(parry_distance(&s, &density, 8).unwrap() > 0.1);
        assert_eq!(parry_distance(&s, &density, 0).unwrap(), 0.0);
    }
}
