//! A stationary coding of a Bernoulli shift whose conditional measures keep
//! a `log^-4` floor of near-diagonal mass, so no polynomial envelope bounds it.
//!
//! `log` means the natural logarithm throughout. Schedule invariants are
//! checked in exact rational arithmetic with rational enclosures of `ln n`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scalar::{least_squares, Scalar};
use crate::source::MarkovSource;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CounterexampleError {
    #[error("base alphabet must have at least 3 symbols, got {0}")]
    BadAlphabet(u32),
    #[error("epsilon must lie in (0, 1/2)")]
    BadEpsilon,
    #[error("stage {0}: no cylinder union of depth <= {MAX_DEPTH} hits the mass window")]
    UnreachableWindow(usize),
    #[error("stage {0}: n_k exceeds 2^53")]
    ScheduleOverflow(usize),
    #[error("stage {0}: remaining budget is not positive")]
    BudgetExhausted(usize),
    #[error("could not separate ln({0}) from a rational threshold")]
    Undecided(u64),
    #[error("coder needs {0} window states, above the limit")]
    TooManyStates(u128),
    #[error("past window {got} is shorter than the required {need}")]
    WindowTooShort { got: usize, need: usize },
    #[error("at least {0} pair samples are required")]
    TooFewSamples(usize),
    #[error("stage {0} is not part of the schedule")]
    StageOutOfRange(usize),
    #[error("reverse Markov bound needs d < E[X] <= a")]
    InvalidMarkovBound,
    #[error("control needs at least two scales")]
    TooFewScales,
}

/// Largest cylinder depth tried when hitting a mass window.
pub const MAX_DEPTH: u32 = 40;
/// Largest state space for the exact stage-mass recursion and the coder table.
const MAX_STATES: u128 = 1 << 22;
/// Minimum number of conditional pair samples.
pub const MIN_PAIRS: usize = 10_000;
/// Binary digits of the coded process used to place a point in `[0, 1)`.
const CODED_BITS: usize = 53;
const LN_TERMS: usize = 24;

fn ser_ratio<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `2 sum_{j < terms} z^(2j+1)/(2j+1)` and the same plus a tail bound, for `0 <= z <= 1/3`.
fn atanh2(z: &BigRational, terms: usize) -> (BigRational, BigRational) {
    let z2 = z * z;
    let mut power = z.clone();
    let mut sum = BigRational::zero();
    for j in 0..terms {
        sum += &power / BigInt::from(2 * j + 1);
        power = &power * &z2;
    }
    let two = BigRational::from_integer(2.into());
    // remaining terms are at most z^(2J+1) / ((2J+1)(1 - z^2))
    let tail = &power / (BigRational::from_integer(BigInt::from(2 * terms + 1)) * (BigRational::one() - z2));
    (&two * &sum, two * (sum + tail))
}

/// Rational bracket `[lo, hi]` of `ln n` for `n >= 1`.
pub fn ln_enclosure(n: u64, terms: usize) -> (BigRational, BigRational) {
    assert!(n >= 1);
    let k = 63 - n.leading_zeros() as i64;
    let pow = BigInt::one() << k as usize;
    let third = BigRational::new(1.into(), 3.into());
    let (l2_lo, l2_hi) = atanh2(&third, terms);
    let z = BigRational::new(BigInt::from(n) - &pow, BigInt::from(n) + &pow);
    let (r_lo, r_hi) = atanh2(&z, terms);
    let kk = BigRational::from_integer(k.into());
    (&kk * l2_lo + r_lo, kk * l2_hi + r_hi)
}

/// Decide `ln n > t` exactly, refining the bracket if needed.
fn ln_exceeds(n: u64, t: &BigRational) -> Result<bool, CounterexampleError> {
    let mut terms = LN_TERMS;
    while terms <= 16 * LN_TERMS {
        let (lo, hi) = ln_enclosure(n, terms);
        if &lo > t {
            return Ok(true);
        }
        if &hi < t || (n == 1 && t >= &BigRational::zero()) {
            return Ok(false);
        }
        terms *= 2;
    }
    Err(CounterexampleError::Undecided(n))
}

/// Certified `floor(ln n)`.
fn ln_floor(n: u64) -> Result<u64, CounterexampleError> {
    let guess = (n as f64).ln().floor() as u64;
    let mut f = guess.saturating_sub(1);
    while ln_exceeds(n, &BigRational::from_integer(BigInt::from(f + 1)))? {
        f += 1;
    }
    while f > 0 && !ln_exceeds(n, &BigRational::from_integer(BigInt::from(f)))? {
        f -= 1;
    }
    Ok(f)
}

/// One stage of the construction.
#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub n: u64,
    /// `floor(ln n)`: the stage set is the union of `sigma^-s Y` for `s <= log_floor`.
    pub log_floor: u64,
    /// Cylinder depth of `Y`.
    pub depth: u32,
    /// `Y` is the union of the first `words` depth-`depth` cylinders in lexicographic order.
    pub words: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub y_mass: BigRational,
    /// Mass of `union_{s <= log_floor} sigma^-s Y`.
    #[serde(serialize_with = "ser_ratio")]
    pub stage_mass: BigRational,
    /// `1 - epsilon - sum of earlier stage masses`, which `1/ln n` must undercut.
    #[serde(serialize_with = "ser_ratio")]
    pub budget: BigRational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionParams {
    pub l: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub epsilon: BigRational,
    pub stages: Vec<Stage>,
    #[serde(serialize_with = "ser_ratio")]
    pub total_mass: BigRational,
    pub log_base: &'static str,
}

impl ConstructionParams {
    pub fn schedule(&self) -> Vec<u64> {
        self.stages.iter().map(|s| s.n).collect()
    }
}

/// Smallest `n > floor` with `1/ln n < budget`.
fn smallest_n(budget: &BigRational, floor: u64, stage: usize) -> Result<u64, CounterexampleError> {
    let t = budget.recip();
    let tf = to_f64(&t);
    if tf > (2f64).powi(53).ln() {
        return Err(CounterexampleError::ScheduleOverflow(stage));
    }
    let lower = floor.max(1) + 1;
    let mut n = (tf.exp().floor() as u64).saturating_sub(2).max(lower);
    while !ln_exceeds(n, &t)? {
        n += 1;
    }
    while n > lower && ln_exceeds(n - 1, &t)? {
        n -= 1;
    }
    Ok(n)
}

/// First `(depth, words)` with `words l^-depth` strictly inside `(1/(2 ln^2 n), 1/ln^2 n)`.
fn hit_window(l: u32, n: u64, stage: usize) -> Result<(u32, u64), CounterexampleError> {
    let (lo, hi) = ln_enclosure(n, 2 * LN_TERMS);
    let (lo2, hi2) = (&lo * &lo, &hi * &hi);
    let half = BigRational::new(1.into(), 2.into());
    for depth in 1..=MAX_DEPTH {
        let Some(cells) = (l as u64).checked_pow(depth) else { break };
        let mass = |j: u64| BigRational::new(BigInt::from(j), BigInt::from(cells));
        let above = |j: u64| mass(j) * &lo2 > half;
        let below = |j: u64| mass(j) * &hi2 < BigRational::one();
        let mut j = ((0.5 / to_f64(&lo2)) * cells as f64).floor().max(1.0) as u64;
        while j > 1 && above(j - 1) {
            j -= 1;
        }
        while !above(j) && j < cells {
            j += 1;
        }
        if above(j) && below(j) {
            return Ok((depth, j));
        }
    }
    Err(CounterexampleError::UnreachableWindow(stage))
}

/// Mass of `{x : some s <= shifts has x[s..s+depth] among the first `words` cylinders}`.
fn shifted_union_mass(l: u32, depth: u32, words: u64, shifts: u64) -> Result<BigRational, CounterexampleError> {
    let l128 = l as u128;
    let states = l128.pow(depth - 1);
    if states > MAX_STATES {
        return Err(CounterexampleError::TooManyStates(states));
    }
    let states = states as usize;
    let mut miss = vec![BigInt::one(); states];
    for _ in 0..=shifts {
        let mut next = vec![BigInt::zero(); states];
        for (state, count) in miss.iter().enumerate() {
            if count.is_zero() {
                continue;
            }
            for c in 0..l as usize {
                let value = state * l as usize + c;
                if (value as u64) < words {
                    continue;
                }
                next[value % states] += count;
            }
        }
        miss = next;
    }
    let total: BigInt = miss.into_iter().sum();
    let len = (depth as u64 - 1 + shifts + 1) as usize;
    Ok(BigRational::one() - BigRational::new(total, num_traits::pow(BigInt::from(l), len)))
}

/// Build `K` stages with the smallest admissible `n_k` at each.
pub fn build_schedule(l: u32, epsilon: &BigRational, stages: usize) -> Result<ConstructionParams, CounterexampleError> {
    if l < 3 {
        return Err(CounterexampleError::BadAlphabet(l));
    }
    if !(epsilon.is_positive() && epsilon < &BigRational::new(1.into(), 2.into())) {
        return Err(CounterexampleError::BadEpsilon);
    }
    let mut out = Vec::with_capacity(stages);
    let mut used = BigRational::zero();
    let mut prev = 1u64;
    for k in 1..=stages {
        let budget = BigRational::one() - epsilon - &used;
        if !budget.is_positive() {
            return Err(CounterexampleError::BudgetExhausted(k));
        }
        let n = smallest_n(&budget, prev, k)?;
        let (depth, words) = hit_window(l, n, k)?;
        let log_floor = ln_floor(n)?;
        let stage_mass = shifted_union_mass(l, depth, words, log_floor)?;
        used += &stage_mass;
        if used >= BigRational::one() - epsilon {
            return Err(CounterexampleError::BudgetExhausted(k + 1));
        }
        out.push(Stage {
            n,
            log_floor,
            depth,
            words,
            y_mass: BigRational::new(BigInt::from(words), num_traits::pow(BigInt::from(l), depth as usize)),
            stage_mass,
            budget,
        });
        prev = n;
    }
    Ok(ConstructionParams { l, epsilon: epsilon.clone(), stages: out, total_mass: used, log_base: "natural" })
}

/// `R_n(x) = 1_Y(sigma^n x)` for `Y` the union of the stage sets, read through a finite window.
#[derive(Clone, Debug)]
pub struct CodedProcess {
    params: ConstructionParams,
    window: usize,
    span: usize,
    states: usize,
    table: Vec<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NearDiagonalEstimate {
    pub n: u64,
    pub estimate: f64,
    pub std_err: f64,
    /// `0.25 ln(n)^-4`.
    pub lower_bound: f64,
    pub satisfied: bool,
    pub window: usize,
    pub past_samples: usize,
    pub pair_samples: usize,
    /// Fraction of sampled `R_0 = 1`, with its binomial sigma.
    pub marginal: f64,
    pub marginal_sigma: f64,
}

impl CodedProcess {
    pub fn new(params: ConstructionParams, window: usize) -> Result<Self, CounterexampleError> {
        let span = params.stages.iter().map(|s| (s.log_floor + s.depth as u64) as usize).max().unwrap_or(0);
        let states = (params.l as u128).pow(span as u32);
        if states > MAX_STATES {
            return Err(CounterexampleError::TooManyStates(states));
        }
        let states = states as usize;
        let l = params.l as usize;
        let table = (0..states)
            .map(|w| {
                let digits: Vec<usize> = (0..span).map(|i| (w / l.pow((span - 1 - i) as u32)) % l).collect();
                params.stages.iter().any(|s| {
                    (0..=s.log_floor as usize).any(|shift| {
                        let v = digits[shift..shift + s.depth as usize]
                            .iter()
                            .fold(0u64, |acc, &d| acc * l as u64 + d as u64);
                        v < s.words
                    })
                })
            })
            .collect();
        Ok(Self { params, window, span, states, table })
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn with_window(&self, window: usize) -> Self {
        Self { window, ..self.clone() }
    }

    /// Exact `P(R_0 = 1)`.
    pub fn exact_marginal(&self) -> BigRational {
        let ones = self.table.iter().filter(|&&b| b).count();
        BigRational::new(BigInt::from(ones), BigInt::from(self.states))
    }

    fn required_window(&self, n: u64) -> Result<usize, CounterexampleError> {
        let depth = self.params.stages.iter().map(|s| s.depth as usize).max().unwrap_or(0);
        Ok(ln_floor(n)? as usize + depth)
    }

    /// Posterior over the current base window given the observed past of `R`.
    fn filter(&self, past: &[bool]) -> Vec<f64> {
        if self.span == 0 {
            return vec![1.0];
        }
        let l = self.params.l as usize;
        let tail = self.states / l;
        let mut post: Vec<f64> = self.table.iter().map(|&r| if r == past[0] { 1.0 } else { 0.0 }).collect();
        let mut folded = vec![0.0; tail];
        for &obs in &past[1..] {
            folded.iter_mut().for_each(|v| *v = 0.0);
            for (w, &p) in post.iter().enumerate() {
                folded[w % tail] += p;
            }
            for (w, slot) in post.iter_mut().enumerate() {
                *slot = if self.table[w] == obs { folded[w / l] } else { 0.0 };
            }
            let z: f64 = post.iter().sum();
            post.iter_mut().for_each(|v| *v /= z);
        }
        post
    }

    fn future_point(&self, start: usize, rng: &mut ChaCha8Rng) -> f64 {
        let l = self.params.l as usize;
        let tail = (self.states / l).max(1);
        let mut w = start;
        let mut x = 0.0;
        let mut scale = 0.5;
        for _ in 0..CODED_BITS {
            w = if self.span == 0 { 0 } else { (w % tail) * l + rng.random_range(0..l) };
            if self.table[w] {
                x += scale;
            }
            scale *= 0.5;
        }
        x
    }

    /// `E_eta[(mu_eta x mu_eta)(|x - y| < 1/n)]` for stage `k` (1-based).
    pub fn estimate_near_diagonal(
        &self,
        stage: usize,
        pair_samples: usize,
        past_samples: usize,
        seed: u64,
    ) -> Result<NearDiagonalEstimate, CounterexampleError> {
        let n = self.params.stages.get(stage.wrapping_sub(1)).ok_or(CounterexampleError::StageOutOfRange(stage))?.n;
        self.near_diagonal_at(n, pair_samples, past_samples, seed)
    }

    /// The same estimate at an arbitrary scale `1/n`.
    pub fn near_diagonal_at(
        &self,
        n: u64,
        pair_samples: usize,
        past_samples: usize,
        seed: u64,
    ) -> Result<NearDiagonalEstimate, CounterexampleError> {
        let need = self.required_window(n)?;
        if self.window < need.max(1) {
            return Err(CounterexampleError::WindowTooShort { got: self.window, need: need.max(1) });
        }
        if pair_samples < MIN_PAIRS {
            return Err(CounterexampleError::TooFewSamples(MIN_PAIRS));
        }
        let pasts = past_samples.clamp(2, pair_samples);
        let per_past = pair_samples.div_ceil(pasts);
        let l = self.params.l as usize;
        let radius = 1.0 / n as f64;
        let span = self.span;
        let rows: Vec<(f64, bool)> = (0..pasts)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let base: Vec<usize> =
                    (0..self.window + span.saturating_sub(1)).map(|_| rng.random_range(0..l)).collect();
                let past: Vec<bool> = (0..self.window)
                    .map(|t| self.table[base[t..t + span].iter().fold(0, |acc, &d| acc * l + d)])
                    .collect();
                let post = self.filter(&past);
                let mut cdf = Vec::with_capacity(post.len());
                let mut acc = 0.0;
                for p in &post {
                    acc += p;
                    cdf.push(acc);
                }
                let draw = |rng: &mut ChaCha8Rng| {
                    let u = rng.random::<f64>() * acc;
                    let start = cdf.partition_point(|&c| c <= u).min(post.len() - 1);
                    self.future_point(start, rng)
                };
                let hits = (0..per_past)
                    .filter(|_| {
                        let x = draw(&mut rng);
                        let y = draw(&mut rng);
                        (x - y).abs() < radius
                    })
                    .count();
                (hits as f64 / per_past as f64, past[0])
            })
            .collect();
        let p = pasts as f64;
        let estimate = rows.iter().map(|r| r.0).sum::<f64>() / p;
        let var = rows.iter().map(|r| (r.0 - estimate).powi(2)).sum::<f64>() / (p - 1.0);
        let std_err = (var / p).sqrt();
        let marginal = rows.iter().filter(|r| r.1).count() as f64 / p;
        let lower_bound = 0.25 / (n as f64).ln().powi(4);
        Ok(NearDiagonalEstimate {
            n,
            estimate,
            std_err,
            lower_bound,
            satisfied: estimate >= lower_bound - 2.0 * std_err,
            window: self.window,
            past_samples: pasts,
            pair_samples: per_past * pasts,
            marginal,
            marginal_sigma: (marginal * (1.0 - marginal) / p).sqrt().max(1.0 / p),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationVerdict {
    Violated,
    NotViolated,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaProbe {
    pub beta: f64,
    /// `estimate_k * n_k^beta` per stage.
    pub ratios: Vec<f64>,
    pub increasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationReport {
    pub verdict: ViolationVerdict,
    pub probes: Vec<BetaProbe>,
    /// Least-squares polynomial exponent through the stage estimates.
    pub fitted_beta: Option<f64>,
    pub stages: usize,
    pub caveat: &'static str,
}

/// Whether `estimate_k / n_k^-beta` grows along the stages for every probed `beta`.
pub fn condition_violation_report(estimates: &[NearDiagonalEstimate], betas: &[f64]) -> ViolationReport {
    let probes: Vec<BetaProbe> = betas
        .iter()
        .map(|&beta| {
            let ratios: Vec<f64> = estimates.iter().map(|e| e.estimate * (e.n as f64).powf(beta)).collect();
            let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
            BetaProbe { beta, ratios, increasing }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        estimates.iter().filter(|e| e.estimate > 0.0).map(|e| ((e.n as f64).ln(), e.estimate.ln())).unzip();
    let verdict = if estimates.len() < 2 || probes.is_empty() {
        ViolationVerdict::Inconclusive
    } else if probes.iter().all(|p| p.increasing) {
        ViolationVerdict::Violated
    } else {
        ViolationVerdict::NotViolated
    };
    ViolationReport {
        verdict,
        probes,
        fitted_beta: least_squares(&xs, &ys).map(|(s, _)| -s),
        stages: estimates.len(),
        caveat: "finitely many stages; the coded set is truncated after the last simulated stage",
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlRow {
    pub n: u64,
    pub estimate: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlFit {
    pub rows: Vec<ControlRow>,
    pub beta_hat: f64,
    pub c_hat: f64,
    pub pairs: usize,
}

/// Near-diagonal mass of pairs drawn from a finite-memory source, with a fitted `C n^-beta`.
pub fn control_envelope<S: Scalar>(
    src: &MarkovSource<S>,
    scales: &[u64],
    pairs: usize,
    seed: u64,
) -> Result<ControlFit, CounterexampleError> {
    if scales.len() < 2 {
        return Err(CounterexampleError::TooFewScales);
    }
    let a = src.alphabet() as f64;
    let digits = (CODED_BITS as f64 / a.log2()).ceil() as usize + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        src.sample_digits_with(digits, rng).iter().rev().fold(0.0, |acc, &d| (acc + d as f64) / a)
    };
    let gaps: Vec<f64> = (0..pairs).map(|_| (point(&mut rng) - point(&mut rng)).abs()).collect();
    let rows: Vec<ControlRow> = scales
        .iter()
        .map(|&n| {
            let p = gaps.iter().filter(|&&g| g < 1.0 / n as f64).count() as f64 / pairs as f64;
            ControlRow { n, estimate: p, std_err: (p * (1.0 - p) / pairs as f64).sqrt() }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.estimate > 0.0).map(|r| ((r.n as f64).ln(), r.estimate.ln())).unzip();
    let (slope, intercept) = least_squares(&xs, &ys).ok_or(CounterexampleError::TooFewScales)?;
    Ok(ControlFit { rows, beta_hat: -slope, c_hat: intercept.exp(), pairs })
}

/// Lower bound `(E[X] - d)/(a - d)` on `P(X > d)` for `X <= a` almost surely.
pub fn reverse_markov_bound(a: f64, d: f64, expectation: f64) -> Result<f64, CounterexampleError> {
    if !(d < expectation && expectation <= a) {
        return Err(CounterexampleError::InvalidMarkovBound);
    }
    Ok((expectation - d) / (a - d))
}
