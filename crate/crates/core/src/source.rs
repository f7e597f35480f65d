//! Finite-memory Markov sources on `a` symbols and their conditional cylinder masses.
//!
//! A source of order `n` conditions each symbol on the previous `n`, so the
//! conditional measure given the whole past depends only on a length-`n`
//! context. Contexts are indexed as base-`a` integers, oldest symbol first.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{least_squares, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("alphabet size must be at least 2")]
    AlphabetTooSmall,
    #[error("expected {expected} rows of {alphabet} entries")]
    BadShape { expected: usize, alphabet: usize },
    #[error("row {0} does not sum to one")]
    NotStochastic(usize),
    #[error("transition entries must be positive (zero entries give a non-ergodic or zero-entropy source)")]
    NonPositive,
    #[error("context has length {got}, expected {expected}")]
    ContextLength { got: usize, expected: usize },
    #[error("symbol {0} outside the alphabet")]
    SymbolOutOfRange(usize),
    #[error("stationary system is singular")]
    Singular,
    #[error("fit needs m_max >= 3")]
    FitTooShort,
    #[error("cannot parse source spec: {0}")]
    Parse(String),
    #[error("source is too large for exact tables ({0} contexts)")]
    TooLarge(usize),
}

/// Stationary Markov source of order `n` on `a` symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovSource<S> {
    alphabet: usize,
    order: usize,
    transition: Vec<Vec<S>>,
    stationary: Vec<S>,
}

pub type ExactSource = MarkovSource<BigRational>;
pub type FloatSource = MarkovSource<f64>;

/// JSON description: `{"alphabet": 2, "order": 1, "transition": [["9/10", "1/10"], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SourceSpec {
    pub alphabet: usize,
    pub order: usize,
    pub transition: Vec<Vec<SpecEntry>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecEntry {
    Text(String),
    Number(f64),
}

impl SpecEntry {
    fn text(&self) -> String {
        match self {
            SpecEntry::Text(s) => s.clone(),
            SpecEntry::Number(x) => format!("{x}"),
        }
    }
}

const MAX_CONTEXTS: usize = 1 << 16;

fn max_of<S: Scalar>(values: impl IntoIterator<Item = S>) -> S {
    values.into_iter().fold(S::zero(), |best, v| if v > best { v } else { best })
}

impl<S: Scalar> MarkovSource<S> {
    pub fn new(alphabet: usize, order: usize, transition: Vec<Vec<S>>) -> Result<Self, SourceError> {
        if alphabet < 2 {
            return Err(SourceError::AlphabetTooSmall);
        }
        let contexts = alphabet.checked_pow(order as u32).filter(|&c| c <= MAX_CONTEXTS);
        let Some(contexts) = contexts else {
            return Err(SourceError::TooLarge(usize::MAX));
        };
        if transition.len() != contexts || transition.iter().any(|r| r.len() != alphabet) {
            return Err(SourceError::BadShape { expected: contexts, alphabet });
        }
        for (i, row) in transition.iter().enumerate() {
            if row.iter().any(|p| *p <= S::zero()) {
                return Err(SourceError::NonPositive);
            }
            let sum = row.iter().cloned().fold(S::zero(), |a, b| a + b);
            if (sum - S::one()).abs() > S::stochastic_tolerance() {
                return Err(SourceError::NotStochastic(i));
            }
        }
        let mut src = Self { alphabet, order, transition, stationary: Vec::new() };
        src.stationary = src.solve_stationary()?;
        Ok(src)
    }

    /// Independent symbols with the given marginal.
    pub fn iid(probs: Vec<S>) -> Result<Self, SourceError> {
        let a = probs.len();
        Self::new(a, 0, vec![probs])
    }

    pub fn from_spec(spec: &SourceSpec) -> Result<Self, SourceError> {
        let rows = spec
            .transition
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| {
                        let t = e.text();
                        S::parse_probability(&t).ok_or_else(|| SourceError::Parse(format!("bad probability {t:?}")))
                    })
                    .collect::<Result<Vec<S>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(spec.alphabet, spec.order, rows)
    }

    pub fn from_json(text: &str) -> Result<Self, SourceError> {
        let spec: SourceSpec = serde_json::from_str(text).map_err(|e| SourceError::Parse(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn contexts(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<S>] {
        &self.transition
    }

    /// Stationary distribution on contexts.
    pub fn stationary(&self) -> &[S] {
        &self.stationary
    }

    fn next_context(&self, ctx: usize, symbol: usize) -> usize {
        if self.order == 0 {
            0
        } else {
            (ctx * self.alphabet + symbol) % self.contexts()
        }
    }

    /// Solve `pi Q = pi`, `sum pi = 1` on the context chain by Gaussian elimination.
    #[allow(clippy::needless_range_loop)]
    fn solve_stationary(&self) -> Result<Vec<S>, SourceError> {
        let k = self.contexts();
        if k == 1 {
            return Ok(vec![S::one()]);
        }
        // rows: equations; columns: unknowns pi_0..pi_{k-1}, then right-hand side
        let mut m = vec![vec![S::zero(); k + 1]; k];
        for c in 0..k {
            for s in 0..self.alphabet {
                let d = self.next_context(c, s);
                m[d][c] = m[d][c].clone() + self.transition[c][s].clone();
            }
            m[c][c] = m[c][c].clone() - S::one();
        }
        for v in m[k - 1].iter_mut() {
            *v = S::one();
        }
        for col in 0..k {
            let pivot = (col..k)
                .filter(|&r| !m[r][col].is_zero())
                .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("comparable"))
                .ok_or(SourceError::Singular)?;
            m.swap(col, pivot);
            let p = m[col][col].clone();
            for v in m[col].iter_mut() {
                *v = v.clone() / p.clone();
            }
            for r in 0..k {
                if r != col && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for j in col..=k {
                        let delta = f.clone() * m[col][j].clone();
                        m[r][j] = m[r][j].clone() - delta;
                    }
                }
            }
        }
        Ok(m.into_iter().map(|row| row[k].clone()).collect())
    }

    fn context_index(&self, context: &[usize]) -> Result<usize, SourceError> {
        if context.len() != self.order {
            return Err(SourceError::ContextLength { got: context.len(), expected: self.order });
        }
        context.iter().try_fold(0usize, |acc, &s| {
            if s >= self.alphabet {
                Err(SourceError::SymbolOutOfRange(s))
            } else {
                Ok(acc * self.alphabet + s)
            }
        })
    }

    /// Conditional measure given the last `order` symbols of the past.
    pub fn conditional_measure(&self, context: &[usize]) -> Result<ConditionalMeasure<'_, S>, SourceError> {
        let ctx = self.context_index(context)?;
        Ok(ConditionalMeasure { source: self, context: ctx })
    }

    /// Mass of the cylinder `word` under the context with index `ctx`.
    pub fn cylinder_mass_from(&self, ctx: usize, word: &[usize]) -> Result<S, SourceError> {
        let mut mass = S::one();
        let mut c = ctx;
        for &s in word {
            if s >= self.alphabet {
                return Err(SourceError::SymbolOutOfRange(s));
            }
            mass = mass * self.transition[c][s].clone();
            c = self.next_context(c, s);
        }
        Ok(mass)
    }

    /// Largest single transition probability.
    pub fn max_transition(&self) -> S {
        max_of(self.transition.iter().flat_map(|r| r.iter().cloned()))
    }

    /// Mass of the constant word `symbol^r` from every context.
    fn constant_word_masses(&self, symbol: usize, r: usize) -> Vec<S> {
        let mut cur = vec![S::one(); self.contexts()];
        for _ in 0..r {
            cur = (0..self.contexts())
                .map(|c| self.transition[c][symbol].clone() * cur[self.next_context(c, symbol)].clone())
                .collect();
        }
        cur
    }

    /// Best product of `i` transitions ending in each context, over all starting contexts.
    fn best_prefix_masses(&self, i: usize) -> Vec<Vec<S>> {
        let k = self.contexts();
        let mut out = vec![vec![S::one(); k]];
        for _ in 0..i {
            let prev = out.last().expect("nonempty");
            let mut next = vec![S::zero(); k];
            for (c, row) in self.transition.iter().enumerate() {
                for (s, p) in row.iter().enumerate() {
                    let d = self.next_context(c, s);
                    let v = prev[c].clone() * p.clone();
                    if v > next[d] {
                        next[d] = v;
                    }
                }
            }
            out.push(next);
        }
        out
    }

    /// `max_{context, |w| = m} mu_context[w]`.
    fn max_cylinder_mass(&self, m: usize) -> S {
        let mut cur = vec![S::one(); self.contexts()];
        for _ in 0..m {
            cur = (0..self.contexts())
                .map(|c| {
                    max_of(
                        (0..self.alphabet)
                            .map(|s| self.transition[c][s].clone() * cur[self.next_context(c, s)].clone()),
                    )
                })
                .collect();
        }
        max_of(cur)
    }

    /// `max` over contexts and adjacent depth-`m` cylinders `w, w+1` of `mu[w] + mu[w+1]`.
    fn max_adjacent_pair_mass(&self, m: usize) -> S {
        if m == 0 {
            return S::one();
        }
        let prefixes = self.best_prefix_masses(m - 1);
        let mut best = self.max_cylinder_mass(m);
        for (i, pref) in prefixes.iter().enumerate() {
            let r = m - 1 - i;
            let right = self.constant_word_masses(self.alphabet - 1, r);
            let left = self.constant_word_masses(0, r);
            for (c, pm) in pref.iter().enumerate() {
                for s in 0..self.alphabet - 1 {
                    let a = self.transition[c][s].clone() * right[self.next_context(c, s)].clone();
                    let b = self.transition[c][s + 1].clone() * left[self.next_context(c, s + 1)].clone();
                    let v = pm.clone() * (a + b);
                    if v > best {
                        best = v;
                    }
                }
            }
        }
        best
    }

    /// Essential supremum of conditional masses of intervals of length `1/k`.
    pub fn ess_sup_interval_mass(&self, k: u64) -> EssSup<S> {
        let (m, exact) = level_of(k, self.alphabet as u64);
        if exact {
            EssSup { value: self.max_cylinder_mass(m), depth: m, covering: false }
        } else {
            EssSup { value: self.max_adjacent_pair_mass(m), depth: m, covering: true }
        }
    }

    /// `max_context sum_{|w - w'| <= 1} mu[w] mu[w']` over depth-`m` cylinders, `k = a^m`.
    pub fn near_diagonal_mass(&self, k: u64) -> EssSup<S> {
        let (m, exact) = level_of(k, self.alphabet as u64);
        let kc = self.contexts();
        let mut squares = vec![S::one(); kc];
        let mut adjacent = vec![S::zero(); kc];
        for r in 1..=m {
            let left = self.constant_word_masses(0, r - 1);
            let right = self.constant_word_masses(self.alphabet - 1, r - 1);
            let mut sq = vec![S::zero(); kc];
            let mut adj = vec![S::zero(); kc];
            for c in 0..kc {
                let row = &self.transition[c];
                for s in 0..self.alphabet {
                    let d = self.next_context(c, s);
                    let p2 = row[s].clone() * row[s].clone();
                    sq[c] = sq[c].clone() + p2.clone() * squares[d].clone();
                    adj[c] = adj[c].clone() + p2 * adjacent[d].clone();
                    if s + 1 < self.alphabet {
                        let d2 = self.next_context(c, s + 1);
                        let cross = row[s].clone() * right[d].clone() * row[s + 1].clone() * left[d2].clone();
                        adj[c] = adj[c].clone() + cross;
                    }
                }
            }
            squares = sq;
            adjacent = adj;
        }
        let two = S::one() + S::one();
        let value = max_of((0..kc).map(|c| squares[c].clone() + two.clone() * adjacent[c].clone()));
        EssSup { value, depth: m, covering: !exact }
    }

    /// Entropy rate in nats.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (c, row) in self.transition.iter().enumerate() {
            let pi = self.stationary[c].to_f64().unwrap_or(0.0);
            for p in row {
                let p = p.to_f64().unwrap_or(0.0);
                if p > 0.0 {
                    h -= pi * p * p.ln();
                }
            }
        }
        h
    }

    /// Least-squares exponents of the ess-sup and near-diagonal masses over `k = a^1 .. a^m_max`.
    pub fn fit_condition_exponents(&self, m_max: usize) -> Result<ConditionEstimates, SourceError> {
        if m_max < 3 {
            return Err(SourceError::FitTooShort);
        }
        if self.entropy() <= 0.0 {
            return Err(SourceError::NonPositive);
        }
        let a = self.alphabet as u64;
        let mut grid = Vec::with_capacity(m_max);
        let (mut lk, mut le, mut ln) = (Vec::new(), Vec::new(), Vec::new());
        for m in 1..=m_max {
            let k = a.pow(m as u32);
            let e = self.ess_sup_interval_mass(k).value.to_f64().unwrap_or(f64::NAN);
            let d = self.near_diagonal_mass(k).value.to_f64().unwrap_or(f64::NAN);
            lk.push((k as f64).ln());
            le.push(e.ln());
            ln.push(d.ln());
            grid.push(ConditionRow { k, m, ess_sup: e, near_diag: d });
        }
        let alpha_hat = -least_squares(&lk, &le).expect("distinct k").0;
        let beta_hat = -least_squares(&lk, &ln).expect("distinct k").0;
        Ok(ConditionEstimates { alpha_hat, beta_hat, grid })
    }

    /// Draw `digits` symbols from the stationary chain; the point is `sum w_i a^-i`.
    pub fn sample_digits(&self, digits: usize, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_digits_with(digits, &mut rng)
    }

    pub(crate) fn sample_digits_with(&self, digits: usize, rng: &mut impl Rng) -> Vec<usize> {
        let pick = |weights: &[S], rng: &mut dyn rand::RngCore| -> usize {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, w) in weights.iter().enumerate() {
                acc += w.to_f64().unwrap_or(0.0);
                if u < acc {
                    return i;
                }
            }
            weights.len() - 1
        };
        let mut out = Vec::with_capacity(digits);
        let mut ctx = pick(&self.stationary, rng);
        // the initial context supplies the first `order` symbols
        let mut initial = Vec::with_capacity(self.order);
        let mut c = ctx;
        for _ in 0..self.order {
            initial.push(c % self.alphabet);
            c /= self.alphabet;
        }
        initial.reverse();
        out.extend(initial.into_iter().take(digits));
        while out.len() < digits {
            let s = pick(&self.transition[ctx], rng);
            out.push(s);
            ctx = self.next_context(ctx, s);
        }
        out
    }

    /// A stationary sample point with `digits` base-`a` digits, as an exact rational.
    pub fn sample_point(&self, digits: usize, seed: u64) -> SampledPoint {
        let w = self.sample_digits(digits, seed);
        SampledPoint::from_digits(w, self.alphabet)
    }
}

/// `k = a^m` gives `(m, true)`; otherwise `m = floor(log_a k)` and `false`.
fn level_of(k: u64, a: u64) -> (usize, bool) {
    let k = k.max(1);
    let mut m = 0;
    let mut p: u64 = 1;
    while let Some(next) = p.checked_mul(a) {
        if next > k {
            break;
        }
        p = next;
        m += 1;
    }
    (m, p == k)
}

#[derive(Clone, Debug)]
pub struct SampledPoint {
    pub digits: Vec<usize>,
    pub value: BigRational,
}

impl SampledPoint {
    pub fn from_digits(digits: Vec<usize>, alphabet: usize) -> Self {
        let a = BigInt::from(alphabet);
        let mut numer = BigInt::zero();
        for &d in &digits {
            numer = numer * &a + BigInt::from(d);
        }
        let denom = num_traits::pow(a, digits.len());
        Self { digits, value: BigRational::new(numer, denom) }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

/// A supremum of conditional masses at cylinder depth `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct EssSup<S> {
    pub value: S,
    pub depth: usize,
    /// True when `k` was not a power of `a` and two adjacent cylinders cover each interval.
    pub covering: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionRow {
    pub k: u64,
    pub m: usize,
    pub ess_sup: f64,
    pub near_diag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionEstimates {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub grid: Vec<ConditionRow>,
}

/// The conditional measure `mu_omega` of a finite-memory source.
#[derive(Clone, Debug)]
pub struct ConditionalMeasure<'a, S> {
    source: &'a MarkovSource<S>,
    context: usize,
}

impl<S: Scalar> ConditionalMeasure<'_, S> {
    pub fn cylinder_mass(&self, word: &[usize]) -> Result<S, SourceError> {
        self.source.cylinder_mass_from(self.context, word)
    }

    /// Masses of all `a^m` depth-`m` cylinders in lexicographic order.
    pub fn level_masses(&self, m: usize) -> Vec<S> {
        let a = self.source.alphabet;
        let mut out = vec![(S::one(), self.context)];
        for _ in 0..m {
            out = out
                .into_iter()
                .flat_map(|(mass, c)| {
                    (0..a).map(move |s| {
                        (mass.clone() * self.source.transition[c][s].clone(), self.source.next_context(c, s))
                    })
                })
                .collect();
        }
        out.into_iter().map(|(m, _)| m).collect()
    }
}

/// Literal bound `s^(m/n + 1)` for cylinder masses of an order-`n` source.
pub fn stated_memory_bound(s: f64, m: usize, n: usize) -> f64 {
    let n = n.max(1) as f64;
    s.powf(m as f64 / n + 1.0)
}

/// Bound `s^m` on a depth-`m` cylinder when every transition probability is at most `s`.
pub fn finite_memory_bound(s: f64, m: usize) -> f64 {
    s.powi(m as i32)
}
