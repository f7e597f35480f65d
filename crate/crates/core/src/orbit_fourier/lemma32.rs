use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::OrbitFourierError;
use crate::parry::ParryDensity;
use crate::scalar::unit_phase;

/// Minimum size of a sample cloud.
pub const MIN_CLOUD: usize = 10_000;
/// A cloud with fewer distinct values than this fraction is treated as atomic.
const DISTINCT_FRACTION: f64 = 0.9;

/// The measure `mu` in the oscillatory-integral bound.
#[derive(Clone, Copy, Debug)]
pub enum Lemma32Measure<'a> {
    /// Equal-weight empirical measure.
    SampleCloud(&'a [f64]),
    /// Lebesgue measure on `[0, 1)`.
    Uniform,
    /// The normalized Parry measure.
    Parry(&'a ParryDensity),
}

impl Lemma32Measure<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SampleCloud(_) => "sample_cloud",
            Self::Uniform => "uniform",
            Self::Parry(_) => "parry",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Lemma32Config {
    pub c: f64,
    pub d: f64,
    pub m: i64,
    pub r: f64,
    pub b: f64,
    pub quad_nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma32Report {
    pub measure: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `mu([c, d])`.
    pub mass: f64,
    /// `mu x mu` of the `r`-neighborhood of the diagonal in `[c, d]^2`.
    pub near_diagonal: f64,
    pub quad_error: f64,
    pub mc_error: f64,
    pub nodes: usize,
    pub holds: bool,
}

/// Piecewise-constant density restricted to `[c, d]`.
fn restrict(pieces: &[(f64, f64, f64)], c: f64, d: f64) -> Vec<(f64, f64, f64)> {
    pieces
        .iter()
        .filter_map(|&(lo, hi, rho)| {
            let (lo, hi) = (lo.max(c), hi.min(d));
            (lo < hi && rho > 0.0).then_some((lo, hi, rho))
        })
        .collect()
}

/// `int_{s0}^{s1} |J ∩ (s, inf)| ds` for `J = [j0, j1]`.
fn tail_length_integral(j0: f64, j1: f64, s0: f64, s1: f64) -> f64 {
    let len = j1 - j0;
    let phi = |s: f64| {
        if s <= j0 {
            len * (s - j0)
        } else if s <= j1 {
            len * (s - j0) - (s - j0) * (s - j0) / 2.0
        } else {
            len * len / 2.0
        }
    };
    phi(s1) - phi(s0)
}

/// Area of `{(y, y') in I x J : |y - y'| < r}`.
fn band_area(i: (f64, f64), j: (f64, f64), r: f64) -> f64 {
    // area{y - y' < t} = int_I |J ∩ (y - t, inf)| dy
    let below = |t: f64| tail_length_integral(j.0, j.1, i.0 - t, i.1 - t);
    (below(r) - below(-r)).max(0.0)
}

fn analytic_near_diagonal(pieces: &[(f64, f64, f64)], r: f64) -> f64 {
    let mut total = 0.0;
    for &(a0, a1, ra) in pieces {
        for &(b0, b1, rb) in pieces {
            total += ra * rb * band_area((a0, a1), (b0, b1), r);
        }
    }
    total
}

fn analytic_inner(pieces: &[(f64, f64, f64)], k: f64) -> Complex64 {
    if k == 0.0 {
        return Complex64::new(pieces.iter().map(|&(lo, hi, rho)| rho * (hi - lo)).sum(), 0.0);
    }
    let denom = Complex64::new(0.0, std::f64::consts::TAU * k);
    pieces.iter().map(|&(lo, hi, rho)| rho * (unit_phase(k * hi) - unit_phase(k * lo)) / denom).sum()
}

fn cloud_inner(points: &[f64], total: usize, k: f64) -> Complex64 {
    let s: Complex64 = points.iter().map(|&y| unit_phase(k * y)).sum();
    s / total as f64
}

/// Ordered pairs within distance `r` (diagonal included), and each point's share.
fn cloud_near_diagonal(sorted: &[f64], total: usize, r: f64) -> (f64, f64) {
    let n = total as f64;
    let mut counts = Vec::with_capacity(sorted.len());
    let (mut lo, mut hi) = (0usize, 0usize);
    for &y in sorted {
        while sorted[lo] <= y - r {
            lo += 1;
        }
        while hi < sorted.len() && sorted[hi] < y + r {
            hi += 1;
        }
        counts.push((hi - lo) as f64 / n);
    }
    let value = counts.iter().sum::<f64>() / n;
    // first-order (Hoeffding) projection of the U-statistic
    let mean_h = value;
    let var = (counts.iter().map(|c| (c - mean_h) * (c - mean_h)).sum::<f64>()
        + (total - sorted.len()) as f64 * mean_h * mean_h)
        / (n - 1.0).max(1.0);
    (value, 2.0 * (var / n).sqrt())
}

fn midpoint(nodes: usize, f: &(impl Fn(f64) -> f64 + Sync)) -> f64 {
    let h = 1.0 / nodes as f64;
    let vals: Vec<f64> = (0..nodes).into_par_iter().map(|i| f((i as f64 + 0.5) * h)).collect();
    vals.iter().sum::<f64>() * h
}

/// `int_0^1 |int_c^d e(m b^z y) dmu(y)|^2 dz` against `2 mu([c,d])^2 / (r |m|) + (mu x mu)(|y - y'| < r)`.
pub fn lemma32_check(measure: Lemma32Measure<'_>, config: &Lemma32Config) -> Result<Lemma32Report, OrbitFourierError> {
    let Lemma32Config { c, d, m, r, b, quad_nodes } = *config;
    if m == 0 {
        return Err(OrbitFourierError::ZeroFrequency);
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(OrbitFourierError::InvalidRadius);
    }
    if !(c < d && (0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&d) && b > 1.0) {
        return Err(OrbitFourierError::InvalidInterval);
    }
    let rate = 8.0 * m.unsigned_abs() as f64 * c.abs().max(d.abs()) * b * b.ln();
    let nodes = quad_nodes.max(rate.ceil() as usize + 16);
    let mf = m as f64;

    let (mass, near_diagonal, mc_error, inner): (f64, f64, f64, Box<dyn Fn(f64) -> Complex64 + Sync>) = match measure {
        Lemma32Measure::SampleCloud(points) => {
            if points.len() < MIN_CLOUD {
                return Err(OrbitFourierError::TooFewPoints(MIN_CLOUD));
            }
            let mut all = points.to_vec();
            all.sort_by(f64::total_cmp);
            let mut distinct = all.clone();
            distinct.dedup();
            if (distinct.len() as f64) < DISTINCT_FRACTION * all.len() as f64 {
                return Err(OrbitFourierError::Atomic { distinct: distinct.len() as f64 / all.len() as f64 });
            }
            let total = all.len();
            let inside: Vec<f64> = all.into_iter().filter(|&y| c <= y && y <= d).collect();
            let p = inside.len() as f64 / total as f64;
            let (nd, nd_err) = cloud_near_diagonal(&inside, total, r);
            let mass_err = (p * (1.0 - p) / total as f64).sqrt() * 4.0 * p / (r * mf.abs());
            (p, nd, nd_err + mass_err, Box::new(move |k| cloud_inner(&inside, total, k)))
        }
        Lemma32Measure::Uniform | Lemma32Measure::Parry(_) => {
            let pieces = match measure {
                Lemma32Measure::Parry(density) => density.pieces(),
                _ => vec![(0.0, 1.0, 1.0)],
            };
            let pieces = restrict(&pieces, c, d);
            let mass = pieces.iter().map(|&(lo, hi, rho)| rho * (hi - lo)).sum();
            let nd = analytic_near_diagonal(&pieces, r);
            (mass, nd, 0.0, Box::new(move |k| analytic_inner(&pieces, k)))
        }
    };

    let integrand = |z: f64| inner(mf * b.powf(z)).norm_sqr();
    let coarse = midpoint(nodes, &integrand);
    let fine = midpoint(2 * nodes, &integrand);
    let lhs = (4.0 * fine - coarse) / 3.0;
    let quad_error = (fine - coarse).abs() / 3.0 + 8.0 * f64::EPSILON * fine.abs();
    let rhs = 2.0 * mass * mass / (r * mf.abs()) + near_diagonal;
    let slack = rhs - lhs;
    Ok(Lemma32Report {
        measure: measure.name(),
        lhs,
        rhs,
        slack,
        mass,
        near_diagonal,
        quad_error,
        mc_error,
        nodes,
        holds: slack >= -(quad_error + mc_error),
    })
}
