//! Checks that tie two modules, or two routes to the same quantity, together.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use betalab::counterexample::{build_schedule, control_envelope, CodedProcess};
use betalab::orbit_fourier::{empirical_parry_distance, parry_distance, weyl_sums};
use betalab::parry::ParryDensity;
use betalab::selfsimilar::uniform_grid;
use betalab::source::{ExactSource, FloatSource};
use betalab::{BetaNumber, Enclosure, SelfSimilar64, WeylSeries32, WeylSeries64};

fn beta(s: &str) -> BetaNumber {
    BetaNumber::parse(s).unwrap()
}

fn q(s: &str) -> BigRational {
    betalab::scalar::parse_rational(s).unwrap()
}

/// Two self-similar measures for the same b > 2 are both T_b-invariant yet
/// give visibly different mass to [0, 0.4): invariance alone does not
/// determine the measure.
#[test]
fn invariant_measures_are_not_unique() {
    let b = beta("5/2");
    let n = 200_000;
    let mut masses = Vec::new();
    for (p0, seed) in [(0.3, 1u64), (0.7, 2)] {
        let m = SelfSimilar64::new(&b, p0, 1.0 - p0).unwrap();
        let inv = m.invariance_check(&uniform_grid(32), n, 40, seed).unwrap();
        assert!(inv.within_budget, "p0 = {p0}: max z {}", inv.max_z);
        let pts = m.sample(n, 40, seed + 10).unwrap();
        masses.push(pts.iter().filter(|&&x| x < 0.4).count() as f64 / n as f64);
    }
    let sigma = ((masses[0] * (1.0 - masses[0]) + masses[1] * (1.0 - masses[1])) / n as f64).sqrt();
    assert!((masses[0] - masses[1]).abs() > 6.0 * sigma);
    // the first-level mass is the left weight exactly
    assert!((masses[0] - 0.3).abs() < 5e-3 && (masses[1] - 0.7).abs() < 5e-3);
}

/// The orbit measure of a Parry-typical seed is closer to the Parry measure
/// than that of an eventually periodic seed.
#[test]
fn parry_typical_orbit_approaches_parry() {
    let phi = beta("(1+sqrt5)/2");
    let density = ParryDensity::new(&phi, 1e-12).unwrap();
    let seed_pt = density.sample(1, 3).unwrap()[0];
    let typical: WeylSeries64 = weyl_sums(&phi, &Enclosure::from_f64(seed_pt), &[20_000], &[1]).unwrap();
    let periodic: WeylSeries64 = weyl_sums(&phi, &Enclosure::ratio(1, 7), &[20_000], &[1]).unwrap();
    let d_typ = parry_distance(&typical, &density, 16).unwrap();
    let d_per = parry_distance(&periodic, &density, 16).unwrap();
    assert!(d_typ < 0.01, "typical distance {d_typ}");
    assert!(d_per > 10.0 * d_typ);
    // an i.i.d. Parry sample sits at the Monte Carlo floor
    let cloud = density.sample(20_000, 4).unwrap();
    assert!(empirical_parry_distance(&cloud, &density, 16).unwrap() < 1e-3);
}

/// Single and double precision Weyl sums agree to single precision.
#[test]
fn weyl_sums_are_precision_generic() {
    let b = beta("5/2");
    let x0 = Enclosure::ratio(2, 9);
    let ms = [1, 5, 40];
    let s64: WeylSeries64 = weyl_sums(&b, &x0, &[500, 2000], &ms).unwrap();
    let s32: WeylSeries32 = weyl_sums(&b, &x0, &[500, 2000], &ms).unwrap();
    for c in 0..2 {
        for j in 0..ms.len() {
            let a = s64.values[c][j];
            let b = s32.values[c][j];
            assert!((a.re - b.re as f64).abs() < 1e-3 && (a.im - b.im as f64).abs() < 1e-3);
        }
    }
}

/// Exact and floating sources agree on cylinder suprema.
#[test]
fn exact_and_float_sources_agree() {
    let rows = [["9/10", "1/10"], ["1/5", "4/5"]];
    let exact = ExactSource::new(2, 1, rows.iter().map(|r| r.iter().map(|p| q(p)).collect()).collect()).unwrap();
    let float = FloatSource::new(2, 1, vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    for m in 1..=12u32 {
        let k = 1u64 << m;
        let e = exact.ess_sup_interval_mass(k).value.to_f64().unwrap();
        let f = float.ess_sup_interval_mass(k).value;
        assert!((e - f).abs() <= 1e-12 * e.max(1e-300));
        let e = exact.near_diagonal_mass(k).value.to_f64().unwrap();
        let f = float.near_diagonal_mass(k).value;
        assert!((e - f).abs() <= 1e-12 * e);
    }
}

/// Halving the scale of an i.i.d. uniform control halves its near-diagonal mass.
#[test]
fn control_envelope_doubles_linearly() {
    let src = FloatSource::iid(vec![0.5, 0.5]).unwrap();
    let fit = control_envelope(&src, &[64, 128], 200_000, 21).unwrap();
    let ratio = fit.rows[0].estimate / fit.rows[1].estimate;
    // P(|X - Y| < 1/n) = 2/n - 1/n^2
    let expect = (2.0 / 64.0 - 1.0 / 4096.0) / (2.0 / 128.0 - 1.0 / 16384.0);
    assert!((ratio - expect).abs() < 0.05, "ratio {ratio}");
}

/// The simulated marginal of the coded process matches its exact value.
#[test]
fn coded_marginal_matches_exact_mass() {
    let params = build_schedule(3, &q("1/4"), 2).unwrap();
    let proc = CodedProcess::new(params, 12).unwrap();
    let exact = proc.exact_marginal().to_f64().unwrap();
    let est = proc.estimate_near_diagonal(1, 10_000, 4000, 5).unwrap();
    assert!((est.marginal - exact).abs() <= 4.0 * est.marginal_sigma.max(1e-3), "{} vs {exact}", est.marginal);
}
