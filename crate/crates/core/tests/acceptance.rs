//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::io::Write;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use betalab::counterexample::{build_schedule, control_envelope, CodedProcess};
use betalab::orbit_fourier::{
    invariance_defect, lemma32_check, mean_decay_profile, optimize_exponent_grid, predicted_exponent, weyl_sums,
    DecayConfig, Lemma32Config, Lemma32Measure,
};
use betalab::parry::ParryDensity;
use betalab::precision::{interval_orbit, tb_orbit_with, OrbitMode};
use betalab::selfsimilar::uniform_grid;
use betalab::source::{stated_memory_bound, ExactSource, FloatSource};
use betalab::{BetaNumber, Enclosure, PrecisionBudget, SelfSimilar64, WeylSeries64};

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    // written straight to stderr so the line survives output capture
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} {tag} {name} ({:.2}s): {detail}", elapsed.as_secs_f64());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn beta(s: &str) -> BetaNumber {
    BetaNumber::parse(s).unwrap()
}

fn q(s: &str) -> BigRational {
    betalab::scalar::parse_rational(s).unwrap()
}

#[test]
fn criterion_01_parry_density_exactness() {
    let t = Instant::now();
    let two = ParryDensity::new(&beta("2"), 1e-13).unwrap();
    let mut worst2 = 0.0f64;
    for i in 0..1000 {
        let f = two.density_at(i as f64 / 1000.0, 1e-13).unwrap();
        worst2 = worst2.max((f.lo - 1.0).abs()).max((f.hi - 1.0).abs());
    }
    let phi_b = beta("(1+sqrt5)/2");
    let phi = phi_b.to_f64();
    let d = ParryDensity::new(&phi_b, 1e-12).unwrap();
    let mut worst_phi = 0.0f64;
    for i in 0..1000 {
        let x = i as f64 / 1000.0;
        let target = if x < 1.0 / phi { phi } else { 1.0 };
        let f = d.density_at(x, 1e-12).unwrap();
        worst_phi = worst_phi.max((f.lo - target).abs()).max((f.hi - target).abs());
    }
    let z = d.normalizer(1e-12).unwrap();
    let z_err = (z.lo - (1.0 + phi.powi(-2))).abs().max((z.hi - (1.0 + phi.powi(-2))).abs());
    let elapsed = t.elapsed();
    let pass = worst2 <= 1e-12 && worst_phi <= 1e-10 && z_err <= 1e-10 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "Parry density exactness",
        pass,
        elapsed,
        format!("b=2 max|f-1|={worst2:.1e}, phi max err={worst_phi:.1e}, normalizer err={z_err:.1e}"),
    );
}

#[test]
fn criterion_02_parry_invariance() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for b in ["(1+sqrt5)/2", "1+sqrt2", "5/2"] {
        let d = ParryDensity::new(&beta(b), 1e-12).unwrap();
        for _ in 0..200 {
            let (a, c) = (rng.random::<f64>(), rng.random::<f64>());
            let (u, v) = (a.min(c), a.max(c));
            if u == v {
                continue;
            }
            let mass = d.interval_mass(u, v, 1e-12).unwrap();
            let pre = d.preimage_mass(u, v, 1e-12).unwrap();
            worst = worst.max((mass.mid() - pre.mid()).abs());
        }
    }
    let elapsed = t.elapsed();
    let pass = worst <= 1e-8 && elapsed < Duration::from_secs(10);
    verdict(
        2,
        "Parry invariance",
        pass,
        elapsed,
        format!("max |mass(T^-1 A) - mass(A)| = {worst:.2e} over 600 intervals"),
    );
}

#[test]
fn criterion_03_density_bounds() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0usize;
    let mut probes = 0usize;
    for _ in 0..20 {
        let b_f = rng.random_range(1.1..4.0);
        let b = BetaNumber::from_f64(b_f).unwrap();
        let d = ParryDensity::new(&b, 1e-10).unwrap();
        let z = d.normalizer(1e-10).unwrap();
        let (lo_bound, hi_bound) = (1.0 - 1.0 / b_f, 1.0 / (1.0 - 1.0 / b_f));
        for _ in 0..10_000 {
            let x = rng.random::<f64>();
            let f = d.density_at(x, 1e-10).unwrap();
            probes += 1;
            // normalized density, with outward bounds
            if f.lo / z.hi < lo_bound || f.hi / z.lo > hi_bound {
                violations += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    verdict(
        3,
        "density within [1-1/b, 1/(1-1/b)]",
        violations == 0,
        elapsed,
        format!("{violations} violations in {probes} probes over 20 bases"),
    );
}

#[test]
fn criterion_04_weyl_oracle() {
    let t = Instant::now();
    let n = 10_000;
    let s: WeylSeries64 = weyl_sums(&beta("2"), &Enclosure::ratio(1, 3), &[n], &[1]).unwrap();
    let gap = (s.value(n, 1).unwrap() + 0.5).norm();
    let elapsed = t.elapsed();
    verdict(
        4,
        "Weyl oracle",
        gap <= 2.0 / n as f64,
        elapsed,
        format!("|S_N(1) + 1/2| = {gap:.2e}, 2/N = {:.1e}", 2.0 / n as f64),
    );
}

#[test]
fn criterion_05_mean_decay_trend() {
    let t = Instant::now();
    let src = FloatSource::iid(vec![0.7, 0.3]).unwrap();
    let ms: Vec<i64> = (1..=8).chain(512..=1024).collect();
    let cfg = DecayConfig { n: 20_000, samples: 128, seed: 5, workers: 1 };
    let profile = mean_decay_profile(&src, &beta("(1+sqrt5)/2"), 2, &ms, &cfg).unwrap();
    let low = profile.median_over(1, 8).unwrap();
    let high = profile.median_over(512, 1024).unwrap();
    let elapsed = t.elapsed();
    let pass = high <= 0.5 * low && elapsed <= Duration::from_secs(600);
    verdict(
        5,
        "mean decay trend",
        pass,
        elapsed,
        format!(
            "median D over [512,1024] = {high:.4}, over [1,8] = {low:.4}, ratio {:.3}; fitted {:?}, predicted {:?}",
            high / low,
            profile.fitted_exponent,
            profile.predicted_exponent
        ),
    );
}

#[test]
fn criterion_06_exponent_formula() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut in_range = true;
    for _ in 0..10 {
        let beta_v = rng.random_range(0.01..3.0);
        let alpha = rng.random_range(0.0..1.0f64).max(1e-3) * beta_v;
        let closed = predicted_exponent(alpha, beta_v).unwrap();
        let grid = optimize_exponent_grid(alpha, beta_v, 200, 4).unwrap();
        worst = worst.max((grid.value - closed).abs());
        in_range &= closed > -0.5 && closed < 0.0 && grid.value > -0.5 && grid.value < 0.0;
    }
    let elapsed = t.elapsed();
    verdict(
        6,
        "exponent formula",
        worst <= 1e-3 && in_range,
        elapsed,
        format!("max |grid - closed form| = {worst:.2e}, all values in (-0.5, 0): {in_range}"),
    );
}

#[test]
fn criterion_07_oscillatory_bound() {
    let t = Instant::now();
    let phi_b = beta("(1+sqrt5)/2");
    let phi = phi_b.to_f64();
    let parry = ParryDensity::new(&phi_b, 1e-12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let uniform: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
    let parry_cloud = parry.sample(20_000, 71).unwrap();
    let ssm = SelfSimilar64::new(&beta("11/5"), 0.5, 0.5).unwrap();
    let ssm_cloud = ssm.sample(20_000, 48, 72).unwrap();
    let clouds: [(&str, &[f64]); 3] = [("uniform", &uniform), ("parry", &parry_cloud), ("selfsimilar", &ssm_cloud)];
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for i in 0..25 {
        let (name, cloud) = clouds[i % 3];
        let a = rng.random::<f64>();
        let c = rng.random::<f64>();
        let (c, d) = (a.min(c), a.max(c).max(a.min(c) + 0.05).min(1.0));
        let m = 4i64 << rng.random_range(0..=10);
        let m = rng.random_range(m / 2..=m).clamp(4, 4096);
        let r = rng.random_range(0.01..0.3);
        let cfg = Lemma32Config { c, d, m, r, b: phi, quad_nodes: 512 };
        let rep = lemma32_check(Lemma32Measure::SampleCloud(cloud), &cfg).unwrap();
        let margin = rep.slack + rep.quad_error + rep.mc_error;
        min_margin = min_margin.min(margin);
        if !rep.holds {
            violations += 1;
            let _ = writeln!(std::io::stderr(), "  violation on {name}: {rep:?}");
        }
    }
    let elapsed = t.elapsed();
    verdict(
        7,
        "oscillatory integral bound",
        violations == 0 && elapsed <= Duration::from_secs(300),
        elapsed,
        format!("{violations} violations in 25 configurations, smallest slack + error budget = {min_margin:.3e}"),
    );
}

#[test]
fn criterion_08_invariance_defect() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let bases = ["(1+sqrt5)/2", "1+sqrt2", "5/2", "9/5", "3", "2.2360679775@6400"];
    let mut orbits = 0;
    let mut failures = 0;
    let mut worst_ratio = 0.0f64;
    for b in bases {
        let b = beta(b);
        for n in [100usize, 1000, 5000] {
            let x0 = Enclosure::ratio(rng.random_range(1..1_000_000), 1_000_003);
            let s: WeylSeries64 = weyl_sums(&b, &x0, &[n], &[1]).unwrap();
            let d = invariance_defect(&s, 64);
            orbits += 1;
            worst_ratio = worst_ratio.max(d.defect / d.bound);
            if !d.within_bound {
                failures += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    verdict(
        8,
        "invariance defect <= 2/N",
        failures == 0,
        elapsed,
        format!("{failures} of {orbits} orbits over the bound; max defect/(2/N) = {worst_ratio:.3}"),
    );
}

#[test]
fn criterion_09_finite_memory_bound() {
    let t = Instant::now();
    let iid = ExactSource::iid(vec![q("7/10"), q("3/10")]).unwrap();
    let mut iid_ok = true;
    for m in 0..=16usize {
        let got = iid.ess_sup_interval_mass(1u64 << m).value;
        iid_ok &= got == num_traits::pow(q("7/10"), m);
    }
    let chain = ExactSource::new(2, 1, vec![vec![q("9/10"), q("1/10")], vec![q("2/10"), q("8/10")]]).unwrap();
    let mut bound_failures = Vec::new();
    for m in 1..=16usize {
        let got = num_traits::ToPrimitive::to_f64(&chain.ess_sup_interval_mass(1u64 << m).value).unwrap();
        let bound = stated_memory_bound(0.9, m, 1);
        if got > bound {
            bound_failures.push(format!("m={m}: {got:.4} > {bound:.4}"));
        }
    }
    let elapsed = t.elapsed();
    verdict(
        9,
        "finite-memory cylinder bound",
        iid_ok && bound_failures.is_empty(),
        elapsed,
        format!(
            "iid 0.7^m exact for m <= 16: {iid_ok}; s^(m/n+1) bound violated at {} of 16 depths{}",
            bound_failures.len(),
            bound_failures.first().map(|s| format!(" (first: {s})")).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_10_counterexample_simulation() {
    let t = Instant::now();
    let params = build_schedule(3, &q("1/4"), 2).unwrap();
    let proc = CodedProcess::new(params, 16).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for k in 1..=2 {
        let est = proc.estimate_near_diagonal(k, 100_000, 2000, 10 + k as u64).unwrap();
        ok &= est.satisfied && est.pair_samples >= 100_000;
        lines.push(format!(
            "stage {k} (n={}): {:.4e} +- {:.1e} vs floor {:.4e}",
            est.n, est.estimate, est.std_err, est.lower_bound
        ));
    }
    let control = FloatSource::iid(vec![0.5, 0.5]).unwrap();
    let scales: Vec<u64> = (2..=10).map(|j| 1u64 << j).collect();
    let fit = control_envelope(&control, &scales, 100_000, 10).unwrap();
    let control_ok = (0.8..=1.2).contains(&fit.beta_hat);
    let elapsed = t.elapsed();
    verdict(
        10,
        "coded-process simulation",
        ok && control_ok && elapsed <= Duration::from_secs(900),
        elapsed,
        format!("{}; control beta_hat = {:.3}", lines.join("; "), fit.beta_hat),
    );
}

#[test]
fn criterion_11_selfsimilar_suite() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = SelfSimilar64::new(&beta("11/5"), 0.4, 0.6).unwrap();
    let residual = (0..100).map(|_| m.selfsim_residual(rng.random_range(1.0..1e4))).fold(0.0, f64::max);

    let half = SelfSimilar64::new(&beta("11/5"), 0.5, 0.5).unwrap();
    let pts = half.sample(100_000, 48, 111).unwrap();
    let witness = half.singularity_witness(&pts, 12).unwrap();
    let witness_ok = (witness.total_length - 0.265).abs() < 1e-3 && witness.coverage_fraction == 1.0;

    let inv_m = SelfSimilar64::new(&beta("5/2"), 0.5, 0.5).unwrap();
    let inv = inv_m.invariance_check(&uniform_grid(64), 1_000_000, 40, 112).unwrap();

    let decay = half.decay_profile(1e5).unwrap();
    let pisot = SelfSimilar64::new(&beta("(3+sqrt5)/2"), 0.5, 0.5).unwrap().decay_profile(1e5).unwrap();
    let pisot_tail = {
        let w = &pisot.windows;
        let mut tail: Vec<f64> = w[w.len() - w.len() / 3..].iter().map(|w| w.max_abs).collect();
        tail.sort_by(f64::total_cmp);
        tail[tail.len() / 2]
    };
    let controls_ok = decay.decreasing && !pisot.decreasing && pisot_tail >= 0.25;

    let elapsed = t.elapsed();
    let pass = residual <= 1e-10 && witness_ok && inv.within_budget && inv.defect <= 0.005 && controls_ok;
    verdict(
        11,
        "self-similar suite",
        pass,
        elapsed,
        format!(
            "residual {residual:.1e}; witness length {:.4} coverage {}; invariance defect {:.2e} (max z {:.2}); \
             b=2.2 tail ratio {:?} decreasing {}; pisot tail median {pisot_tail:.3} decreasing {}",
            witness.total_length,
            witness.coverage_fraction,
            inv.defect,
            inv.max_z,
            decay.tail_ratio,
            decay.decreasing,
            pisot.decreasing
        ),
    );
}

#[test]
fn criterion_12_precision_contract() {
    let t = Instant::now();
    let phi = beta("(1+sqrt5)/2");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 1000;
    let mut digit_changes = 0;
    let mut path_mismatches = 0;
    for _ in 0..10 {
        let x0 = Enclosure::ratio(rng.random_range(1..(1i64 << 40)), 1i64 << 40);
        let budget = PrecisionBudget::for_orbit(&phi, n, 30);
        let base = interval_orbit(&phi, &x0, n, 30, budget).unwrap();
        let doubled = interval_orbit(&phi, &x0, n, 30, budget.doubled()).unwrap();
        let exact = tb_orbit_with(&phi, &x0, n, 30, OrbitMode::Exact, budget).unwrap();
        for (a, b) in base.points.iter().zip(&doubled.points) {
            if a.certified_decimal_string(30) != b.certified_decimal_string(30) {
                digit_changes += 1;
            }
        }
        if base.digits != exact.digits {
            path_mismatches += 1;
        }
    }
    let elapsed = t.elapsed();
    verdict(
        12,
        "precision contract",
        digit_changes == 0 && path_mismatches == 0,
        elapsed,
        format!("{digit_changes} points changed under doubling; {path_mismatches} of 10 digit sequences differ from the exact path"),
    );
}
