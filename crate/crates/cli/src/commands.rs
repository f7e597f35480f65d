use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use betalab::beta_shift::{
    check_admissible, classify as classify_base, expansion_of_one, greedy_expansion, specification_constants,
    AdmissibilityRule,
};
use betalab::counterexample::{
    build_schedule, condition_violation_report, control_envelope, reverse_markov_bound, CodedProcess,
};
use betalab::orbit_fourier::{
    invariance_defect, lemma32_check, mean_decay_profile, optimize_exponent_grid, parry_distance, predicted_exponent,
    weyl_sums, wiener_atom_estimate, DecayConfig, Lemma32Config, Lemma32Measure,
};
use betalab::parry::ParryDensity;
use betalab::precision::{tb_orbit_with, OrbitMode};
use betalab::scalar::parse_rational;
use betalab::selfsimilar::uniform_grid;
use betalab::source::{finite_memory_bound, stated_memory_bound, SourceSpec};
use betalab::{BetaNumber, Enclosure, ExactSource, FloatSource, PrecisionBudget, SelfSimilar64, WeylSeries64};

use crate::error::CliError;
use crate::output::{table, Outcome};
use crate::{
    ClassifyArgs, ConditionsArgs, CounterexampleArgs, DecayArgs, ExpandArgs, ExponentArgs, InvarianceArgs, Lemma32Args,
    OrbitArgs, ParryArgs, SelfsimArgs, WeylArgs,
};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn to_json(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn base(text: &str) -> Result<BetaNumber, CliError> {
    Ok(BetaNumber::parse(text)?)
}

fn point(text: &str) -> Result<Enclosure, CliError> {
    let q = parse_rational(text).ok_or_else(|| usage(format!("cannot parse point {text:?}")))?;
    Ok(Enclosure::rational(q))
}

/// `1-8,512,600-610` into a sorted list without duplicates.
pub fn parse_list(text: &str) -> Result<Vec<i64>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || usage(format!("bad list element {part:?}"));
        // a leading minus belongs to the first bound
        match part.char_indices().skip(1).find(|&(_, c)| c == '-').map(|(i, _)| i) {
            Some(i) => {
                let lo: i64 = part[..i].parse().map_err(|_| bad())?;
                let hi: i64 = part[i + 1..].parse().map_err(|_| bad())?;
                if hi < lo || hi - lo > 1 << 20 {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(usage("empty list"));
    }
    Ok(out)
}

fn source_spec(text: &str) -> Result<SourceSpec, CliError> {
    if let Some(probs) = text.strip_prefix("iid:") {
        let entries: Vec<_> =
            probs.split(',').map(|p| betalab::source::SpecEntry::Text(p.trim().to_string())).collect();
        return Ok(SourceSpec { alphabet: entries.len(), order: 0, transition: vec![entries] });
    }
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).map_err(|e| usage(format!("{text}: {e}")))?
    };
    serde_json::from_str(&json).map_err(|e| usage(format!("bad source spec: {e}")))
}

pub fn classify(a: &ClassifyArgs) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let class = classify_base(&b, a.depth)?;
    let mut v = to_json(&class);
    v["hit_zero_at"] = to_json(&class.evidence.hit_zero_at);
    v["base"] = to_json(&b.summary());
    if let Some(alph) = a.a {
        v["specification"] = to_json(&specification_constants(&b, alph, a.depth)?);
    }
    Ok(Outcome::new(v))
}

#[derive(Serialize)]
struct DigitRow {
    i: usize,
    digit: u32,
    point: String,
    lo: f64,
    hi: f64,
}

fn digit_rows(digits: &[u32], orbit: &[Enclosure]) -> Vec<DigitRow> {
    digits
        .iter()
        .zip(orbit)
        .enumerate()
        .map(|(i, (&digit, e))| {
            let (lo, hi) = e.interval().to_f64_bounds();
            DigitRow { i, digit, point: e.certified_decimal_string(30), lo, hi }
        })
        .collect()
}

pub fn expand(a: &ExpandArgs) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let of_one = parse_rational(&a.x).is_some_and(|q| q == num_rational::BigRational::from_integer(1.into()));
    let e = if of_one { expansion_of_one(&b, a.len)? } else { greedy_expansion(&b, &point(&a.x)?, a.len)? };
    let admissibility = if of_one {
        Value::Null
    } else {
        let rule = AdmissibilityRule::new(&b, a.len + 1)?;
        to_json(&check_admissible(&e.digits, &rule)?)
    };
    let v = json!({
        "base": b.summary(),
        "x": a.x,
        "of_one": of_one,
        "word": e.word(),
        "digits": e.digits,
        "value": e.value_f64(),
        "admissibility": admissibility,
    });
    Ok(Outcome::new(v).with_table(table("expansion", &digit_rows(&e.digits, &e.orbit))?))
}

pub fn parry(a: &ParryArgs) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let d = ParryDensity::new(&b, a.tol)?;
    if a.fourier < 0 {
        return Err(usage("--fourier must be non-negative"));
    }
    let coeffs = (0..=a.fourier)
        .map(|m| {
            let (c, r) = d.fourier(m, a.tol)?;
            Ok(json!({ "m": m, "re": c.re, "im": c.im, "abs": c.norm(), "radius": r }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let v = json!({
        "base": b.summary(),
        "normalizer": d.normalizer(a.tol)?,
        "truncation": d.truncation(),
        "tail_bound": d.tail_bound(),
        "terminates": d.terminates(),
        "pieces": d.pieces().len(),
        "fourier": coeffs,
    });
    let rows = if a.points > 0 { d.table(a.points)? } else { Vec::new() };
    Ok(Outcome::new(v).with_table(table("density", &rows)?))
}

fn orbit_mode(text: &str) -> Result<OrbitMode, CliError> {
    match text {
        "auto" => Ok(OrbitMode::Auto),
        "exact" => Ok(OrbitMode::Exact),
        "interval" => Ok(OrbitMode::Interval),
        other => Err(usage(format!("unknown orbit mode {other:?}"))),
    }
}

pub fn orbit(a: &OrbitArgs) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let x0 = point(&a.x)?;
    let budget = PrecisionBudget::for_orbit(&b, a.n, a.digits);
    let o = tb_orbit_with(&b, &x0, a.n, a.digits, orbit_mode(&a.mode)?, budget)?;
    let last = o.points.last().map(|e| e.certified_decimal_string(a.digits.max(30)));
    let v = json!({
        "base": b.summary(),
        "x0": a.x,
        "n": a.n,
        "path": o.path,
        "bits_used": o.bits_used,
        "certified_digits": a.digits,
        "last": last,
        "digits": o.digits,
    });
    Ok(Outcome::new(v)
        .with_precision(json!({ "budget": budget, "bits_used": o.bits_used }))
        .with_table(table("orbit", &digit_rows(&o.digits, &o.points))?))
}

fn series_precision(s: &WeylSeries64) -> Value {
    json!({ "path": s.path, "bits_used": s.bits_used, "orbit_width": s.orbit_width })
}

pub fn weyl(a: &WeylArgs) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let ms = parse_list(&a.m)?;
    let cps = parse_list(&a.n)?;
    if cps[0] <= 0 {
        return Err(usage("checkpoints must be positive"));
    }
    let cps: Vec<usize> = cps.into_iter().map(|n| n as usize).collect();
    let s: WeylSeries64 = weyl_sums(&b, &point(&a.x)?, &cps, &ms)?;
    let rows = s.rows();
    let v = json!({
        "base": b.summary(),
        "x0": a.x,
        "checkpoints": s.checkpoints,
        "frequencies": s.frequencies,
        "values": rows,
    });
    Ok(Outcome::new(v).with_precision(series_precision(&s)).with_table(table("weyl", &rows)?))
}

#[derive(Serialize)]
struct DecayRow {
    m: i64,
    d: f64,
}

pub fn decay(a: &DecayArgs, workers: usize) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let spec = source_spec(&a.source)?;
    let src = FloatSource::from_spec(&spec)?;
    let ms = parse_list(&a.m)?;
    let config = DecayConfig { n: a.n, samples: a.samples, seed: a.seed, workers };
    let p = mean_decay_profile(&src, &b, a.a, &ms, &config)?;
    let rows: Vec<DecayRow> = p.frequencies.iter().zip(&p.d).map(|(&m, &d)| DecayRow { m, d }).collect();
    let mut v = to_json(&p);
    v["base"] = to_json(&b.summary());
    v["source"] = to_json(&spec);
    Ok(Outcome::new(v)
        .with_seeds(&[a.seed])
        .with_precision(json!({ "source_digits": p.source_digits, "budget": PrecisionBudget::for_orbit(&b, a.n, 15) }))
        .with_table(table("decay", &rows)?))
}

pub fn exponent(a: &ExponentArgs) -> Result<Outcome, CliError> {
    let value = predicted_exponent(a.alpha, a.beta)?;
    let grid = optimize_exponent_grid(a.alpha, a.beta, a.resolution, a.zooms)?;
    let gamma = (2.0 * a.alpha + 1.0) / a.beta;
    let delta = a.beta / (a.beta * (1.0 + a.alpha) + 2.0 * a.alpha + 1.0);
    let v = json!({
        "alpha": a.alpha,
        "beta": a.beta,
        "value": value,
        "gamma": gamma,
        "delta": delta,
        "grid": grid,
        "grid_error": (grid.value - value).abs(),
    });
    Ok(Outcome::new(v))
}

pub fn lemma32(a: &Lemma32Args) -> Result<Outcome, CliError> {
    let named_base = a.beta.as_deref().map(base).transpose()?;
    let default_b = named_base.as_ref().map_or(2.0, BetaNumber::to_f64);
    let config =
        Lemma32Config { c: a.c, d: a.d, m: a.m, r: a.r, b: a.b.unwrap_or(default_b), quad_nodes: a.quad_nodes };
    let need_base = || named_base.clone().ok_or_else(|| usage("--beta is required for this measure"));
    let mut seeds = Vec::new();
    let report = match a.measure.as_str() {
        "uniform" => lemma32_check(Lemma32Measure::Uniform, &config)?,
        "parry" => {
            let d = ParryDensity::new(&need_base()?, 1e-12)?;
            lemma32_check(Lemma32Measure::Parry(&d), &config)?
        }
        "selfsim" => {
            let m = SelfSimilar64::new(&need_base()?, a.p0, 1.0 - a.p0)?;
            let cloud = m.sample(a.samples, 48, a.seed)?;
            seeds.push(a.seed);
            lemma32_check(Lemma32Measure::SampleCloud(&cloud), &config)?
        }
        other => return Err(usage(format!("unknown measure {other:?}"))),
    };
    let holds = report.holds;
    Ok(Outcome::new(to_json(&report))
        .with_seeds(&seeds)
        .violated_if(!holds, "inequality fails beyond its error budget"))
}

pub fn invariance(a: &InvarianceArgs) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let ms: Vec<i64> = (0..=a.wiener.max(0)).collect();
    let s: WeylSeries64 = weyl_sums(&b, &point(&a.x)?, &[a.n], &ms)?;
    let defect = invariance_defect(&s, a.degree);
    let distance = if a.parry_m > 0 {
        let d = ParryDensity::new(&b, 1e-12)?;
        Some(parry_distance(&s, &d, a.parry_m)?)
    } else {
        None
    };
    let wiener = (a.wiener > 0).then(|| {
        let coeffs: Vec<Complex64> = s.values.last().expect("one checkpoint").clone();
        wiener_atom_estimate(&coeffs)
    });
    let within = defect.within_bound;
    let v = json!({
        "base": b.summary(),
        "x0": a.x,
        "defect": defect,
        "parry_distance": distance,
        "parry_frequencies": a.parry_m,
        "wiener_atom_estimate": wiener,
        "wiener_window": a.wiener,
    });
    Ok(Outcome::new(v).with_precision(series_precision(&s)).violated_if(!within, "invariance defect exceeds 2/N"))
}

pub fn selfsim(a: &SelfsimArgs) -> Result<Outcome, CliError> {
    let b = base(&a.beta)?;
    let m = SelfSimilar64::new(&b, a.p0, 1.0 - a.p0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let residual = (0..a.probes).map(|_| m.selfsim_residual(rng.random_range(1.0..a.xi_max))).fold(0.0, f64::max);
    let pts = m.sample(a.samples, a.depth, a.seed.wrapping_add(1))?;
    let witness = m.singularity_witness(&pts, a.level)?;
    let inv = m.invariance_check(&uniform_grid(a.grid), a.samples, a.depth, a.seed.wrapping_add(2))?;
    let decay = m.decay_profile(a.xi_max)?;
    let v = json!({
        "base": b.summary(),
        "weights": [a.p0, 1.0 - a.p0],
        "residual_max": residual,
        "residual_probes": a.probes,
        "truncation_error": m.truncation_error(a.depth),
        "witness": witness,
        "invariance": { "defect": inv.defect, "max_z": inv.max_z, "samples": inv.samples, "within_budget": inv.within_budget },
        "decay": { "fitted_c": decay.fitted_c, "log_slope": decay.log_slope, "tail_ratio": decay.tail_ratio, "decreasing": decay.decreasing },
    });
    let within = inv.within_budget;
    Ok(Outcome::new(v)
        .with_seeds(&[a.seed, a.seed.wrapping_add(1), a.seed.wrapping_add(2)])
        .with_table(table("invariance", &inv.rows)?)
        .with_table(table("decay_windows", &decay.windows)?)
        .violated_if(!within, "empirical invariance defect beyond 4 sigma"))
}

pub fn counterexample(a: &CounterexampleArgs) -> Result<Outcome, CliError> {
    let eps = parse_rational(&a.epsilon).ok_or_else(|| usage(format!("cannot parse epsilon {:?}", a.epsilon)))?;
    let params = build_schedule(a.l, &eps, a.stages)?;
    let proc = CodedProcess::new(params.clone(), a.window)?;
    let betas: Vec<f64> = a
        .betas
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| usage(format!("bad exponent {t:?}"))))
        .collect::<Result<_, _>>()?;
    let mut seeds = Vec::new();
    let mut estimates = Vec::new();
    for k in 1..=params.stages.len() {
        let seed = a.seed.wrapping_add(k as u64);
        seeds.push(seed);
        estimates.push(proc.estimate_near_diagonal(k, a.pairs, a.pasts, seed)?);
    }
    // X = near-diagonal mass of mu_eta lies in [0, 1]; bound P(X > E/2)
    let markov: Vec<Option<f64>> =
        estimates.iter().map(|e| reverse_markov_bound(1.0, e.estimate / 2.0, e.estimate).ok()).collect();
    let report = condition_violation_report(&estimates, &betas);
    let control_src = FloatSource::iid(vec![0.5, 0.5])?;
    let scales: Vec<u64> = (2..=10).map(|j| 1u64 << j).collect();
    let control = control_envelope(&control_src, &scales, a.pairs, a.seed)?;
    seeds.push(a.seed);
    let all_ok = estimates.iter().all(|e| e.satisfied);
    let v = json!({
        "construction": params,
        "exact_marginal": proc.exact_marginal().to_string(),
        "estimates": estimates,
        "reverse_markov": markov,
        "report": report,
        "control": control,
    });
    Ok(Outcome::new(v)
        .with_seeds(&seeds)
        .with_table(table("estimates", &estimates)?)
        .violated_if(!all_ok, "a stage estimate falls below 0.25 ln(n)^-4 - 2 sigma"))
}

#[derive(Serialize)]
struct ConditionLine {
    m: usize,
    k: u64,
    ess_sup: String,
    ess_sup_f64: f64,
    near_diagonal: String,
    near_diagonal_f64: f64,
    finite_memory_bound: f64,
    stated_bound: f64,
}

pub fn conditions(a: &ConditionsArgs) -> Result<Outcome, CliError> {
    let spec = source_spec(&a.source)?;
    let src = ExactSource::from_spec(&spec)?;
    let alph = src.alphabet() as u64;
    let s = num_traits::ToPrimitive::to_f64(&src.max_transition()).unwrap_or(f64::NAN);
    let n = src.order();
    let mut lines = Vec::with_capacity(a.m_max);
    for m in 1..=a.m_max {
        let k = alph.checked_pow(m as u32).ok_or_else(|| usage("a^m_max overflows u64"))?;
        let e = src.ess_sup_interval_mass(k).value;
        let d = src.near_diagonal_mass(k).value;
        lines.push(ConditionLine {
            m,
            k,
            ess_sup_f64: num_traits::ToPrimitive::to_f64(&e).unwrap_or(f64::NAN),
            ess_sup: e.to_string(),
            near_diagonal_f64: num_traits::ToPrimitive::to_f64(&d).unwrap_or(f64::NAN),
            near_diagonal: d.to_string(),
            finite_memory_bound: finite_memory_bound(s, m),
            stated_bound: stated_memory_bound(s, m, n),
        });
    }
    let fit = src.fit_condition_exponents(a.m_max)?;
    // the s^m bound holds for every finite-memory source; a breach is a bug
    let breach = lines.iter().any(|l| l.ess_sup_f64 > l.finite_memory_bound * (1.0 + 1e-12));
    let v = json!({
        "source": spec,
        "order": n,
        "max_transition": s,
        "entropy": src.entropy(),
        "alpha_hat": fit.alpha_hat,
        "beta_hat": fit.beta_hat,
        "levels": lines,
        "stated_bound_holds": lines.iter().all(|l| l.ess_sup_f64 <= l.stated_bound),
    });
    Ok(Outcome::new(v).with_table(table("conditions", &lines)?).violated_if(breach, "cylinder mass above s^m"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("3,1-2,2").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_list("-2-1").unwrap(), vec![-2, -1, 0, 1]);
        assert!(parse_list("5-1").is_err());
        assert!(parse_list("").is_err());
        assert!(parse_list("a").is_err());
        assert!(parse_list("é-3").is_err());
    }

    #[test]
    fn iid_shorthand_builds_order_zero_spec() {
        let spec = source_spec("iid:1/4, 3/4").unwrap();
        assert_eq!((spec.alphabet, spec.order), (2, 0));
        let src = ExactSource::from_spec(&spec).unwrap();
        assert_eq!(src.stationary().len(), 1);
        assert!(source_spec("{not json").is_err());
    }
}
