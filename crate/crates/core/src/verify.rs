//! Named property suites behind `fermred verify`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::density::{matrix_unit, Parity};
use crate::error::{argument, Error, Result};
use crate::fock::{verify_car, MultiIndex, OperatorMatrix, ZERO};
use crate::mode::{equispectral, forward_instance, reconstruct_locals, two_mode_criterion, Bipartition};
use crate::particle::{check_fixed_n_reduction, pauli_constraint_check};
use crate::sample::{random_spectrum, rng_from_seed, sample_with, trial_seed, Ensemble};

/// Criterion values at or below this count as zero in the two-mode suite.
pub const CRITERION_ZERO: f64 = 1e-10;
/// Equispectrality tolerance in the two-mode suite; criteria in
/// `(CRITERION_ZERO, CRITERION_BAND)` are not asserted either way.
pub const CRITERION_BAND: f64 = 1e-8;
/// Smallest weight gap in "simple spectrum" purification instances.
pub const SIMPLE_MIN_GAP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Car,
    MatrixUnits,
    Theorem1,
    Theorem2,
    Prop4,
    Prop5,
    Pauli,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Car, Suite::MatrixUnits, Suite::Theorem1, Suite::Theorem2, Suite::Prop4, Suite::Prop5, Suite::Pauli];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Car => "car",
            Suite::MatrixUnits => "matrix-units",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Prop4 => "prop4",
            Suite::Prop5 => "prop5",
            Suite::Pauli => "pauli",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Suite::Car | Suite::MatrixUnits => 0,
            Suite::Theorem1 => 1000,
            Suite::Theorem2 | Suite::Pauli => 500,
            Suite::Prop4 => 10_000,
            Suite::Prop5 => 200,
        }
    }

    pub fn default_n_max(self) -> usize {
        match self {
            Suite::MatrixUnits => 3,
            Suite::Prop4 => 2,
            Suite::Pauli => 3,
            Suite::Prop5 => 5,
            _ => 6,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| argument(format!("unknown suite {s:?}; expected one of car, matrix-units, theorem1, theorem2, prop4, prop5, pauli")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Spectral and fidelity tolerance.
    pub tol: f64,
    /// Entrywise tolerance.
    pub entry_tol: f64,
}

impl SuiteConfig {
    pub fn defaults(suite: Suite, seed: u64) -> Self {
        Self { trials: suite.default_trials(), n_max: suite.default_n_max(), seed, tol: 1e-9, entry_tol: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub passed: bool,
    pub checks: u64,
    pub failures: u64,
    /// Largest gap observed by the suite's main check.
    pub max_gap: f64,
    pub first_counterexample: Option<Value>,
    /// Suite-specific extras.
    pub details: Value,
}

/// Per-trial result folded into a [`SuiteOutcome`].
struct Check {
    checks: u64,
    failures: u64,
    gap: f64,
    counterexample: Option<Value>,
}

impl Check {
    fn one(ok: bool, gap: f64, counterexample: impl FnOnce() -> Value) -> Self {
        Self { checks: 1, failures: u64::from(!ok), gap, counterexample: (!ok).then(counterexample) }
    }

    fn merge(mut self, other: Check) -> Check {
        self.checks += other.checks;
        self.failures += other.failures;
        self.gap = self.gap.max(other.gap);
        self.counterexample = self.counterexample.or(other.counterexample);
        self
    }

    fn empty() -> Self {
        Self { checks: 0, failures: 0, gap: 0.0, counterexample: None }
    }
}

fn fold(checks: impl IntoIterator<Item = Check>) -> Check {
    checks.into_iter().fold(Check::empty(), Check::merge)
}

fn finish(suite: Suite, c: Check, details: Value) -> SuiteOutcome {
    SuiteOutcome {
        suite,
        passed: c.failures == 0,
        checks: c.checks,
        failures: c.failures,
        max_gap: c.gap,
        first_counterexample: c.counterexample,
        details,
    }
}

fn amps_json(psi: &crate::fock::FockVector) -> Value {
    Value::Array(psi.amplitudes().iter().map(|z| json!([z.re, z.im])).collect())
}

/// Runs `f` on every trial index in parallel, keeping index order.
fn per_trial<F>(trials: usize, f: F) -> Result<Vec<Check>>
where
    F: Fn(usize) -> Result<Check> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    match suite {
        Suite::Car => car(cfg),
        Suite::MatrixUnits => matrix_units(cfg),
        Suite::Theorem1 => theorem1(cfg),
        Suite::Theorem2 => theorem2(cfg),
        Suite::Prop4 => prop4(cfg),
        Suite::Prop5 => prop5(cfg),
        Suite::Pauli => pauli(cfg),
    }
}

fn car(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for n in 1..=cfg.n_max {
        let r = verify_car(n)?;
        let dev = r.max_deviation();
        checks.push(Check::one(r.is_exact(), dev, || json!({"n": n, "deviation": dev})));
        reports.push(serde_json::to_value(&r).expect("serializable"));
    }
    Ok(finish(Suite::Car, fold(checks), json!({"reports": reports})))
}

fn matrix_units(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut total = Check::empty();
    for n in 1..=cfg.n_max.min(3) {
        let labels: Vec<MultiIndex> = MultiIndex::all(n)?.collect();
        let units: Vec<Vec<OperatorMatrix>> = labels
            .iter()
            .map(|&j| labels.iter().map(|&k| matrix_unit(j, k)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let zero = OperatorMatrix::zeros(n)?;
        for (j, row) in units.iter().enumerate() {
            for (k, ajk) in row.iter().enumerate() {
                let dev = ajk.entries().indexed_iter().map(|((r, c), &z)| {
                    let expected = if r == labels[j].index() && c == labels[k].index() { 1.0 } else { 0.0 };
                    (z - Complex64::new(expected, 0.0)).norm()
                });
                let dev = dev.fold(0.0, f64::max);
                total = total.merge(Check::one(dev == 0.0, dev, || {
                    json!({"n": n, "J": labels[j].to_string(), "K": labels[k].to_string(), "elementary_deviation": dev})
                }));
                for (l, row_l) in units.iter().enumerate() {
                    for (mm, alm) in row_l.iter().enumerate() {
                        let product = ajk * alm;
                        let expected = if k == l { &units[j][mm] } else { &zero };
                        let dev = product.max_abs_diff(expected);
                        total = total.merge(Check::one(dev == 0.0, dev, || {
                            json!({"n": n, "J": labels[j].to_string(), "K": labels[k].to_string(), "L": labels[l].to_string(), "deviation": dev})
                        }));
                    }
                }
            }
        }
    }
    Ok(finish(Suite::MatrixUnits, total, json!({"n_max": cfg.n_max.min(3)})))
}

fn random_parity<R: Rng + ?Sized>(rng: &mut R) -> Parity {
    if rng.random::<bool>() {
        Parity::Odd
    } else {
        Parity::Even
    }
}

fn theorem1(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    if cfg.n_max < 2 {
        return Err(argument("theorem1 needs n_max ≥ 2"));
    }
    let checks = per_trial(cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i as u64);
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(2..=cfg.n_max);
        let parity = random_parity(&mut rng);
        let psi = sample_with(n, Ensemble::Ssr(parity), &mut rng)?;
        let mut parts: Vec<Bipartition> = (1..n).map(|m| Bipartition::contiguous(n, m)).collect::<Result<_>>()?;
        let subset: Vec<usize> = (1..=n).filter(|_| rng.random::<bool>()).collect();
        if !subset.is_empty() && subset.len() < n {
            parts.push(Bipartition::from_subset(n, &subset)?);
        }
        let mut out = Check::empty();
        for part in parts {
            let eq = equispectral(&psi, &part, cfg.tol)?;
            out = out.merge(Check::one(eq.equal, eq.max_gap, || {
                json!({"trial": i, "seed": seed, "n": n, "first_modes": part.first_modes(), "gap": eq.max_gap,
                       "amplitudes": amps_json(&psi)})
            }));
        }
        Ok(out)
    })?;
    Ok(finish(Suite::Theorem1, fold(checks), json!({"trials": cfg.trials, "n_max": cfg.n_max})))
}

/// Random weights whose neighbouring gaps all exceed [`SIMPLE_MIN_GAP`].
fn simple_weights<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let w = random_spectrum(d, rng);
        if w.windows(2).all(|p| p[0] - p[1] > SIMPLE_MIN_GAP) {
            return w;
        }
    }
}

/// Random weights with the two smallest equal.
fn degenerate_weights<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut w = random_spectrum(d, rng);
    w[d - 1] = w[d - 2];
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn theorem2(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    if cfg.n_max < 2 {
        return Err(argument("theorem2 needs n_max ≥ 2"));
    }
    let degenerate_trials = cfg.trials.div_ceil(5);
    let instance = |i: usize, degenerate: bool| -> Result<Check> {
        let seed = trial_seed(cfg.seed ^ u64::from(degenerate), i as u64);
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(2..=cfg.n_max);
        let m = rng.random_range(1..n);
        let parity = random_parity(&mut rng);
        let part = Bipartition::contiguous(n, m)?;
        let d = 1usize << m.min(n - m);
        let weights = if degenerate { degenerate_weights(d, &mut rng) } else { simple_weights(d, &mut rng) };
        let psi = forward_instance(&weights, &part, parity, &mut rng)?;
        let r = reconstruct_locals(&psi, &part, cfg.tol)?;
        let ok = if degenerate {
            r.marginal_gap <= cfg.tol && !r.recovered
        } else {
            r.recovered && r.fidelity >= 1.0 - cfg.tol && r.marginal_gap <= cfg.tol
        };
        let gap = if degenerate { r.marginal_gap } else { (1.0 - r.fidelity).max(r.marginal_gap) };
        Ok(Check::one(ok, gap, || {
            json!({"trial": i, "seed": seed, "degenerate": degenerate, "n": n, "m": m, "parity": parity,
                   "weights": weights, "fidelity": r.fidelity, "marginal_gap": r.marginal_gap, "recovered": r.recovered})
        }))
    };
    let simple = fold(per_trial(cfg.trials, |i| instance(i, false))?);
    let degenerate = fold(per_trial(degenerate_trials, |i| instance(i, true))?);
    let details = json!({
        "simple": {"instances": simple.checks, "failures": simple.failures, "max_infidelity": simple.gap},
        "degenerate": {"instances": degenerate.checks, "failures": degenerate.failures, "max_marginal_gap": degenerate.gap},
    });
    Ok(finish(Suite::Theorem2, simple.merge(degenerate), details))
}

/// Two-mode states drawn from three families so that both sides of the
/// biconditional are exercised: generic, one vanishing amplitude, and a
/// phase tuned so that the criterion vanishes with every amplitude nonzero.
pub fn prop4_state(seed: u64) -> Result<crate::fock::FockVector> {
    let mut rng = rng_from_seed(seed);
    let mut c: Vec<Complex64> = sample_with(2, Ensemble::General, &mut rng)?.into_amplitudes();
    match rng.random_range(0..4) {
        0 | 1 => {}
        2 => c[rng.random_range(0..4)] = ZERO,
        _ => {
            let theta = (c[0] * c[3] * c[1].conj() * c[2].conj()).arg();
            c[3] *= Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 - theta);
        }
    }
    crate::fock::FockVector::new(2, c)?.normalized()
}

fn prop4(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let part = Bipartition::contiguous(2, 1)?;
    let checks = per_trial(cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i as u64);
        let psi = prop4_state(seed)?;
        let a = psi.amplitudes();
        let crit = two_mode_criterion(&[a[0], a[1], a[2], a[3]]).abs();
        let eq = equispectral(&psi, &part, CRITERION_BAND)?;
        if crit > CRITERION_ZERO && crit < CRITERION_BAND {
            return Ok(Check::empty());
        }
        let ok = (crit <= CRITERION_ZERO) == eq.equal;
        Ok(Check::one(ok, if crit <= CRITERION_ZERO { eq.max_gap } else { 0.0 }, || {
            json!({"trial": i, "seed": seed, "criterion": crit, "gap": eq.max_gap, "amplitudes": amps_json(&psi)})
        }))
    })?;
    let asserted = checks.iter().filter(|c| c.checks > 0).count();
    let total = fold(checks);
    let details = json!({"trials": cfg.trials, "asserted": asserted, "excluded": cfg.trials - asserted,
                         "criterion_zero": CRITERION_ZERO, "equispectral_tol": CRITERION_BAND});
    Ok(finish(Suite::Prop4, total, details))
}

fn prop5(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let max_scaled = std::sync::Mutex::new(0.0f64);
    let checks = per_trial(cfg.trials, |i| {
        let seed = trial_seed(cfg.seed, i as u64);
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(1..=cfg.n_max);
        let big_n = rng.random_range(1..=n);
        let psi = sample_with(n, Ensemble::FixedN(big_n), &mut rng)?;
        let mut out = Check::empty();
        for p in 1..=big_n {
            let r = check_fixed_n_reduction(&psi, p, cfg.entry_tol)?;
            {
                let mut s = max_scaled.lock().expect("lock");
                *s = s.max(r.scaled_gap);
            }
            out = out.merge(Check::one(r.within_tol, r.gap, || {
                json!({"trial": i, "seed": seed, "n": n, "N": big_n, "p": p, "gap": r.gap,
                       "scaled_gap": r.scaled_gap, "factorial": r.factorial})
            }));
        }
        Ok(out)
    })?;
    let max_scaled = *max_scaled.lock().expect("lock");
    Ok(finish(Suite::Prop5, fold(checks), json!({"max_scaled_gap": max_scaled, "entry_tol": cfg.entry_tol})))
}

fn pauli(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let cases = [(2, Parity::Even), (2, Parity::Odd), (3, Parity::Odd)];
    let mut total = Check::empty();
    let mut per_case = Vec::new();
    for (case, &(n, parity)) in cases.iter().enumerate() {
        let checks = per_trial(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed.wrapping_add(case as u64), i as u64);
            let psi = sample_with(n, Ensemble::Ssr(parity), &mut rng_from_seed(seed))?;
            let r = pauli_constraint_check(&psi, 1e-10)?;
            Ok(Check::one(r.holds == Some(true), r.residual, || {
                json!({"trial": i, "seed": seed, "n": n, "parity": parity, "occupations": r.occupations, "residual": r.residual})
            }))
        })?;
        let c = fold(checks);
        per_case.push(json!({"n": n, "parity": parity, "states": c.checks, "max_residual": c.gap}));
        total = total.merge(c);
    }
    Ok(finish(Suite::Pauli, total, json!({"cases": per_case})))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(suite: Suite, trials: usize) -> SuiteOutcome {
        let cfg = SuiteConfig { trials, ..SuiteConfig::defaults(suite, 11) };
        run_suite(suite, &cfg).unwrap()
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("prop6".parse::<Suite>().is_err());
    }

    #[test]
    fn algebraic_suites_are_exact() {
        let car = quick(Suite::Car, 0);
        assert!(car.passed && car.max_gap == 0.0 && car.checks == 6);
        let units = quick(Suite::MatrixUnits, 0);
        assert!(units.passed && units.max_gap == 0.0);
        assert_eq!(units.checks, (4 + 16) + (16 + 256) + (64 + 4096));
    }

    #[test]
    fn small_property_suites_pass() {
        for s in [Suite::Theorem1, Suite::Theorem2, Suite::Prop4, Suite::Pauli] {
            let o = quick(s, 40);
            assert!(o.passed, "{s}: {:?}", o.first_counterexample);
        }
    }

    #[test]
    fn prop4_families_hit_both_sides() {
        let part = Bipartition::contiguous(2, 1).unwrap();
        let equal = (0..200)
            .filter(|&i| equispectral(&prop4_state(i).unwrap(), &part, CRITERION_BAND).unwrap().equal)
            .count();
        assert!(equal > 50 && equal < 150, "{equal}");
    }

    #[test]
    fn prop5_literal_fails_beyond_one_step() {
        let o = quick(Suite::Prop5, 30);
        assert!(!o.passed);
        let cx = o.first_counterexample.unwrap();
        assert!(cx["N"].as_u64().unwrap() - cx["p"].as_u64().unwrap() >= 2);
        assert!(o.details["max_scaled_gap"].as_f64().unwrap() <= 1e-12);
    }
}
