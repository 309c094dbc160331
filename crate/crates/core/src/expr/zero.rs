//! Randomized identity testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EvalError, Expr, Tape};

#[derive(Debug, Clone, Error)]
pub enum ZeroTestError {
    #[error("only {valid} of {trials} trials produced a valid sample (need {needed})")]
    TooManySingularPoints { valid: usize, trials: usize, needed: usize },
    #[error("no sampling interval for variable `{0}`")]
    MissingInterval(String),
    #[error("invalid zero-test configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Sampling intervals for named variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    intervals: Vec<(String, f64, f64)>,
}

impl SampleBox {
    pub fn new() -> Self {
        SampleBox { intervals: Vec::new() }
    }

    /// The same interval for each of `vars`.
    pub fn cube(vars: &[&str], lo: f64, hi: f64) -> Self {
        vars.iter().fold(SampleBox::new(), |b, v| b.with(v, lo, hi))
    }

    /// Adds or replaces the interval of `var`.
    pub fn with(mut self, var: &str, lo: f64, hi: f64) -> Self {
        self.set(var, lo, hi);
        self
    }

    pub fn set(&mut self, var: &str, lo: f64, hi: f64) {
        match self.intervals.iter_mut().find(|(n, ..)| n == var) {
            Some(slot) => *slot = (var.to_string(), lo, hi),
            None => self.intervals.push((var.to_string(), lo, hi)),
        }
    }

    pub fn get(&self, var: &str) -> Option<(f64, f64)> {
        self.intervals.iter().find(|(n, ..)| n == var).map(|&(_, lo, hi)| (lo, hi))
    }

    pub fn intervals(&self) -> &[(String, f64, f64)] {
        &self.intervals
    }

    pub fn validate(&self) -> Result<(), ZeroTestError> {
        for (_, lo, hi) in &self.intervals {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ZeroTestError::InvalidConfig("box intervals must be finite and non-degenerate"));
            }
        }
        Ok(())
    }
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox::cube(&["x", "y", "p", "a", "b", "c"], 0.25, 1.25)
    }
}

/// A point with three named coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub names: [String; 3],
    pub values: [f64; 3],
}

impl Point3 {
    pub fn new(names: [&str; 3], values: [f64; 3]) -> Self {
        assert!(names[0] != names[1] && names[0] != names[2] && names[1] != names[2], "coordinate names must be distinct");
        Point3 { names: names.map(String::from), values }
    }

    pub fn bindings(&self) -> [(&str, f64); 3] {
        std::array::from_fn(|i| (self.names[i].as_str(), self.values[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTestConfig {
    pub trials: usize,
    pub tolerance: f64,
    pub retry_limit: usize,
    pub seed: u64,
    pub sample_box: SampleBox,
}

impl Default for ZeroTestConfig {
    fn default() -> Self {
        ZeroTestConfig { trials: 50, tolerance: 1e-9, retry_limit: 20, seed: 0x5eed, sample_box: SampleBox::default() }
    }
}

impl ZeroTestConfig {
    pub fn with_box(mut self, sample_box: SampleBox) -> Self {
        self.sample_box = sample_box;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ZeroTestError> {
        if self.trials == 0 {
            return Err(ZeroTestError::InvalidConfig("trial count must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(ZeroTestError::InvalidConfig("tolerance must be positive"));
        }
        self.sample_box.validate()
    }
}

/// Uniform sampler over the box restricted to an ordered variable list.
pub struct Sampler {
    ranges: Vec<(f64, f64)>,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new<S: AsRef<str>>(sample_box: &SampleBox, vars: &[S], seed: u64) -> Result<Self, ZeroTestError> {
        let ranges = vars
            .iter()
            .map(|v| sample_box.get(v.as_ref()).ok_or_else(|| ZeroTestError::MissingInterval(v.as_ref().to_string())))
            .collect::<Result<_, _>>()?;
        Ok(Sampler { ranges, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn sample(&mut self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.ranges.len());
        for &(lo, hi) in &self.ranges {
            out.push(self.rng.random_range(lo..hi));
        }
        out
    }
}

/// Outcome of a zero test with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTestReport {
    pub valid_samples: usize,
    pub singular_samples: usize,
    pub max_abs: f64,
    /// First point where the value exceeded the tolerance, if any.
    pub witness: Option<Vec<f64>>,
    pub vars: Vec<String>,
}

impl ZeroTestReport {
    pub fn is_zero(&self) -> bool {
        self.witness.is_none()
    }
}

/// Samples `e` and reports the largest absolute value seen.
///
/// Stops at the first value above tolerance. Points where evaluation fails
/// are redrawn up to the retry limit; a trial whose retries are exhausted is
/// counted as failed.
pub fn zero_test(e: &Expr, cfg: &ZeroTestConfig) -> Result<ZeroTestReport, ZeroTestError> {
    cfg.validate()?;
    let vars: Vec<String> = e.free_vars().into_iter().collect();
    let mut sampler = Sampler::new(&cfg.sample_box, &vars, cfg.seed)?;
    let tape = Tape::compile(std::slice::from_ref(e), &vars)?;
    let mut regs = Vec::new();
    let mut report = ZeroTestReport { valid_samples: 0, singular_samples: 0, max_abs: 0.0, witness: None, vars };
    for _ in 0..cfg.trials {
        for _ in 0..=cfg.retry_limit {
            let pt = sampler.sample();
            match tape.eval_with(&pt, &mut regs) {
                Ok(v) => {
                    report.valid_samples += 1;
                    let a = v[0].abs();
                    report.max_abs = report.max_abs.max(a);
                    if a > cfg.tolerance {
                        report.witness = Some(pt);
                        return Ok(report);
                    }
                    break;
                }
                Err(_) => report.singular_samples += 1,
            }
        }
    }
    let needed = cfg.trials.div_ceil(2);
    if report.valid_samples < needed {
        return Err(ZeroTestError::TooManySingularPoints { valid: report.valid_samples, trials: cfg.trials, needed });
    }
    Ok(report)
}

/// True iff `e` vanishes to within tolerance at every valid sample point.
pub fn is_identically_zero(e: &Expr, cfg: &ZeroTestConfig) -> Result<bool, ZeroTestError> {
    Ok(zero_test(e, cfg)?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn zero(src: &str) -> bool {
        let e = parse(src, &["a", "f", "x", "y", "p"]).unwrap();
        is_identically_zero(&e, &ZeroTestConfig::default().with_box(SampleBox::cube(&["a", "f", "x", "y", "p"], -2.0, 2.0))).unwrap()
    }

    #[test]
    fn identities() {
        assert!(zero("0"));
        assert!(zero("(a - f)^2 - a^2 + 2*a*f - f^2"));
        assert!(zero("sin(x)^2 + cos(x)^2 - 1"));
        assert!(!zero("x - y"));
        assert!(!zero("1/1000000"));
    }

    #[test]
    fn singular_samples_are_retried() {
        let e = parse("sqrt(x) - sqrt(x)", &["x"]).unwrap();
        assert!(e.is_zero());
        let e = parse("abs(sqrt(x)) - sqrt(x)", &["x"]).unwrap();
        let cfg = ZeroTestConfig::default().with_box(SampleBox::new().with("x", -1.0, 1.0));
        let report = zero_test(&e, &cfg).unwrap();
        assert!(report.is_zero());
        assert!(report.singular_samples > 0);
    }

    #[test]
    fn mostly_singular_box_is_an_error() {
        let e = parse("sqrt(x)", &["x"]).unwrap();
        let cfg = ZeroTestConfig { retry_limit: 0, ..ZeroTestConfig::default() }.with_box(SampleBox::new().with("x", -100.0, 0.01));
        assert!(matches!(is_identically_zero(&e, &cfg), Err(ZeroTestError::TooManySingularPoints { .. })));
    }

    #[test]
    fn missing_interval() {
        let e = parse("x + y", &["x", "y"]).unwrap();
        let cfg = ZeroTestConfig::default().with_box(SampleBox::new().with("x", 0.0, 1.0));
        assert!(matches!(is_identically_zero(&e, &cfg), Err(ZeroTestError::MissingInterval(v)) if v == "y"));
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let e = parse("x*y - 1/2", &["x", "y"]).unwrap();
        let cfg = ZeroTestConfig::default().with_box(SampleBox::cube(&["x", "y"], 0.0, 1.0));
        assert_eq!(zero_test(&e, &cfg).unwrap(), zero_test(&e, &cfg).unwrap());
    }
}
