//! Point equivalence of explicit equations by matching sampled invariant
//! signatures, and contact equivalence of quadratic equations through
//! their associated pairs.
//!
//! Every verdict is about the sampled boxes only.

mod matching;
mod subject;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, SampleBox, ZeroTestConfig, ZeroTestError};
use crate::jet::JetError;
use crate::quad::{dual_pair, Integrals, QuadError, QuadOde};

pub use matching::{halton, point_equivalent, point_equivalent_on, point_equivalent_prepared};
pub use subject::{coordinate_rank, signature_at, Compiled, InvariantSignature, Prepared, Subject};

/// Printed with every verdict.
pub const SCOPE_NOTE: &str = "verdicts are certified on the sampled boxes only; global equivalence is not claimed";

#[derive(Debug, Clone, Error)]
pub enum EquivError {
    #[error("equation is not generic")]
    NonGeneric,
    #[error("invariants are not finite at {0:?}")]
    NotFinite([f64; 3]),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Signatures sampled per direction.
    pub samples: usize,
    /// Box for explicit equations; associated equations carry their own.
    pub sample_box: SampleBox,
    /// Newton stops once every coordinate residual is below this, relative
    /// to `max(1, |target|)`.
    pub coord_tol: f64,
    /// Relative tolerance for the eight derived invariants.
    pub derived_tol: f64,
    pub newton_cap: usize,
    pub multistart: usize,
    /// Matched points may lie this many box widths outside the other box.
    pub reach: f64,
    /// Minimum `|det|` of the coordinate Jacobian.
    pub rank_threshold: f64,
    pub seed: u64,
    /// Trials and tolerance of the genericity zero tests.
    pub trials: usize,
    pub zero_tol: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            samples: 40,
            sample_box: SampleBox::default(),
            coord_tol: 1e-8,
            derived_tol: 1e-6,
            newton_cap: 50,
            multistart: 12,
            reach: 0.5,
            rank_threshold: 1e-6,
            seed: 0x5eed,
            trials: 50,
            zero_tol: 1e-9,
        }
    }
}

impl MatchConfig {
    pub fn zero_config(&self, sample_box: &SampleBox) -> ZeroTestConfig {
        ZeroTestConfig { trials: self.trials, tolerance: self.zero_tol, seed: self.seed, sample_box: sample_box.clone(), ..ZeroTestConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ZeroTestError> {
        let counts = [self.samples, self.newton_cap, self.multistart, self.trials];
        let tols = [self.coord_tol, self.derived_tol, self.rank_threshold, self.zero_tol];
        if !(self.reach >= 0.0) {
            return Err(ZeroTestError::InvalidConfig("reach must be non-negative"));
        }
        if counts.contains(&0) || tols.iter().any(|t| !(*t > 0.0)) {
            return Err(ZeroTestError::InvalidConfig("counts and tolerances must be positive"));
        }
        self.sample_box.validate()
    }
}

/// Why a verdict could not be reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    NonGeneric,
    RankFailure,
    SignDomainFailure,
    SamplingExhaustion,
}

/// A matched pair of sample points, `first` on the equation sampled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub from_first: bool,
    pub source: [f64; 3],
    pub image: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Sign pattern `(s1, s2)` under which the signatures matched.
    pub twist: Option<[i8; 2]>,
    pub matched: Vec<MatchedPair>,
    pub unmatched: usize,
    /// Equivalent because both inputs are the same equation.
    pub identical: bool,
}

/// Evidence that two equations are not equivalent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// The invariant that differs.
    pub invariant: String,
    pub point: [f64; 3],
    pub value: f64,
    /// Matched point on the other equation, absent for the cubic screen.
    pub other_point: Option<[f64; 3]>,
    pub other_value: f64,
    pub twist: Option<[i8; 2]>,
    pub from_first: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Equivalent { certificate: Certificate },
    NotEquivalent { witness: Witness },
    Inconclusive { reason: Reason, detail: String },
}

impl Verdict {
    pub fn inconclusive(reason: Reason, detail: impl Into<String>) -> Self {
        Verdict::Inconclusive { reason, detail: detail.into() }
    }

    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent { .. })
    }

    pub fn is_not_equivalent(&self) -> bool {
        matches!(self, Verdict::NotEquivalent { .. })
    }

    pub fn reason(&self) -> Option<Reason> {
        match self {
            Verdict::Inconclusive { reason, .. } => Some(*reason),
            _ => None,
        }
    }

    /// 0 equivalent, 1 not equivalent, 2 inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Equivalent { .. } => 0,
            Verdict::NotEquivalent { .. } => 1,
            Verdict::Inconclusive { .. } => 2,
        }
    }
}

/// One comparison between associated equations of the two inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    /// Index (0 or 1) into the first input's pair.
    pub first: usize,
    /// Index into the second input's pair.
    pub second: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactVerdict {
    pub verdict: Verdict,
    pub legs: Vec<Leg>,
}

/// Contact equivalence of two hyperbolic quadratic equations.
///
/// Equivalent iff the associated pairs match as unordered pairs; not
/// equivalent iff both matchings are refuted by some leg.
pub fn contact_equivalent(
    q1: &QuadOde,
    ints1: &Integrals,
    box1: &SampleBox,
    q2: &QuadOde,
    ints2: &Integrals,
    box2: &SampleBox,
    cfg: &MatchConfig,
) -> Result<ContactVerdict, EquivError> {
    let (a1, a2) = dual_pair(q1, ints1, &cfg.zero_config(box1))?;
    let (b1, b2) = dual_pair(q2, ints2, &cfg.zero_config(box2))?;
    let left = [Prepared::new(Subject::Associated(a1), cfg)?, Prepared::new(Subject::Associated(a2), cfg)?];
    let right = [Prepared::new(Subject::Associated(b1), cfg)?, Prepared::new(Subject::Associated(b2), cfg)?];
    let mut legs = Vec::with_capacity(4);
    for (i, j) in [(0, 0), (1, 1), (0, 1), (1, 0)] {
        legs.push(Leg { first: i, second: j, verdict: point_equivalent_prepared(&left[i], &right[j], cfg)? });
    }
    Ok(ContactVerdict { verdict: combine_legs(&legs), legs })
}

fn combine_legs(legs: &[Leg]) -> Verdict {
    let straight = [&legs[0], &legs[1]];
    let crossed = [&legs[2], &legs[3]];
    for matching in [straight, crossed] {
        if matching.iter().all(|l| l.verdict.is_equivalent()) {
            let mut matched = Vec::new();
            let mut unmatched = 0;
            let mut identical = true;
            for l in matching {
                if let Verdict::Equivalent { certificate } = &l.verdict {
                    matched.extend(certificate.matched.iter().cloned());
                    unmatched += certificate.unmatched;
                    identical &= certificate.identical;
                }
            }
            return Verdict::Equivalent { certificate: Certificate { twist: None, matched, unmatched, identical } };
        }
    }
    let refuting = |m: [&Leg; 2]| m.into_iter().find(|l| l.verdict.is_not_equivalent()).map(|l| l.verdict.clone());
    if let (Some(w), Some(_)) = (refuting(straight), refuting(crossed)) {
        return w;
    }
    let reason = legs.iter().find_map(|l| l.verdict.reason()).unwrap_or(Reason::SamplingExhaustion);
    let summary: Vec<String> = legs
        .iter()
        .map(|l| {
            let v = match &l.verdict {
                Verdict::Equivalent { .. } => "equivalent".to_string(),
                Verdict::NotEquivalent { .. } => "not equivalent".to_string(),
                Verdict::Inconclusive { reason, .. } => format!("inconclusive ({reason:?})"),
            };
            format!("E{}~E'{}: {v}", l.first + 1, l.second + 1)
        })
        .collect();
    Verdict::inconclusive(reason, summary.join("; "))
}
