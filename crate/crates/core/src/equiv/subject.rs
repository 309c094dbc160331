//! Equations prepared for matching: genericity flags, compiled barred
//! invariants and the analytic Jacobian of the coordinate invariants.

use crate::expr::{differentiate, is_identically_zero, Expr, SampleBox, Sampler, Tape, ZeroTestConfig, XYP};
use crate::jet::{InvariantTower, JetFrame, Jets, Ode2, SignPolicy};
use crate::quad::AssocOde;

use super::{EquivError, MatchConfig};

/// An equation `y'' = f` on `(x, y, p)`: either explicit, or an associated
/// equation whose frame lives on the original `(x, y, p)` of a quadratic
/// equation.
#[derive(Debug, Clone)]
pub enum Subject {
    Explicit { ode: Ode2, sample_box: SampleBox },
    Associated(AssocOde),
}

impl Subject {
    pub fn explicit(ode: Ode2, sample_box: SampleBox) -> Self {
        Subject::Explicit { ode, sample_box }
    }

    pub fn sample_box(&self) -> &SampleBox {
        match self {
            Subject::Explicit { sample_box, .. } => sample_box,
            Subject::Associated(a) => &a.chart.sample_box,
        }
    }

    /// Expressions that pin the equation down together with its
    /// coordinates; equal keys mean the identity map is an equivalence.
    fn key(&self) -> Vec<Expr> {
        match self {
            Subject::Explicit { ode, .. } => vec![ode.f().clone()],
            Subject::Associated(a) => vec![a.chart.ints.a.clone(), a.chart.ints.b.clone(), a.chart.c.clone(), a.g.clone()],
        }
    }
}

/// Genericity of a subject and, when generic, its tower.
pub struct Prepared {
    pub subject: Subject,
    pub i: Expr,
    pub h: Expr,
    pub i_vanishes: bool,
    pub h_vanishes: bool,
    pub tower: Option<InvariantTower>,
}

fn prepare_with<F: JetFrame>(subject: Subject, jets: Jets<F>, cfg: &ZeroTestConfig) -> Result<Prepared, EquivError> {
    let i = jets.i().value;
    let h = jets.h().value;
    let i_vanishes = is_identically_zero(&i, cfg)?;
    let h_vanishes = is_identically_zero(&h, cfg)?;
    let tower = if i_vanishes || h_vanishes { None } else { Some(InvariantTower::build(&jets)?) };
    Ok(Prepared { subject, i, h, i_vanishes, h_vanishes, tower })
}

impl Prepared {
    pub fn new(subject: Subject, cfg: &MatchConfig) -> Result<Self, EquivError> {
        let zero = cfg.zero_config(subject.sample_box());
        match &subject {
            Subject::Explicit { ode, .. } => {
                let jets = Jets::of(ode);
                prepare_with(subject, jets, &zero)
            }
            Subject::Associated(a) => {
                let jets = a.jets();
                prepare_with(subject, jets, &zero)
            }
        }
    }

    pub fn is_generic(&self) -> bool {
        self.tower.is_some()
    }

    /// True when both subjects are the same equation in the same
    /// coordinates on the same box.
    pub fn coincides(&self, other: &Prepared, cfg: &MatchConfig) -> Result<bool, EquivError> {
        let (k1, k2) = (self.subject.key(), other.subject.key());
        if k1.len() != k2.len() || self.subject.sample_box() != other.subject.sample_box() {
            return Ok(false);
        }
        let zero = cfg.zero_config(self.subject.sample_box());
        for (u, v) in k1.iter().zip(&k2) {
            if !is_identically_zero(&(u - v), &zero)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Barred invariants and the coordinate Jacobian as straight-line programs.
pub struct Compiled {
    barred: Tape,
    jacobian: Tape,
    pub sample_box: SampleBox,
}

/// Values of the eleven absolute invariants at a point.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InvariantSignature {
    /// `H̄10, H̄01, K̄`.
    pub coords: [f64; 3],
    /// `H̄20, H̄11, H̄02, K̄10, K̄01, Ω̄6, Ω̄5_10, Ω̄4_20`.
    pub derived: [f64; 8],
    pub point: [f64; 3],
}

impl Compiled {
    pub fn new(prepared: &Prepared, policy: SignPolicy) -> Result<Self, EquivError> {
        let tower = prepared.tower.as_ref().ok_or(EquivError::NonGeneric)?;
        let barred = tower.barred(policy)?;
        let coords = barred.coordinates();
        let mut jac = Vec::with_capacity(9);
        for c in coords {
            for v in XYP {
                jac.push(differentiate(c, v));
            }
        }
        Ok(Compiled {
            barred: Tape::compile(&barred.entries, XYP)?,
            jacobian: Tape::compile(&jac, XYP)?,
            sample_box: prepared.subject.sample_box().clone(),
        })
    }

    /// The signature at `pt`, failing where any entry is undefined.
    pub fn signature(&self, pt: [f64; 3]) -> Result<InvariantSignature, EquivError> {
        let v = self.barred.eval(&pt)?;
        if v.iter().any(|t| !t.is_finite()) {
            return Err(EquivError::NotFinite(pt));
        }
        Ok(InvariantSignature { coords: [v[0], v[1], v[2]], derived: std::array::from_fn(|k| v[3 + k]), point: pt })
    }

    /// Coordinates and their Jacobian in `(x, y, p)`.
    pub fn coords_with_jacobian(&self, pt: [f64; 3]) -> Option<([f64; 3], nalgebra::Matrix3<f64>)> {
        let v = self.barred.eval(&pt).ok()?;
        let j = self.jacobian.eval(&pt).ok()?;
        let coords = [v[0], v[1], v[2]];
        let m = nalgebra::Matrix3::from_row_slice(&j);
        (coords.iter().all(|t| t.is_finite()) && m.iter().all(|t| t.is_finite())).then_some((coords, m))
    }

    pub fn rank_det(&self, pt: [f64; 3]) -> Option<f64> {
        self.coords_with_jacobian(pt).map(|(_, m)| m.determinant())
    }

    pub fn contains(&self, pt: [f64; 3]) -> bool {
        XYP.iter().zip(pt).all(|(v, t)| self.sample_box.get(v).is_some_and(|(lo, hi)| t >= lo && t <= hi))
    }

    /// Box side lengths in `x, y, p`.
    pub fn widths(&self) -> [f64; 3] {
        std::array::from_fn(|j| self.sample_box.get(XYP[j]).map_or(1.0, |(lo, hi)| hi - lo))
    }

    /// True iff `pt` lies in the box widened by `reach` widths on every side.
    pub fn within_reach(&self, pt: [f64; 3], reach: f64) -> bool {
        XYP.iter().zip(pt).all(|(v, t)| self.sample_box.get(v).is_some_and(|(lo, hi)| (lo - reach * (hi - lo)..=hi + reach * (hi - lo)).contains(&t)))
    }

    pub fn sampler(&self, seed: u64) -> Result<Sampler, EquivError> {
        Ok(Sampler::new(&self.sample_box, XYP, seed)?)
    }
}

/// Barred invariants of an explicit equation at a point, strict sign policy.
pub fn signature_at(ode: &Ode2, pt: [f64; 3]) -> Result<InvariantSignature, EquivError> {
    let tower = InvariantTower::build(&Jets::of(ode)).map_err(|_| EquivError::NonGeneric)?;
    let barred = tower.barred(SignPolicy::Strict)?;
    let bind = [("x", pt[0]), ("y", pt[1]), ("p", pt[2])];
    let i = crate::expr::eval_num(&tower.i.value, &bind)?;
    let h = crate::expr::eval_num(&tower.h.value, &bind)?;
    if i == 0.0 || h == 0.0 {
        return Err(EquivError::NonGeneric);
    }
    let mut v = [0.0; 11];
    for (slot, e) in v.iter_mut().zip(&barred.entries) {
        *slot = crate::expr::eval_num(e, &bind)?;
    }
    if v.iter().any(|t| !t.is_finite()) {
        return Err(EquivError::NotFinite(pt));
    }
    Ok(InvariantSignature { coords: [v[0], v[1], v[2]], derived: std::array::from_fn(|k| v[3 + k]), point: pt })
}

/// True iff `|det ∂(H̄10, H̄01, K̄)/∂(x, y, p)|` exceeds the threshold at
/// no fewer than 80% of the sampled points.
pub fn coordinate_rank(compiled: &Compiled, cfg: &MatchConfig) -> Result<bool, EquivError> {
    let mut sampler = compiled.sampler(cfg.seed ^ 0x7a4e)?;
    let good = (0..cfg.samples)
        .filter(|_| {
            let s = sampler.sample();
            compiled.rank_det([s[0], s[1], s[2]]).is_some_and(|d| d.abs() > cfg.rank_threshold)
        })
        .count();
    Ok(good * 5 >= cfg.samples * 4)
}
