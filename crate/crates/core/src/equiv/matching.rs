//! Sampled signature matching with Newton's method on the coordinate
//! invariants.

use rayon::prelude::*;

use crate::expr::{eval_num, SampleBox, Sampler, XYP};
use crate::jet::{reorient, Ode2, SignPolicy, BARRED_NAMES};

use super::subject::{coordinate_rank, Compiled, InvariantSignature, Prepared, Subject};
use super::{Certificate, EquivError, MatchConfig, MatchedPair, Reason, Verdict, Witness};

/// Sign patterns `(s1, s2)` tried by the matcher, identity first.
const TWISTS: [[i8; 2]; 4] = [[1, 1], [-1, 1], [1, -1], [-1, -1]];

const CHUNK: usize = 8;

const NEIGHBOURS: usize = 4;

/// Radical inverse of `index` in `base`, in `[0, 1)`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn halton_points(compiled: &Compiled, indices: std::ops::RangeInclusive<u64>) -> Vec<[f64; 3]> {
    let ranges: Vec<(f64, f64)> = XYP.iter().map(|v| compiled.sample_box.get(v).expect("box covers x, y, p")).collect();
    indices
        .map(|k| std::array::from_fn(|j| ranges[j].0 + (ranges[j].1 - ranges[j].0) * halton(k, [2, 3, 5][j])))
        .collect()
}

fn residual(c: &[f64; 3], target: &[f64; 3]) -> f64 {
    c.iter().zip(target).map(|(u, t)| (u - t).abs() / t.abs().max(1.0)).fold(0.0, f64::max)
}

/// Damped Newton from one start, steps capped at a quarter of the box.
fn newton(target: [f64; 3], compiled: &Compiled, z0: [f64; 3], cfg: &MatchConfig) -> Option<[f64; 3]> {
    let mut z = z0;
    let (mut c, mut jac) = compiled.coords_with_jacobian(z)?;
    for _ in 0..cfg.newton_cap {
        let r = residual(&c, &target);
        if r < cfg.coord_tol {
            return Some(z);
        }
        let rhs = nalgebra::Vector3::new(c[0] - target[0], c[1] - target[1], c[2] - target[2]);
        let mut step = jac.lu().solve(&rhs)?;
        // trust region: a quarter of the box per coordinate
        let shrink = (0..3).map(|j| compiled.widths()[j] / 4.0 / step[j].abs()).fold(1.0, f64::min);
        step *= shrink;
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..12 {
            let trial = [z[0] - lambda * step[0], z[1] - lambda * step[1], z[2] - lambda * step[2]];
            if let Some((c2, j2)) = compiled.coords_with_jacobian(trial) {
                if residual(&c2, &target) < r {
                    (z, c, jac) = (trial, c2, j2);
                    moved = true;
                    break;
                }
            }
            lambda /= 2.0;
        }
        if !moved {
            return None;
        }
    }
    (residual(&c, &target) < cfg.coord_tol).then_some(z)
}

enum PointOutcome {
    Matched(MatchedPair),
    Mismatch(Box<Witness>),
    Unmatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Decision {
    Accepted,
    Refuted,
    Undecided,
}

struct Direction {
    matched: Vec<MatchedPair>,
    unmatched: usize,
    mismatched: usize,
    witness: Option<Witness>,
    decision: Decision,
}

fn twisted(sig: &InvariantSignature, twist: [i8; 2]) -> [f64; 11] {
    let mut v = [0.0; 11];
    v[..3].copy_from_slice(&sig.coords);
    v[3..].copy_from_slice(&sig.derived);
    reorient(&mut v, twist);
    v
}

/// Tries every start. Roots count if they lie within `reach` box widths of
/// the target's box, since the image of one box is rarely the other box.
/// The coordinate map need not be injective, so a root whose derived
/// invariants disagree only refutes the match when no other root agrees.
fn match_point(sig: &InvariantSignature, target: &Compiled, starts: &[[f64; 3]], twist: [i8; 2], from_first: bool, cfg: &MatchConfig) -> PointOutcome {
    let want = twisted(sig, twist);
    let coords = [want[0], want[1], want[2]];
    let mut first_mismatch = None;
    for &z0 in std::iter::once(&sig.point).chain(starts) {
        let Some(z) = newton(coords, target, z0, cfg) else { continue };
        if !target.within_reach(z, cfg.reach) || !target.rank_det(z).is_some_and(|d| d.abs() > cfg.rank_threshold) {
            continue;
        }
        let Ok(got) = target.signature(z) else { continue };
        let bad = want[3..].iter().zip(&got.derived).position(|(&d1, &d2)| (d1 - d2).abs() > cfg.derived_tol * d1.abs().max(d2.abs()).max(1.0));
        match bad {
            None => return PointOutcome::Matched(MatchedPair { from_first, source: sig.point, image: z }),
            Some(k) if first_mismatch.is_none() => {
                first_mismatch = Some(Witness {
                    invariant: BARRED_NAMES[3 + k].to_string(),
                    point: sig.point,
                    value: want[3 + k],
                    other_point: Some(z),
                    other_value: got.derived[k],
                    twist: Some(twist),
                    from_first,
                });
            }
            Some(_) => {}
        }
    }
    match first_mismatch {
        Some(w) => PointOutcome::Mismatch(Box::new(w)),
        None => PointOutcome::Unmatched,
    }
}

/// Images of the nearest matched sources, moved by the source offset.
fn neighbour_starts(point: [f64; 3], known: &[MatchedPair]) -> Vec<[f64; 3]> {
    let dist = |m: &MatchedPair| (0..3).map(|j| (m.source[j] - point[j]).powi(2)).sum::<f64>();
    let mut near: Vec<&MatchedPair> = known.iter().collect();
    near.sort_by(|u, v| dist(u).total_cmp(&dist(v)));
    near.into_iter()
        .take(NEIGHBOURS)
        .flat_map(|m| [m.image, std::array::from_fn(|j| m.image[j] + point[j] - m.source[j])])
        .collect()
}

/// Samples are matched in parallel chunks; the scan stops once the
/// direction can no longer be accepted and either failure kind exceeds the
/// quota.
fn match_direction(sigs: &[InvariantSignature], target: &Compiled, twist: [i8; 2], from_first: bool, cfg: &MatchConfig) -> Direction {
    let starts = halton_points(target, 1..=cfg.multistart as u64);
    let extra = halton_points(target, cfg.multistart as u64 + 1..=4 * cfg.multistart as u64);
    let quota = sigs.len() / 20;
    let mut dir = Direction { matched: Vec::new(), unmatched: 0, mismatched: 0, witness: None, decision: Decision::Undecided };
    for chunk in sigs.chunks(CHUNK) {
        let first: Vec<PointOutcome> = chunk.par_iter().map(|s| match_point(s, target, &starts, twist, from_first, cfg)).collect();
        // A point map is continuous, so images of nearby matched points are
        // good starts for the points that missed
        let known: Vec<MatchedPair> = dir.matched.iter().chain(first.iter().filter_map(|o| match o {
            PointOutcome::Matched(m) => Some(m),
            _ => None,
        })).cloned().collect();
        let outcomes: Vec<PointOutcome> = chunk
            .par_iter()
            .zip(first)
            .map(|(s, o)| match o {
                PointOutcome::Matched(_) => o,
                _ => {
                    let mut retry = neighbour_starts(s.point, &known);
                    retry.extend_from_slice(&extra);
                    match match_point(s, target, &retry, twist, from_first, cfg) {
                        PointOutcome::Unmatched => o,
                        better => better,
                    }
                }
            })
            .collect();
        for o in outcomes {
            match o {
                PointOutcome::Matched(m) => dir.matched.push(m),
                PointOutcome::Unmatched => dir.unmatched += 1,
                PointOutcome::Mismatch(w) => {
                    dir.mismatched += 1;
                    dir.witness.get_or_insert(*w);
                }
            }
        }
        if dir.unmatched + dir.mismatched > quota && (dir.mismatched > quota || dir.unmatched > quota) {
            break;
        }
    }
    dir.decision = if dir.unmatched + dir.mismatched <= quota {
        Decision::Accepted
    } else if dir.mismatched > quota {
        Decision::Refuted
    } else {
        Decision::Undecided
    };
    dir
}

/// Signatures at seeded points, or `None` when too many points fail.
fn sample_signatures(compiled: &Compiled, cfg: &MatchConfig, seed: u64) -> Result<Option<Vec<InvariantSignature>>, EquivError> {
    let mut sampler = compiled.sampler(seed)?;
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..4 * cfg.samples {
        let s = sampler.sample();
        if let Ok(sig) = compiled.signature([s[0], s[1], s[2]]) {
            out.push(sig);
            if out.len() == cfg.samples {
                return Ok(Some(out));
            }
        }
    }
    Ok(None)
}

/// `I` of the generic equation at a point where it is clearly nonzero.
fn cubic_witness(generic: &Prepared, generic_is_first: bool, cfg: &MatchConfig) -> Result<Verdict, EquivError> {
    let mut sampler = Sampler::new(generic.subject.sample_box(), XYP, cfg.seed)?;
    let mut best: Option<([f64; 3], f64)> = None;
    for _ in 0..cfg.trials {
        let s = sampler.sample();
        if let Ok(v) = eval_num(&generic.i, &[("x", s[0]), ("y", s[1]), ("p", s[2])]) {
            if v.is_finite() && best.is_none_or(|(_, b)| v.abs() > b.abs()) {
                best = Some(([s[0], s[1], s[2]], v));
            }
        }
    }
    let (point, value) = best.ok_or(EquivError::NonGeneric)?;
    Ok(Verdict::NotEquivalent {
        witness: Witness { invariant: "I".into(), point, value, other_point: None, other_value: 0.0, twist: None, from_first: generic_is_first },
    })
}

/// An inconclusive verdict, unless the inputs are literally the same
/// equation, in which case the identity map settles it.
fn identity_or(p1: &Prepared, p2: &Prepared, cfg: &MatchConfig, fallback: Verdict) -> Result<Verdict, EquivError> {
    if p1.coincides(p2, cfg)? {
        return Ok(Verdict::Equivalent { certificate: Certificate { twist: None, matched: Vec::new(), unmatched: 0, identical: true } });
    }
    Ok(fallback)
}

/// Point equivalence of two prepared equations on their boxes.
///
/// Cubic screen, then genericity and rank, then signature matching in both
/// directions under each sign pattern. A pattern is accepted when both
/// directions match all but 5% of their samples, and refuted when more than
/// 5% of some direction's samples reach the other equation's coordinates
/// only at points whose derived invariants disagree. The equations are
/// declared inequivalent only when every pattern is refuted.
pub fn point_equivalent_prepared(p1: &Prepared, p2: &Prepared, cfg: &MatchConfig) -> Result<Verdict, EquivError> {
    match (p1.i_vanishes, p2.i_vanishes) {
        (false, true) => return cubic_witness(p1, true, cfg),
        (true, false) => return cubic_witness(p2, false, cfg),
        (true, true) => {
            let why = Verdict::inconclusive(Reason::NonGeneric, "I vanishes for both equations (cubic class); non-generic equations are outside this test");
            return identity_or(p1, p2, cfg, why);
        }
        (false, false) => {}
    }
    if p1.h_vanishes || p2.h_vanishes {
        let why = Verdict::inconclusive(Reason::NonGeneric, "H vanishes identically; non-generic equations are outside this test");
        return identity_or(p1, p2, cfg, why);
    }
    let c1 = Compiled::new(p1, SignPolicy::Lenient)?;
    let c2 = Compiled::new(p2, SignPolicy::Lenient)?;
    for (c, which) in [(&c1, "first"), (&c2, "second")] {
        if !coordinate_rank(c, cfg)? {
            let why = Verdict::inconclusive(Reason::RankFailure, format!("H10, H01, K are not local coordinates for the {which} equation"));
            return identity_or(p1, p2, cfg, why);
        }
    }
    let (Some(s1), Some(s2)) = (sample_signatures(&c1, cfg, cfg.seed)?, sample_signatures(&c2, cfg, cfg.seed.wrapping_add(1))?) else {
        let why = Verdict::inconclusive(Reason::SignDomainFailure, "invariants undefined at too many sample points");
        return identity_or(p1, p2, cfg, why);
    };
    let mut refutations = Vec::new();
    let mut open = Vec::new();
    for twist in TWISTS {
        let forward = match_direction(&s1, &c2, twist, true, cfg);
        if forward.decision == Decision::Refuted {
            refutations.extend(forward.witness);
            continue;
        }
        let backward = match_direction(&s2, &c1, twist, false, cfg);
        match (forward.decision, backward.decision) {
            (Decision::Accepted, Decision::Accepted) => {
                let unmatched = forward.unmatched + forward.mismatched + backward.unmatched + backward.mismatched;
                let mut matched = forward.matched;
                matched.extend(backward.matched);
                return Ok(Verdict::Equivalent { certificate: Certificate { twist: Some(twist), matched, unmatched, identical: false } });
            }
            (_, Decision::Refuted) => refutations.extend(backward.witness),
            _ => open.push(format!(
                "{twist:?}: {}/{} and {}/{} samples matched",
                forward.matched.len(),
                forward.matched.len() + forward.unmatched + forward.mismatched,
                backward.matched.len(),
                backward.matched.len() + backward.unmatched + backward.mismatched
            )),
        }
    }
    if open.is_empty() {
        return Ok(Verdict::NotEquivalent { witness: refutations.swap_remove(0) });
    }
    let why = Verdict::inconclusive(Reason::SamplingExhaustion, format!("sign patterns left open: {}", open.join("; ")));
    identity_or(p1, p2, cfg, why)
}

/// Point equivalence of two explicit equations, both sampled on
/// `cfg.sample_box`.
pub fn point_equivalent(e1: &Ode2, e2: &Ode2, cfg: &MatchConfig) -> Result<Verdict, EquivError> {
    point_equivalent_on(e1, &cfg.sample_box, e2, &cfg.sample_box, cfg)
}

/// As [`point_equivalent`], with a box for each equation.
pub fn point_equivalent_on(e1: &Ode2, box1: &SampleBox, e2: &Ode2, box2: &SampleBox, cfg: &MatchConfig) -> Result<Verdict, EquivError> {
    let p1 = Prepared::new(Subject::explicit(e1.clone(), box1.clone()), cfg)?;
    let p2 = Prepared::new(Subject::explicit(e2.clone(), box2.clone()), cfg)?;
    point_equivalent_prepared(&p1, &p2, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_sequence() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn residual_is_relative_above_one() {
        assert_eq!(residual(&[101.0, 0.0, 0.0], &[100.0, 0.0, 0.0]), 0.01);
        assert_eq!(residual(&[0.5, 0.0, 0.0], &[0.25, 0.0, 0.0]), 0.25);
    }
}

