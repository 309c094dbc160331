//! Seeded generators shared by the integration suites.
#![allow(dead_code)]

use num_traits::{Signed, Zero};
use odeq::expr::{eval_exact, eval_exact_many, parse, rat, rational_to_f64, Expr, Rational, SampleBox, Sampler, Tape, XYP};
use odeq::jet::{barred_exponents, point_transform, reorient, InvariantTower, Jets, LiftedMap, Ode2, PointMap, Primitive, SignPolicy};
use odeq::expr::Differentiator;
use odeq::quad::AssocOde;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;
use std::sync::Mutex;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_rational(rng: &mut ChaCha8Rng) -> Expr {
    let mut n = rng.random_range(-4i64..=4);
    if n == 0 {
        n = 1;
    }
    Expr::rational(n, rng.random_range(1i64..=3))
}

/// A polynomial right-hand side whose `p`-degree is 5 or 6, with
/// `x, y` dependence in the lower coefficients.
pub fn generic_ode(rng: &mut ChaCha8Rng) -> Ode2 {
    let (x, y, p) = (Expr::var("x"), Expr::var("y"), Expr::var("p"));
    let top = rng.random_range(5i64..=6);
    let mut f = p.powi(top).scale(rat(rng.random_range(1i64..=3), 1));
    for k in 0..top {
        let mono = match rng.random_range(0..4) {
            0 => Expr::one(),
            1 => x.clone(),
            2 => y.clone(),
            _ => &x * &y,
        };
        f = f + small_rational(rng) * mono * p.powi(k);
    }
    // an x-dependent top coefficient keeps the coordinate invariants independent
    f = f + (&x * p.powi(top - 1)).scale(rat(1, 2)) + y.powi(2);
    Ode2::new(f).unwrap()
}

/// A right-hand side of degree at most 3 in `p`.
pub fn cubic_ode(rng: &mut ChaCha8Rng) -> Ode2 {
    let (x, y, p) = (Expr::var("x"), Expr::var("y"), Expr::var("p"));
    let mut f = Expr::zero();
    for k in 0..4 {
        let mono = match rng.random_range(0..4) {
            0 => Expr::one(),
            1 => x.clone(),
            2 => y.powi(2),
            _ => (Expr::one() + x.powi(2)).recip(),
        };
        f = f + small_rational(rng) * mono * p.powi(k);
    }
    Ode2::new(f).unwrap()
}

fn primitive(rng: &mut ChaCha8Rng) -> Primitive {
    match rng.random_range(0..4) {
        0 => loop {
            let mut entry = || rat(rng.random_range(-3i64..=3), rng.random_range(1i64..=2));
            let m = [[entry(), entry()], [entry(), entry()]];
            let b = [entry(), entry()];
            if &m[0][0] * &m[1][1] != &m[0][1] * &m[1][0] {
                return Primitive::Affine { m, b };
            }
        },
        1 => Primitive::Swap,
        2 => {
            let phi = format!("{}*x^2 + {}*x", rng.random_range(-2i64..=2), rng.random_range(-2i64..=2));
            Primitive::Shear(parse(&phi, XYP).unwrap())
        }
        _ => {
            let mut c = rng.random_range(-3i64..=3);
            if c == 0 {
                c = 2;
            }
            Primitive::ScaleY(rat(c, 2))
        }
    }
}

/// Two or three primitives composed.
pub fn point_map(rng: &mut ChaCha8Rng) -> PointMap {
    let n = rng.random_range(2..=3);
    PointMap::compose((0..n).map(|_| primitive(rng)).collect()).unwrap()
}

pub fn barred_tape(ode: &Ode2) -> Tape {
    let tower = InvariantTower::build(&Jets::of(ode)).unwrap();
    let barred = tower.barred(SignPolicy::Lenient).unwrap();
    Tape::compile(&barred.entries, XYP).unwrap()
}

/// The eleven barred values at a rational point, from exact values of the
/// relative invariants, `I` and `H`; only the final fractional powers are
/// taken in floating point.
pub fn exact_barred(tower: &InvariantTower, pt: &[Rational; 3]) -> Option<[f64; 11]> {
    let at = [("x", pt[0].clone()), ("y", pt[1].clone()), ("p", pt[2].clone())];
    let mut exprs = vec![tower.i.value.clone(), tower.h.value.clone()];
    exprs.extend(tower.relative().iter().map(|inv| inv.value.clone()));
    let values: Vec<f64> = eval_exact_many(&exprs, &at).ok()?.iter().map(rational_to_f64).collect();
    let (i, h) = (values[0], values[1]);
    if i == 0.0 || h == 0.0 {
        return None;
    }
    let mut out = [0.0; 11];
    for ((slot, v), (a, b)) in out.iter_mut().zip(&values[2..]).zip(barred_exponents()) {
        let ei = -(a as f64) / 8.0 + b as f64 / 4.0;
        let eh = 3.0 * a as f64 / 8.0 + b as f64 / 4.0;
        *slot = v * i.abs().powf(-ei) * h.abs().powf(-eh);
    }
    Some(out)
}

fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    rat(rng.random_range(lo * 16..=hi * 16), 16)
}

fn max_relative(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-12)).fold(0.0, f64::max)
}

/// Outcome of comparing barred invariants across a point map.
#[derive(Debug, Clone, Copy)]
pub struct Invariance {
    /// Largest relative disagreement over the compared points.
    pub error: f64,
    pub compared: usize,
    /// Points whose floating-point comparison missed the tolerance and were
    /// settled in exact arithmetic.
    pub exact: usize,
}

/// Compares the eleven barred invariants of `ode` and of its image under
/// `map` at `points` rational sample points and their lifts.
///
/// The lift of a rational point is computed exactly. Values are compared in
/// floating point first; near poles of the image the order-6 jets can lose
/// more digits than the tolerance allows, so a point that misses `tol` is
/// re-evaluated exactly (only the final fractional powers stay inexact).
/// Points where either side is undefined are skipped.
pub fn invariance(ode: &Ode2, map: &PointMap, rng: &mut ChaCha8Rng, points: usize, tol: f64) -> Invariance {
    let (image, lift) = point_transform(ode, map).unwrap();
    let before = InvariantTower::build(&Jets::of(ode)).unwrap();
    let after = InvariantTower::build(&Jets::of(&image)).unwrap();
    let tape = |t: &InvariantTower| Tape::compile(&t.barred(SignPolicy::Lenient).unwrap().entries, XYP).unwrap();
    let (tape1, tape2) = (tape(&before), tape(&after));
    let mut out = Invariance { error: 0.0, compared: 0, exact: 0 };
    for _ in 0..points * 10 {
        if out.compared == points {
            break;
        }
        let pt = [random_rational(rng, -1, 1), random_rational(rng, -1, 1), random_rational(rng, -2, 2)];
        let at = [("x", pt[0].clone()), ("y", pt[1].clone()), ("p", pt[2].clone())];
        let Ok(den) = eval_exact(lift.denominator(), &at) else { continue };
        if den.is_zero() {
            continue;
        }
        let q = [eval_exact(&lift.x, &at).unwrap(), eval_exact(&lift.y, &at).unwrap(), eval_exact(&lift.p, &at).unwrap()];
        let jac = eval_exact(lift.jacobian(), &at).unwrap();
        let sign = |r: &Rational| if r.is_negative() { -1 } else { 1 };
        let signs = [sign(&den), sign(&(den.clone() * jac))];
        let float = |t: &Tape, v: &[Rational; 3]| t.eval(&v.clone().map(|r| rational_to_f64(&r))).ok();
        let (Some(mut v1), Some(v2)) = (float(&tape1, &pt), float(&tape2, &q)) else { continue };
        reorient(&mut v1, signs);
        let mut err = max_relative(&v1, &v2);
        if err >= tol {
            let (Some(mut e1), Some(e2)) = (exact_barred(&before, &pt), exact_barred(&after, &q)) else { continue };
            reorient(&mut e1, signs);
            err = max_relative(&e1, &e2);
            out.exact += 1;
        }
        out.error = out.error.max(err);
        out.compared += 1;
    }
    out
}

/// Exact values of `I` for the image of `ode`, at lifted rational points.
pub fn image_i_values(ode: &Ode2, map: &PointMap, rng: &mut ChaCha8Rng, points: usize) -> Vec<Rational> {
    let (image, lift) = point_transform(ode, map).unwrap();
    let i = Jets::of(&image).q(0, 0, 4);
    let mut out = Vec::new();
    while out.len() < points {
        let pt = [random_rational(rng, -1, 1), random_rational(rng, -1, 1), random_rational(rng, -2, 2)];
        let at = [("x", pt[0].clone()), ("y", pt[1].clone()), ("p", pt[2].clone())];
        let lifted = [eval_exact(&lift.x, &at), eval_exact(&lift.y, &at), eval_exact(&lift.p, &at)];
        let [Ok(x), Ok(y), Ok(p)] = lifted else { continue };
        if let Ok(v) = eval_exact(&i, &[("x", x), ("y", y), ("p", p)]) {
            out.push(v);
        }
    }
    out
}

/// Fixed-seed proptest configuration, so every run checks the same cases.
pub fn seeded(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        ..Default::default()
    }
}

/// Bounding box of `lift` over 400 seeded points of `b`.
pub fn image_box(lift: &LiftedMap, b: &SampleBox) -> SampleBox {
    let mut sampler = Sampler::new(b, XYP, 1).unwrap();
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for _ in 0..400 {
        let s = sampler.sample();
        if let Ok(q) = lift.apply([s[0], s[1], s[2]]) {
            for j in 0..3 {
                lo[j] = lo[j].min(q[j]);
                hi[j] = hi[j].max(q[j]);
            }
        }
    }
    SampleBox::new().with("x", lo[0], hi[0]).with("y", lo[1], hi[1]).with("p", lo[2], hi[2])
}

/// `H` in chart terms with `k = h_a/h_b`, term by term as printed.
pub fn printed_h(assoc: &AssocOde) -> Expr {
    let diff = Mutex::new(Differentiator::new());
    let fr: &[odeq::quad::VecField3; 3] = &assoc.chart.frame;
    let mut memo: BTreeMap<Vec<usize>, Expr> = BTreeMap::new();
    let mut d = |ops: &[usize]| -> Expr {
        let mut key = ops.to_vec();
        key.sort_unstable();
        if let Some(e) = memo.get(&key) {
            return e.clone();
        }
        let mut e = assoc.g.clone();
        for &o in &key {
            e = fr[o].apply_with(&e, &diff);
        }
        memo.insert(key, e.clone());
        e
    };
    let (a, b, c) = (0, 1, 2);
    let f = assoc.g.clone();
    let k = -assoc.chart.c.clone();
    let two = Expr::int(2);
    let three = Expr::int(3);
    let four = Expr::int(4);
    d(&[c, c, a, a]) - &two * &k * d(&[c, c, a, b]) + k.powi(2) * d(&[c, c, b, b]) - &four * d(&[c, a, b])
        + &four * &k * d(&[c, b, b])
        + Expr::int(6) * d(&[b, b])
        + &f * (&two * d(&[c, c, c, a]) - &two * &k * d(&[c, c, c, b]) - &three * d(&[c, c, b]))
        - d(&[c]) * (d(&[c, c, a]) - &k * d(&[c, c, b]) - &four * d(&[c, b]))
        + d(&[c, c, c]) * (d(&[a]) - &k * d(&[b]))
        - &three * d(&[c, c]) * d(&[b])
        + f.powi(2) * d(&[c, c, c, c])
}
