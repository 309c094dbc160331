mod common;

use odeq::expr::{differentiate, eval_num, expand, is_identically_zero, rat, Expr, SampleBox, ZeroTestConfig};
use odeq::jet::{point_transform, rel_inv_h, rel_inv_i, restricted_jet, InvariantTower, Jets, Ode2};
use proptest::prelude::*;

fn cfg() -> ZeroTestConfig {
    ZeroTestConfig::default().with_box(SampleBox::new().with("x", 0.2, 0.8).with("y", 0.2, 0.8).with("p", 0.5, 1.5))
}

/// `q^k_{lm}` by direct recursion on `f`, without the memoizing jet table.
fn q_direct(f: &Expr, l: u32, m: u32, k: u32) -> Expr {
    let mut e = f.clone();
    for _ in 0..k {
        e = differentiate(&e, "p");
    }
    for _ in 0..m {
        e = differentiate(&e, "y");
    }
    for _ in 0..l {
        e = differentiate(&e, "x") + Expr::var("p") * differentiate(&e, "y");
    }
    e
}

fn h_direct(f: &Expr) -> Expr {
    let q = |l, m, k| q_direct(f, l, m, k);
    let c = |n: i64| Expr::int(n);
    expand(
        &(q(2, 0, 2) - c(4) * q(1, 1, 1) + c(6) * q(0, 2, 0) + f * (c(2) * q(1, 0, 3) - c(3) * q(0, 1, 2))
            - q(0, 0, 1) * (q(1, 0, 2) - c(4) * q(0, 1, 1))
            + q(0, 0, 3) * q(1, 0, 0)
            - c(3) * q(0, 0, 2) * q(0, 1, 0)
            + f * f * q(0, 0, 4)),
    )
}

#[test]
fn h_matches_direct_expansion() {
    let mut rng = common::rng(11);
    for _ in 0..20 {
        let ode = common::generic_ode(&mut rng);
        // both sides are polynomials, so the expanded difference is exactly 0
        let diff = expand(&(rel_inv_h(&ode).value - h_direct(ode.f())));
        assert!(diff.is_zero(), "H disagrees for {ode}: {diff}");
    }
}

#[test]
fn weights_of_the_tower() {
    let ode = common::generic_ode(&mut common::rng(3));
    let tower = InvariantTower::build(&Jets::of(&ode)).unwrap();
    assert_eq!((tower.k.weight.r, tower.k.weight.s), (1, 2));
    assert_eq!((tower.h02.weight.r, tower.h02.weight.s), (2, 3));
    assert_eq!((tower.omega4_20.weight.r, tower.omega4_20.weight.s), (0, 3));
}

#[test]
fn transformed_swap_matches_inverse_function_rule() {
    // x(y) satisfies x'' = -y''/y'^3, so y'' = x p^4 becomes -y p̃^(-4) / p̃^(-3)
    let ode = Ode2::parse("x*p^4").unwrap();
    let map = odeq::jet::PointMap::compose(vec![odeq::jet::Primitive::Swap]).unwrap();
    let (t, _) = point_transform(&ode, &map).unwrap();
    for (x, y, p) in [(0.3, 0.6, 1.2), (1.1, -0.4, 0.7)] {
        let got = eval_num(t.f(), &[("x", x), ("y", y), ("p", p)]).unwrap();
        assert!((got + y / p).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(common::seeded(24))]

    #[test]
    fn barred_invariants_are_absolute(ode_seed in 0u64..1000, map_seed in 0u64..1000) {
        let ode = common::generic_ode(&mut common::rng(ode_seed));
        let map = common::point_map(&mut common::rng(map_seed));
        let r = common::invariance(&ode, &map, &mut common::rng(ode_seed ^ map_seed), 6, 1e-6);
        prop_assert!(r.compared >= 3, "only {} comparable points", r.compared);
        prop_assert!(r.error < 1e-6, "relative error {:e} for {ode} under {:?}", r.error, map.primitives);
    }

    #[test]
    fn cubic_class_is_preserved(seed in 0u64..1000, map_seed in 0u64..1000) {
        let map = common::point_map(&mut common::rng(map_seed));
        let cubic = common::cubic_ode(&mut common::rng(seed));
        prop_assert!(is_identically_zero(&rel_inv_i(&cubic).value, &cfg()).unwrap());
        let after = common::image_i_values(&cubic, &map, &mut common::rng(seed), 10);
        prop_assert!(after.iter().all(|v| *v == rat(0, 1)));
        let generic = common::generic_ode(&mut common::rng(seed));
        let after = common::image_i_values(&generic, &map, &mut common::rng(seed), 10);
        prop_assert!(after.iter().any(|v| *v != rat(0, 1)));
    }

    #[test]
    fn dhat_x_and_dp_commute_up_to_dy(seed in 0u64..1000) {
        let ode = common::generic_ode(&mut common::rng(seed));
        let f = ode.f();
        let dp_then_dhat = restricted_jet(&ode, 1, 0, 1);
        let dhat_then_dp = differentiate(&restricted_jet(&ode, 1, 0, 0), "p");
        prop_assert!(is_identically_zero(&(dhat_then_dp - dp_then_dhat - differentiate(f, "y")), &cfg()).unwrap());
        prop_assert!(!is_identically_zero(&differentiate(f, "y"), &cfg()).unwrap() || f.free_vars().len() < 3);
    }

    #[test]
    fn i_is_scaled_by_rescaling_y(seed in 0u64..1000, c in 1i64..5) {
        // y -> c y multiplies q by c and p by c, so q⁴ picks up c^(-3)
        let ode = common::generic_ode(&mut common::rng(seed));
        let map = odeq::jet::PointMap::compose(vec![odeq::jet::Primitive::ScaleY(rat(c, 1))]).unwrap();
        let (image, lift) = point_transform(&ode, &map).unwrap();
        let pt = [0.4, 0.5, 0.9];
        let q = lift.apply(pt).unwrap();
        let before = eval_num(&rel_inv_i(&ode).value, &[("x", pt[0]), ("y", pt[1]), ("p", pt[2])]).unwrap();
        let after = eval_num(&rel_inv_i(&image).value, &[("x", q[0]), ("y", q[1]), ("p", q[2])]).unwrap();
        let c = c as f64;
        prop_assert!((after - before / c.powi(3)).abs() < 1e-9 * before.abs().max(1.0));
    }
}

/// The zeroth-order Δy coefficients exactly as printed, with the printed
/// first-order part.
fn printed_delta_y_of_h(ode: &Ode2) -> Expr {
    use odeq::jet::{Axis, JetFrame};
    let jets = Jets::of(ode);
    let q = |l, m, k| jets.q(l, m, k);
    let (f, p) = (ode.f().clone(), Expr::var("p"));
    let (q1, q2, q4, q5, q4_10, q4_01) = (q(0, 0, 1), q(0, 0, 2), q(0, 0, 4), q(0, 0, 5), q(1, 0, 4), q(0, 1, 4));
    let ratio = (&q5 / &q4).scale(rat(1, 5));
    let h = jets.h().value;
    let d = |a| jets.frame().derive(a, &h);
    let cp = q1.scale(rat(2, 1)) + (q4_10.scale(rat(5, 1)) + (&q5 * &f).scale(rat(6, 1))) / &q4;
    let mixed = (&q5 * &f + &q4_01) * &q5 / q4.powi(2);
    let cr = q2.scale(rat(3, 8)) + (&q4_01 / &q4).scale(rat(1, 4)) + (&q1 * &q5 / &q4).scale(rat(19, 10)) + mixed.scale(rat(21, 20));
    let cs = q2.scale(rat(1, 4)) + (&q4_01 / &q4).scale(rat(1, 2)) + (&q1 * &q5 / &q4).scale(rat(3, 5)) + mixed.scale(rat(3, 10));
    &ratio * d(Axis::X) + (Expr::one() + p * &ratio) * d(Axis::Y) + cp * d(Axis::P) + (cr.scale(rat(2, 1)) + cs) * &h
}

#[test]
fn printed_delta_y_is_not_invariant_but_the_implemented_one_is() {
    let ode = common::generic_ode(&mut common::rng(5));
    let map = odeq::jet::PointMap::compose(vec![odeq::jet::Primitive::Shear(Expr::var("x").powi(2))]).unwrap();
    let (image, lift) = point_transform(&ode, &map).unwrap();
    // H̄01 = H01 / (I^(1/4) H^(5/4))
    let normalize = |e: &Ode2, v: Expr| v * rel_inv_i(e).value.pow(rat(-1, 4)) * rel_inv_h(e).value.pow(rat(-5, 4));
    let at = |e: &Expr, pt: [f64; 3]| eval_num(e, &[("x", pt[0]), ("y", pt[1]), ("p", pt[2])]).unwrap();
    let implemented = |e: &Ode2| InvariantTower::build(&Jets::of(e)).unwrap().h01.value;
    let pt = [0.3, 0.4, 0.9];
    let q = lift.apply(pt).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let printed = rel(at(&normalize(&ode, printed_delta_y_of_h(&ode)), pt), at(&normalize(&image, printed_delta_y_of_h(&image)), q));
    let ours = rel(at(&normalize(&ode, implemented(&ode)), pt), at(&normalize(&image, implemented(&image)), q));
    assert!(printed > 1e-3, "printed Δy unexpectedly invariant: {printed:e}");
    assert!(ours < 1e-9, "{ours:e}");
}
