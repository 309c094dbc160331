mod common;

use odeq::equiv::{contact_equivalent, point_equivalent, point_equivalent_on, signature_at, MatchConfig, Reason, Verdict};
use odeq::expr::{parse, rat, XYP};
use odeq::jet::{point_transform, Ode2, PointMap, Primitive};
use odeq::quad::fixtures;

fn ode(f: &str) -> Ode2 {
    Ode2::parse(f).unwrap()
}

fn class(v: &Verdict) -> i32 {
    v.exit_code()
}

#[test]
fn reflexive_on_generic_equations() {
    let cfg = MatchConfig::default();
    let mut rng = common::rng(11);
    for _ in 0..5 {
        let e = common::generic_ode(&mut rng);
        let v = point_equivalent(&e, &e, &cfg).unwrap();
        let Verdict::Equivalent { certificate } = v else { panic!("{e:?}: {v:?}") };
        assert!(!certificate.identical, "matched by sampling, not by the identity fallback");
        assert_eq!(certificate.twist, Some([1, 1]));
        assert!(certificate.matched.len() >= 2 * cfg.samples * 19 / 20);
    }
}

#[test]
fn transformed_equations_are_equivalent_both_ways() {
    let cfg = MatchConfig::default();
    let e = ode("p^5 + x*p^2 + y^2");
    let maps = [
        (vec![Primitive::Shear(parse("x^2/4", XYP).unwrap())], [1, 1]),
        (vec![Primitive::ScaleY(rat(-1, 1))], [1, -1]),
        (vec![Primitive::Swap], [1, -1]),
        (vec![Primitive::Affine { m: [[rat(1, 1), rat(1, 2)], [rat(0, 1), rat(3, 2)]], b: [rat(1, 4), rat(0, 1)] }], [1, 1]),
    ];
    for (prims, twist) in maps {
        let (t, lift) = point_transform(&e, &PointMap::compose(prims).unwrap()).unwrap();
        let image = common::image_box(&lift, &cfg.sample_box);
        let forward = point_equivalent_on(&e, &cfg.sample_box, &t, &image, &cfg).unwrap();
        let Verdict::Equivalent { certificate } = &forward else { panic!("{t:?}: {forward:?}") };
        assert_eq!(certificate.twist, Some(twist));
        // matched images are the lifted points
        for m in certificate.matched.iter().filter(|m| m.from_first) {
            let q = lift.apply(m.source).unwrap();
            assert!((0..3).all(|j| (q[j] - m.image[j]).abs() < 1e-6), "{m:?} vs {q:?}");
        }
        let backward = point_equivalent_on(&t, &image, &e, &cfg.sample_box, &cfg).unwrap();
        assert_eq!(class(&forward), class(&backward));
    }
}

#[test]
fn different_equations_are_not_equivalent() {
    let cfg = MatchConfig::default();
    let e = ode("p^5 + x*p^2 + y^2");
    for other in ["p^5 + x*p^2 + y^3", "p^5 + 2*x*p^2 + y^2"] {
        let forward = point_equivalent(&e, &ode(other), &cfg).unwrap();
        let backward = point_equivalent(&ode(other), &e, &cfg).unwrap();
        assert!(!forward.is_equivalent(), "{other}: {forward:?}");
        assert_eq!(class(&forward), class(&backward), "{other}");
    }
}

#[test]
fn rank_degenerate_inputs() {
    let cfg = MatchConfig::default();
    let v = point_equivalent(&ode("p^4"), &ode("p^4 + 1"), &cfg).unwrap();
    assert_eq!(v.reason(), Some(Reason::RankFailure), "{v:?}");
    let v = point_equivalent(&ode("p^4 + 1"), &ode("p^4"), &cfg).unwrap();
    assert_eq!(v.reason(), Some(Reason::RankFailure));
}

#[test]
fn non_generic_inputs() {
    let cfg = MatchConfig::default();
    let v = point_equivalent(&ode("1"), &ode("-1"), &cfg).unwrap();
    assert_eq!(v.reason(), Some(Reason::NonGeneric), "{v:?}");
    // both cubic, but the same equation
    let v = point_equivalent(&ode("x*p^3"), &ode("x*p^3"), &cfg).unwrap();
    let Verdict::Equivalent { certificate } = v else { panic!("{v:?}") };
    assert!(certificate.identical);
}

#[test]
fn cubic_screen() {
    let cfg = MatchConfig::default();
    let mut rng = common::rng(5);
    for _ in 0..5 {
        let c = common::cubic_ode(&mut rng);
        for (v, from_first) in [
            (point_equivalent(&c, &ode("p^4"), &cfg).unwrap(), false),
            (point_equivalent(&ode("p^4"), &c, &cfg).unwrap(), true),
        ] {
            let Verdict::NotEquivalent { witness } = v else { panic!("{c:?}: {v:?}") };
            assert_eq!(witness.invariant, "I");
            assert_eq!(witness.from_first, from_first);
            assert_eq!(witness.other_value, 0.0);
            assert!((witness.value - 24.0).abs() < 1e-9);
        }
    }
}

#[test]
fn barred_values_of_p4() {
    let want = 40.0 * 24f64.powf(-0.25);
    for pt in [[0.0, 0.0, 1.0], [0.3, -2.0, 0.7], [1.0, 1.0, -1.5]] {
        let sig = signature_at(&ode("p^4"), pt).unwrap();
        // H10 = 960 p^11 against |H|^(11/8) ~ |p|^11
        let sign = pt[2].signum();
        assert!((sig.coords[0] - sign * want).abs() < 1e-12, "{pt:?}: {}", sig.coords[0]);
        assert!((sig.coords[2] - sign * 8.0 * 24f64.powf(-0.25)).abs() < 1e-12, "{pt:?}: {}", sig.coords[2]);
    }
    assert!(signature_at(&ode("p^3"), [0.0, 0.0, 1.0]).is_err());
}

#[test]
fn contact_self_equivalence_and_labels() {
    let cfg = MatchConfig::default();
    for fx in [fixtures::example_1(), fixtures::example_3()] {
        let q = fx.quad().unwrap();
        let ints = fx.integrals().unwrap();
        let v = contact_equivalent(&q, &ints, &fx.sample_box, &q, &ints, &fx.sample_box, &cfg).unwrap();
        assert!(v.verdict.is_equivalent(), "{}: {:?}", fx.name, v.verdict);
        // swapping the roles of the integral pairs relabels the associated pair
        let swapped = contact_equivalent(&q, &ints.swapped(), &fx.sample_box, &q, &ints, &fx.sample_box, &cfg).unwrap();
        assert_eq!(class(&v.verdict), class(&swapped.verdict), "{}", fx.name);
    }
}

#[test]
fn associated_pair_of_example_one() {
    let cfg = MatchConfig { sample_box: fixtures::example_1().sample_box, ..MatchConfig::default() };
    let v = point_equivalent(&ode("1"), &ode("-1"), &cfg).unwrap();
    assert_eq!(v.reason(), Some(Reason::NonGeneric));
    let Verdict::Inconclusive { detail, .. } = v else { unreachable!() };
    assert!(detail.contains("cubic class"), "{detail}");
}
