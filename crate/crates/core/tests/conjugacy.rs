mod common;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use proptest::prelude::*;
use toralconj_core::ideal::{FractionalIdeal, NumberField, PrincipalSearch};
use toralconj_core::linalg::IntMatrix;
use toralconj_core::pipeline::{classify_transported, decide, verify_witness, Config, Outcome};
use toralconj_core::tower::DeltaClass;

fn certificate(a: &IntMatrix, b: &IntMatrix, cfg: &Config) -> IntMatrix {
    match decide(a, b, cfg).unwrap().outcome {
        Outcome::Conjugate(c) => {
            assert_eq!(a * &c, &c * b);
            assert!(c.det().abs().is_one());
            c
        }
        other => panic!("A = {a:?}: {other:?}"),
    }
}

#[test]
fn random_conjugates_are_recognised() {
    for (a, b, _) in common::conjugate_pairs(7, 10) {
        certificate(&a, &b, &Config::default());
    }
}

#[test]
fn transported_delta_is_the_graph_of_the_certificate() {
    let cfg = Config::default();
    for (a, b, _) in common::conjugate_pairs(7, 10) {
        let c = certificate(&a, &b, &cfg);
        let (deltas, class) = classify_transported(&a, &b, &c, 4, &cfg).unwrap();
        for w in deltas.windows(2) {
            assert!(w[0].contains_lattice(&w[1]));
        }
        match class {
            DeltaClass::GraphOfConjugator(found) => assert_eq!(found, c),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn ideal_route_builds_a_conjugator() {
    let cfg = Config {
        search_bound: 0,
        ..Config::default()
    };
    let u = IntMatrix::from_i64(&[[2, 1, 0], [1, 1, 0], [0, 1, 1]]);
    let a = common::a2();
    let b = &(&u * &a) * &u.unimodular_inverse().unwrap();
    let v = decide(&a, &b, &cfg).unwrap();
    assert!(matches!(
        v.evidence.ideal.as_ref().and_then(|i| i.principal.as_ref()),
        Some(PrincipalSearch::Principal(_))
    ));
    let Outcome::Conjugate(c) = v.outcome else {
        panic!("{:?}", v.outcome)
    };
    assert_eq!(&a * &c, &c * &b);
}

#[test]
fn decisions_are_symmetric() {
    let cfg = Config::default();
    let mut pairs = vec![(common::a1(), common::b1()), (common::a2(), common::b2())];
    pairs.extend(common::conjugate_pairs(21, 3).into_iter().map(|(a, b, _)| (a, b)));
    for (a, b) in pairs {
        let there = decide(&a, &b, &cfg).unwrap().outcome;
        let back = decide(&b, &a, &cfg).unwrap().outcome;
        assert_eq!(
            std::mem::discriminant(&there),
            std::mem::discriminant(&back),
            "{there:?} vs {back:?}"
        );
        if let Outcome::NotConjugate(w) = &back {
            verify_witness(&b, &a, w, cfg.iso_budget, cfg.cap).unwrap();
        }
    }
}

#[test]
fn larger_budgets_keep_certified_outcomes() {
    let big = Config {
        search_bound: 12,
        principal_bound: 10,
        iso_budget: 400_000,
        ..Config::default()
    };
    assert!(matches!(
        decide(&common::a1(), &common::b1(), &big).unwrap().outcome,
        Outcome::NotConjugate(_)
    ));
    assert!(matches!(
        decide(&common::a2(), &common::b2(), &big).unwrap().outcome,
        Outcome::Unknown(_)
    ));
}

#[test]
fn not_similar_is_refuted_with_a_checkable_witness() {
    let a = common::a1();
    let b = common::a2();
    let cfg = Config::default();
    let Outcome::NotConjugate(w) = decide(&a, &b, &cfg).unwrap().outcome else {
        panic!();
    };
    verify_witness(&a, &b, &w, cfg.iso_budget, cfg.cap).unwrap();
    assert!(verify_witness(&a, &a, &w, cfg.iso_budget, cfg.cap).is_err());
}

fn field_element(f: &std::sync::Arc<NumberField>, c: &[i64]) -> toralconj_core::ideal::FieldElement {
    f.element(c.iter().map(|&x| BigInt::from(x)).collect(), BigInt::one())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn principal_ideals_behave(
        z in proptest::collection::vec(-6i64..=6, 3),
        w in proptest::collection::vec(-6i64..=6, 3),
    ) {
        let f = NumberField::new(&common::a2().char_poly()).unwrap();
        let z = field_element(&f, &z);
        let w = field_element(&f, &w);
        prop_assume!(!z.is_zero() && !w.is_zero());
        let o = FractionalIdeal::unit(&f);
        let zo = o.scale(&z).unwrap();
        let wo = o.scale(&w).unwrap();
        prop_assert_eq!(zo.covolume(), z.norm().abs());
        prop_assert_eq!(zo.product(&wo).unwrap(), o.scale(&z.mul(&w)).unwrap());
        prop_assert_eq!(zo.product(&zo.inverse().unwrap()).unwrap(), o.clone());
        prop_assert_eq!(wo.colon(&zo).unwrap(), o.scale(&w.mul(&z.inverse().unwrap())).unwrap());
        prop_assert!(zo.multiplier_ring().unwrap().is_equation_order());
    }

    #[test]
    fn conjugation_round_trip(seed in 100u64..10_000) {
        let (a, b, _) = common::conjugate_pairs(seed, 1).pop().unwrap();
        certificate(&a, &b, &Config::default());
    }
}
