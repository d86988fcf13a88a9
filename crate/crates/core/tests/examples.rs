mod common;

use common::{a1, a2, b1, b2};
use num_bigint::BigInt;
use num_rational::BigRational;
use toralconj_core::bf::{bf_group, default_family, strong_bf_screen, FamilyParams, GVerdict, ScreenOutcome};
use toralconj_core::ideal::{eigen_ideal_pair, principal_search, weak_equivalence, PrincipalSearch, WeakEquivalence};
use toralconj_core::linalg::{IntMatrix, IntPolynomial, PowerCap};
use toralconj_core::modules::DEFAULT_ISO_BUDGET;
use toralconj_core::pipeline::{decide, verify_witness, Config, NotConjugateWitness, Outcome};
use toralconj_core::tower::{build_tower, level_iso_family, LevelCertificate, LevelIsoOutcome};

fn poly(s: &str) -> IntPolynomial {
    s.parse().unwrap()
}

fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[test]
fn example_one_char_polys_agree() {
    assert_eq!(a1().char_poly(), poly("x^3 - 23x^2 + 7x - 1"));
    assert_eq!(b1().char_poly(), poly("x^3 - 23x^2 + 7x - 1"));
}

#[test]
fn example_one_bf_x_plus_one() {
    let g = poly("x + 1");
    assert_eq!(bf_group(&a1(), &g).unwrap().module.invariant_factors(), ints(&[4, 8]).as_slice());
    assert_eq!(bf_group(&b1(), &g).unwrap().module.invariant_factors(), ints(&[2, 16]).as_slice());
}

#[test]
fn example_one_decides_not_conjugate() {
    let cfg = Config::default();
    let v = decide(&a1(), &b1(), &cfg).unwrap();
    let Outcome::NotConjugate(w) = v.outcome else {
        panic!("expected a refutation");
    };
    match &w {
        NotConjugateWitness::BfMismatch { g, left, right, .. } => {
            assert_eq!(*g, poly("x + 1"));
            assert_eq!(left.invariant_factors, ints(&[4, 8]));
            assert_eq!(right.invariant_factors, ints(&[2, 16]));
        }
        other => panic!("{other:?}"),
    }
    verify_witness(&a1(), &b1(), &w, cfg.iso_budget, cfg.cap).unwrap();
}

#[test]
fn example_one_level_two_refutation() {
    let ta = build_tower(&a1(), 2, PowerCap::tower()).unwrap();
    let tb = build_tower(&b1(), 2, PowerCap::tower()).unwrap();
    let out = level_iso_family(&ta, &tb, DEFAULT_ISO_BUDGET).unwrap();
    let LevelIsoOutcome::NotFoundAtLevel {
        level: 2,
        certificate: LevelCertificate::QuotientMismatch { g, left, right },
    } = out
    else {
        panic!("{out:?}");
    };
    assert_eq!(g, poly("x + 1"));
    assert_eq!(left.invariant_factors, ints(&[4, 8]));
    assert_eq!(right.invariant_factors, ints(&[2, 16]));
    // Z^3 (A^2 - I) ⊆ Z^3 (A + I): (A^2 - I)(A + I)^-1 = A - I is integral
    for a in [a1(), b1()] {
        let id = IntMatrix::identity(3);
        let sq = &(&a * &a) - &id;
        let plus = &a + &id;
        let det = plus.det();
        let q = &sq * &plus.adjugate();
        for i in 0..3 {
            for j in 0..3 {
                let x = BigRational::new(q[(i, j)].clone(), det.clone());
                assert!(x.is_integer());
                assert_eq!(x.to_integer(), (&a - &id)[(i, j)]);
            }
        }
    }
}

#[test]
fn example_two_discriminant() {
    assert_eq!(a2().char_poly(), poly("x^3 - 2x^2 - 8x - 1"));
    assert_eq!(b2().char_poly(), a2().char_poly());
    assert_eq!(a2().char_poly().discriminant().unwrap(), BigInt::from(1957));
}

#[test]
fn example_two_screen_passes_with_verified_maps() {
    let family = default_family(&a2(), &b2(), FamilyParams::default());
    let r = strong_bf_screen(&a2(), &b2(), &family, DEFAULT_ISO_BUDGET).unwrap();
    assert!(matches!(r.outcome, ScreenOutcome::PassedScreen));
    assert_eq!(r.records.len(), family.len());
    for rec in &r.records {
        let GVerdict::Isomorphic(map) = &rec.verdict else {
            panic!("g = {} not isomorphic", rec.g);
        };
        map.verify_isomorphism().unwrap();
        assert_eq!(*map.source().order(), *map.target().order());
    }
}

#[test]
fn example_two_ideals() {
    let (ei, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
    assert!(ei.ideal.multiplier_ring().unwrap().is_equation_order());
    assert!(ej.ideal.multiplier_ring().unwrap().is_equation_order());
    let WeakEquivalence::WeaklyEquivalent { ring, x, y } = weak_equivalence(&ei.ideal, &ej.ideal).unwrap() else {
        panic!("not weakly equivalent");
    };
    assert_eq!(ei.ideal.product(&x).unwrap(), ej.ideal);
    assert_eq!(ej.ideal.product(&y).unwrap(), ei.ideal);
    assert_eq!(x.product(&y).unwrap(), *ring.as_ideal());
    let colon = ej.ideal.colon(&ei.ideal).unwrap();
    assert!(matches!(
        principal_search(&colon, 8).unwrap(),
        PrincipalSearch::NotFoundWithinBound { bound: 8, .. }
    ));
}

#[test]
fn example_two_decides_unknown() {
    let v = decide(&a2(), &b2(), &Config::default()).unwrap();
    assert!(matches!(v.outcome, Outcome::Unknown(_)));
    let ev = v.evidence;
    assert!(matches!(ev.screen.unwrap().outcome, ScreenOutcome::PassedScreen));
    let ideal = ev.ideal.unwrap();
    assert!(ideal.left_ring.is_equation_order() && ideal.right_ring.is_equation_order());
    assert!(ideal.weak.holds());
    assert!(matches!(
        ideal.principal,
        Some(PrincipalSearch::NotFoundWithinBound { bound: 8, .. })
    ));
    assert!(ev.caps.is_empty());
}
