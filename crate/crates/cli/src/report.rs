//! JSON renderings of core results. Field order is fixed by construction.

use num_bigint::BigInt;
use serde_json::{json, Map, Number, Value};
use toralconj_core::bf::{FamilyParams, GVerdict, Hyperbolicity, ScreenOutcome, ScreenReport};
use toralconj_core::ideal::{
    FieldElement, FractionalIdeal, Order, PrincipalSearch, SemiConjugacyOutcome, WeakEquivalence, WeakFailure,
};
use toralconj_core::intertwine::{Similarity, SimilarityWitness, UnimodularSearch};
use toralconj_core::linalg::{IntMatrix, IntPolynomial};
use toralconj_core::modules::{ModuleFingerprint, ModuleMap, NonIsoWitness};
use toralconj_core::pipeline::{Config, Evidence, IdealEvidence, NotConjugateWitness, Outcome, TowerEvidence, Verdict};
use toralconj_core::tower::{DeltaClass, LevelCertificate, LevelIsoOutcome, ProbeReport};

pub fn int(x: &BigInt) -> Value {
    Value::Number(x.to_string().parse::<Number>().expect("integer literal"))
}

pub fn ints(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(int).collect())
}

pub fn matrix(m: &IntMatrix) -> Value {
    json!({"n": m.rows(), "rows": (0..m.rows()).map(|i| ints(m.row(i))).collect::<Vec<_>>()})
}

pub fn rows(m: &IntMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| ints(m.row(i))).collect())
}

pub fn poly(p: &IntPolynomial) -> Value {
    Value::String(p.to_string())
}

fn polys(v: &[IntPolynomial]) -> Value {
    Value::Array(v.iter().map(poly).collect())
}

pub fn fingerprint(f: &ModuleFingerprint) -> Value {
    json!({"order": int(&f.order), "invariant_factors": ints(&f.invariant_factors)})
}

/// Source generators (as lifts in Z^n) paired with lifts of their images.
pub fn module_map(m: &ModuleMap) -> Value {
    let src = m.source();
    let tgt = m.target();
    let images: Vec<Value> = (0..src.rank())
        .map(|i| ints(&tgt.lift(&m.apply(&src.generator(i)))))
        .collect();
    json!({
        "source": fingerprint(&src.fingerprint()),
        "target": fingerprint(&tgt.fingerprint()),
        "generator_lifts": rows(src.generator_lifts()),
        "image_lifts": images,
    })
}

pub fn non_iso(w: &NonIsoWitness) -> Value {
    match w {
        NonIsoWitness::OrderMismatch { left, right } => {
            json!({"kind": "order_mismatch", "left": int(left), "right": int(right)})
        }
        NonIsoWitness::InvariantFactorMismatch { left, right } => {
            json!({"kind": "invariant_factor_mismatch", "left": ints(left), "right": ints(right)})
        }
        NonIsoWitness::LayerCharPolyMismatch {
            prime,
            layer,
            left,
            right,
        } => json!({
            "kind": "layer_char_poly_mismatch",
            "prime": int(prime),
            "layer": layer,
            "left": poly(left),
            "right": poly(right),
        }),
        NonIsoWitness::NoIsomorphismInHom { prime, hom_order } => {
            json!({"kind": "no_isomorphism_in_hom", "prime": int(prime), "hom_order": int(hom_order)})
        }
    }
}

pub fn similarity(s: &Similarity) -> Value {
    match s {
        Similarity::Similar => json!({"similar": true}),
        Similarity::NotSimilar(w) => json!({"similar": false, "witness": similarity_witness(w)}),
    }
}

fn similarity_witness(w: &SimilarityWitness) -> Value {
    match w {
        SimilarityWitness::Dimension { left, right } => json!({"kind": "dimension", "left": left, "right": right}),
        SimilarityWitness::CharPoly { left, right } => {
            json!({"kind": "char_poly", "left": poly(left), "right": poly(right)})
        }
        SimilarityWitness::InvariantFactors { left, right } => {
            json!({"kind": "rational_invariant_factors", "left": polys(left), "right": polys(right)})
        }
    }
}

pub fn hyperbolicity(h: &Hyperbolicity) -> Value {
    match h {
        Hyperbolicity::Hyperbolic => json!({"hyperbolic": true}),
        Hyperbolicity::NotHyperbolic { reason } => json!({"hyperbolic": false, "reason": reason}),
    }
}

pub fn family_params(p: &FamilyParams) -> Value {
    json!({"linear": p.linear, "binomial": p.binomial, "cyclotomic": p.cyclotomic})
}

pub fn screen_outcome(o: &ScreenOutcome) -> Value {
    match o {
        ScreenOutcome::NotEquivalent { g, left, right, witness } => json!({
            "kind": "not_equivalent",
            "g": poly(g),
            "left": fingerprint(left),
            "right": fingerprint(right),
            "witness": non_iso(witness),
        }),
        ScreenOutcome::PassedScreen => json!({"kind": "passed_screen"}),
        ScreenOutcome::PartialUnknown { undecided } => json!({"kind": "partial_unknown", "undecided": polys(undecided)}),
    }
}

pub fn screen(r: &ScreenReport) -> Value {
    let records: Vec<Value> = r
        .records
        .iter()
        .map(|rec| {
            let verdict = match &rec.verdict {
                GVerdict::Isomorphic(m) => json!({"kind": "isomorphic", "map": module_map(m)}),
                GVerdict::NotIsomorphic(w) => json!({"kind": "not_isomorphic", "witness": non_iso(w)}),
                GVerdict::Undecided { prime, hom_order, tried } => json!({
                    "kind": "undecided",
                    "prime": int(prime),
                    "hom_order": int(hom_order),
                    "tried": tried,
                }),
            };
            json!({
                "g": poly(&rec.g),
                "left": fingerprint(&rec.left),
                "right": fingerprint(&rec.right),
                "verdict": verdict,
            })
        })
        .collect();
    json!({
        "family": polys(&r.family),
        "budget": r.budget,
        "outcome": screen_outcome(&r.outcome),
        "records": records,
    })
}

pub fn element(z: &FieldElement) -> Value {
    json!({"text": z.to_string(), "numerator": ints(z.numerator()), "denominator": int(z.denominator())})
}

pub fn ideal(i: &FractionalIdeal) -> Value {
    json!({"basis": rows(i.numerator()), "denominator": int(i.denominator())})
}

pub fn order(o: &Order) -> Value {
    json!({
        "equation_order": o.is_equation_order(),
        "text": o.to_string(),
        "basis": rows(o.as_ideal().numerator()),
        "denominator": int(o.as_ideal().denominator()),
    })
}

pub fn weak(w: &WeakEquivalence) -> Value {
    match w {
        WeakEquivalence::WeaklyEquivalent { ring, x, y } => json!({
            "kind": "weakly_equivalent",
            "ring": order(ring),
            "x": ideal(x),
            "y": ideal(y),
            "verified": ["I X = J", "J Y = I", "X Y = O"],
        }),
        WeakEquivalence::No(WeakFailure::RingMismatch { left, right }) => {
            json!({"kind": "ring_mismatch", "left": order(left), "right": order(right)})
        }
        WeakEquivalence::No(WeakFailure::IdentityFails { identity }) => {
            json!({"kind": "identity_fails", "identity": identity})
        }
    }
}

pub fn principal(p: &PrincipalSearch) -> Value {
    match p {
        PrincipalSearch::Principal(z) => json!({"kind": "principal", "generator": element(z)}),
        PrincipalSearch::NotFoundWithinBound { bound, tried } => {
            json!({"kind": "not_found_within_bound", "bound": bound, "tried": tried})
        }
    }
}

fn semi(o: &SemiConjugacyOutcome) -> Value {
    match o {
        SemiConjugacyOutcome::Built(s) => json!({
            "kind": "built",
            "g": poly(&s.g),
            "alpha": element(&s.alpha),
            "gamma": element(&s.gamma),
            "a": element(&s.a),
            "b": element(&s.b),
            "x_g": rows(&s.x_g),
        }),
        SemiConjugacyOutcome::NoSecondGenerator { g, bound } => {
            json!({"kind": "no_second_generator", "g": poly(g), "bound": bound})
        }
    }
}

pub fn unimodular(u: &UnimodularSearch) -> Value {
    match u {
        UnimodularSearch::Conjugator(c) => json!({"kind": "conjugator", "c": rows(c)}),
        UnimodularSearch::NotFound { bound, tried } => json!({"kind": "not_found", "bound": bound, "tried": tried}),
    }
}

fn level_certificate(c: &LevelCertificate) -> Value {
    match c {
        LevelCertificate::QuotientMismatch { g, left, right } => json!({
            "kind": "quotient_mismatch",
            "g": poly(g),
            "left": fingerprint(left),
            "right": fingerprint(right),
        }),
        LevelCertificate::ModuleNonIso(w) => json!({"kind": "module_non_iso", "witness": non_iso(w)}),
    }
}

pub fn level_outcome(o: &LevelIsoOutcome) -> Value {
    match o {
        LevelIsoOutcome::Found(f) => json!({
            "kind": "found",
            "maps": f.maps().iter().map(module_map).collect::<Vec<_>>(),
        }),
        LevelIsoOutcome::NotFoundAtLevel { level, certificate } => json!({
            "kind": "not_found_at_level",
            "level": level,
            "certificate": level_certificate(certificate),
        }),
        LevelIsoOutcome::Unknown {
            level,
            prime,
            hom_order,
            tried,
        } => json!({
            "kind": "unknown",
            "level": level,
            "prime": int(prime),
            "hom_order": int(hom_order),
            "tried": tried,
        }),
    }
}

pub fn delta_class(c: &DeltaClass) -> Value {
    match c {
        DeltaClass::GraphOfConjugator(m) => json!({"kind": "graph_of_conjugator", "c": rows(m)}),
        DeltaClass::ShrinkingNonFunctional { indices } => {
            json!({"kind": "shrinking_non_functional", "indices": ints(indices)})
        }
        DeltaClass::Indeterminate {
            indices,
            searched,
            truncated,
        } => json!({
            "kind": "indeterminate",
            "indices": ints(indices),
            "searched": searched,
            "truncated": truncated,
        }),
    }
}

pub fn witness(w: &NotConjugateWitness) -> Value {
    match w {
        NotConjugateWitness::Similarity(s) => json!({"kind": "similarity", "detail": similarity_witness(s)}),
        NotConjugateWitness::BfMismatch { g, left, right, witness } => json!({
            "kind": "bf_mismatch",
            "g": poly(g),
            "left": fingerprint(left),
            "right": fingerprint(right),
            "detail": non_iso(witness),
        }),
        NotConjugateWitness::RingMismatch { left, right } => {
            json!({"kind": "ring_mismatch", "left": order(left), "right": order(right)})
        }
        NotConjugateWitness::WeakEquivalenceFails { identity } => {
            json!({"kind": "weak_equivalence_fails", "identity": identity})
        }
        NotConjugateWitness::TowerLevel { level, certificate } => json!({
            "kind": "tower_level",
            "level": level,
            "certificate": level_certificate(certificate),
        }),
    }
}

pub fn config(c: &Config) -> Value {
    json!({
        "family": family_params(&c.family),
        "iso_budget": c.iso_budget,
        "search_bound": c.search_bound,
        "principal_bound": c.principal_bound,
        "generator_bound": c.generator_bound,
        "tower_depth": c.tower_depth,
        "entry_bound": c.classify.entry_bound,
        "max_points": c.classify.max_points,
        "max_bits": c.cap.max_bits,
    })
}

fn ideal_evidence(e: &IdealEvidence) -> Value {
    json!({
        "left_ring": order(&e.left_ring),
        "right_ring": order(&e.right_ring),
        "weak_equivalence": weak(&e.weak),
        "principal_search": e.principal.as_ref().map(principal),
        "semi_conjugacies": e.semi_conjugacies.iter().map(semi).collect::<Vec<_>>(),
    })
}

fn tower_evidence(t: &TowerEvidence) -> Value {
    match t {
        TowerEvidence::LevelFamily(o) => json!({"level_family": level_outcome(o)}),
        TowerEvidence::Classified { delta_indices, class } => json!({
            "level_family": {"kind": "found"},
            "delta_indices": ints(delta_indices),
            "classification": delta_class(class),
        }),
    }
}

pub fn evidence(e: &Evidence) -> Value {
    let mut m = Map::new();
    m.insert("similarity".into(), e.similarity.as_ref().map(similarity).into());
    m.insert(
        "hyperbolicity".into(),
        e.hyperbolicity
            .as_ref()
            .map(|(a, b)| json!({"a": hyperbolicity(a), "b": hyperbolicity(b)}))
            .into(),
    );
    m.insert("screen".into(), e.screen.as_ref().map(screen).into());
    m.insert("unimodular_search".into(), e.unimodular.as_ref().map(unimodular).into());
    m.insert("irreducible".into(), e.irreducible.into());
    m.insert("ideal".into(), e.ideal.as_ref().map(ideal_evidence).into());
    m.insert("tower".into(), e.tower.as_ref().map(tower_evidence).into());
    m.insert("resource_caps".into(), json!(e.caps));
    Value::Object(m)
}

pub fn outcome(o: &Outcome) -> Value {
    match o {
        Outcome::Conjugate(c) => json!({"kind": "conjugate", "c": rows(c), "det": int(&c.det())}),
        Outcome::NotConjugate(w) => json!({"kind": "not_conjugate", "witness": witness(w)}),
        Outcome::Unknown(reasons) => json!({"kind": "unknown", "reasons": reasons}),
    }
}

pub fn verdict(v: &Verdict) -> Value {
    json!({"outcome": outcome(&v.outcome), "evidence": evidence(&v.evidence)})
}

pub fn probe(p: &ProbeReport) -> Value {
    json!({
        "bound": p.bound,
        "depth": p.depth,
        "vectors": p.vectors,
        "escape_counts": p.escape_counts,
        "stuck": p.stuck.iter().map(|v| ints(v)).collect::<Vec<_>>(),
        "norm_radius": p.norm_radius.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        "norm_certified": p.norm_certified,
        "inverse_certified": p.inverse_certified,
        "all_escaped": p.all_escaped(),
    })
}
