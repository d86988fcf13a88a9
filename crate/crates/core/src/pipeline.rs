//! The decision pipeline: cheap exact refutations first, then bounded
//! conjugator searches, each stage leaving a record in the evidence.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::bf::{
    bf_group, default_family, hyperbolicity_check, strong_bf_screen, tower_group, FamilyParams, Hyperbolicity,
    ScreenOutcome, ScreenReport,
};
use crate::error::{Error, Result};
use crate::ideal::{
    conjugator_from_generator, eigen_ideal_pair, irreducibility, principal_search, semi_conjugacies,
    weak_equivalence, Irreducibility, Order, PrincipalSearch, SemiConjugacyOutcome, WeakEquivalence, WeakFailure,
};
use crate::intertwine::{intertwiner_lattice, similarity_check, Similarity, SimilarityWitness, UnimodularSearch};
use crate::linalg::{factorial, IntMatrix, IntPolynomial, LatticeBasis, PowerCap};
use crate::modules::{module_iso_exists, IsoVerdict, ModuleFingerprint, NonIsoWitness, DEFAULT_ISO_BUDGET};
use crate::tower::{
    build_tower, classify_delta, delta_lattice, level_iso_family, ClassifyParams, DeltaClass, LevelCertificate,
    LevelIsoOutcome, DEFAULT_TOWER_DEPTH,
};

/// Every budget and bound the pipeline uses; reports embed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Config {
    pub family: FamilyParams,
    /// Hom elements per primary component in module isomorphism searches.
    pub iso_budget: u64,
    /// Coefficient bound of the direct unimodular search.
    pub search_bound: u64,
    /// Coefficient bound of the principal-generator search on `(J : I)`.
    pub principal_bound: u64,
    /// Coefficient bound for second generators of `(J : I)`.
    pub generator_bound: u64,
    pub tower_depth: u32,
    pub classify: ClassifyParams,
    pub cap: PowerCap,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            family: FamilyParams::default(),
            iso_budget: DEFAULT_ISO_BUDGET,
            search_bound: 10,
            principal_bound: 8,
            generator_bound: 3,
            tower_depth: DEFAULT_TOWER_DEPTH,
            classify: ClassifyParams::default(),
            cap: PowerCap::tower(),
        }
    }
}

/// A finite refutation that [`verify_witness`] re-derives from scratch.
#[derive(Clone, Debug)]
pub enum NotConjugateWitness {
    Similarity(SimilarityWitness),
    BfMismatch {
        g: IntPolynomial,
        left: ModuleFingerprint,
        right: ModuleFingerprint,
        witness: NonIsoWitness,
    },
    RingMismatch { left: Order, right: Order },
    WeakEquivalenceFails { identity: &'static str },
    TowerLevel { level: u32, certificate: LevelCertificate },
}

impl fmt::Display for NotConjugateWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NotConjugateWitness::Similarity(w) => write!(f, "not similar: {w}"),
            NotConjugateWitness::BfMismatch { g, left, right, witness } => {
                write!(f, "BF_g differs for g = {g}: {left} vs {right} ({witness})")
            }
            NotConjugateWitness::RingMismatch { left, right } => {
                write!(f, "multiplier rings differ: {left} vs {right}")
            }
            NotConjugateWitness::WeakEquivalenceFails { identity } => {
                write!(f, "eigen ideals are not weakly equivalent: {identity} fails")
            }
            NotConjugateWitness::TowerLevel { level, certificate } => {
                write!(f, "no level isomorphism at level {level}: {certificate}")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Conjugate(IntMatrix),
    NotConjugate(NotConjugateWitness),
    Unknown(Vec<String>),
}

impl Outcome {
    pub fn is_decisive(&self) -> bool {
        !matches!(self, Outcome::Unknown(_))
    }
}

#[derive(Clone, Debug)]
pub struct IdealEvidence {
    pub left_ring: Order,
    pub right_ring: Order,
    pub weak: WeakEquivalence,
    pub principal: Option<PrincipalSearch>,
    pub semi_conjugacies: Vec<SemiConjugacyOutcome>,
}

#[derive(Clone, Debug)]
pub enum TowerEvidence {
    LevelFamily(LevelIsoOutcome),
    Classified { delta_indices: Vec<BigInt>, class: DeltaClass },
}

/// One record per stage that ran; `None` marks a stage that was not reached.
#[derive(Clone, Debug, Default)]
pub struct Evidence {
    pub similarity: Option<Similarity>,
    pub hyperbolicity: Option<(Hyperbolicity, Hyperbolicity)>,
    pub screen: Option<ScreenReport>,
    pub unimodular: Option<UnimodularSearch>,
    pub irreducible: Option<bool>,
    pub ideal: Option<IdealEvidence>,
    pub tower: Option<TowerEvidence>,
    /// Stages stopped by a resource cap.
    pub caps: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub outcome: Outcome,
    pub evidence: Evidence,
}

fn capped<T>(r: Result<T>, stage: &str, caps: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::ResourceCap { .. } | Error::BitLimit { .. })) => {
            caps.push(format!("{stage}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn check_conjugator(a: &IntMatrix, b: &IntMatrix, c: &IntMatrix) -> Result<()> {
    if (a * c) != (c * b) {
        return Err(Error::Inconsistent("certificate fails A C = C B".into()));
    }
    if !c.det().abs().is_one() {
        return Err(Error::Inconsistent(format!("certificate has determinant {}", c.det())));
    }
    Ok(())
}

/// Re-derives a refutation without reusing any state of the run that found it.
pub fn verify_witness(a: &IntMatrix, b: &IntMatrix, w: &NotConjugateWitness, budget: u64, cap: PowerCap) -> Result<()> {
    let fail = |what: &str| Err(Error::Inconsistent(format!("witness does not re-verify: {what}")));
    match w {
        NotConjugateWitness::Similarity(_) => {
            if similarity_check(a, b)?.is_similar() {
                return fail("matrices are similar");
            }
        }
        NotConjugateWitness::BfMismatch { g, .. } => {
            let ga = bf_group(a, g)?;
            let gb = bf_group(b, g)?;
            if let IsoVerdict::Yes(_) | IsoVerdict::Unknown { .. } = module_iso_exists(&ga.module, &gb.module, budget)? {
                return fail("BF modules are not shown non-isomorphic");
            }
        }
        NotConjugateWitness::RingMismatch { .. } => {
            let (ei, ej) = eigen_ideal_pair(a, b)?;
            if ei.ideal.multiplier_ring()? == ej.ideal.multiplier_ring()? {
                return fail("multiplier rings agree");
            }
        }
        NotConjugateWitness::WeakEquivalenceFails { .. } => {
            let (ei, ej) = eigen_ideal_pair(a, b)?;
            if weak_equivalence(&ei.ideal, &ej.ideal)?.holds() {
                return fail("ideals are weakly equivalent");
            }
        }
        NotConjugateWitness::TowerLevel { level, certificate } => match certificate {
            LevelCertificate::QuotientMismatch { g, .. } => {
                let binom = IntPolynomial::binomial(factorial(*level) as usize, -1);
                if !g.is_monic() || !binom.div_rem_monic(g).1.is_zero() {
                    return fail("g does not divide x^(k!) - 1");
                }
                let ga = bf_group(a, g)?;
                let gb = bf_group(b, g)?;
                if ga.module.fingerprint() == gb.module.fingerprint() {
                    return fail("quotients agree");
                }
            }
            LevelCertificate::ModuleNonIso(_) => {
                let ga = tower_group(a, *level, cap)?;
                let gb = tower_group(b, *level, cap)?;
                if let IsoVerdict::Yes(_) | IsoVerdict::Unknown { .. } = module_iso_exists(&ga.module, &gb.module, budget)? {
                    return fail("tower levels are not shown non-isomorphic");
                }
            }
        },
    }
    Ok(())
}

/// Runs the stages in order and stops at the first certified outcome.
///
/// Stages: similarity over Q, hyperbolicity, the strong BF screen, a direct
/// search for unimodular intertwiners, the ideal route (irreducible
/// characteristic polynomial only) and the tower route (hyperbolic only).
/// Anything else is `Unknown` with the evidence gathered.
pub fn decide(a: &IntMatrix, b: &IntMatrix, config: &Config) -> Result<Verdict> {
    let mut ev = Evidence::default();
    let outcome = run(a, b, config, &mut ev)?;
    match &outcome {
        Outcome::Conjugate(c) => {
            check_conjugator(a, b, c)?;
            if let Some(ScreenReport {
                outcome: ScreenOutcome::NotEquivalent { .. },
                ..
            }) = &ev.screen
            {
                return Err(Error::Inconsistent("conjugator found after a BF refutation".into()));
            }
        }
        Outcome::NotConjugate(w) => {
            verify_witness(a, b, w, config.iso_budget, config.cap)?;
            if ev.unimodular.as_ref().is_some_and(|u| matches!(u, UnimodularSearch::Conjugator(_))) {
                return Err(Error::Inconsistent("refutation after a conjugator was found".into()));
            }
        }
        Outcome::Unknown(_) => {}
    }
    Ok(Verdict { outcome, evidence: ev })
}

fn run(a: &IntMatrix, b: &IntMatrix, config: &Config, ev: &mut Evidence) -> Result<Outcome> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension("decide needs two square matrices of the same size".into()));
    }
    let sim = similarity_check(a, b)?;
    ev.similarity = Some(sim.clone());
    if let Similarity::NotSimilar(w) = sim {
        return Ok(Outcome::NotConjugate(NotConjugateWitness::Similarity(w)));
    }

    let hyp = (hyperbolicity_check(a)?, hyperbolicity_check(b)?);
    let hyperbolic = hyp.0.is_hyperbolic() && hyp.1.is_hyperbolic();
    ev.hyperbolicity = Some(hyp);

    let family = default_family(a, b, config.family);
    if let Some(screen) = capped(strong_bf_screen(a, b, &family, config.iso_budget), "screen", &mut ev.caps)? {
        let refuted = match &screen.outcome {
            ScreenOutcome::NotEquivalent { g, left, right, witness } => Some(NotConjugateWitness::BfMismatch {
                g: g.clone(),
                left: left.clone(),
                right: right.clone(),
                witness: witness.clone(),
            }),
            _ => None,
        };
        ev.screen = Some(screen);
        if let Some(w) = refuted {
            return Ok(Outcome::NotConjugate(w));
        }
    }

    let basis = intertwiner_lattice(a, b)?;
    let search = crate::intertwine::unimodular_search(a, b, &basis, config.search_bound)?;
    ev.unimodular = Some(search.clone());
    if let UnimodularSearch::Conjugator(c) = search {
        return Ok(Outcome::Conjugate(c));
    }

    let n = a.rows();
    let irreducible = n >= 2 && matches!(irreducibility(&a.char_poly())?, Irreducibility::Irreducible);
    ev.irreducible = Some(irreducible);
    if irreducible {
        if let Some(Some(o)) = capped(ideal_route(a, b, &family, config, ev), "ideal route", &mut ev.caps)? {
            return Ok(o);
        }
    }

    if hyperbolic {
        if let Some(Some(o)) = capped(tower_route(a, b, config, ev), "tower route", &mut ev.caps)? {
            return Ok(o);
        }
    }

    let mut reasons = Vec::new();
    if let Some(UnimodularSearch::NotFound { bound, tried }) = &ev.unimodular {
        reasons.push(format!("no unimodular intertwiner with coefficients up to {bound} ({tried} tried)"));
    }
    match &ev.screen {
        Some(ScreenReport {
            outcome: ScreenOutcome::PartialUnknown { undecided },
            ..
        }) => {
            let gs: Vec<String> = undecided.iter().map(|g| g.to_string()).collect();
            reasons.push(format!("screen undecided for {}", gs.join(", ")));
        }
        Some(_) => reasons.push("passed the finite BF screen".into()),
        None => {}
    }
    if ev.irreducible == Some(false) {
        reasons.push("characteristic polynomial not known irreducible; ideal route skipped".into());
    }
    if let Some(IdealEvidence {
        principal: Some(PrincipalSearch::NotFoundWithinBound { bound, tried }),
        ..
    }) = &ev.ideal
    {
        reasons.push(format!("(J : I) has no generator with coefficients up to {bound} ({tried} tried)"));
    }
    if !hyperbolic {
        reasons.push("not hyperbolic; tower route skipped".into());
    }
    match &ev.tower {
        Some(TowerEvidence::LevelFamily(LevelIsoOutcome::Unknown { level, prime, .. })) => {
            reasons.push(format!("level {level} isomorphism search undecided at the {prime}-component"))
        }
        Some(TowerEvidence::Classified { class, .. }) => reasons.push(format!("Δ classification: {}", class_name(class))),
        _ => {}
    }
    reasons.extend(ev.caps.iter().cloned());
    Ok(Outcome::Unknown(reasons))
}

pub fn class_name(c: &DeltaClass) -> &'static str {
    match c {
        DeltaClass::GraphOfConjugator(_) => "graph of a conjugator",
        DeltaClass::ShrinkingNonFunctional { .. } => "shrinking, not functional",
        DeltaClass::Indeterminate { .. } => "indeterminate",
    }
}

fn ideal_route(
    a: &IntMatrix,
    b: &IntMatrix,
    family: &[IntPolynomial],
    config: &Config,
    ev: &mut Evidence,
) -> Result<Option<Outcome>> {
    let (ei, ej) = eigen_ideal_pair(a, b)?;
    let weak = weak_equivalence(&ei.ideal, &ej.ideal)?;
    let mut rec = IdealEvidence {
        left_ring: ei.ideal.multiplier_ring()?,
        right_ring: ej.ideal.multiplier_ring()?,
        weak: weak.clone(),
        principal: None,
        semi_conjugacies: vec![],
    };
    let refuted = match weak {
        WeakEquivalence::No(WeakFailure::RingMismatch { left, right }) => {
            Some(NotConjugateWitness::RingMismatch { left, right })
        }
        WeakEquivalence::No(WeakFailure::IdentityFails { identity }) => {
            Some(NotConjugateWitness::WeakEquivalenceFails { identity })
        }
        WeakEquivalence::WeaklyEquivalent { ref x, .. } => {
            let ps = principal_search(x, config.principal_bound)?;
            rec.principal = Some(ps.clone());
            if let PrincipalSearch::Principal(z) = ps {
                let c = conjugator_from_generator(&ei, &ej, &z)?;
                ev.ideal = Some(rec);
                return Ok(Some(Outcome::Conjugate(c)));
            }
            rec.semi_conjugacies = semi_conjugacies(&ei, &ej, family, config.generator_bound)?;
            None
        }
    };
    ev.ideal = Some(rec);
    Ok(refuted.map(Outcome::NotConjugate))
}

fn tower_route(a: &IntMatrix, b: &IntMatrix, config: &Config, ev: &mut Evidence) -> Result<Option<Outcome>> {
    let depth = config.tower_depth;
    let ta = build_tower(a, depth, config.cap)?;
    let tb = build_tower(b, depth, config.cap)?;
    let fam = match level_iso_family(&ta, &tb, config.iso_budget)? {
        LevelIsoOutcome::Found(f) => f,
        LevelIsoOutcome::NotFoundAtLevel { level, certificate } => {
            ev.tower = Some(TowerEvidence::LevelFamily(LevelIsoOutcome::NotFoundAtLevel {
                level,
                certificate: certificate.clone(),
            }));
            return Ok(Some(Outcome::NotConjugate(NotConjugateWitness::TowerLevel { level, certificate })));
        }
        other => {
            ev.tower = Some(TowerEvidence::LevelFamily(other));
            return Ok(None);
        }
    };
    let deltas = (1..=depth)
        .map(|k| delta_lattice(&ta, &tb, &fam, k))
        .collect::<Result<Vec<_>>>()?;
    let class = classify_delta(&tb, a, &deltas, config.classify)?;
    let delta_indices = deltas.iter().map(|d| d.index()).collect();
    let out = match &class {
        DeltaClass::GraphOfConjugator(c) => Some(Outcome::Conjugate(c.clone())),
        _ => None,
    };
    ev.tower = Some(TowerEvidence::Classified { delta_indices, class });
    Ok(out)
}

/// `Delta` of the family transported along `C`, at each level up to `depth`,
/// followed by its classification.
pub fn classify_transported(
    a: &IntMatrix,
    b: &IntMatrix,
    c: &IntMatrix,
    depth: u32,
    config: &Config,
) -> Result<(Vec<LatticeBasis>, DeltaClass)> {
    let ta = build_tower(a, depth, config.cap)?;
    let tb = build_tower(b, depth, config.cap)?;
    let fam = crate::tower::LevelIsoFamily::transported(&ta, &tb, c)?;
    let deltas = (1..=depth)
        .map(|k| delta_lattice(&ta, &tb, &fam, k))
        .collect::<Result<Vec<_>>>()?;
    let class = classify_delta(&tb, a, &deltas, config.classify)?;
    Ok((deltas.into_iter().map(|d| d.lattice).collect(), class))
}
