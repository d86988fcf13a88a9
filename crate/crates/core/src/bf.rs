//! Generalised Bowen-Franks groups, hyperbolicity and the finite screen.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{matrix_power_factorial, IntMatrix, IntPolynomial, PowerCap, QPoly};
use crate::modules::{
    module_iso_exists_with_hints, FiniteModule, IsoVerdict, ModuleFingerprint, ModuleMap, NonIsoWitness,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hyperbolicity {
    Hyperbolic,
    NotHyperbolic { reason: String },
}

impl Hyperbolicity {
    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, Hyperbolicity::Hyperbolic)
    }
}

fn euler_phi(mut m: usize) -> usize {
    let mut out = m;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if m > 1 {
        out -= out / m;
    }
    out
}

/// Orders `m` of the roots of unity that can be eigenvalues of an `n x n` matrix.
fn root_of_unity_orders(n: usize) -> impl Iterator<Item = usize> {
    // phi(m) >= sqrt(m / 2)
    (1..=(2 * n * n).max(24)).filter(move |&m| euler_phi(m) <= n)
}

/// Exact test for eigenvalues on the unit circle.
///
/// Roots of unity are removed first by cyclotomic gcds. Any remaining
/// unit-modulus root is a common root of `p` and its reciprocal; their gcd `h`
/// is self-reciprocal, `h(x) = x^d q(x + 1/x)`, and unit-circle roots of `h`
/// correspond to real roots of `q` in `[-2, 2]`, which a Sturm sequence counts.
pub fn hyperbolicity_check(a: &IntMatrix) -> Result<Hyperbolicity> {
    if !a.is_square() {
        return Err(Error::Dimension("hyperbolicity of a non-square matrix".into()));
    }
    let p = a.char_poly();
    let n = a.rows();
    for m in root_of_unity_orders(n) {
        let phi = IntPolynomial::cyclotomic(m);
        if p.gcd(&phi).degree().unwrap_or(0) > 0 {
            return Ok(Hyperbolicity::NotHyperbolic {
                reason: format!("eigenvalue is a primitive {m}-th root of unity"),
            });
        }
    }
    let mut p0 = p.clone();
    while p0.coeff(0).is_zero() && !p0.is_zero() {
        p0 = IntPolynomial::new(p0.coeffs()[1..].to_vec());
    }
    let h = p0.gcd(&p0.reciprocal());
    if h.degree().unwrap_or(0) == 0 {
        return Ok(Hyperbolicity::Hyperbolic);
    }
    let q = h
        .trace_form()
        .ok_or_else(|| Error::Inconsistent(format!("gcd {h} with reciprocal is not self-reciprocal")))?;
    let two = BigRational::from_integer(BigInt::from(2));
    let count = QPoly::from(&q).count_real_roots(&-two.clone(), &two);
    if count > 0 {
        Ok(Hyperbolicity::NotHyperbolic {
            reason: format!("{} conjugate pair(s) of eigenvalues of modulus 1 (factor {h})", count),
        })
    } else {
        Ok(Hyperbolicity::Hyperbolic)
    }
}

/// `det g(A) != 0`.
pub fn invertibility_check(a: &IntMatrix, g: &IntPolynomial) -> bool {
    !g.eval_matrix(a).det().is_zero()
}

/// `BF_g(A) = Z^n / Z^n g(A)` with the action of `A`.
#[derive(Clone, Debug)]
pub struct BfGroup {
    pub g: IntPolynomial,
    pub base: IntMatrix,
    pub module: Arc<FiniteModule>,
    /// Known divisors of the order, used to split factorisations.
    pub hints: Vec<BigInt>,
}

pub fn bf_group(a: &IntMatrix, g: &IntPolynomial) -> Result<BfGroup> {
    let rel = g.eval_matrix(a);
    bf_from_relations(a, g, rel, vec![])
}

fn bf_from_relations(a: &IntMatrix, g: &IntPolynomial, rel: IntMatrix, hints: Vec<BigInt>) -> Result<BfGroup> {
    let det = rel.det();
    if det.is_zero() {
        return Err(Error::NotInvertible { det });
    }
    let module = FiniteModule::quotient(&rel, a)?;
    let res = a.char_poly().resultant(g).abs();
    if *module.order() != res {
        return Err(Error::Inconsistent(format!(
            "|BF_g| = {} but |res(p, g)| = {res}",
            module.order()
        )));
    }
    Ok(BfGroup {
        g: g.clone(),
        base: a.clone(),
        module: Arc::new(module),
        hints,
    })
}

/// The tower quotient `G_k = BF_(x^(k!) - 1)(A)`, built from `A^(k!)`.
pub fn tower_group(a: &IntMatrix, k: u32, cap: PowerCap) -> Result<BfGroup> {
    let pk = matrix_power_factorial(a, k, cap)?;
    let rel = &pk - &IntMatrix::identity(a.rows());
    let kf = crate::linalg::factorial(k) as usize;
    let g = IntPolynomial::binomial(kf, -1);
    let p = a.char_poly();
    let hints = (1..=kf)
        .filter(|d| kf.is_multiple_of(*d))
        .map(|d| p.resultant(&IntPolynomial::cyclotomic(d)))
        .collect();
    bf_from_relations(a, &g, rel, hints)
}

/// Parameters of the default screening family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyParams {
    /// Linear `x - c`, `x + c` for `1 <= c <= linear`.
    pub linear: u32,
    /// Binomials `x^m - 1`, `x^m + 1` for `1 <= m <= binomial`.
    pub binomial: u32,
    /// Cyclotomic polynomials of index up to this bound.
    pub cyclotomic: u32,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            linear: 5,
            binomial: 6,
            cyclotomic: 12,
        }
    }
}

/// `x`, then `x -+ c`, `x^m -+ 1` and cyclotomics, deduplicated in that order
/// and filtered to those with `g(A)` and `g(B)` invertible.
pub fn default_family(a: &IntMatrix, b: &IntMatrix, params: FamilyParams) -> Vec<IntPolynomial> {
    let mut cands = vec![IntPolynomial::x()];
    for c in 1..=params.linear as i64 {
        cands.push(IntPolynomial::from_i64(&[-c, 1]));
        cands.push(IntPolynomial::from_i64(&[c, 1]));
    }
    for m in 1..=params.binomial as usize {
        cands.push(IntPolynomial::binomial(m, -1));
        cands.push(IntPolynomial::binomial(m, 1));
    }
    for d in 1..=params.cyclotomic as usize {
        cands.push(IntPolynomial::cyclotomic(d));
    }
    let mut out: Vec<IntPolynomial> = Vec::new();
    for g in cands {
        if out.contains(&g) {
            continue;
        }
        if invertibility_check(a, &g) && invertibility_check(b, &g) {
            out.push(g);
        }
    }
    out
}

/// Outcome of the module comparison for one `g`.
#[derive(Clone, Debug)]
pub enum GVerdict {
    Isomorphic(ModuleMap),
    NotIsomorphic(NonIsoWitness),
    Undecided { prime: BigInt, hom_order: BigInt, tried: u64 },
}

#[derive(Clone, Debug)]
pub struct ScreenRecord {
    pub g: IntPolynomial,
    pub left: ModuleFingerprint,
    pub right: ModuleFingerprint,
    pub verdict: GVerdict,
}

#[derive(Clone, Debug)]
pub enum ScreenOutcome {
    NotEquivalent {
        g: IntPolynomial,
        left: ModuleFingerprint,
        right: ModuleFingerprint,
        witness: NonIsoWitness,
    },
    /// Every module pair in the family was found isomorphic.
    PassedScreen,
    PartialUnknown { undecided: Vec<IntPolynomial> },
}

impl fmt::Display for ScreenOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScreenOutcome::NotEquivalent { g, witness, .. } => {
                write!(f, "not strongly BF-equivalent: g = {g} ({witness})")
            }
            ScreenOutcome::PassedScreen => write!(f, "passed finite screen"),
            ScreenOutcome::PartialUnknown { undecided } => {
                let gs: Vec<String> = undecided.iter().map(|g| g.to_string()).collect();
                write!(f, "undecided for {}", gs.join(", "))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScreenReport {
    pub family: Vec<IntPolynomial>,
    pub budget: u64,
    pub records: Vec<ScreenRecord>,
    pub outcome: ScreenOutcome,
}

/// Compares `BF_g(A)` and `BF_g(B)` for each `g` in order, stopping at the
/// first non-isomorphic pair.
pub fn strong_bf_screen(a: &IntMatrix, b: &IntMatrix, family: &[IntPolynomial], budget: u64) -> Result<ScreenReport> {
    let mut records = Vec::new();
    let mut undecided = Vec::new();
    for g in family {
        let ga = bf_group(a, g)?;
        let gb = bf_group(b, g)?;
        let left = ga.module.fingerprint();
        let right = gb.module.fingerprint();
        let verdict = match module_iso_exists_with_hints(&ga.module, &gb.module, budget, &ga.hints)? {
            IsoVerdict::Yes(map) => GVerdict::Isomorphic(map),
            IsoVerdict::No(w) => GVerdict::NotIsomorphic(w),
            IsoVerdict::Unknown { prime, hom_order, tried } => GVerdict::Undecided { prime, hom_order, tried },
        };
        let stop = match &verdict {
            GVerdict::NotIsomorphic(w) => Some(w.clone()),
            GVerdict::Undecided { .. } => {
                undecided.push(g.clone());
                None
            }
            GVerdict::Isomorphic(_) => None,
        };
        records.push(ScreenRecord {
            g: g.clone(),
            left: left.clone(),
            right: right.clone(),
            verdict,
        });
        if let Some(witness) = stop {
            return Ok(ScreenReport {
                family: family.to_vec(),
                budget,
                records,
                outcome: ScreenOutcome::NotEquivalent {
                    g: g.clone(),
                    left,
                    right,
                    witness,
                },
            });
        }
    }
    let outcome = if undecided.is_empty() {
        ScreenOutcome::PassedScreen
    } else {
        ScreenOutcome::PartialUnknown { undecided }
    };
    Ok(ScreenReport {
        family: family.to_vec(),
        budget,
        records,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modules::DEFAULT_ISO_BUDGET;

    fn a1() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 0], [1, 0, 4], [6, -2, 23]])
    }
    fn b1() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 12], [1, 0, -4], [0, 2, 23]])
    }
    fn a2() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 0], [0, 0, 1], [1, 8, 2]])
    }
    fn b2() -> IntMatrix {
        IntMatrix::from_i64(&[[-1, 2, 0], [-1, 1, 1], [-5, 9, 2]])
    }
    fn poly(s: &str) -> IntPolynomial {
        s.parse().unwrap()
    }
    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn hyperbolicity_examples() {
        assert!(hyperbolicity_check(&a1()).unwrap().is_hyperbolic());
        assert!(!hyperbolicity_check(&IntMatrix::identity(3)).unwrap().is_hyperbolic());
        let q = IntMatrix::from_i64(&[[0, 1], [-1, 3]]);
        assert_eq!(q.char_poly(), poly("x^2-3x+1"));
        assert!(hyperbolicity_check(&q).unwrap().is_hyperbolic());
        // rotation by a primitive 4th root of unity
        let r = IntMatrix::from_i64(&[[0, 1], [-1, 0]]);
        assert!(!hyperbolicity_check(&r).unwrap().is_hyperbolic());
        // companion of a Salem polynomial: two eigenvalues on the unit circle, none a root of unity
        let s = IntMatrix::from_i64(&[[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [-1, 1, 1, 1]]);
        assert_eq!(s.char_poly(), poly("x^4-x^3-x^2-x+1"));
        assert!(!hyperbolicity_check(&s).unwrap().is_hyperbolic());
    }

    #[test]
    fn invertibility_examples() {
        assert!(invertibility_check(&a1(), &poly("x")));
        assert!(!invertibility_check(&a1(), &a1().char_poly()));
        assert!(invertibility_check(&a1(), &poly("x+1")));
    }

    #[test]
    fn bf_examples() {
        let g = bf_group(&a1(), &poly("x+1")).unwrap();
        assert_eq!(g.module.invariant_factors(), big(&[4, 8]).as_slice());
        let g = bf_group(&b1(), &poly("x+1")).unwrap();
        assert_eq!(g.module.invariant_factors(), big(&[2, 16]).as_slice());
        let g = bf_group(&a2(), &poly("x-1")).unwrap();
        assert_eq!(g.module.order(), &BigInt::from(10));
        let err = bf_group(&a1(), &a1().char_poly()).unwrap_err();
        assert_eq!(err, Error::NotInvertible { det: BigInt::zero() });
    }

    #[test]
    fn bf_values_match_independent_oracle() {
        // invariant factors computed offline with an independent CAS
        let cases: [(&IntMatrix, &str, &[i64]); 6] = [
            (&a1(), "x^2-1", &[4, 8, 16]),
            (&b1(), "x^2-1", &[2, 8, 32]),
            (&a1(), "x^6-1", &[4, 8, 4268464]),
            (&b1(), "x^6-1", &[2, 8, 8536928]),
            (&a2(), "x^6-1", &[20, 20, 520]),
            (&b2(), "x^6-1", &[20, 20, 520]),
        ];
        for (m, g, want) in cases {
            let grp = bf_group(m, &poly(g)).unwrap();
            assert_eq!(grp.module.invariant_factors(), big(want).as_slice(), "{g}");
        }
    }

    #[test]
    fn tower_groups() {
        let cap = PowerCap::default();
        assert_eq!(tower_group(&a1(), 1, cap).unwrap().module.order(), &BigInt::from(16));
        assert_eq!(tower_group(&a1(), 2, cap).unwrap().module.order(), &BigInt::from(512));
        let t1 = tower_group(&a2(), 1, cap).unwrap();
        let b = bf_group(&a2(), &poly("x-1")).unwrap();
        assert!(t1.module.same_canonical_form(&b.module) || t1.module.fingerprint() == b.module.fingerprint());
        for k in 1..4 {
            let lo = tower_group(&a1(), k, cap).unwrap();
            let hi = tower_group(&a1(), k + 1, cap).unwrap();
            assert!((hi.module.order() % lo.module.order()).is_zero());
        }
    }

    #[test]
    fn family_contents() {
        let fam = default_family(&a1(), &b1(), FamilyParams::default());
        assert_eq!(fam[0], poly("x"));
        assert!(fam.contains(&poly("x+1")));
        assert!(!fam.contains(&a1().char_poly()));
        let mut sorted = fam.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), fam.len());
    }

    #[test]
    fn screen_examples() {
        let fam = default_family(&a1(), &b1(), FamilyParams::default());
        let r = strong_bf_screen(&a1(), &b1(), &fam, DEFAULT_ISO_BUDGET).unwrap();
        match &r.outcome {
            ScreenOutcome::NotEquivalent { g, .. } => assert_eq!(*g, poly("x+1")),
            other => panic!("{other:?}"),
        }
        let fam = default_family(&a2(), &b2(), FamilyParams::default());
        let r = strong_bf_screen(&a2(), &b2(), &fam, DEFAULT_ISO_BUDGET).unwrap();
        assert!(matches!(r.outcome, ScreenOutcome::PassedScreen));
        for rec in &r.records {
            let GVerdict::Isomorphic(map) = &rec.verdict else { panic!() };
            map.verify_isomorphism().unwrap();
        }
        let r = strong_bf_screen(&a1(), &a1(), &fam, DEFAULT_ISO_BUDGET).unwrap();
        assert!(matches!(r.outcome, ScreenOutcome::PassedScreen));
    }
}
