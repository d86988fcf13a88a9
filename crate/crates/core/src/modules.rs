//! Finite modules `Z^n / Z^n M` with the action induced by right multiplication.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::enumerate::ShellIter;
use crate::error::{Error, Result};
use crate::factor::factorize_with_hints;
use crate::linalg::{hnf, snf, solve_congruences, IntMatrix, IntPolynomial, LatticeBasis};

/// Canonical coordinates of a module element: `0 <= c[i] < d[i]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ModuleElement(pub Vec<BigInt>);

impl ModuleElement {
    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl fmt::Display for ModuleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `Z^n / Z^n M` with the induced action of `A`, in Smith coordinates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiniteModule {
    relations: IntMatrix,
    action: IntMatrix,
    /// Nontrivial invariant factors `d_1 | d_2 | ...`, all `> 1`.
    factors: Vec<BigInt>,
    /// `n x r`: canonical coordinates are `m * coord` reduced mod `factors`.
    coord: IntMatrix,
    /// `r x n`: integer lifts of the canonical generators.
    gens: IntMatrix,
    /// `r x r`: row `i` holds the coordinates of `gens[i] * A`.
    act: IntMatrix,
    order: BigInt,
}

impl FiniteModule {
    /// Quotient of `Z^n` by the row span of `relations`, acted on by `action`.
    pub fn quotient(relations: &IntMatrix, action: &IntMatrix) -> Result<Self> {
        let n = relations.rows();
        if !relations.is_square() || !action.is_square() || action.rows() != n {
            return Err(Error::Dimension(format!(
                "relations {}x{}, action {}x{}",
                relations.rows(),
                relations.cols(),
                action.rows(),
                action.cols()
            )));
        }
        let det = relations.det();
        if det.is_zero() {
            return Err(Error::InfiniteQuotient);
        }
        let lattice = LatticeBasis::from_generators(relations);
        if !lattice.contains_rows(&(relations * action)) {
            return Err(Error::IllFormedAction);
        }
        let s = snf(relations);
        let v_inv = s
            .v
            .unimodular_inverse()
            .ok_or_else(|| Error::Inconsistent("Smith transform is not unimodular".into()))?;
        let idx: Vec<usize> = (0..n).filter(|&i| !s.d[i].is_one()).collect();
        let all: Vec<usize> = (0..n).collect();
        let factors: Vec<BigInt> = idx.iter().map(|&i| s.d[i].clone()).collect();
        let coord = s.v.submatrix(&all, &idx);
        let gens = v_inv.submatrix(&idx, &all);
        let mut m = FiniteModule {
            relations: relations.clone(),
            action: action.clone(),
            factors,
            coord,
            gens,
            act: IntMatrix::zeros(0, 0),
            order: det.abs(),
        };
        let r = m.rank();
        let mut act = IntMatrix::zeros(r, r);
        for i in 0..r {
            let img = m.reduce(&action.left_mul_vec(m.gens.row(i)));
            act.row_mut(i).clone_from_slice(&img.0);
        }
        m.act = act;
        let prod: BigInt = m.factors.iter().product();
        if prod != m.order {
            return Err(Error::Inconsistent("invariant factors do not multiply to |det|".into()));
        }
        Ok(m)
    }

    /// A module given directly in canonical form: `Z^r / diag(factors)` with
    /// action `t` on the standard generators. Factors must be `> 1` and divide
    /// each other in order.
    pub fn from_canonical(factors: &[BigInt], t: &IntMatrix) -> Result<Self> {
        let r = factors.len();
        if t.rows() != r || t.cols() != r {
            return Err(Error::Dimension("canonical action shape".into()));
        }
        if factors.iter().any(|d| *d <= BigInt::one())
            || factors.windows(2).any(|w| !w[1].is_multiple_of(&w[0]))
        {
            return Err(Error::Unsupported("factors must be > 1 and form a divisor chain".into()));
        }
        for i in 0..r {
            for k in 0..r {
                if !(&factors[i] * &t[(i, k)]).is_multiple_of(&factors[k]) {
                    return Err(Error::IllFormedAction);
                }
            }
        }
        let mut act = t.clone();
        for i in 0..r {
            for k in 0..r {
                act[(i, k)] = act[(i, k)].mod_floor(&factors[k]);
            }
        }
        Ok(FiniteModule {
            relations: IntMatrix::diagonal(factors),
            action: t.clone(),
            factors: factors.to_vec(),
            coord: IntMatrix::identity(r),
            gens: IntMatrix::identity(r),
            act,
            order: factors.iter().product(),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.relations.rows()
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn action(&self) -> &IntMatrix {
        &self.action
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.factors
    }

    /// Number of canonical generators.
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> &BigInt {
        &self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    /// `n x r`: canonical coordinates of `m` are `m * coord` reduced mod the factors.
    pub fn coordinate_matrix(&self) -> &IntMatrix {
        &self.coord
    }

    pub fn generator_lifts(&self) -> &IntMatrix {
        &self.gens
    }

    /// The action on canonical generators.
    pub fn action_on_generators(&self) -> &IntMatrix {
        &self.act
    }

    fn normalize(&self, mut c: Vec<BigInt>) -> ModuleElement {
        for (x, d) in c.iter_mut().zip(&self.factors) {
            *x = x.mod_floor(d);
        }
        ModuleElement(c)
    }

    /// Canonical coordinates of `m + Z^n M`.
    pub fn reduce(&self, m: &[BigInt]) -> ModuleElement {
        self.normalize(self.coord.left_mul_vec(m))
    }

    /// Canonical element from arbitrary integer coordinates.
    pub fn element(&self, c: &[BigInt]) -> ModuleElement {
        assert_eq!(c.len(), self.rank());
        self.normalize(c.to_vec())
    }

    /// An integer representative of the class.
    pub fn lift(&self, e: &ModuleElement) -> Vec<BigInt> {
        self.gens.left_mul_vec(&e.0)
    }

    pub fn zero(&self) -> ModuleElement {
        ModuleElement(vec![BigInt::zero(); self.rank()])
    }

    pub fn generator(&self, i: usize) -> ModuleElement {
        let mut c = vec![BigInt::zero(); self.rank()];
        c[i] = BigInt::one();
        self.normalize(c)
    }

    pub fn add(&self, a: &ModuleElement, b: &ModuleElement) -> ModuleElement {
        self.normalize(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    }

    pub fn neg(&self, a: &ModuleElement) -> ModuleElement {
        self.normalize(a.0.iter().map(|x| -x).collect())
    }

    pub fn scale(&self, k: &BigInt, a: &ModuleElement) -> ModuleElement {
        self.normalize(a.0.iter().map(|x| x * k).collect())
    }

    /// Image under the induced action `[m] -> [mA]`.
    pub fn act(&self, e: &ModuleElement) -> ModuleElement {
        self.normalize(self.act.left_mul_vec(&e.0))
    }

    /// Every element, for small modules; `None` if the order exceeds `limit`.
    pub fn elements(&self, limit: u64) -> Option<Vec<ModuleElement>> {
        let order = self.order.to_u64()?;
        if order > limit {
            return None;
        }
        let mut out = vec![self.zero()];
        for (i, d) in self.factors.iter().enumerate() {
            let d = d.to_u64()?;
            let mut next = Vec::with_capacity(out.len() * d as usize);
            for e in &out {
                for k in 0..d {
                    let mut c = e.0.clone();
                    c[i] = BigInt::from(k);
                    next.push(ModuleElement(c));
                }
            }
            out = next;
        }
        Some(out)
    }

    /// Same canonical data (factors and generator action), so the identity on
    /// coordinates is an isomorphism.
    pub fn same_canonical_form(&self, other: &FiniteModule) -> bool {
        self.factors == other.factors && self.act == other.act
    }

    pub fn fingerprint(&self) -> ModuleFingerprint {
        ModuleFingerprint {
            order: self.order.clone(),
            invariant_factors: self.factors.clone(),
        }
    }

    /// p-primary components for every prime dividing the order.
    pub fn primary_decompose(&self) -> Result<Vec<PrimaryComponent>> {
        self.primary_decompose_with_hints(&[])
    }

    /// As [`primary_decompose`](Self::primary_decompose), with known divisors of
    /// the order to speed up factorisation.
    pub fn primary_decompose_with_hints(&self, hints: &[BigInt]) -> Result<Vec<PrimaryComponent>> {
        if self.is_trivial() {
            return Ok(vec![]);
        }
        let mut out = Vec::new();
        for (p, e) in factorize_with_hints(&self.order, hints)? {
            out.push(self.component(&p, e)?);
        }
        Ok(out)
    }

    fn component(&self, p: &BigInt, e: u32) -> Result<PrimaryComponent> {
        let r = self.rank();
        let pe = p.pow(e);
        let cofactor = &self.order / &pe;
        // idempotent: 1 mod p^e, 0 mod the cofactor
        let ext = cofactor.extended_gcd(&pe);
        let idem = (&cofactor * &ext.x).mod_floor(&self.order);
        let mut idx = Vec::new();
        let mut pfactors = Vec::new();
        let mut scales = Vec::new();
        for (i, d) in self.factors.iter().enumerate() {
            let mut a = 0u32;
            let mut rest = d.clone();
            while rest.is_multiple_of(p) {
                rest /= p;
                a += 1;
            }
            if a > 0 {
                idx.push(i);
                pfactors.push(p.pow(a));
                scales.push(rest);
            }
        }
        let rp = idx.len();
        // component generator h_j = scales[j] * g_{idx[j]}
        let mut incl = IntMatrix::zeros(rp, r);
        for (j, &i) in idx.iter().enumerate() {
            incl[(j, i)] = scales[j].clone();
        }
        let to_local = |c: &[BigInt]| -> Result<Vec<BigInt>> {
            idx.iter()
                .enumerate()
                .map(|(j, &i)| {
                    let (q, rem) = c[i].div_rem(&scales[j]);
                    if !rem.is_zero() {
                        return Err(Error::Inconsistent("element outside the primary component".into()));
                    }
                    Ok(q.mod_floor(&pfactors[j]))
                })
                .collect()
        };
        let mut t = IntMatrix::zeros(rp, rp);
        for j in 0..rp {
            let img = self.act(&self.element(incl.row(j)));
            t.row_mut(j).clone_from_slice(&to_local(&img.0)?);
        }
        let mut proj = IntMatrix::zeros(r, rp);
        for i in 0..r {
            let mut c = vec![BigInt::zero(); r];
            c[i] = idem.clone();
            let e = self.element(&c);
            proj.row_mut(i).clone_from_slice(&to_local(&e.0)?);
        }
        let module = FiniteModule::from_canonical(&pfactors, &t)?;
        Ok(PrimaryComponent {
            prime: p.clone(),
            exponent: e,
            module,
            incl,
            proj,
        })
    }
}

/// Order and invariant factors, the cheap part of a module's isomorphism type.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModuleFingerprint {
    pub order: BigInt,
    pub invariant_factors: Vec<BigInt>,
}

impl fmt::Display for ModuleFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.invariant_factors.is_empty() {
            return write!(f, "trivial");
        }
        let parts: Vec<String> = self
            .invariant_factors
            .iter()
            .map(|d| format!("Z/{d}"))
            .collect();
        write!(f, "{} (order {})", parts.join(" + "), self.order)
    }
}

/// A p-primary summand, with maps to and from its parent in canonical coordinates.
#[derive(Clone, Debug)]
pub struct PrimaryComponent {
    pub prime: BigInt,
    /// `p^exponent` is the exact p-part of the parent order.
    pub exponent: u32,
    /// In canonical form `Z^r / diag(p^a_i)`.
    pub module: FiniteModule,
    /// `r_p x r`: parent coordinates of the component generators.
    pub incl: IntMatrix,
    /// `r x r_p`: component coordinates of the projection of each parent generator.
    pub proj: IntMatrix,
}

/// Homomorphism given by the images of the source's canonical generators.
#[derive(Clone, Debug)]
pub struct ModuleMap {
    source: Arc<FiniteModule>,
    target: Arc<FiniteModule>,
    /// `r_s x r_t`, row `i` = target coordinates of the image of generator `i`.
    images: IntMatrix,
}

impl ModuleMap {
    pub fn new(source: Arc<FiniteModule>, target: Arc<FiniteModule>, images: IntMatrix) -> Result<Self> {
        if images.rows() != source.rank() || images.cols() != target.rank() {
            return Err(Error::Dimension("image matrix shape".into()));
        }
        let mut images = images;
        for i in 0..images.rows() {
            let e = target.element(images.row(i));
            images.row_mut(i).clone_from_slice(&e.0);
        }
        Ok(ModuleMap {
            source,
            target,
            images,
        })
    }

    pub fn identity(m: Arc<FiniteModule>) -> Self {
        let r = m.rank();
        let images = IntMatrix::identity(r);
        ModuleMap {
            source: m.clone(),
            target: m,
            images,
        }
    }

    /// The map `[m] -> [mX]`; fails unless `Z^n M_s X` lies in `Z^n M_t`.
    pub fn induced_by_matrix(source: Arc<FiniteModule>, target: Arc<FiniteModule>, x: &IntMatrix) -> Result<Self> {
        if x.rows() != source.ambient_dim() || x.cols() != target.ambient_dim() {
            return Err(Error::Dimension("inducing matrix shape".into()));
        }
        let target_lattice = LatticeBasis::from_generators(target.relations());
        if !target_lattice.contains_rows(&(source.relations() * x)) {
            return Err(Error::IllFormedAction);
        }
        let r = source.rank();
        let mut images = IntMatrix::zeros(r, target.rank());
        for i in 0..r {
            let img = target.reduce(&x.left_mul_vec(source.gens.row(i)));
            images.row_mut(i).clone_from_slice(&img.0);
        }
        Ok(ModuleMap {
            source,
            target,
            images,
        })
    }

    pub fn source(&self) -> &Arc<FiniteModule> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteModule> {
        &self.target
    }

    pub fn images(&self) -> &IntMatrix {
        &self.images
    }

    pub fn apply(&self, e: &ModuleElement) -> ModuleElement {
        self.target.element(&self.images.left_mul_vec(&e.0))
    }

    /// Image of the class of an integer vector of the source's ambient space.
    pub fn apply_vector(&self, m: &[BigInt]) -> ModuleElement {
        self.apply(&self.source.reduce(m))
    }

    pub fn compose(&self, after: &ModuleMap) -> Result<ModuleMap> {
        if *self.target != *after.source {
            return Err(Error::Dimension("composition of non-matching maps".into()));
        }
        ModuleMap::new(self.source.clone(), after.target.clone(), &self.images * &after.images)
    }

    /// Generator images have orders dividing the source factors.
    pub fn is_well_defined(&self) -> bool {
        self.source
            .factors
            .iter()
            .enumerate()
            .all(|(i, d)| self.target.scale(d, &ModuleElement(self.images.row(i).to_vec())).is_zero())
    }

    /// `phi(act_s(g)) = act_t(phi(g))` on every canonical generator.
    pub fn intertwines(&self) -> bool {
        (0..self.source.rank()).all(|i| {
            let g = self.source.generator(i);
            self.apply(&self.source.act(&g)) == self.target.act(&self.apply(&g))
        })
    }

    /// Surjective: generator images together with the target relations span everything.
    pub fn is_surjective(&self) -> bool {
        let rt = self.target.rank();
        if rt == 0 {
            return true;
        }
        let stacked = self
            .images
            .vstack(&IntMatrix::diagonal(&self.target.factors))
            .expect("shapes agree");
        hnf(&stacked) == IntMatrix::identity(rt)
    }

    pub fn is_bijective(&self) -> bool {
        self.source.order == self.target.order && self.is_surjective()
    }

    /// Full exact check of an R-module isomorphism.
    pub fn verify_isomorphism(&self) -> Result<()> {
        if !self.is_well_defined() {
            return Err(Error::Inconsistent("map does not respect relations".into()));
        }
        if !self.intertwines() {
            return Err(Error::Inconsistent("map does not intertwine the actions".into()));
        }
        if !self.is_bijective() {
            return Err(Error::Inconsistent("map is not bijective".into()));
        }
        Ok(())
    }
}

/// Distinguishing invariant returned with a negative isomorphism verdict.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum NonIsoWitness {
    OrderMismatch {
        left: BigInt,
        right: BigInt,
    },
    InvariantFactorMismatch {
        left: Vec<BigInt>,
        right: Vec<BigInt>,
    },
    /// Characteristic polynomials mod `prime` of the action on `p^layer M / p^(layer+1) M`.
    LayerCharPolyMismatch {
        prime: BigInt,
        layer: u32,
        left: IntPolynomial,
        right: IntPolynomial,
    },
    /// Every element of the Hom group on the `prime` component was checked.
    NoIsomorphismInHom {
        prime: BigInt,
        hom_order: BigInt,
    },
}

impl fmt::Display for NonIsoWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[BigInt]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            NonIsoWitness::OrderMismatch { left, right } => write!(f, "orders {left} vs {right}"),
            NonIsoWitness::InvariantFactorMismatch { left, right } => {
                write!(f, "invariant factors ({}) vs ({})", list(left), list(right))
            }
            NonIsoWitness::LayerCharPolyMismatch {
                prime,
                layer,
                left,
                right,
            } => write!(
                f,
                "action on layer {layer} of the {prime}-component: char poly {left} vs {right} mod {prime}"
            ),
            NonIsoWitness::NoIsomorphismInHom { prime, hom_order } => write!(
                f,
                "none of the {hom_order} module homomorphisms on the {prime}-component is bijective"
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub enum IsoVerdict {
    Yes(ModuleMap),
    No(NonIsoWitness),
    /// The budget ran out on the component at `prime` after `tried` candidates.
    Unknown {
        prime: BigInt,
        hom_order: BigInt,
        tried: u64,
    },
}

impl IsoVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, IsoVerdict::Yes(_))
    }
}

pub const DEFAULT_ISO_BUDGET: u64 = 100_000;

fn char_poly_mod(t: &IntMatrix, keep: &[usize], p: &BigInt) -> IntPolynomial {
    let sub = t.submatrix(keep, keep);
    IntPolynomial::new(
        sub.char_poly()
            .coeffs()
            .iter()
            .map(|c| c.mod_floor(p))
            .collect(),
    )
}

fn p_exponents(factors: &[BigInt], p: &BigInt) -> Vec<u32> {
    factors
        .iter()
        .map(|d| {
            let mut a = 0;
            let mut x = d.clone();
            while x.is_multiple_of(p) {
                x /= p;
                a += 1;
            }
            a
        })
        .collect()
}

/// Generators of `Hom_R(P, Q)` for canonical p-primary modules of the same shape.
struct HomGroup {
    /// Rows are flattened `r x r` generator matrices.
    gens: IntMatrix,
    orders: Vec<BigInt>,
}

fn hom_group(pa: &FiniteModule, pb: &FiniteModule) -> Result<HomGroup> {
    let r = pa.rank();
    let (ta, tb) = (&pa.act, &pb.act);
    let nvars = r * r;
    let var = |i: usize, l: usize| i * r + l;
    let mut coeffs = IntMatrix::zeros(nvars, 2 * nvars);
    let mut moduli = Vec::with_capacity(2 * nvars);
    for i in 0..r {
        for l in 0..r {
            let c = var(i, l);
            coeffs[(var(i, l), c)] = pa.factors[i].clone();
            moduli.push(pb.factors[l].clone());
        }
    }
    for i in 0..r {
        for l in 0..r {
            let c = nvars + var(i, l);
            for k in 0..r {
                coeffs[(var(k, l), c)] += &ta[(i, k)];
                coeffs[(var(i, k), c)] -= &tb[(k, l)];
            }
            moduli.push(pb.factors[l].clone());
        }
    }
    let lat = solve_congruences(&coeffs, &moduli)?;
    if !lat.is_full_rank() {
        return Err(Error::Inconsistent("Hom lattice is not of full rank".into()));
    }
    let lb = lat.rows();
    // the trivial maps, expressed in coordinates of the lattice basis
    let mut x = IntMatrix::zeros(nvars, nvars);
    for i in 0..r {
        for l in 0..r {
            let mut v = vec![BigInt::zero(); nvars];
            v[var(i, l)] = pb.factors[l].clone();
            let c = lat
                .coordinates(&v)
                .ok_or_else(|| Error::Inconsistent("zero maps outside the Hom lattice".into()))?;
            x.row_mut(var(i, l)).clone_from_slice(&c);
        }
    }
    let s = snf(&x);
    let v_inv = s
        .v
        .unimodular_inverse()
        .ok_or_else(|| Error::Inconsistent("Smith transform is not unimodular".into()))?;
    let basis = &v_inv * lb;
    let idx: Vec<usize> = (0..nvars).filter(|&i| !s.d[i].is_one()).collect();
    let all: Vec<usize> = (0..nvars).collect();
    Ok(HomGroup {
        gens: basis.submatrix(&idx, &all),
        orders: idx.iter().map(|&i| s.d[i].clone()).collect(),
    })
}

enum ComponentSearch {
    Found(IntMatrix),
    Exhausted(BigInt),
    OutOfBudget(BigInt, u64),
}

fn search_component(pa: &FiniteModule, pb: &FiniteModule, p: &BigInt, budget: u64) -> Result<ComponentSearch> {
    let r = pa.rank();
    if pa.same_canonical_form(pb) {
        return Ok(ComponentSearch::Found(IntMatrix::identity(r)));
    }
    let hom = hom_group(pa, pb)?;
    let hom_order: BigInt = hom.orders.iter().product();
    let moduli: Vec<u64> = hom
        .orders
        .iter()
        .map(|d| d.to_u64().unwrap_or(u64::MAX))
        .collect();
    let mut tried = 0u64;
    for c in ShellIter::residues(&moduli) {
        if tried >= budget {
            return Ok(ComponentSearch::OutOfBudget(hom_order, tried));
        }
        tried += 1;
        let cb: Vec<BigInt> = c.into_iter().map(BigInt::from).collect();
        let flat = hom.gens.left_mul_vec(&cb);
        let phi = IntMatrix::from_fn(r, r, |i, l| flat[i * r + l].clone());
        if !phi.det().mod_floor(p).is_zero() {
            return Ok(ComponentSearch::Found(phi));
        }
    }
    let complete = moduli.iter().zip(&hom.orders).all(|(&m, d)| BigInt::from(m) == *d);
    if complete {
        Ok(ComponentSearch::Exhausted(hom_order))
    } else {
        Ok(ComponentSearch::OutOfBudget(hom_order, tried))
    }
}

/// Decides whether two finite modules are isomorphic as modules over the
/// acting ring. `Yes` maps are re-verified exactly before being returned.
pub fn module_iso_exists(pa: &Arc<FiniteModule>, pb: &Arc<FiniteModule>, budget: u64) -> Result<IsoVerdict> {
    module_iso_exists_with_hints(pa, pb, budget, &[])
}

pub fn module_iso_exists_with_hints(
    pa: &Arc<FiniteModule>,
    pb: &Arc<FiniteModule>,
    budget: u64,
    hints: &[BigInt],
) -> Result<IsoVerdict> {
    if pa.same_canonical_form(pb) {
        let map = ModuleMap::new(pa.clone(), pb.clone(), IntMatrix::identity(pa.rank()))?;
        map.verify_isomorphism()?;
        return Ok(IsoVerdict::Yes(map));
    }
    if pa.order != pb.order {
        return Ok(IsoVerdict::No(NonIsoWitness::OrderMismatch {
            left: pa.order.clone(),
            right: pb.order.clone(),
        }));
    }
    if pa.factors != pb.factors {
        return Ok(IsoVerdict::No(NonIsoWitness::InvariantFactorMismatch {
            left: pa.factors.clone(),
            right: pb.factors.clone(),
        }));
    }
    let ca = pa.primary_decompose_with_hints(hints)?;
    let cb = pb.primary_decompose_with_hints(hints)?;
    for (a, b) in ca.iter().zip(&cb) {
        let p = &a.prime;
        let exps = p_exponents(&a.module.factors, p);
        let top = exps.iter().copied().max().unwrap_or(0);
        for layer in 0..top {
            let keep: Vec<usize> = (0..exps.len()).filter(|&i| exps[i] > layer).collect();
            let left = char_poly_mod(&a.module.act, &keep, p);
            let right = char_poly_mod(&b.module.act, &keep, p);
            if left != right {
                return Ok(IsoVerdict::No(NonIsoWitness::LayerCharPolyMismatch {
                    prime: p.clone(),
                    layer,
                    left,
                    right,
                }));
            }
        }
    }
    let r = pa.rank();
    let mut images = IntMatrix::zeros(r, r);
    for (a, b) in ca.iter().zip(&cb) {
        let phi = match search_component(&a.module, &b.module, &a.prime, budget)? {
            ComponentSearch::Found(phi) => phi,
            ComponentSearch::Exhausted(hom_order) => {
                return Ok(IsoVerdict::No(NonIsoWitness::NoIsomorphismInHom {
                    prime: a.prime.clone(),
                    hom_order,
                }))
            }
            ComponentSearch::OutOfBudget(hom_order, tried) => {
                return Ok(IsoVerdict::Unknown {
                    prime: a.prime.clone(),
                    hom_order,
                    tried,
                })
            }
        };
        // parent generator -> component A -> component B -> parent
        let part = &(&a.proj * &phi) * &b.incl;
        images = &images + &part;
    }
    let map = ModuleMap::new(pa.clone(), pb.clone(), images)?;
    map.verify_isomorphism()?;
    Ok(IsoVerdict::Yes(map))
}
