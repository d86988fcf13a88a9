//! The truncated quotient tower `G_k = Z^n / N_k`, `N_k = Z^n (A^(k!) - I)`,
//! level-isomorphism families between two towers, and the pair lattices
//! `Delta_K` recording which classes a family matches.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::bf::{bf_group, hyperbolicity_check, tower_group, BfGroup, Hyperbolicity};
use crate::enumerate::ShellIter;
use crate::error::{Error, Result};
use crate::intertwine::intertwiner_lattice;
use crate::linalg::{
    factorial, hnf_with_transform, lll_reduce, matrix_power_factorial, solve_congruences, IntMatrix, IntPolynomial,
    LatticeBasis, PowerCap,
};
use crate::modules::{
    module_iso_exists_with_hints, FiniteModule, IsoVerdict, ModuleElement, ModuleFingerprint, ModuleMap,
    NonIsoWitness,
};

pub const DEFAULT_TOWER_DEPTH: u32 = 4;

#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub k: u32,
    /// `A^(k!) - I`.
    pub relations: IntMatrix,
    /// `N_k` in HNF.
    pub lattice: LatticeBasis,
    pub group: BfGroup,
}

impl TowerLevel {
    pub fn module(&self) -> &Arc<FiniteModule> {
        &self.group.module
    }
}

/// Levels `1..=depth` with the canonical epimorphisms between them.
#[derive(Clone, Debug)]
pub struct Tower {
    base: IntMatrix,
    levels: Vec<TowerLevel>,
    /// `epis[k-1][l-1]` is `G_k -> G_l` for `l <= k`.
    epis: Vec<Vec<ModuleMap>>,
}

impl Tower {
    pub fn base(&self) -> &IntMatrix {
        &self.base
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn level(&self, k: u32) -> &TowerLevel {
        &self.levels[k as usize - 1]
    }

    pub fn levels(&self) -> &[TowerLevel] {
        &self.levels
    }

    pub fn module(&self, k: u32) -> &Arc<FiniteModule> {
        self.level(k).module()
    }

    /// `phi_{k,l}: G_k -> G_l`, `l <= k`.
    pub fn epi(&self, k: u32, l: u32) -> &ModuleMap {
        assert!(l <= k);
        &self.epis[k as usize - 1][l as usize - 1]
    }

    /// `N_(k+1) ⊆ N_k` by membership of generators.
    pub fn verify_nesting(&self) -> bool {
        self.levels
            .windows(2)
            .all(|w| w[0].lattice.contains_lattice(&w[1].lattice))
    }

    /// `phi_{k,l} phi_{m,k} = phi_{m,l}` on generators of `G_m`.
    pub fn verify_epi_compatibility(&self) -> bool {
        let d = self.depth();
        for m in 1..=d {
            let gm = self.module(m);
            for k in 1..=m {
                for l in 1..=k {
                    for i in 0..gm.rank() {
                        let g = gm.generator(i);
                        let two = self.epi(k, l).apply(&self.epi(m, k).apply(&g));
                        if two != self.epi(m, l).apply(&g) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Builds levels `1..=depth`; fails if `A` is not hyperbolic, a cap is hit or
/// a level check fails.
pub fn build_tower(a: &IntMatrix, depth: u32, cap: PowerCap) -> Result<Tower> {
    if depth == 0 {
        return Err(Error::Dimension("tower depth must be at least 1".into()));
    }
    if depth > cap.max_k {
        return Err(Error::cap(format!("tower depth {depth}"), cap.max_k));
    }
    if let Hyperbolicity::NotHyperbolic { reason } = hyperbolicity_check(a)? {
        return Err(Error::NotHyperbolic(reason));
    }
    let mut levels = Vec::with_capacity(depth as usize);
    for k in 1..=depth {
        let group = tower_group(a, k, cap)?;
        let relations = group.module.relations().clone();
        let lattice = LatticeBasis::from_generators(&relations);
        levels.push(TowerLevel {
            k,
            relations,
            lattice,
            group,
        });
    }
    let id = IntMatrix::identity(a.rows());
    let mut epis = Vec::with_capacity(levels.len());
    for k in 0..levels.len() {
        let mut row = Vec::with_capacity(k + 1);
        for l in 0..=k {
            row.push(ModuleMap::induced_by_matrix(
                levels[k].module().clone(),
                levels[l].module().clone(),
                &id,
            )?);
        }
        epis.push(row);
    }
    let tower = Tower {
        base: a.clone(),
        levels,
        epis,
    };
    if !tower.verify_nesting() {
        return Err(Error::Inconsistent("N_(k+1) is not contained in N_k".into()));
    }
    if !tower.verify_epi_compatibility() {
        return Err(Error::Inconsistent("canonical epimorphisms do not compose".into()));
    }
    Ok(tower)
}

/// `A^((k+1)!) - I = (sum_{j=1}^{k+1} A^((k+1)! - j k!)) (A^(k!) - I)`, with
/// the left side computed by direct exponentiation.
pub fn verify_factorization(a: &IntMatrix, k: u32, cap: PowerCap) -> Result<bool> {
    if k + 1 > cap.max_k {
        return Err(Error::cap(format!("factorisation check at k = {k}"), cap.max_k));
    }
    let n = a.rows();
    let id = IntMatrix::identity(n);
    let p = matrix_power_factorial(a, k, cap)?;
    let mut sum = IntMatrix::zeros(n, n);
    let mut pw = id.clone();
    for _ in 0..=k {
        sum = &sum + &pw;
        pw = &pw * &p;
    }
    let lhs = &a.pow(factorial(k + 1)) - &id;
    Ok(lhs == &sum * &(&p - &id))
}

fn fiber(a: &IntMatrix, k: u32, cap: PowerCap) -> Result<LatticeBasis> {
    let p = matrix_power_factorial(a, k, cap)?;
    Ok(LatticeBasis::from_generators(&(&p - &IntMatrix::identity(a.rows()))))
}

/// `N_(k1+k2) ⊆ N_k1 ∩ N_k2`.
pub fn verify_filtered(a: &IntMatrix, k1: u32, k2: u32, cap: PowerCap) -> Result<bool> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::Dimension("levels start at 1".into()));
    }
    let both = fiber(a, k1, cap)?.intersection(&fiber(a, k2, cap)?)?;
    Ok(both.contains_lattice(&fiber(a, k1 + k2, cap)?))
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub bound: u64,
    pub depth: u32,
    /// Nonzero vectors with `|m|_inf <= bound`.
    pub vectors: u64,
    /// `escape_counts[k-1]`: vectors whose least `k` with `m ∉ N_k` is `k`.
    pub escape_counts: Vec<u64>,
    /// Vectors lying in every `N_k`, `k <= depth`.
    pub stuck: Vec<Vec<BigInt>>,
    /// `1 / |(A^(k!) - I)^-1|_inf` per level; no nonzero member of `N_k` is shorter.
    pub norm_radius: Vec<BigRational>,
    /// Escapes implied by the norm radius alone (`|m|_inf` below the radius).
    pub norm_certified: u64,
    /// Escapes confirmed by `m (A^(k!) - I)^-1` being non-integral.
    pub inverse_certified: u64,
}

impl ProbeReport {
    pub fn all_escaped(&self) -> bool {
        self.stuck.is_empty()
    }
}

/// For each nonzero `m` with `|m|_inf <= bound`, the least level it escapes.
pub fn injectivity_probe(tower: &Tower, bound: u64) -> ProbeReport {
    let n = tower.base.rows();
    let depth = tower.depth();
    let inverses: Vec<(IntMatrix, BigInt)> = tower
        .levels
        .iter()
        .map(|l| (l.relations.adjugate(), l.relations.det()))
        .collect();
    // |x M|_inf <= |x|_inf * max column sum of |M|
    let norm_radius: Vec<BigRational> = inverses
        .iter()
        .map(|(adj, det)| {
            let col = (0..n)
                .map(|j| (0..n).fold(BigInt::zero(), |s, i| s + adj[(i, j)].abs()))
                .max()
                .unwrap_or_else(BigInt::zero);
            BigRational::new(det.abs(), col)
        })
        .collect();
    let mut report = ProbeReport {
        bound,
        depth,
        vectors: 0,
        escape_counts: vec![0; depth as usize],
        stuck: vec![],
        norm_radius,
        norm_certified: 0,
        inverse_certified: 0,
    };
    for c in ShellIter::cube(n, bound) {
        let norm = c.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        if norm == 0 {
            continue;
        }
        report.vectors += 1;
        let m: Vec<BigInt> = c.iter().map(|&x| BigInt::from(x)).collect();
        let Some(k) = (0..depth as usize).find(|&k| !tower.levels[k].lattice.contains(&m)) else {
            report.stuck.push(m);
            continue;
        };
        report.escape_counts[k] += 1;
        if BigRational::from_integer(BigInt::from(norm)) < report.norm_radius[k] {
            report.norm_certified += 1;
        }
        let (adj, det) = &inverses[k];
        if adj.left_mul_vec(&m).iter().any(|x| !x.is_multiple_of(det)) {
            report.inverse_certified += 1;
        }
    }
    report
}

/// A compatible family of classes `c_k ∈ G_k`, `k <= depth`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoherentElement {
    pub components: Vec<ModuleElement>,
}

impl CoherentElement {
    pub fn depth(&self) -> u32 {
        self.components.len() as u32
    }

    pub fn truncate(&self, depth: u32) -> CoherentElement {
        CoherentElement {
            components: self.components[..depth as usize].to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(ModuleElement::is_zero)
    }
}

/// `m -> ([m]_1, ..., [m]_K)`.
pub fn iota(tower: &Tower, m: &[BigInt]) -> CoherentElement {
    CoherentElement {
        components: tower.levels.iter().map(|l| l.module().reduce(m)).collect(),
    }
}

pub fn is_coherent(tower: &Tower, c: &CoherentElement) -> bool {
    let d = c.depth();
    if d > tower.depth() {
        return false;
    }
    (1..=d).all(|k| (1..=k).all(|l| tower.epi(k, l).apply(&c.components[k as usize - 1]) == c.components[l as usize - 1]))
}

pub fn coherent_add(tower: &Tower, a: &CoherentElement, b: &CoherentElement) -> CoherentElement {
    CoherentElement {
        components: a
            .components
            .iter()
            .zip(&b.components)
            .enumerate()
            .map(|(i, (x, y))| tower.levels[i].module().add(x, y))
            .collect(),
    }
}

/// Level-wise action of `A`; incoherent input is rejected.
pub fn gamma_action(tower: &Tower, c: &CoherentElement) -> Result<CoherentElement> {
    if !is_coherent(tower, c) {
        return Err(Error::Inconsistent("element is not coherent".into()));
    }
    Ok(CoherentElement {
        components: c
            .components
            .iter()
            .enumerate()
            .map(|(i, x)| tower.levels[i].module().act(x))
            .collect(),
    })
}

/// Per-level isomorphisms `Psi_k: G_(k,A) -> G_(k,B)`.
#[derive(Clone, Debug)]
pub struct LevelIsoFamily {
    maps: Vec<ModuleMap>,
}

impl LevelIsoFamily {
    pub fn depth(&self) -> u32 {
        self.maps.len() as u32
    }

    pub fn map(&self, k: u32) -> &ModuleMap {
        &self.maps[k as usize - 1]
    }

    pub fn maps(&self) -> &[ModuleMap] {
        &self.maps
    }

    /// Each `Psi_k` is an isomorphism of modules and
    /// `phi_{k,l,B} Psi_k = Psi_l phi_{k,l,A}` on generators.
    pub fn verify(&self, ta: &Tower, tb: &Tower) -> Result<()> {
        if self.depth() > ta.depth() || self.depth() > tb.depth() {
            return Err(Error::Dimension("family deeper than its towers".into()));
        }
        for k in 1..=self.depth() {
            let psi = self.map(k);
            if **psi.source() != **ta.module(k) || **psi.target() != **tb.module(k) {
                return Err(Error::Inconsistent(format!("level {k} map has the wrong modules")));
            }
            psi.verify_isomorphism()?;
            for l in 1..=k {
                let ga = ta.module(k);
                for i in 0..ga.rank() {
                    let g = ga.generator(i);
                    let down_then = self.map(l).apply(&ta.epi(k, l).apply(&g));
                    let then_down = tb.epi(k, l).apply(&psi.apply(&g));
                    if down_then != then_down {
                        return Err(Error::Inconsistent(format!("levels {k} and {l} are not compatible")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `Psi_k [m] = [m C]` for an intertwiner `A C = C B`.
    pub fn transported(ta: &Tower, tb: &Tower, c: &IntMatrix) -> Result<Self> {
        if (ta.base() * c) != (c * tb.base()) {
            return Err(Error::Inconsistent("matrix does not intertwine the bases".into()));
        }
        let depth = ta.depth().min(tb.depth());
        let maps = (1..=depth)
            .map(|k| ModuleMap::induced_by_matrix(ta.module(k).clone(), tb.module(k).clone(), c))
            .collect::<Result<Vec<_>>>()?;
        let fam = LevelIsoFamily { maps };
        fam.verify(ta, tb)?;
        Ok(fam)
    }

    /// `Psi_k(x) = phi_{K,k,B}(Psi_K(lift x))`.
    pub fn project_from_top(ta: &Tower, tb: &Tower, top: ModuleMap) -> Result<Self> {
        let depth = ta.depth();
        let mut maps = Vec::with_capacity(depth as usize);
        for k in 1..depth {
            let ga = ta.module(k);
            let gb = tb.module(k);
            let mut images = IntMatrix::zeros(ga.rank(), gb.rank());
            for i in 0..ga.rank() {
                let img = top.apply_vector(ga.generator_lifts().row(i));
                let down = gb.reduce(&top.target().lift(&img));
                images.row_mut(i).clone_from_slice(down.coords());
            }
            maps.push(ModuleMap::new(ga.clone(), gb.clone(), images)?);
        }
        maps.push(top);
        let fam = LevelIsoFamily { maps };
        fam.verify(ta, tb)?;
        Ok(fam)
    }
}

#[derive(Clone, Debug)]
pub enum LevelCertificate {
    /// `N_k ⊆ Z^n g(A)`, so any isomorphism at level `k` would induce one of
    /// `Z^n / Z^n g(A)` and `Z^n / Z^n g(B)`, whose groups already differ.
    QuotientMismatch {
        g: IntPolynomial,
        left: ModuleFingerprint,
        right: ModuleFingerprint,
    },
    ModuleNonIso(NonIsoWitness),
}

impl fmt::Display for LevelCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelCertificate::QuotientMismatch { g, left, right } => {
                write!(f, "quotient by the ({g})-image differs: {left} vs {right}")
            }
            LevelCertificate::ModuleNonIso(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum LevelIsoOutcome {
    Found(LevelIsoFamily),
    NotFoundAtLevel { level: u32, certificate: LevelCertificate },
    Unknown { level: u32, prime: BigInt, hom_order: BigInt, tried: u64 },
}

/// Divisors of `x^(K!) - 1` as products of cyclotomic factors, with the least
/// level `k` such that they divide `x^(k!) - 1`, ordered by level then degree.
fn binomial_divisors(depth: u32) -> Vec<(u32, IntPolynomial)> {
    let kf = factorial(depth) as usize;
    let ds: Vec<usize> = (1..=kf).filter(|d| kf.is_multiple_of(*d)).collect();
    let level_of = |d: usize| (1..=depth).find(|&k| (factorial(k) as usize).is_multiple_of(d)).unwrap();
    let subsets: Vec<Vec<usize>> = if ds.len() <= 10 {
        (1u32..(1 << ds.len()))
            .map(|mask| (0..ds.len()).filter(|i| mask >> i & 1 == 1).map(|i| ds[i]).collect())
            .collect()
    } else {
        // singletons and the binomials x^m - 1 for m | K!
        let mut v: Vec<Vec<usize>> = ds.iter().map(|&d| vec![d]).collect();
        v.extend(ds.iter().map(|&m| ds.iter().copied().filter(|d| m % d == 0).collect()));
        v
    };
    let mut out: Vec<(u32, usize, Vec<usize>, IntPolynomial)> = subsets
        .into_iter()
        .map(|s| {
            let level = s.iter().map(|&d| level_of(d)).max().unwrap();
            let g = s
                .iter()
                .fold(IntPolynomial::one(), |acc, &d| &acc * &IntPolynomial::cyclotomic(d));
            let deg = g.degree().unwrap_or(0);
            (level, deg, s, g)
        })
        .collect();
    out.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    out.dedup_by(|a, b| a.3 == b.3);
    out.into_iter().map(|(l, _, _, g)| (l, g)).collect()
}

/// Searches a compatible family of level isomorphisms.
///
/// First the canonical quotients `G_k / g G_k = BF_g` for divisors `g` of
/// `x^(k!) - 1` are compared, lowest level first. Then an isomorphism is
/// searched at the deepest level and projected down; if there is none, lower
/// levels are searched for the least failing one.
pub fn level_iso_family(ta: &Tower, tb: &Tower, budget: u64) -> Result<LevelIsoOutcome> {
    let depth = ta.depth();
    if tb.depth() != depth {
        return Err(Error::Dimension("towers of different depths".into()));
    }
    let (a, b) = (ta.base(), tb.base());
    for (level, g) in binomial_divisors(depth) {
        let ga = bf_group(a, &g)?;
        let gb = bf_group(b, &g)?;
        let top = &ta.level(level).lattice;
        let ambient = LatticeBasis::from_generators(ga.module.relations());
        if !ambient.contains_lattice(top) {
            return Err(Error::Inconsistent(format!("N_{level} is not inside the ({g})-image")));
        }
        let (left, right) = (ga.module.fingerprint(), gb.module.fingerprint());
        if left != right {
            return Ok(LevelIsoOutcome::NotFoundAtLevel {
                level,
                certificate: LevelCertificate::QuotientMismatch { g, left, right },
            });
        }
    }
    let search = |k: u32| {
        module_iso_exists_with_hints(ta.module(k), tb.module(k), budget, &ta.level(k).group.hints)
    };
    match search(depth)? {
        IsoVerdict::Yes(top) => Ok(LevelIsoOutcome::Found(LevelIsoFamily::project_from_top(ta, tb, top)?)),
        IsoVerdict::Unknown { prime, hom_order, tried } => Ok(LevelIsoOutcome::Unknown {
            level: depth,
            prime,
            hom_order,
            tried,
        }),
        IsoVerdict::No(witness) => {
            for k in 1..depth {
                if let IsoVerdict::No(w) = search(k)? {
                    return Ok(LevelIsoOutcome::NotFoundAtLevel {
                        level: k,
                        certificate: LevelCertificate::ModuleNonIso(w),
                    });
                }
            }
            Ok(LevelIsoOutcome::NotFoundAtLevel {
                level: depth,
                certificate: LevelCertificate::ModuleNonIso(witness),
            })
        }
    }
}

/// `Delta_K ⊆ Z^(2n)` in HNF.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairLattice {
    pub n: usize,
    pub level: u32,
    pub lattice: LatticeBasis,
}

impl PairLattice {
    pub fn contains_pair(&self, m: &[BigInt], mt: &[BigInt]) -> bool {
        let v: Vec<BigInt> = m.iter().chain(mt).cloned().collect();
        self.lattice.contains(&v)
    }

    pub fn index(&self) -> BigInt {
        self.lattice.index().expect("full rank")
    }
}

/// `{(m, m~) : Psi_k [m] = [m~] for all k <= K}` as a congruence lattice:
/// `m coord_A Psi_k - m~ coord_B = 0` modulo the factors of `G_(k,B)`.
pub fn delta_lattice(ta: &Tower, tb: &Tower, fam: &LevelIsoFamily, depth: u32) -> Result<PairLattice> {
    let n = ta.base().rows();
    if depth > fam.depth() {
        return Err(Error::Dimension("Δ deeper than the family".into()));
    }
    let mut blocks: Vec<IntMatrix> = Vec::new();
    let mut moduli: Vec<BigInt> = Vec::new();
    for k in 1..=depth {
        let gb = tb.module(k);
        if gb.rank() == 0 {
            continue;
        }
        let top = ta.module(k).coordinate_matrix() * fam.map(k).images();
        let bottom = -gb.coordinate_matrix();
        blocks.push(top.vstack(&bottom)?);
        moduli.extend(gb.invariant_factors().iter().cloned());
    }
    let lattice = if blocks.is_empty() {
        LatticeBasis::full(2 * n)
    } else {
        let coeffs = blocks[1..].iter().try_fold(blocks[0].clone(), |acc, b| acc.hstack(b))?;
        solve_congruences(&coeffs, &moduli)?
    };
    let out = PairLattice {
        n,
        level: depth,
        lattice,
    };
    if depth > 0 {
        let zero = vec![BigInt::zero(); n];
        let nb = &tb.level(depth).lattice;
        if !(0..nb.rank()).all(|i| out.contains_pair(&zero, nb.rows().row(i))) {
            return Err(Error::Inconsistent("Δ misses {0} x N_B".into()));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifyParams {
    /// Largest absolute entry of a candidate conjugator.
    pub entry_bound: u64,
    /// Cap on enumerated candidates.
    pub max_points: u64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            entry_bound: 60,
            max_points: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub enum DeltaClass {
    GraphOfConjugator(IntMatrix),
    /// The index `s_k` of intertwiners matching level `k` grows strictly.
    ShrinkingNonFunctional { indices: Vec<BigInt> },
    Indeterminate { indices: Vec<BigInt>, searched: u64, truncated: bool },
}

impl DeltaClass {
    pub fn indices(&self) -> &[BigInt] {
        match self {
            DeltaClass::GraphOfConjugator(_) => &[],
            DeltaClass::ShrinkingNonFunctional { indices } | DeltaClass::Indeterminate { indices, .. } => indices,
        }
    }
}

/// `Delta = graph(C0) + {0} x N_B`; returns `C0` from the HNF `[[I, C0], [0, H]]`.
fn graph_part(delta: &PairLattice) -> Result<IntMatrix> {
    let n = delta.n;
    let h = delta.lattice.rows();
    for i in 0..n {
        for j in 0..n {
            if h[(i, j)] != BigInt::from((i == j) as i32) {
                return Err(Error::Inconsistent("Δ does not project onto Z^n".into()));
            }
        }
    }
    Ok(IntMatrix::from_fn(n, n, |i, j| h[(i, n + j)].clone()))
}

/// HNF of `{(s, w) : sum w_i K_i - s C0` has rows in `N_B`}.
fn matching_lattice(delta: &PairLattice, gb: &FiniteModule, ks: &[IntMatrix]) -> Result<LatticeBasis> {
    let n = delta.n;
    let c0 = graph_part(delta)?;
    let coord = gb.coordinate_matrix();
    let r = gb.rank();
    let mut coeffs = IntMatrix::zeros(1 + ks.len(), n * r);
    let mut put = |row: usize, m: &IntMatrix, sign: i32| {
        let img = m * coord;
        for j in 0..n {
            for c in 0..r {
                coeffs[(row, j * r + c)] = &img[(j, c)] * sign;
            }
        }
    };
    put(0, &c0, -1);
    for (i, k) in ks.iter().enumerate() {
        put(i + 1, k, 1);
    }
    let moduli: Vec<BigInt> = (0..n).flat_map(|_| gb.invariant_factors().iter().cloned()).collect();
    solve_congruences(&coeffs, &moduli)
}

fn centered_key(v: &[BigInt]) -> (BigInt, Vec<(BigInt, bool)>) {
    let max = v.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero);
    (max, v.iter().map(|x| (x.abs(), x.is_negative())).collect())
}

/// All `base + t H` with every entry in `[-bound, bound]`, for `H` in HNF.
fn box_points(base: &[BigInt], h: &IntMatrix, bound: &BigInt, cap: u64) -> (Vec<Vec<BigInt>>, bool) {
    let pivots: Vec<usize> = (0..h.rows())
        .map(|i| (0..h.cols()).find(|&j| !h[(i, j)].is_zero()).expect("nonzero row"))
        .collect();
    let mut out = Vec::new();
    let mut truncated = false;
    fn rec(
        row: usize,
        cur: Vec<BigInt>,
        h: &IntMatrix,
        pivots: &[usize],
        bound: &BigInt,
        cap: u64,
        out: &mut Vec<Vec<BigInt>>,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        let settled = if row < pivots.len() { pivots[row] } else { cur.len() };
        if cur[..settled].iter().any(|x| x.abs() > *bound) {
            return;
        }
        if row == pivots.len() {
            if out.len() as u64 >= cap {
                *truncated = true;
            } else {
                out.push(cur);
            }
            return;
        }
        let p = pivots[row];
        let hp = &h[(row, p)];
        let lo = (-bound - &cur[p]).div_ceil(hp);
        let hi = (bound - &cur[p]).div_floor(hp);
        let mut t = lo;
        while t <= hi {
            let next: Vec<BigInt> = cur.iter().zip(h.row(row)).map(|(x, y)| x + &t * y).collect();
            rec(row + 1, next, h, pivots, bound, cap, out, truncated);
            t += 1;
        }
    }
    rec(0, base.to_vec(), h, &pivots, bound, cap, &mut out, &mut truncated);
    (out, truncated)
}

/// Looks for a unimodular intertwiner whose graph generates the deepest
/// `Delta` together with `{0} x N_B`.
///
/// For each level the intertwiners `C` with `C = s C0 (mod N_B)` form a
/// lattice; `s_k`, the positive generator of its `s`-projection, is the index
/// reported. `s_K = 1` leaves a coset of candidates, enumerated inside the
/// entry box and tried in order of increasing size.
pub fn classify_delta(tb: &Tower, a: &IntMatrix, deltas: &[PairLattice], params: ClassifyParams) -> Result<DeltaClass> {
    let Some(last) = deltas.last() else {
        return Err(Error::Dimension("no Δ levels to classify".into()));
    };
    let b = tb.base();
    let n = a.rows();
    for w in deltas.windows(2) {
        if !w[0].lattice.contains_lattice(&w[1].lattice) {
            return Err(Error::Inconsistent("Δ sequence is not nested".into()));
        }
    }
    let basis = intertwiner_lattice(a, b)?;
    let reduced = lll_reduce(basis.lattice().rows());
    let ks: Vec<IntMatrix> = (0..reduced.rows())
        .map(|i| IntMatrix::from_fn(n, n, |r, c| reduced[(i, r * n + c)].clone()))
        .collect();
    let mut indices = Vec::with_capacity(deltas.len());
    let mut top = None;
    for d in deltas {
        if d.level == 0 {
            indices.push(BigInt::one());
            continue;
        }
        let w = matching_lattice(d, tb.module(d.level), &ks)?;
        let rows = w.rows();
        let s0 = if rows.rows() > 0 && !rows[(0, 0)].is_zero() {
            rows[(0, 0)].clone()
        } else {
            BigInt::zero()
        };
        indices.push(s0);
        top = Some(w);
    }
    let s_last = indices.last().cloned().unwrap_or_else(BigInt::one);
    if !s_last.is_one() || top.is_none() {
        let strictly = indices.len() > 1 && indices.windows(2).all(|p| p[0] < p[1]);
        return Ok(if strictly && !s_last.is_zero() {
            DeltaClass::ShrinkingNonFunctional { indices }
        } else {
            DeltaClass::Indeterminate {
                indices,
                searched: 0,
                truncated: false,
            }
        });
    }
    let w = top.unwrap();
    let rows = w.rows();
    let r = ks.len();
    let vec_of = |coef: &[BigInt]| -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); n * n];
        for (c, k) in coef.iter().zip(&ks) {
            for (x, y) in v.iter_mut().zip(k.entries()) {
                *x += c * y;
            }
        }
        v
    };
    let base = vec_of(&rows.row(0)[1..]);
    let diffs: Vec<Vec<BigInt>> = (1..rows.rows()).map(|i| vec_of(&rows.row(i)[1..])).collect();
    let diffs = if diffs.is_empty() {
        IntMatrix::zeros(0, n * n)
    } else {
        hnf_with_transform(&IntMatrix::from_rows(diffs)?).basis()
    };
    debug_assert!(diffs.rows() <= r);
    let bound = BigInt::from(params.entry_bound);
    let (mut points, truncated) = box_points(&base, &diffs, &bound, params.max_points);
    points.sort_by_cached_key(|p| centered_key(p));
    let searched = points.len() as u64;
    for p in points {
        let c = IntMatrix::from_fn(n, n, |i, j| p[i * n + j].clone());
        if !c.det().abs().is_one() {
            continue;
        }
        if (a * &c) != (&c * b) {
            return Err(Error::Inconsistent("coset point is not an intertwiner".into()));
        }
        let graph_ok = (0..n).all(|i| last.contains_pair(&crate::linalg::unit_vector(n, i), c.row(i)));
        if !graph_ok {
            return Err(Error::Inconsistent("candidate graph is not in Δ".into()));
        }
        return Ok(DeltaClass::GraphOfConjugator(c));
    }
    Ok(DeltaClass::Indeterminate {
        indices,
        searched,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 0], [1, 0, 4], [6, -2, 23]])
    }

    fn b1() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 12], [1, 0, -4], [0, 2, 23]])
    }

    fn a2() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 0], [0, 0, 1], [1, 8, 2]])
    }

    fn u() -> IntMatrix {
        IntMatrix::from_i64(&[[1, 2, 0], [0, 1, -1], [1, 1, 0]])
    }

    fn cap() -> PowerCap {
        PowerCap::tower()
    }

    #[test]
    fn tower_orders() {
        let t = build_tower(&a1(), 2, cap()).unwrap();
        assert_eq!(*t.module(1).order(), BigInt::from(16));
        assert_eq!(*t.module(2).order(), BigInt::from(512));
        let t1 = build_tower(&a1(), 1, cap()).unwrap();
        assert_eq!(t1.depth(), 1);
        assert!(t1.epi(1, 1).images().is_identity());
        let t2 = build_tower(&a2(), 2, cap()).unwrap();
        assert_eq!(*t2.module(1).order(), BigInt::from(10));
        assert!(build_tower(&IntMatrix::identity(2), 1, cap()).is_err());
        assert!(build_tower(&a1(), 5, cap()).is_err());
    }

    #[test]
    fn factorisation_and_filtering() {
        for k in 1..=3 {
            assert!(verify_factorization(&a1(), k, cap()).unwrap());
            assert!(verify_factorization(&a2(), k, cap()).unwrap());
        }
        assert!(verify_filtered(&a1(), 1, 1, cap()).unwrap());
        assert!(verify_filtered(&a1(), 1, 2, cap()).unwrap());
        assert!(verify_filtered(&a2(), 2, 2, cap()).unwrap());
    }

    #[test]
    fn probe_escapes() {
        let t = build_tower(&a1(), 2, cap()).unwrap();
        let e1 = crate::linalg::unit_vector(3, 0);
        assert!(!t.level(1).lattice.contains(&e1));
        let r = injectivity_probe(&t, 2);
        assert_eq!(r.vectors, 124);
        assert!(r.all_escaped());
        assert_eq!(r.inverse_certified, r.vectors);
        assert!(r.norm_radius.iter().all(|x| *x < BigRational::from_integer(BigInt::from(2))));
        assert_eq!(r.escape_counts.iter().sum::<u64>(), 124);
    }

    #[test]
    fn iota_and_gamma() {
        let t = build_tower(&a1(), 3, cap()).unwrap();
        let zero = vec![BigInt::zero(); 3];
        assert!(iota(&t, &zero).is_zero());
        let m: Vec<BigInt> = [3, -1, 2].iter().map(|&x| BigInt::from(x)).collect();
        let m2: Vec<BigInt> = [0, 5, 7].iter().map(|&x| BigInt::from(x)).collect();
        let sum: Vec<BigInt> = m.iter().zip(&m2).map(|(x, y)| x + y).collect();
        assert_eq!(coherent_add(&t, &iota(&t, &m), &iota(&t, &m2)), iota(&t, &sum));
        for i in 0..3 {
            let e = crate::linalg::unit_vector(3, i);
            let lhs = gamma_action(&t, &iota(&t, &e)).unwrap();
            assert_eq!(lhs, iota(&t, &a1().left_mul_vec(&e)));
            assert_eq!(lhs.truncate(2), gamma_action(&t, &iota(&t, &e).truncate(2)).unwrap());
        }
        let mut bad = iota(&t, &m);
        bad.components[0] = t.module(1).zero();
        if bad != iota(&t, &m) {
            assert!(gamma_action(&t, &bad).is_err());
        }
    }

    #[test]
    fn example_one_refuted_at_level_two() {
        let ta = build_tower(&a1(), 2, cap()).unwrap();
        let tb = build_tower(&b1(), 2, cap()).unwrap();
        match level_iso_family(&ta, &tb, 10_000).unwrap() {
            LevelIsoOutcome::NotFoundAtLevel {
                level,
                certificate: LevelCertificate::QuotientMismatch { g, left, right },
            } => {
                assert_eq!(level, 2);
                assert_eq!(g.to_string(), "x + 1");
                assert_eq!(left.invariant_factors, vec![BigInt::from(4), BigInt::from(8)]);
                assert_eq!(right.invariant_factors, vec![BigInt::from(2), BigInt::from(16)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_and_transported_families() {
        let ta = build_tower(&a1(), 2, cap()).unwrap();
        match level_iso_family(&ta, &ta, 10_000).unwrap() {
            LevelIsoOutcome::Found(f) => f.verify(&ta, &ta).unwrap(),
            other => panic!("{other:?}"),
        }
        let uinv = u().unimodular_inverse().unwrap();
        let b = &(&uinv * &a1()) * &u();
        let tb = build_tower(&b, 2, cap()).unwrap();
        let fam = LevelIsoFamily::transported(&ta, &tb, &u()).unwrap();
        let deltas: Vec<PairLattice> = (1..=2).map(|k| delta_lattice(&ta, &tb, &fam, k).unwrap()).collect();
        assert!(deltas[0].lattice.contains_lattice(&deltas[1].lattice));
        let m: Vec<BigInt> = [1, -2, 3].iter().map(|&x| BigInt::from(x)).collect();
        assert!(deltas[1].contains_pair(&m, &u().left_mul_vec(&m)));
        match classify_delta(&tb, &a1(), &deltas, ClassifyParams::default()).unwrap() {
            DeltaClass::GraphOfConjugator(c) => {
                assert_eq!(&a1() * &c, &c * &b);
                assert!(c.det().abs().is_one());
            }
            other => panic!("{other:?}"),
        }
        match level_iso_family(&ta, &tb, 10_000).unwrap() {
            LevelIsoOutcome::Found(f) => f.verify(&ta, &tb).unwrap(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_delta() {
        let ta = build_tower(&a2(), 2, cap()).unwrap();
        let fam = LevelIsoFamily::transported(&ta, &ta, &IntMatrix::identity(3)).unwrap();
        let d0 = delta_lattice(&ta, &ta, &fam, 0).unwrap();
        assert_eq!(d0.lattice, LatticeBasis::full(6));
        let d2 = delta_lattice(&ta, &ta, &fam, 2).unwrap();
        let m: Vec<BigInt> = [2, 0, 1].iter().map(|&x| BigInt::from(x)).collect();
        let shifted: Vec<BigInt> = m.iter().zip(ta.level(2).lattice.rows().row(0)).map(|(x, y)| x + y).collect();
        assert!(d2.contains_pair(&m, &shifted));
        assert!(!d2.contains_pair(&m, &vec![BigInt::zero(); 3]));
        let deltas = vec![delta_lattice(&ta, &ta, &fam, 1).unwrap(), d2];
        match classify_delta(&ta, &a2(), &deltas, ClassifyParams::default()).unwrap() {
            DeltaClass::GraphOfConjugator(c) => assert!(c.is_identity()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn divisors_in_level_order() {
        let ds = binomial_divisors(2);
        let names: Vec<(u32, String)> = ds.iter().map(|(l, g)| (*l, g.to_string())).collect();
        assert_eq!(
            names,
            vec![(1, "x - 1".to_string()), (2, "x + 1".to_string()), (2, "x^2 - 1".to_string())]
        );
        assert_eq!(binomial_divisors(3).len(), 15);
    }
}
