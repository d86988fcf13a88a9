//! Arithmetic in `Q(beta)` for an irreducible monic `p`, fractional ideals of
//! `Z[beta]`, and the ideal-theoretic constructions attached to a matrix.
//!
//! Elements are coordinate vectors in the power basis `1, beta, ...`. A matrix
//! `A` with characteristic polynomial `p` is attached to the ideal spanned by
//! the entries of a column eigenvector `A u = beta u`; with that choice an
//! element `m . u` of the ideal corresponds to the row vector `m`, and
//! multiplication by `beta` corresponds to `m -> m A`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::bf::bf_group;
use crate::enumerate::ShellIter;
use crate::error::{Error, Result};
use crate::factor::factorize;
use crate::linalg::{hnf_with_transform, solve_congruences, IntMatrix, IntPolynomial, LatticeBasis};
use crate::modules::ModuleMap;

/// Result of the bounded irreducibility test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Irreducibility {
    Irreducible,
    Reducible { factor: IntPolynomial },
    /// Degree at least 6 with no factor of degree 1 or 2.
    NoSmallFactor,
}

fn divisors(n: &BigInt) -> Result<Vec<BigInt>> {
    let mut out = vec![BigInt::one()];
    for (p, e) in factorize(n)? {
        let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
        for d in &out {
            let mut q = d.clone();
            for _ in 0..=e {
                next.push(q.clone());
                q *= &p;
            }
        }
        out = next;
    }
    out.sort();
    Ok(out)
}

const QUADRATIC_SEARCH_CAP: u64 = 20_000_000;

/// Exact for monic `p` of degree at most 5; above that only factors of degree
/// 1 and 2 are excluded.
pub fn irreducibility(p: &IntPolynomial) -> Result<Irreducibility> {
    if !p.is_monic() {
        return Err(Error::Unsupported(format!("irreducibility test needs a monic polynomial, got {p}")));
    }
    let n = p.degree().unwrap_or(0);
    if n <= 1 {
        return Ok(Irreducibility::Irreducible);
    }
    let a0 = p.coeff(0);
    if a0.is_zero() {
        return Ok(Irreducibility::Reducible { factor: IntPolynomial::x() });
    }
    let divs = divisors(&a0)?;
    for d in &divs {
        for r in [d.clone(), -d.clone()] {
            if p.eval(&r).is_zero() {
                return Ok(Irreducibility::Reducible {
                    factor: IntPolynomial::new(vec![-r, BigInt::one()]),
                });
            }
        }
    }
    if n <= 3 {
        return Ok(Irreducibility::Irreducible);
    }
    // Roots of p have modulus below the Cauchy bound R, so a monic quadratic
    // factor x^2 + bx + c has |b| < 2R and c | a0.
    let r = p.coeffs().iter().map(|c| c.abs()).max().unwrap() + 1u32;
    let b_max = &r * 2u32;
    let work = BigInt::from(divs.len() as u64 * 2) * (&b_max * 2u32 + 1u32);
    if work > BigInt::from(QUADRATIC_SEARCH_CAP) {
        return Err(Error::cap("quadratic factor search", format!("{QUADRATIC_SEARCH_CAP} candidates")));
    }
    let p1 = p.eval(&BigInt::one());
    for d in &divs {
        for c in [d.clone(), -d.clone()] {
            let mut b = -b_max.clone();
            while b <= b_max {
                let at_one = BigInt::one() + &b + &c;
                if !at_one.is_zero() && (p1.is_zero() || (&p1 % &at_one).is_zero()) {
                    let q = IntPolynomial::new(vec![c.clone(), b.clone(), BigInt::one()]);
                    if p.div_rem_monic(&q).1.is_zero() {
                        return Ok(Irreducibility::Reducible { factor: q });
                    }
                }
                b += 1;
            }
        }
    }
    if n <= 5 {
        Ok(Irreducibility::Irreducible)
    } else {
        Ok(Irreducibility::NoSmallFactor)
    }
}

/// `Q[x]/(p)` for a monic irreducible `p` of degree at least 2.
#[derive(Debug)]
pub struct NumberField {
    p: IntPolynomial,
    n: usize,
    // multiplication by beta on row coordinate vectors
    beta: IntMatrix,
}

impl NumberField {
    pub fn new(p: &IntPolynomial) -> Result<Arc<Self>> {
        match irreducibility(p)? {
            Irreducibility::Irreducible => Self::build(p),
            Irreducibility::Reducible { factor } => {
                Err(Error::Unsupported(format!("{p} is reducible (factor {factor})")))
            }
            Irreducibility::NoSmallFactor => Err(Error::Unsupported(format!(
                "{p} has no factor of degree <= 2 but irreducibility is not decided in degree {}",
                p.degree().unwrap_or(0)
            ))),
        }
    }

    /// Accepts `p` on the caller's word once no factor of degree 1 or 2 exists.
    pub fn assume_irreducible(p: &IntPolynomial) -> Result<Arc<Self>> {
        match irreducibility(p)? {
            Irreducibility::Reducible { factor } => {
                Err(Error::Unsupported(format!("{p} is reducible (factor {factor})")))
            }
            _ => Self::build(p),
        }
    }

    fn build(p: &IntPolynomial) -> Result<Arc<Self>> {
        let n = p.degree().unwrap_or(0);
        if n < 2 || !p.is_monic() {
            return Err(Error::Unsupported(format!("number field needs a monic polynomial of degree >= 2, got {p}")));
        }
        let beta = IntMatrix::from_fn(n, n, |i, j| {
            if i + 1 < n {
                BigInt::from((j == i + 1) as i32)
            } else {
                -p.coeff(j)
            }
        });
        Ok(Arc::new(NumberField { p: p.clone(), n, beta }))
    }

    pub fn poly(&self) -> &IntPolynomial {
        &self.p
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// `M_y` with `coords(x y) = coords(x) M_y` for an integral `y`.
    pub fn mult_matrix(&self, y: &[BigInt]) -> IntMatrix {
        let mut rows = Vec::with_capacity(self.n);
        let mut cur = y.to_vec();
        for _ in 0..self.n {
            let next = self.beta.left_mul_vec(&cur);
            rows.push(std::mem::replace(&mut cur, next));
        }
        IntMatrix::from_rows(rows).expect("square")
    }

    pub fn element(self: &Arc<Self>, num: Vec<BigInt>, den: BigInt) -> FieldElement {
        assert_eq!(num.len(), self.n, "coordinate vector length");
        FieldElement::normalized(self.clone(), num, den)
    }

    pub fn integer(self: &Arc<Self>, c: BigInt) -> FieldElement {
        let mut num = vec![BigInt::zero(); self.n];
        num[0] = c;
        self.element(num, BigInt::one())
    }

    pub fn zero(self: &Arc<Self>) -> FieldElement {
        self.integer(BigInt::zero())
    }

    pub fn one(self: &Arc<Self>) -> FieldElement {
        self.integer(BigInt::one())
    }

    pub fn beta(self: &Arc<Self>) -> FieldElement {
        self.from_poly(&IntPolynomial::x())
    }

    /// `g(beta)`.
    pub fn from_poly(self: &Arc<Self>, g: &IntPolynomial) -> FieldElement {
        let r = g.div_rem_monic(&self.p).1;
        let num = (0..self.n).map(|i| r.coeff(i)).collect();
        self.element(num, BigInt::one())
    }
}

impl fmt::Display for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q[x]/({})", self.p)
    }
}

fn same_field(a: &Arc<NumberField>, b: &Arc<NumberField>) -> bool {
    Arc::ptr_eq(a, b) || a.p == b.p
}

/// Element of `Q(beta)` as `num / den` in the power basis, in lowest terms.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<NumberField>,
    num: Vec<BigInt>,
    den: BigInt,
}

impl FieldElement {
    fn normalized(field: Arc<NumberField>, mut num: Vec<BigInt>, mut den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if den.is_negative() {
            den = -den;
            num.iter_mut().for_each(|x| *x = -x.clone());
        }
        let g = num.iter().fold(den.clone(), |g, x| g.gcd(x));
        if !g.is_one() {
            num.iter_mut().for_each(|x| *x /= &g);
            den /= &g;
        }
        FieldElement { field, num, den }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn numerator(&self) -> &[BigInt] {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn coords(&self) -> Vec<BigRational> {
        self.num
            .iter()
            .map(|x| BigRational::new(x.clone(), self.den.clone()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    fn check(&self, other: &FieldElement) {
        assert!(same_field(&self.field, &other.field), "elements of different fields");
    }

    pub fn add(&self, other: &FieldElement) -> FieldElement {
        self.check(other);
        let num = self
            .num
            .iter()
            .zip(&other.num)
            .map(|(a, b)| a * &other.den + b * &self.den)
            .collect();
        FieldElement::normalized(self.field.clone(), num, &self.den * &other.den)
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement {
            field: self.field.clone(),
            num: self.num.iter().map(|x| -x).collect(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &FieldElement) -> FieldElement {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &FieldElement) -> FieldElement {
        self.check(other);
        let num = self.field.mult_matrix(&other.num).left_mul_vec(&self.num);
        FieldElement::normalized(self.field.clone(), num, &self.den * &other.den)
    }

    pub fn scale(&self, c: &BigInt) -> FieldElement {
        let num = self.num.iter().map(|x| x * c).collect();
        FieldElement::normalized(self.field.clone(), num, self.den.clone())
    }

    pub fn inverse(&self) -> Option<FieldElement> {
        let m = self.field.mult_matrix(&self.num);
        let det = m.det();
        if det.is_zero() {
            return None;
        }
        // x M_num = den e_0
        let adj = m.adjugate();
        let num = adj.row(0).iter().map(|x| x * &self.den).collect();
        Some(FieldElement::normalized(self.field.clone(), num, det))
    }

    pub fn norm(&self) -> BigRational {
        let det = self.field.mult_matrix(&self.num).det();
        BigRational::new(det, self.den.pow(self.field.n as u32))
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        same_field(&self.field, &other.field) && self.num == other.num && self.den == other.den
    }
}

impl Eq for FieldElement {}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = IntPolynomial::new(self.num.clone()).to_string().replace('x', "β");
        if self.den.is_one() {
            write!(f, "{s}")
        } else {
            write!(f, "({s})/{}", self.den)
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn common_den<'a>(elems: impl IntoIterator<Item = &'a FieldElement>) -> BigInt {
    elems.into_iter().fold(BigInt::one(), |d, e| d.lcm(&e.den))
}

/// Full-rank `Z[beta]`-submodule of `Q(beta)`, stored as `H / den` with `H` in
/// HNF and `den` minimal, so equality is entrywise.
#[derive(Clone)]
pub struct FractionalIdeal {
    field: Arc<NumberField>,
    lattice: LatticeBasis,
    den: BigInt,
}

impl FractionalIdeal {
    /// Lattice spanned by the rows of `gens / den`; must be full rank and
    /// closed under multiplication by `beta`.
    pub fn from_int(field: &Arc<NumberField>, gens: &IntMatrix, den: &BigInt) -> Result<Self> {
        let n = field.n;
        if gens.cols() != n {
            return Err(Error::Dimension(format!("generators of length {} in a degree-{n} field", gens.cols())));
        }
        let l = LatticeBasis::from_generators(gens);
        if !l.is_full_rank() {
            return Err(Error::Dimension(format!("generators span a lattice of rank {} < {n}", l.rank())));
        }
        let mut den = den.abs();
        if den.is_zero() {
            return Err(Error::Inconsistent("zero denominator".into()));
        }
        let g = l.rows().entries().iter().fold(den.clone(), |g, x| g.gcd(x));
        let lattice = if g.is_one() {
            l
        } else {
            den /= &g;
            let rows = IntMatrix::from_fn(n, n, |i, j| &l.rows()[(i, j)] / &g);
            LatticeBasis::from_generators(&rows)
        };
        let out = FractionalIdeal {
            field: field.clone(),
            lattice,
            den,
        };
        for i in 0..n {
            let shifted = field.beta.left_mul_vec(out.lattice.rows().row(i));
            if !out.lattice.contains(&shifted) {
                return Err(Error::Inconsistent("lattice is not closed under multiplication by β".into()));
            }
        }
        Ok(out)
    }

    /// `Z`-span of the given elements.
    pub fn from_generators(field: &Arc<NumberField>, gens: &[FieldElement]) -> Result<Self> {
        let d = common_den(gens);
        let rows: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|e| {
                let s = &d / &e.den;
                e.num.iter().map(|x| x * &s).collect()
            })
            .collect();
        if rows.is_empty() {
            return Err(Error::Dimension("no generators".into()));
        }
        Self::from_int(field, &IntMatrix::from_rows(rows)?, &d)
    }

    /// `Z[beta]`-module generated by the given elements.
    pub fn generated_by(field: &Arc<NumberField>, gens: &[FieldElement]) -> Result<Self> {
        let beta = field.beta();
        let mut all = Vec::with_capacity(gens.len() * field.n);
        for g in gens {
            let mut cur = g.clone();
            for _ in 0..field.n {
                let next = cur.mul(&beta);
                all.push(std::mem::replace(&mut cur, next));
            }
        }
        Self::from_generators(field, &all)
    }

    /// `Z[beta]` itself.
    pub fn unit(field: &Arc<NumberField>) -> Self {
        FractionalIdeal {
            field: field.clone(),
            lattice: LatticeBasis::full(field.n),
            den: BigInt::one(),
        }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    /// The HNF numerator `H`; the ideal is `H / den`.
    pub fn numerator(&self) -> &IntMatrix {
        self.lattice.rows()
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn basis(&self) -> Vec<FieldElement> {
        (0..self.field.n)
            .map(|i| self.field.element(self.numerator().row(i).to_vec(), self.den.clone()))
            .collect()
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    fn check(&self, other: &FractionalIdeal) {
        assert!(same_field(&self.field, &other.field), "ideals of different fields");
    }

    pub fn contains(&self, x: &FieldElement) -> bool {
        assert!(same_field(&self.field, &x.field), "element of a different field");
        let mut v = Vec::with_capacity(x.num.len());
        for c in &x.num {
            let (q, r) = (c * &self.den).div_rem(&x.den);
            if !r.is_zero() {
                return false;
            }
            v.push(q);
        }
        self.lattice.contains(&v)
    }

    pub fn is_subset_of(&self, other: &FractionalIdeal) -> bool {
        self.basis().iter().all(|b| other.contains(b))
    }

    /// Covolume relative to `Z[beta]`: `|det H| / den^n`.
    pub fn covolume(&self) -> BigRational {
        BigRational::new(self.numerator().det().abs(), self.den.pow(self.field.n as u32))
    }

    /// `z I`.
    pub fn scale(&self, z: &FieldElement) -> Result<Self> {
        if z.is_zero() {
            return Err(Error::Unsupported("scaling an ideal by zero".into()));
        }
        let m = self.field.mult_matrix(&z.num);
        let rows = self.numerator() * &m;
        Self::from_int(&self.field, &rows, &(&self.den * &z.den))
    }

    pub fn scale_int(&self, c: &BigInt) -> Result<Self> {
        self.scale(&self.field.integer(c.clone()))
    }

    pub fn sum(&self, other: &FractionalIdeal) -> Result<Self> {
        self.check(other);
        let d = self.den.lcm(&other.den);
        let a = self.numerator().scale(&(&d / &self.den));
        let b = other.numerator().scale(&(&d / &other.den));
        Self::from_int(&self.field, &a.vstack(&b)?, &d)
    }

    /// Lattice spanned by all products of basis elements.
    pub fn product(&self, other: &FractionalIdeal) -> Result<Self> {
        self.check(other);
        let n = self.field.n;
        let mut rows = Vec::with_capacity(n * n);
        for k in 0..n {
            let m = self.field.mult_matrix(other.numerator().row(k));
            for i in 0..n {
                rows.push(m.left_mul_vec(self.numerator().row(i)));
            }
        }
        Self::from_int(&self.field, &IntMatrix::from_rows(rows)?, &(&self.den * &other.den))
    }

    /// `(self : other) = {z : z other ⊆ self}`.
    ///
    /// With `self = H_I / d_I`, `other = H_J / d_J`: `other` contains the
    /// rational integer `det H_J / d_J`, so every such `z` lies in
    /// `Z^n / (det H_J d_I)`. Writing `z = y / E0`, the conditions
    /// `z w_k ∈ self` are the congruences
    /// `y (d_I M_k adj H_I) = 0 mod E0 d_J det H_I` for each basis row `k`.
    pub fn colon(&self, other: &FractionalIdeal) -> Result<Self> {
        self.check(other);
        let n = self.field.n;
        let hi = self.numerator();
        let hj = other.numerator();
        let e0 = hj.det().abs() * &self.den;
        let modulus = &e0 * &other.den * hi.det().abs();
        let adj_i = hi.adjugate();
        let mut coeffs = IntMatrix::zeros(n, n * n);
        for k in 0..n {
            let q = &self.field.mult_matrix(hj.row(k)) * &adj_i;
            for r in 0..n {
                for c in 0..n {
                    coeffs[(r, k * n + c)] = (&q[(r, c)] * &self.den).mod_floor(&modulus);
                }
            }
        }
        let y = solve_congruences(&coeffs, &vec![modulus; n * n])?;
        Self::from_int(&self.field, y.rows(), &e0)
    }

    /// `O(I) = (I : I)`.
    pub fn multiplier_ring(&self) -> Result<Order> {
        Order::from_ideal(self.colon(self)?)
    }

    /// `(O : I)` for `O = O(I)`.
    pub fn inverse(&self) -> Result<Self> {
        let o = self.multiplier_ring()?;
        o.as_ideal().colon(self)
    }
}

impl PartialEq for FractionalIdeal {
    fn eq(&self, other: &Self) -> bool {
        same_field(&self.field, &other.field) && self.den == other.den && self.lattice == other.lattice
    }
}

impl Eq for FractionalIdeal {}

impl fmt::Display for FractionalIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.numerator())?;
        if !self.den.is_one() {
            write!(f, " / {}", self.den)?;
        }
        Ok(())
    }
}

impl fmt::Debug for FractionalIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A fractional ideal that is a ring containing `Z[beta]`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Order {
    ideal: FractionalIdeal,
}

impl Order {
    pub fn from_ideal(ideal: FractionalIdeal) -> Result<Self> {
        let unit = FractionalIdeal::unit(&ideal.field);
        if !unit.is_subset_of(&ideal) {
            return Err(Error::Inconsistent(format!("{ideal} does not contain Z[β]")));
        }
        if ideal.product(&ideal)? != ideal {
            return Err(Error::Inconsistent(format!("{ideal} is not closed under multiplication")));
        }
        Ok(Order { ideal })
    }

    pub fn equation_order(field: &Arc<NumberField>) -> Self {
        Order {
            ideal: FractionalIdeal::unit(field),
        }
    }

    pub fn as_ideal(&self) -> &FractionalIdeal {
        &self.ideal
    }

    pub fn is_equation_order(&self) -> bool {
        self.ideal == FractionalIdeal::unit(&self.ideal.field)
    }

    /// `[O : Z[beta]]`.
    pub fn index_over_equation_order(&self) -> BigRational {
        self.ideal.covolume().recip()
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_equation_order() {
            write!(f, "Z[β]")
        } else {
            write!(f, "{}", self.ideal)
        }
    }
}

/// The ideal attached to a matrix together with the eigenvector spanning it.
#[derive(Clone, Debug)]
pub struct EigenIdeal {
    pub matrix: IntMatrix,
    /// `A u = beta u`, entries integral, `u_0` a positive integer.
    pub vector: Vec<FieldElement>,
    pub ideal: FractionalIdeal,
}

/// Eigen ideal of `A` in the field of its characteristic polynomial.
pub fn eigen_ideal(a: &IntMatrix) -> Result<EigenIdeal> {
    if !a.is_square() {
        return Err(Error::Dimension("eigen ideal of a non-square matrix".into()));
    }
    if a.rows() < 2 {
        return Err(Error::Unsupported("eigen ideals need n >= 2".into()));
    }
    let field = NumberField::new(&a.char_poly())?;
    eigen_ideal_in(&field, a)
}

/// Eigen ideals of `A` and `B` in one shared field.
pub fn eigen_ideal_pair(a: &IntMatrix, b: &IntMatrix) -> Result<(EigenIdeal, EigenIdeal)> {
    let ei = eigen_ideal(a)?;
    let ej = eigen_ideal_in(ei.ideal.field(), b)?;
    Ok((ei, ej))
}

/// Column of `adj(beta I - A)`, rescaled so the first entry is a positive
/// integer and all entries are integral with no common factor.
pub fn eigen_ideal_in(field: &Arc<NumberField>, a: &IntMatrix) -> Result<EigenIdeal> {
    let n = field.n;
    if a.rows() != n || !a.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix in a degree-{n} field", a.rows(), a.cols())));
    }
    if a.char_poly() != field.p {
        return Err(Error::Inconsistent(format!(
            "characteristic polynomial {} differs from {}",
            a.char_poly(),
            field.p
        )));
    }
    // adj(xI - A) = sum_j x^j sum_{i > j} c_i A^(i-j-1)
    let c = field.p.coeffs();
    let mut powers = vec![IntMatrix::identity(n)];
    for i in 1..n {
        powers.push(&powers[i - 1] * a);
    }
    let entry = |r: usize, s: usize| -> FieldElement {
        let num = (0..n)
            .map(|j| {
                (j + 1..=n)
                    .map(|i| &c[i] * &powers[i - j - 1][(r, s)])
                    .fold(BigInt::zero(), |acc, x| acc + x)
            })
            .collect();
        field.element(num, BigInt::one())
    };
    for s in 0..n {
        let col: Vec<FieldElement> = (0..n).map(|r| entry(r, s)).collect();
        if col.iter().all(FieldElement::is_zero) {
            continue;
        }
        let inv = col[0]
            .inverse()
            .ok_or_else(|| Error::Inconsistent("eigenvector has a zero entry".into()))?;
        let normed: Vec<FieldElement> = col.iter().map(|x| x.mul(&inv)).collect();
        let d = common_den(&normed);
        let u: Vec<FieldElement> = normed.iter().map(|x| x.scale(&d)).collect();
        let beta = field.beta();
        for r in 0..n {
            let lhs = (0..n).fold(field.zero(), |acc, s| acc.add(&u[s].scale(&a[(r, s)])));
            if lhs != u[r].mul(&beta) {
                return Err(Error::Inconsistent("adjugate column is not an eigenvector".into()));
            }
        }
        let ideal = FractionalIdeal::from_generators(field, &u)?;
        return Ok(EigenIdeal {
            matrix: a.clone(),
            vector: u,
            ideal,
        });
    }
    Err(Error::Inconsistent("adj(βI - A) vanishes".into()))
}

/// Integer `C` with `z u = C w`, so that `A C = C B`.
pub fn intertwiner_from_multiplier(ei: &EigenIdeal, ej: &EigenIdeal, z: &FieldElement) -> Result<IntMatrix> {
    let field = ei.ideal.field();
    let n = field.n;
    let g: Vec<FieldElement> = ei.vector.iter().map(|x| z.mul(x)).collect();
    let dg = common_den(&g);
    let dw = common_den(&ej.vector);
    let to_int = |v: &[FieldElement], d: &BigInt| -> IntMatrix {
        IntMatrix::from_fn(n, n, |i, j| &v[i].num[j] * (d / &v[i].den))
    };
    let gn = to_int(&g, &dg);
    let wn = to_int(&ej.vector, &dw);
    let det = wn.det();
    if det.is_zero() {
        return Err(Error::Inconsistent("eigenvector entries are linearly dependent".into()));
    }
    // C = G W^-1 = (gn / dg)(dw adj(wn) / det)
    let top = (&gn * &wn.adjugate()).scale(&dw);
    let bottom = &dg * &det;
    let mut out = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (q, r) = top[(i, j)].div_rem(&bottom);
            if !r.is_zero() {
                return Err(Error::Inconsistent(format!("z = {z} does not map I into J")));
            }
            out[(i, j)] = q;
        }
    }
    if &ei.matrix * &out != &out * &ej.matrix {
        return Err(Error::Inconsistent("multiplier matrix fails A C = C B".into()));
    }
    Ok(out)
}

/// Conjugator from `z` with `z I = J`; `det C = ±1` is checked.
pub fn conjugator_from_generator(ei: &EigenIdeal, ej: &EigenIdeal, z: &FieldElement) -> Result<IntMatrix> {
    if ei.ideal.scale(z)? != ej.ideal {
        return Err(Error::Inconsistent(format!("z = {z} does not carry I onto J")));
    }
    let c = intertwiner_from_multiplier(ei, ej, z)?;
    if !c.det().abs().is_one() {
        return Err(Error::Inconsistent(format!("conjugator has determinant {}", c.det())));
    }
    Ok(c)
}

#[derive(Clone, Debug)]
pub enum WeakFailure {
    RingMismatch { left: Order, right: Order },
    IdentityFails { identity: &'static str },
}

impl fmt::Display for WeakFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeakFailure::RingMismatch { left, right } => {
                write!(f, "multiplier rings differ: {left} vs {right}")
            }
            WeakFailure::IdentityFails { identity } => write!(f, "{identity} fails"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum WeakEquivalence {
    WeaklyEquivalent {
        ring: Order,
        /// `(J : I)`
        x: FractionalIdeal,
        /// `(I : J)`
        y: FractionalIdeal,
    },
    No(WeakFailure),
}

impl WeakEquivalence {
    pub fn holds(&self) -> bool {
        matches!(self, WeakEquivalence::WeaklyEquivalent { .. })
    }
}

/// Checks `I X = J`, `J Y = I` and `X Y = O` for `X = (J : I)`, `Y = (I : J)`.
pub fn weak_equivalence(i: &FractionalIdeal, j: &FractionalIdeal) -> Result<WeakEquivalence> {
    let oi = i.multiplier_ring()?;
    let oj = j.multiplier_ring()?;
    if oi != oj {
        return Ok(WeakEquivalence::No(WeakFailure::RingMismatch { left: oi, right: oj }));
    }
    let x = j.colon(i)?;
    let y = i.colon(j)?;
    let checks: [(&'static str, FractionalIdeal, &FractionalIdeal); 3] = [
        ("I X = J", i.product(&x)?, j),
        ("J Y = I", j.product(&y)?, i),
        ("X Y = O", x.product(&y)?, oi.as_ideal()),
    ];
    for (identity, lhs, rhs) in checks {
        if lhs != *rhs {
            return Ok(WeakEquivalence::No(WeakFailure::IdentityFails { identity }));
        }
    }
    Ok(WeakEquivalence::WeaklyEquivalent { ring: oi, x, y })
}

#[derive(Clone, Debug)]
pub enum PrincipalSearch {
    Principal(FieldElement),
    NotFoundWithinBound { bound: u64, tried: u64 },
}

fn combination(x: &FractionalIdeal, c: &[i64]) -> FieldElement {
    let n = x.field.n;
    let h = x.numerator();
    let num = (0..n)
        .map(|j| {
            c.iter()
                .enumerate()
                .filter(|(_, ci)| **ci != 0)
                .fold(BigInt::zero(), |acc, (i, ci)| acc + &h[(i, j)] * *ci)
        })
        .collect();
    x.field.element(num, x.den.clone())
}

/// Looks for `z` with `z O(X) = X` among combinations of the HNF basis with
/// coefficients in `[-bound, bound]`, in shell order.
///
/// Every such `z` lies in `X`, so `z O ⊆ X` and equality reduces to equal
/// covolumes; the candidate is then confirmed by HNF equality.
pub fn principal_search(x: &FractionalIdeal, bound: u64) -> Result<PrincipalSearch> {
    let ring = x.multiplier_ring()?;
    let target = x.covolume() / ring.as_ideal().covolume();
    let mut tried = 0u64;
    for c in ShellIter::cube(x.field.n, bound) {
        if c.iter().all(|&ci| ci == 0) {
            continue;
        }
        tried += 1;
        let z = combination(x, &c);
        if z.norm().abs() == target && ring.as_ideal().scale(&z)? == *x {
            return Ok(PrincipalSearch::Principal(z));
        }
    }
    Ok(PrincipalSearch::NotFoundWithinBound { bound, tried })
}

/// `gamma ∈ X` with `alpha O + gamma O = X`, `O = O(X)`, by shell search over
/// `X`'s basis with coefficients in `[-bound, bound]`.
pub fn two_generator_rep(x: &FractionalIdeal, alpha: &FieldElement, bound: u64) -> Result<Option<FieldElement>> {
    if alpha.is_zero() || !x.contains(alpha) {
        return Err(Error::Inconsistent(format!("α = {alpha} is not a nonzero element of X")));
    }
    let ring = x.multiplier_ring()?;
    let ao = ring.as_ideal().scale(alpha)?;
    if ao == *x {
        return Ok(Some(x.field.zero()));
    }
    for c in ShellIter::cube(x.field.n, bound) {
        if c.iter().all(|&ci| ci == 0) {
            continue;
        }
        let gamma = combination(x, &c);
        if ao.sum(&ring.as_ideal().scale(&gamma)?)? == *x {
            return Ok(Some(gamma));
        }
    }
    Ok(None)
}

/// `a, b ∈ M` with `a alpha + b gamma = 1`, from the HNF transform of the
/// generators `m_i alpha, m_i gamma` of `alpha M + gamma M`.
pub fn solve_bezout(
    alpha: &FieldElement,
    gamma: &FieldElement,
    m: &FractionalIdeal,
) -> Result<(FieldElement, FieldElement)> {
    let field = m.field.clone();
    let n = field.n;
    let basis = m.basis();
    let gens: Vec<FieldElement> = basis
        .iter()
        .map(|b| b.mul(alpha))
        .chain(basis.iter().map(|b| b.mul(gamma)))
        .collect();
    let d = common_den(&gens);
    let g = IntMatrix::from_fn(2 * n, n, |i, j| &gens[i].num[j] * (&d / &gens[i].den));
    let res = hnf_with_transform(&g);
    let lattice = LatticeBasis::from_generators(&res.basis());
    let mut target = vec![BigInt::zero(); n];
    target[0] = d.clone();
    let xi = lattice
        .coordinates(&target)
        .ok_or_else(|| Error::Inconsistent("1 is not in αM + γM".into()))?;
    let s: Vec<BigInt> = (0..2 * n)
        .map(|col| {
            xi.iter()
                .enumerate()
                .fold(BigInt::zero(), |acc, (r, x)| acc + x * &res.u[(r, col)])
        })
        .collect();
    let comb = |coef: &[BigInt]| -> FieldElement {
        coef.iter()
            .zip(&basis)
            .fold(field.zero(), |acc, (c, b)| acc.add(&b.scale(c)))
    };
    let a = comb(&s[..n]);
    let b = comb(&s[n..]);
    if a.mul(alpha).add(&b.mul(gamma)) != field.one() {
        return Err(Error::Inconsistent("Bezout solution fails verification".into()));
    }
    Ok((a, b))
}

/// `X_g` with `gamma u = X_g w`; checks `A X_g = X_g B`, `det X_g != 0` and
/// that `m -> m X_g` induces an isomorphism `BF_g(A) -> BF_g(B)`.
pub fn xg_matrix(ei: &EigenIdeal, ej: &EigenIdeal, g: &IntPolynomial, gamma: &FieldElement) -> Result<(IntMatrix, ModuleMap)> {
    if gamma.is_zero() {
        return Err(Error::Inconsistent("γ = 0".into()));
    }
    let x = intertwiner_from_multiplier(ei, ej, gamma)?;
    if x.det().is_zero() {
        return Err(Error::Inconsistent("X_g is singular".into()));
    }
    let ga = bf_group(&ei.matrix, g)?;
    let gb = bf_group(&ej.matrix, g)?;
    let map = ModuleMap::induced_by_matrix(ga.module, gb.module, &x)?;
    map.verify_isomorphism()?;
    Ok((x, map))
}

/// One step of the semi-conjugacy construction for a fixed `g`.
#[derive(Clone, Debug)]
pub struct SemiConjugacy {
    pub g: IntPolynomial,
    pub alpha: FieldElement,
    pub gamma: FieldElement,
    pub a: FieldElement,
    pub b: FieldElement,
    pub x_g: IntMatrix,
    pub map: ModuleMap,
}

#[derive(Clone, Debug)]
pub enum SemiConjugacyOutcome {
    Built(SemiConjugacy),
    NoSecondGenerator { g: IntPolynomial, bound: u64 },
}

/// Builds, for each `g`, the matrix `X_g` from a two-generator presentation
/// `X = alpha O + gamma O` with `alpha = g(beta)`.
///
/// `I` is first rescaled by an integer `c` so that `cI ⊆ J`; then `1 ∈ X` and
/// `alpha ∈ O ⊆ X`. Requires `I`, `J` weakly equivalent.
pub fn semi_conjugacies(
    ei: &EigenIdeal,
    ej: &EigenIdeal,
    family: &[IntPolynomial],
    bound: u64,
) -> Result<Vec<SemiConjugacyOutcome>> {
    let field = ei.ideal.field().clone();
    let c = if ei.ideal.is_subset_of(&ej.ideal) {
        BigInt::one()
    } else {
        ej.ideal.numerator().det().abs() * ei.ideal.denominator()
    };
    let scaled = EigenIdeal {
        matrix: ei.matrix.clone(),
        vector: ei.vector.iter().map(|x| x.scale(&c)).collect(),
        ideal: ei.ideal.scale_int(&c)?,
    };
    let (x, y) = match weak_equivalence(&scaled.ideal, &ej.ideal)? {
        WeakEquivalence::WeaklyEquivalent { x, y, .. } => (x, y),
        WeakEquivalence::No(why) => {
            return Err(Error::Unsupported(format!("semi-conjugacies need weak equivalence ({why})")))
        }
    };
    let mut out = Vec::with_capacity(family.len());
    for g in family {
        let alpha = field.from_poly(g);
        let Some(gamma) = two_generator_rep(&x, &alpha, bound)? else {
            out.push(SemiConjugacyOutcome::NoSecondGenerator { g: g.clone(), bound });
            continue;
        };
        let (a, b) = solve_bezout(&alpha, &gamma, &y)?;
        let (x_g, map) = xg_matrix(&scaled, ej, g, &gamma)?;
        out.push(SemiConjugacyOutcome::Built(SemiConjugacy {
            g: g.clone(),
            alpha,
            gamma,
            a,
            b,
            x_g,
            map,
        }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> IntPolynomial {
        "x^3 - 2x^2 - 8x - 1".parse().unwrap()
    }

    fn a2() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 0], [0, 0, 1], [1, 8, 2]])
    }

    fn b2() -> IntMatrix {
        IntMatrix::from_i64(&[[-1, 2, 0], [-1, 1, 1], [-5, 9, 2]])
    }

    fn el(f: &Arc<NumberField>, c: &[i64]) -> FieldElement {
        f.element(c.iter().map(|&x| BigInt::from(x)).collect(), BigInt::one())
    }

    #[test]
    fn irreducibility_cases() {
        let p = |s: &str| s.parse::<IntPolynomial>().unwrap();
        assert_eq!(irreducibility(&p2()).unwrap(), Irreducibility::Irreducible);
        assert_eq!(irreducibility(&p("x^3 - 23x^2 + 7x - 1")).unwrap(), Irreducibility::Irreducible);
        assert!(matches!(irreducibility(&p("x^3 - 1")).unwrap(), Irreducibility::Reducible { .. }));
        // (x^2 + x - 1)(x^2 - 3x + 1)
        let q = irreducibility(&p("x^4 - 2x^3 - 3x^2 + 4x - 1")).unwrap();
        match q {
            Irreducibility::Reducible { factor } => assert_eq!(factor.degree(), Some(2)),
            other => panic!("{other:?}"),
        }
        assert_eq!(irreducibility(&p("x^4 - x - 1")).unwrap(), Irreducibility::Irreducible);
    }

    #[test]
    fn element_products() {
        let f = NumberField::new(&p2()).unwrap();
        let b = f.beta();
        let b2 = b.mul(&b);
        assert_eq!(b.mul(&b2), el(&f, &[1, 8, 2]));
        let x = el(&f, &[3, -1, 4]);
        assert_eq!(x.mul(&f.one()), x);
        let inv = x.inverse().unwrap();
        assert_eq!(x.mul(&inv), f.one());
        assert_eq!(b.norm(), BigRational::from_integer(BigInt::one()));
    }

    #[test]
    fn companion_ideal_is_the_ring() {
        let e = eigen_ideal(&a2()).unwrap();
        let f = e.ideal.field().clone();
        assert_eq!(e.ideal, FractionalIdeal::unit(&f));
        assert_eq!(e.vector, vec![f.one(), f.beta(), f.beta().mul(&f.beta())]);
        assert!(eigen_ideal(&IntMatrix::from_i64(&[[3]])).is_err());
        let golden = IntMatrix::from_i64(&[[2, 1], [1, 1]]).char_poly();
        assert!(NumberField::new(&golden).is_ok());
        assert!(eigen_ideal(&IntMatrix::from_i64(&[[2, 0], [0, 3]])).is_err());
    }

    #[test]
    fn eigen_ideal_of_b2_is_integral_full_rank() {
        let (ei, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
        assert!(ej.ideal.is_integral());
        assert_eq!(ej.ideal.numerator().rows(), 3);
        assert!(!ej.ideal.numerator().det().is_zero());
        let orig = ej.ideal.clone();
        assert_eq!(FractionalIdeal::from_int(ej.ideal.field(), orig.numerator(), orig.denominator()).unwrap(), orig);
        assert!(ei.ideal.is_subset_of(&FractionalIdeal::unit(ei.ideal.field())));
    }

    #[test]
    fn products_and_inverses() {
        let (_, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
        let f = ej.ideal.field().clone();
        let unit = FractionalIdeal::unit(&f);
        let j = &ej.ideal;
        assert_eq!(j.product(&unit).unwrap(), *j);
        let z = el(&f, &[1, 2, 0]);
        let w = el(&f, &[0, -1, 3]);
        let lhs = unit.scale(&z).unwrap().product(&unit.scale(&w).unwrap()).unwrap();
        assert_eq!(lhs, unit.scale(&z.mul(&w)).unwrap());
        assert_eq!(j.product(&j.inverse().unwrap()).unwrap(), unit);
    }

    #[test]
    fn colon_properties() {
        let (_, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
        let f = ej.ideal.field().clone();
        let unit = FractionalIdeal::unit(&f);
        let j = &ej.ideal;
        assert!(unit.is_subset_of(&j.colon(j).unwrap()));
        assert_eq!(unit.colon(&unit).unwrap(), unit);
        let z = f.element(vec![BigInt::from(2), BigInt::from(-1), BigInt::from(1)], BigInt::from(3));
        let zj = j.scale(&z).unwrap();
        assert_eq!(zj.colon(j).unwrap(), j.colon(j).unwrap().scale(&z).unwrap());
        let x = j.colon(&zj).unwrap();
        assert!(x.product(&zj).unwrap().is_subset_of(j));
    }

    #[test]
    fn multiplier_rings() {
        let (ei, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
        assert!(ei.ideal.multiplier_ring().unwrap().is_equation_order());
        assert!(ej.ideal.multiplier_ring().unwrap().is_equation_order());
        // Z[sqrt 5]: the ideal (2, 1 + sqrt 5) has multiplier ring Z[(1 + sqrt 5)/2]
        let f = NumberField::new(&"x^2 - 5".parse().unwrap()).unwrap();
        let i = FractionalIdeal::generated_by(&f, &[f.integer(BigInt::from(2)), el(&f, &[1, 1])]).unwrap();
        let o = i.multiplier_ring().unwrap();
        assert!(!o.is_equation_order());
        assert!(o.as_ideal().contains(&f.element(vec![BigInt::one(), BigInt::one()], BigInt::from(2))));
        assert_eq!(o.index_over_equation_order(), BigRational::from_integer(BigInt::from(2)));
        let z = el(&f, &[3, 1]);
        assert_eq!(i.scale(&z).unwrap().multiplier_ring().unwrap(), o);
    }

    #[test]
    fn weak_equivalence_cases() {
        let (ei, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
        let f = ei.ideal.field().clone();
        match weak_equivalence(&ei.ideal, &ei.ideal).unwrap() {
            WeakEquivalence::WeaklyEquivalent { ring, x, y } => {
                assert_eq!(&x, ring.as_ideal());
                assert_eq!(&y, ring.as_ideal());
            }
            other => panic!("{other:?}"),
        }
        let z = el(&f, &[1, 1, 1]);
        assert!(weak_equivalence(&ej.ideal, &ej.ideal.scale(&z).unwrap()).unwrap().holds());
        assert!(weak_equivalence(&ei.ideal, &ej.ideal).unwrap().holds());

        let g = NumberField::new(&"x^2 - 5".parse().unwrap()).unwrap();
        let i = FractionalIdeal::generated_by(&g, &[g.integer(BigInt::from(2)), el(&g, &[1, 1])]).unwrap();
        let w = weak_equivalence(&i, &FractionalIdeal::unit(&g)).unwrap();
        assert!(matches!(w, WeakEquivalence::No(WeakFailure::RingMismatch { .. })));
    }

    #[test]
    fn principal_cases() {
        let f = NumberField::new(&p2()).unwrap();
        let unit = FractionalIdeal::unit(&f);
        match principal_search(&unit, 2).unwrap() {
            PrincipalSearch::Principal(z) => assert_eq!(z, f.one()),
            other => panic!("{other:?}"),
        }
        let two = unit.scale_int(&BigInt::from(2)).unwrap();
        match principal_search(&two, 2).unwrap() {
            PrincipalSearch::Principal(z) => {
                assert_eq!(z, f.integer(BigInt::from(2)));
                assert_eq!(unit.scale(&z).unwrap(), two);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn example_two_colon_is_not_principal_within_bound() {
        let (ei, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
        let x = ej.ideal.colon(&ei.ideal).unwrap();
        match principal_search(&x, 8).unwrap() {
            PrincipalSearch::NotFoundWithinBound { bound, tried } => {
                assert_eq!(bound, 8);
                assert_eq!(tried, 17 * 17 * 17 - 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bezout_and_two_generators() {
        let f = NumberField::new(&p2()).unwrap();
        let unit = FractionalIdeal::unit(&f);
        let one = f.one();
        let two = f.integer(BigInt::from(2));
        assert_eq!(two_generator_rep(&unit, &one, 2).unwrap(), Some(f.zero()));
        let g = two_generator_rep(&unit, &two, 2).unwrap().unwrap();
        assert_eq!(unit.scale(&two).unwrap().sum(&unit.scale(&g).unwrap()).unwrap(), unit);
        let (a, b) = solve_bezout(&one, &f.zero(), &unit).unwrap();
        assert_eq!(a, one);
        assert!(b.is_zero());
        let (a, b) = solve_bezout(&two, &one, &unit).unwrap();
        assert_eq!(a.mul(&two).add(&b), one);
        assert!(solve_bezout(&two, &two, &unit).is_err());
    }

    #[test]
    fn xg_identity_and_transport() {
        let ei = eigen_ideal(&a2()).unwrap();
        let f = ei.ideal.field().clone();
        let g = IntPolynomial::from_i64(&[1, 1]);
        let (x, map) = xg_matrix(&ei, &ei, &g, &f.one()).unwrap();
        assert!(x.is_identity());
        assert!(map.is_bijective());

        let u = IntMatrix::from_i64(&[[1, 2, 0], [0, 1, -1], [1, 1, 0]]);
        let uinv = u.unimodular_inverse().unwrap();
        let b = &(&uinv * &a2()) * &u;
        let ej = eigen_ideal_in(&f, &b).unwrap();
        // w = lambda U^-1 u
        let v0 = (0..3).fold(f.zero(), |acc, s| acc.add(&ei.vector[s].scale(&uinv[(0, s)])));
        let lambda = ej.vector[0].mul(&v0.inverse().unwrap());
        let c = conjugator_from_generator(&ei, &ej, &lambda).unwrap();
        assert_eq!(c, u);
    }

    #[test]
    fn example_two_semi_conjugacies() {
        let (ei, ej) = eigen_ideal_pair(&a2(), &b2()).unwrap();
        let family: Vec<IntPolynomial> = ["x - 1", "x + 1", "x^2 - 1", "x^6 - 1"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let out = semi_conjugacies(&ei, &ej, &family, 4).unwrap();
        assert_eq!(out.len(), family.len());
        for o in out {
            let SemiConjugacyOutcome::Built(s) = o else { panic!("{o:?}") };
            assert_eq!(&ei.matrix * &s.x_g, &s.x_g * &ej.matrix);
            assert!(s.map.is_bijective() && s.map.intertwines());
            assert_eq!(s.a.mul(&s.alpha).add(&s.b.mul(&s.gamma)), ei.ideal.field().one());
            if s.g.to_string() == "x + 1" {
                assert_eq!(*s.map.source().order(), BigInt::from(4));
            }
        }
    }
}
