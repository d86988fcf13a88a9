//! Rational similarity and integer intertwiners `A C = C B`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::enumerate::ShellIter;
use crate::error::{Error, Result};
use crate::linalg::{left_kernel, lll_reduce, IntMatrix, IntPolynomial, LatticeBasis, QPoly};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimilarityWitness {
    Dimension { left: usize, right: usize },
    CharPoly { left: IntPolynomial, right: IntPolynomial },
    /// Invariant factors of `xI - A` and `xI - B` over `Q[x]`.
    InvariantFactors { left: Vec<IntPolynomial>, right: Vec<IntPolynomial> },
}

impl fmt::Display for SimilarityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[IntPolynomial]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            SimilarityWitness::Dimension { left, right } => write!(f, "dimensions {left} and {right} differ"),
            SimilarityWitness::CharPoly { left, right } => {
                write!(f, "characteristic polynomials differ: {left} vs {right}")
            }
            SimilarityWitness::InvariantFactors { left, right } => {
                write!(f, "invariant factors over Q[x] differ: ({}) vs ({})", list(left), list(right))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Similarity {
    Similar,
    NotSimilar(SimilarityWitness),
}

impl Similarity {
    pub fn is_similar(&self) -> bool {
        matches!(self, Similarity::Similar)
    }
}

/// Monic invariant factors of `xI - A` over `Q[x]`, from a Smith reduction.
pub fn rational_invariant_factors(a: &IntMatrix) -> Vec<IntPolynomial> {
    let n = a.rows();
    let mut m: Vec<Vec<QPoly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut c = vec![-a[(i, j)].clone()];
                    if i == j {
                        c.push(BigInt::one());
                    }
                    QPoly::from(&IntPolynomial::new(c))
                })
                .collect()
        })
        .collect();
    let mut diag = Vec::with_capacity(n);
    for t in 0..n {
        loop {
            let pivot = (t..n)
                .flat_map(|i| (t..n).map(move |j| (i, j)))
                .filter(|&(i, j)| !m[i][j].is_zero())
                .min_by_key(|&(i, j)| m[i][j].degree());
            let Some((pi, pj)) = pivot else {
                diag.extend((t..n).map(|_| QPoly::zero()));
                return finish(diag);
            };
            m.swap(t, pi);
            for row in m.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in t + 1..n {
                let (q, r) = m[i][t].div_rem(&m[t][t]);
                if !q.is_zero() {
                    for j in t..n {
                        let s = q.mul(&m[t][j]);
                        m[i][j] = m[i][j].sub(&s);
                    }
                }
                clean &= r.is_zero();
            }
            for j in t + 1..n {
                let (q, r) = m[t][j].div_rem(&m[t][t]);
                if !q.is_zero() {
                    for i in t..n {
                        let s = q.mul(&m[i][t]);
                        m[i][j] = m[i][j].sub(&s);
                    }
                }
                clean &= r.is_zero();
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..n)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !m[i][j].div_rem(&m[t][t]).1.is_zero());
            match bad {
                Some((i, _)) => {
                    for j in t..n {
                        let s = m[i][j].clone();
                        m[t][j] = m[t][j].add(&s);
                    }
                }
                None => break,
            }
        }
        diag.push(m[t][t].monic());
    }
    finish(diag)
}

fn finish(diag: Vec<QPoly>) -> Vec<IntPolynomial> {
    diag.iter()
        .map(|d| d.to_int().expect("monic rational factors of monic integer polynomials are integral"))
        .collect()
}

/// Rational similarity. Squarefree characteristic polynomials make equal
/// characteristic polynomials sufficient; otherwise invariant factors are compared.
pub fn similarity_check(a: &IntMatrix, b: &IntMatrix) -> Result<Similarity> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension("similarity of non-square matrices".into()));
    }
    if a.rows() != b.rows() {
        return Ok(Similarity::NotSimilar(SimilarityWitness::Dimension {
            left: a.rows(),
            right: b.rows(),
        }));
    }
    let (pa, pb) = (a.char_poly(), b.char_poly());
    if pa != pb {
        return Ok(Similarity::NotSimilar(SimilarityWitness::CharPoly { left: pa, right: pb }));
    }
    if pa.gcd(&pa.derivative()).degree() == Some(0) {
        return Ok(Similarity::Similar);
    }
    let (fa, fb) = (rational_invariant_factors(a), rational_invariant_factors(b));
    if fa != fb {
        return Ok(Similarity::NotSimilar(SimilarityWitness::InvariantFactors { left: fa, right: fb }));
    }
    Ok(Similarity::Similar)
}

/// Integer solutions of `A C = C B`, as vectorised matrices (row-major).
#[derive(Clone, Debug)]
pub struct IntertwinerBasis {
    n: usize,
    lattice: LatticeBasis,
}

impl IntertwinerBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    pub fn lattice(&self) -> &LatticeBasis {
        &self.lattice
    }

    fn unvec(&self, v: &[BigInt]) -> IntMatrix {
        IntMatrix::from_fn(self.n, self.n, |i, j| v[i * self.n + j].clone())
    }

    /// HNF basis matrices `K_1, ..., K_r`.
    pub fn matrices(&self) -> Vec<IntMatrix> {
        (0..self.rank()).map(|i| self.unvec(self.lattice.rows().row(i))).collect()
    }

    pub fn contains(&self, c: &IntMatrix) -> bool {
        c.rows() == self.n && c.cols() == self.n && self.lattice.contains(c.entries())
    }
}

/// Left kernel of the `n^2 x n^2` matrix of `C -> A C - C B`.
pub fn intertwiner_lattice(a: &IntMatrix, b: &IntMatrix) -> Result<IntertwinerBasis> {
    let n = a.rows();
    if !a.is_square() || !b.is_square() || b.rows() != n {
        return Err(Error::Dimension("intertwiners of matrices of different sizes".into()));
    }
    let nn = n * n;
    // coefficient of C_kl in (AC - CB)_ij
    let m = IntMatrix::from_fn(nn, nn, |row, col| {
        let (k, l) = (row / n, row % n);
        let (i, j) = (col / n, col % n);
        let mut v = BigInt::zero();
        if l == j {
            v += &a[(i, k)];
        }
        if k == i {
            v -= &b[(l, j)];
        }
        v
    });
    let lattice = left_kernel(&m);
    let out = IntertwinerBasis { n, lattice };
    for k in out.matrices() {
        if (a * &k) != (&k * b) {
            return Err(Error::Inconsistent("kernel vector is not an intertwiner".into()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum UnimodularSearch {
    Conjugator(IntMatrix),
    NotFound { bound: u64, tried: u64 },
}

fn det_i128(m: &[i128], n: usize) -> Option<i128> {
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| a[i * n + k] != 0) else {
                return Some(0);
            };
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[k * n + k]
                    .checked_mul(a[i * n + j])?
                    .checked_sub(a[i * n + k].checked_mul(a[k * n + j])?)?;
                a[i * n + j] = t / prev;
            }
        }
        prev = a[k * n + k];
    }
    Some(sign * a[n * n - 1])
}

/// Searches `C = sum c_i K_i` with `|c_i| <= bound` for `det C = ±1`.
///
/// The coefficients run over an LLL-reduced basis of the intertwiner lattice,
/// in shell order, so short intertwiners are met first. Determinants use
/// checked `i128` arithmetic with a big-integer fallback.
pub fn unimodular_search(a: &IntMatrix, b: &IntMatrix, basis: &IntertwinerBasis, bound: u64) -> Result<UnimodularSearch> {
    let n = basis.n;
    let r = basis.rank();
    if r == 0 {
        return Ok(UnimodularSearch::NotFound { bound, tried: 0 });
    }
    let reduced = lll_reduce(basis.lattice.rows());
    let small: Option<Vec<Vec<i128>>> = (0..r)
        .map(|i| reduced.row(i).iter().map(|x| x.to_i64().map(i128::from)).collect())
        .collect();
    let mut tried = 0u64;
    let mut buf = vec![0i128; n * n];
    for c in ShellIter::cube(r, bound) {
        tried += 1;
        let det = match &small {
            Some(rows) => {
                buf.iter_mut().for_each(|x| *x = 0);
                let mut ok = true;
                for (ci, row) in c.iter().zip(rows) {
                    if *ci == 0 {
                        continue;
                    }
                    for (x, y) in buf.iter_mut().zip(row) {
                        match y.checked_mul(*ci as i128).and_then(|t| x.checked_add(t)) {
                            Some(v) => *x = v,
                            None => ok = false,
                        }
                    }
                }
                if ok {
                    det_i128(&buf, n).map(BigInt::from)
                } else {
                    None
                }
            }
            None => None,
        };
        let det = det.unwrap_or_else(|| combine(&reduced, &c, n).det());
        if det.abs().is_one() {
            let cmat = combine(&reduced, &c, n);
            if (a * &cmat) != (&cmat * b) || !cmat.det().abs().is_one() {
                return Err(Error::Inconsistent("unimodular candidate fails re-verification".into()));
            }
            return Ok(UnimodularSearch::Conjugator(cmat));
        }
    }
    Ok(UnimodularSearch::NotFound { bound, tried })
}

fn combine(rows: &IntMatrix, c: &[i64], n: usize) -> IntMatrix {
    let mut v = vec![BigInt::zero(); n * n];
    for (i, ci) in c.iter().enumerate() {
        if *ci == 0 {
            continue;
        }
        for (x, y) in v.iter_mut().zip(rows.row(i)) {
            *x += y * *ci;
        }
    }
    IntMatrix::from_fn(n, n, |i, j| v[i * n + j].clone())
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

    fn b2() -> IntMatrix {
        IntMatrix::from_i64(&[[-1, 2, 0], [-1, 1, 1], [-5, 9, 2]])
    }

    #[test]
    fn similarity_cases() {
        assert!(similarity_check(&a1(), &b1()).unwrap().is_similar());
        assert!(similarity_check(&a1(), &a1()).unwrap().is_similar());
        // equal characteristic polynomial (x - 2)^3, different minimal polynomials
        let one_block = IntMatrix::from_i64(&[[2, 1, 0], [0, 2, 1], [0, 0, 2]]);
        let two_blocks = IntMatrix::from_i64(&[[2, 1, 0], [0, 2, 0], [0, 0, 2]]);
        match similarity_check(&one_block, &two_blocks).unwrap() {
            Similarity::NotSimilar(SimilarityWitness::InvariantFactors { left, right }) => {
                assert_eq!(left.last().unwrap().to_string(), "x^3 - 6x^2 + 12x - 8");
                assert_eq!(right.last().unwrap().to_string(), "x^2 - 4x + 4");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            similarity_check(&a1(), &a2()).unwrap(),
            Similarity::NotSimilar(SimilarityWitness::CharPoly { .. })
        ));
        let conj = IntMatrix::from_i64(&[[2, 0, 0], [1, 2, 0], [0, 0, 2]]);
        assert!(similarity_check(&two_blocks, &conj).unwrap().is_similar());
    }

    #[test]
    fn invariant_factor_products() {
        let m = IntMatrix::from_i64(&[[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 3]]);
        let f = rational_invariant_factors(&m);
        let strs: Vec<String> = f.iter().map(|p| p.to_string()).collect();
        assert_eq!(strs, vec!["1", "1", "x - 1", "x^3 - 5x^2 + 7x - 3"]);
    }

    #[test]
    fn commutant_rank() {
        let k = intertwiner_lattice(&a1(), &a1()).unwrap();
        assert_eq!(k.rank(), 3);
        for c in [IntMatrix::identity(3), a1(), &a1() * &a1()] {
            assert!(k.contains(&c));
        }
        let not_similar = intertwiner_lattice(&a1(), &a2()).unwrap();
        assert_eq!(not_similar.rank(), 0);
    }

    #[test]
    fn conjugate_pair_intertwiner() {
        let u = IntMatrix::from_i64(&[[1, 2, 0], [0, 1, -1], [1, 1, 0]]);
        let uinv = u.unimodular_inverse().unwrap();
        let b = &(&u * &a1()) * &uinv;
        let k = intertwiner_lattice(&a1(), &b).unwrap();
        assert!(k.contains(&uinv));
        match unimodular_search(&a1(), &b, &k, 3).unwrap() {
            UnimodularSearch::Conjugator(c) => {
                assert_eq!(&a1() * &c, &c * &b);
                assert!(c.det().abs().is_one());
            }
            other => panic!("{other:?}"),
        }
        match unimodular_search(&a1(), &a1(), &intertwiner_lattice(&a1(), &a1()).unwrap(), 1).unwrap() {
            UnimodularSearch::Conjugator(c) => assert!(c.det().abs().is_one()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn example_two_has_no_small_conjugator() {
        let k = intertwiner_lattice(&a2(), &b2()).unwrap();
        assert_eq!(k.rank(), 3);
        assert!(matches!(
            unimodular_search(&a2(), &b2(), &k, 5).unwrap(),
            UnimodularSearch::NotFound { tried: 1331, .. }
        ));
    }

    #[test]
    fn small_determinants() {
        let m = [2i128, 0, 1, 1, 3, 2, 1, 1, 2];
        assert_eq!(det_i128(&m, 3), Some(6));
        assert_eq!(det_i128(&[0, 1, 1, 0], 2), Some(-1));
    }
}
