use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::matrix::IntMatrix;
use super::normal_form::{hnf, hnf_with_transform};
use crate::error::{Error, Result};

/// Sublattice of `Z^dim` in canonical row-style HNF; equality is entrywise.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LatticeBasis {
    dim: usize,
    rows: IntMatrix,
}

impl LatticeBasis {
    /// Lattice spanned by the rows of `gens`.
    pub fn from_generators(gens: &IntMatrix) -> Self {
        let dim = gens.cols();
        let rows = hnf(gens);
        LatticeBasis {
            dim,
            rows: if rows.rows() == 0 {
                IntMatrix::zeros(0, dim)
            } else {
                rows
            },
        }
    }

    pub fn full(dim: usize) -> Self {
        LatticeBasis {
            dim,
            rows: IntMatrix::identity(dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        LatticeBasis {
            dim,
            rows: IntMatrix::zeros(0, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.rows()
    }

    pub fn rows(&self) -> &IntMatrix {
        &self.rows
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim
    }

    fn pivot(&self, i: usize) -> usize {
        (0..self.dim)
            .find(|&j| !self.rows[(i, j)].is_zero())
            .expect("HNF rows are nonzero")
    }

    /// Integer coordinates `xi` with `xi * rows = v`, if any.
    pub fn coordinates(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(v.len(), self.dim, "vector dimension mismatch");
        let mut rest = v.to_vec();
        let mut xi = Vec::with_capacity(self.rank());
        for i in 0..self.rank() {
            let p = self.pivot(i);
            if rest[..p].iter().any(|x| !x.is_zero()) {
                return None;
            }
            let (q, r) = rest[p].div_rem(&self.rows[(i, p)]);
            if !r.is_zero() {
                return None;
            }
            if !q.is_zero() {
                for (j, x) in rest.iter_mut().enumerate().skip(p) {
                    *x -= &q * &self.rows[(i, j)];
                }
            }
            xi.push(q);
        }
        rest.iter().all(Zero::is_zero).then_some(xi)
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.coordinates(v).is_some()
    }

    /// Every row of `gens` is a member.
    pub fn contains_rows(&self, gens: &IntMatrix) -> bool {
        (0..gens.rows()).all(|i| self.contains(gens.row(i)))
    }

    pub fn contains_lattice(&self, other: &LatticeBasis) -> bool {
        self.contains_rows(&other.rows)
    }

    pub fn sum(&self, other: &LatticeBasis) -> Result<LatticeBasis> {
        self.check_dim(other)?;
        Ok(Self::from_generators(&self.rows.vstack(&other.rows)?))
    }

    /// Intersection through the HNF of `[[L1, L1], [L2, 0]]`.
    pub fn intersection(&self, other: &LatticeBasis) -> Result<LatticeBasis> {
        self.check_dim(other)?;
        let n = self.dim;
        if self.rank() == 0 || other.rank() == 0 {
            return Ok(Self::zero(n));
        }
        let top = self.rows.hstack(&self.rows)?;
        let bottom = other.rows.hstack(&IntMatrix::zeros(other.rank(), n))?;
        let h = hnf(&top.vstack(&bottom)?);
        let keep: Vec<usize> = (0..h.rows())
            .filter(|&i| (0..n).all(|j| h[(i, j)].is_zero()))
            .collect();
        let cols: Vec<usize> = (n..2 * n).collect();
        let picked = h.submatrix(&keep, &cols);
        Ok(LatticeBasis {
            dim: n,
            rows: if picked.rows() == 0 {
                IntMatrix::zeros(0, n)
            } else {
                picked
            },
        })
    }

    /// `[Z^dim : L]` for a full-rank lattice.
    pub fn index(&self) -> Option<BigInt> {
        if !self.is_full_rank() {
            return None;
        }
        Some((0..self.rank()).map(|i| self.rows[(i, i)].clone()).product())
    }

    /// Keeps the first `k` coordinates of every vector.
    pub fn project_prefix(&self, k: usize) -> LatticeBasis {
        let rows: Vec<usize> = (0..self.rank()).collect();
        let cols: Vec<usize> = (0..k).collect();
        Self::from_generators(&self.rows.submatrix(&rows, &cols))
    }

    fn check_dim(&self, other: &LatticeBasis) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "lattices in Z^{} and Z^{}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// `{x : x * m = 0}` as a sublattice of `Z^(m.rows())`.
pub fn left_kernel(m: &IntMatrix) -> LatticeBasis {
    let r = hnf_with_transform(m);
    let keep: Vec<usize> = (r.rank..m.rows()).collect();
    let cols: Vec<usize> = (0..m.rows()).collect();
    LatticeBasis::from_generators(&r.u.submatrix(&keep, &cols))
}

/// `{x in Z^N : (x * coeffs)_j = 0 mod moduli[j]}`; a zero modulus asks for equality.
pub fn solve_congruences(coeffs: &IntMatrix, moduli: &[BigInt]) -> Result<LatticeBasis> {
    let (n, c) = (coeffs.rows(), coeffs.cols());
    if moduli.len() != c {
        return Err(Error::Dimension("one modulus per congruence".into()));
    }
    if c == 0 {
        return Ok(LatticeBasis::full(n));
    }
    let stacked = coeffs.vstack(&IntMatrix::diagonal(moduli))?;
    Ok(left_kernel(&stacked).project_prefix(n))
}

/// Coordinates modulo a full-rank lattice, or an error if `v` is not congruent to a member.
pub fn require_member(l: &LatticeBasis, v: &[BigInt], what: &str) -> Result<Vec<BigInt>> {
    l.coordinates(v)
        .ok_or_else(|| Error::Inconsistent(format!("{what}: vector not in lattice")))
}

/// `e_i` as a vector of length `n`.
pub fn unit_vector(n: usize, i: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n];
    v[i] = BigInt::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a1() -> IntMatrix {
        IntMatrix::from_i64(&[[0, 1, 0], [1, 0, 4], [6, -2, 23]])
    }

    fn bv(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn membership_examples() {
        let i3 = IntMatrix::identity(3);
        let l = LatticeBasis::from_generators(&(&a1() - &i3));
        assert_eq!(l.coordinates(&bv(&[0, 0, 0])), Some(bv(&[0, 0, 0])));
        let v = (&a1() - &i3).left_mul_vec(&bv(&[1, 0, 0]));
        assert!(l.contains(&v));
        let two = LatticeBasis::from_generators(&IntMatrix::scalar(3, BigInt::from(2)));
        assert!(!two.contains(&bv(&[1, 0, 0])));
        let coords = l.coordinates(&v).unwrap();
        assert_eq!(l.rows().left_mul_vec(&coords), v);
    }

    #[test]
    fn intersection_examples() {
        let l = LatticeBasis::from_generators(&(&a1() - &IntMatrix::identity(3)));
        assert_eq!(l.intersection(&l).unwrap(), l);
        let two = LatticeBasis::from_generators(&IntMatrix::scalar(2, BigInt::from(2)));
        let three = LatticeBasis::from_generators(&IntMatrix::scalar(2, BigInt::from(3)));
        let six = LatticeBasis::from_generators(&IntMatrix::scalar(2, BigInt::from(6)));
        assert_eq!(two.intersection(&three).unwrap(), six);
        let i3 = IntMatrix::identity(3);
        let minus = LatticeBasis::from_generators(&(&a1() - &i3));
        let plus = LatticeBasis::from_generators(&(&a1() + &i3));
        let sq = &(&a1() * &a1()) - &i3;
        let meet = minus.intersection(&plus).unwrap();
        assert!(meet.contains_rows(&sq));
        assert!(minus.contains_lattice(&meet) && plus.contains_lattice(&meet));
    }

    #[test]
    fn congruences() {
        // x + 2y = 0 mod 4
        let c = IntMatrix::from_i64(&[[1], [2]]);
        let l = solve_congruences(&c, &[BigInt::from(4)]).unwrap();
        assert_eq!(l.index(), Some(BigInt::from(4)));
        assert!(l.contains(&bv(&[2, 1])));
        assert!(!l.contains(&bv(&[1, 1])));
        let k = left_kernel(&IntMatrix::from_i64(&[[1, 2], [2, 4], [0, 1]]));
        assert_eq!(k.rank(), 1);
        assert!(k.contains(&bv(&[2, -1, 0])));
    }

    proptest! {
        #[test]
        fn intersection_is_contained(
            a in proptest::collection::vec(-6i64..=6, 6),
            b in proptest::collection::vec(-6i64..=6, 6),
        ) {
            let ma = IntMatrix::from_fn(2, 3, |i, j| BigInt::from(a[i * 3 + j]));
            let mb = IntMatrix::from_fn(2, 3, |i, j| BigInt::from(b[i * 3 + j]));
            let la = LatticeBasis::from_generators(&ma);
            let lb = LatticeBasis::from_generators(&mb);
            let m = la.intersection(&lb).unwrap();
            prop_assert!(la.contains_lattice(&m));
            prop_assert!(lb.contains_lattice(&m));
            prop_assert!(m.rank() <= la.rank().min(lb.rank()));
            // the sum of a lattice with something inside it changes nothing
            prop_assert_eq!(la.sum(&m).unwrap(), la);
        }
    }
}
