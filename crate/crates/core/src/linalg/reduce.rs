use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::matrix::IntMatrix;

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

fn gram_schmidt(b: &[Vec<BigInt>]) -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
    let r = b.len();
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(r);
    let mut mu = vec![vec![BigRational::zero(); r]; r];
    let mut norms: Vec<BigRational> = Vec::with_capacity(r);
    for i in 0..r {
        let bi: Vec<BigRational> = b[i].iter().map(|x| BigRational::from_integer(x.clone())).collect();
        let mut v = bi.clone();
        for j in 0..i {
            mu[i][j] = dot(&bi, &star[j]) / &norms[j];
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= &mu[i][j] * sk;
            }
        }
        norms.push(dot(&v, &v));
        star.push(v);
    }
    (mu, norms)
}

/// Exact LLL reduction (`delta = 3/4`) of linearly independent rows; the
/// output spans the same lattice.
pub fn lll_reduce(m: &IntMatrix) -> IntMatrix {
    let mut b = m.to_rows();
    let r = b.len();
    if r <= 1 {
        return m.clone();
    }
    let delta = BigRational::new(BigInt::from(3), BigInt::from(4));
    let (mut mu, mut norms) = gram_schmidt(&b);
    let mut k = 1;
    while k < r {
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q.is_zero() {
                continue;
            }
            let qi = q.to_integer();
            let bj = b[j].clone();
            for (x, y) in b[k].iter_mut().zip(&bj) {
                *x -= &qi * y;
            }
            for i in 0..j {
                let t = &q * &mu[j][i];
                mu[k][i] -= t;
            }
            mu[k][j] -= &q;
        }
        let lovasz = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if norms[k] >= lovasz {
            k += 1;
        } else {
            b.swap(k, k - 1);
            (mu, norms) = gram_schmidt(&b);
            k = (k - 1).max(1);
        }
    }
    IntMatrix::from_rows(b).expect("rectangular")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LatticeBasis;
    use num_traits::One;

    #[test]
    fn reduces_skewed_basis() {
        let m = IntMatrix::from_i64(&[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let u = IntMatrix::from_i64(&[[1, 7, 30], [0, 1, 11], [0, 0, 1]]);
        let skew = &u * &m;
        let red = lll_reduce(&skew);
        assert_eq!(LatticeBasis::from_generators(&red), LatticeBasis::from_generators(&skew));
        assert!(red.max_abs() <= BigInt::one());
    }

    #[test]
    fn preserves_lattice() {
        let m = IntMatrix::from_i64(&[[12, 5, 91, 3], [4, -77, 2, 8], [33, 1, 1, -60]]);
        let red = lll_reduce(&m);
        assert_eq!(LatticeBasis::from_generators(&red), LatticeBasis::from_generators(&m));
        assert!(red.max_abs() <= m.max_abs());
    }
}
