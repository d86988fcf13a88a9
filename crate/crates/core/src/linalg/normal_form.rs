use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::IntMatrix;

/// Row-style Hermite form together with the transform that produced it.
#[derive(Debug, Clone)]
pub struct HnfResult {
    /// Same shape as the input; rows past `rank` are zero.
    pub h: IntMatrix,
    /// Unimodular, `u * input = h`.
    pub u: IntMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl HnfResult {
    /// The nonzero rows of `h`.
    pub fn basis(&self) -> IntMatrix {
        let rows: Vec<usize> = (0..self.rank).collect();
        let cols: Vec<usize> = (0..self.h.cols()).collect();
        self.h.submatrix(&rows, &cols)
    }
}

struct Rows<'a> {
    h: &'a mut IntMatrix,
    u: Option<&'a mut IntMatrix>,
}

impl Rows<'_> {
    fn swap(&mut self, a: usize, b: usize) {
        self.h.swap_rows(a, b);
        if let Some(u) = self.u.as_deref_mut() {
            u.swap_rows(a, b);
        }
    }

    fn add_multiple(&mut self, target: usize, source: usize, f: &BigInt) {
        self.h.add_row_multiple(target, source, f);
        if let Some(u) = self.u.as_deref_mut() {
            u.add_row_multiple(target, source, f);
        }
    }

    fn negate(&mut self, i: usize) {
        self.h.negate_row(i);
        if let Some(u) = self.u.as_deref_mut() {
            u.negate_row(i);
        }
    }

    /// Replaces rows (r, i) by (s r + t i, p r + q i); the 2x2 block must be unimodular.
    fn combine(&mut self, r: usize, i: usize, [s, t, p, q]: [&BigInt; 4]) {
        fn apply(m: &mut IntMatrix, r: usize, i: usize, k: [&BigInt; 4]) {
            for j in 0..m.cols() {
                let a = m[(r, j)].clone();
                let b = m[(i, j)].clone();
                m[(r, j)] = k[0] * &a + k[1] * &b;
                m[(i, j)] = k[2] * &a + k[3] * &b;
            }
        }
        apply(self.h, r, i, [s, t, p, q]);
        if let Some(u) = self.u.as_deref_mut() {
            apply(u, r, i, [s, t, p, q]);
        }
    }
}

fn hnf_core(m: &IntMatrix, track: bool) -> HnfResult {
    let mut h = m.clone();
    let mut u = if track {
        Some(IntMatrix::identity(m.rows()))
    } else {
        None
    };
    let mut ops = Rows {
        h: &mut h,
        u: u.as_mut(),
    };
    let (nr, nc) = (m.rows(), m.cols());
    let mut r = 0;
    let mut pivots = Vec::new();
    for col in 0..nc {
        if r == nr {
            break;
        }
        for i in r + 1..nr {
            if ops.h[(i, col)].is_zero() {
                continue;
            }
            if ops.h[(r, col)].is_zero() {
                ops.swap(r, i);
                continue;
            }
            let a = ops.h[(r, col)].clone();
            let b = ops.h[(i, col)].clone();
            if b.is_multiple_of(&a) {
                let f = -(&b / &a);
                ops.add_multiple(i, r, &f);
                continue;
            }
            let e = a.extended_gcd(&b);
            let p = -(&b / &e.gcd);
            let q = &a / &e.gcd;
            ops.combine(r, i, [&e.x, &e.y, &p, &q]);
        }
        if ops.h[(r, col)].is_zero() {
            continue;
        }
        if ops.h[(r, col)].is_negative() {
            ops.negate(r);
        }
        let piv = ops.h[(r, col)].clone();
        for i in 0..r {
            let f = -ops.h[(i, col)].div_floor(&piv);
            ops.add_multiple(i, r, &f);
        }
        pivots.push(col);
        r += 1;
    }
    HnfResult {
        h,
        u: u.unwrap_or_else(|| IntMatrix::identity(0)),
        rank: r,
        pivots,
    }
}

/// Row-style HNF of the row span, with transform `u * m = h`.
pub fn hnf_with_transform(m: &IntMatrix) -> HnfResult {
    hnf_core(m, true)
}

/// Nonzero HNF rows of the row span of `m`.
pub fn hnf(m: &IntMatrix) -> IntMatrix {
    hnf_core(m, false).basis()
}

/// Smith form `u * m * v = diag(d)` with `d[i] | d[i+1]`, `d[i] >= 0`.
#[derive(Debug, Clone)]
pub struct SnfResult {
    pub d: Vec<BigInt>,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

pub fn snf(m: &IntMatrix) -> SnfResult {
    let (nr, nc) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut u = IntMatrix::identity(nr);
    let mut v = IntMatrix::identity(nc);
    let steps = nr.min(nc);
    let mut t = 0;
    'outer: while t < steps {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..nr {
                for j in t..nc {
                    let x = &a[(i, j)];
                    if !x.is_zero()
                        && best.is_none_or(|(bi, bj)| x.abs() < a[(bi, bj)].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                break 'outer;
            };
            a.swap_rows(t, bi);
            u.swap_rows(t, bi);
            a.swap_cols(t, bj);
            v.swap_cols(t, bj);
            let piv = a[(t, t)].clone();
            let mut clean = true;
            for i in t + 1..nr {
                if a[(i, t)].is_zero() {
                    continue;
                }
                let f = -a[(i, t)].div_floor(&piv);
                a.add_row_multiple(i, t, &f);
                u.add_row_multiple(i, t, &f);
                clean &= a[(i, t)].is_zero();
            }
            for j in t + 1..nc {
                if a[(t, j)].is_zero() {
                    continue;
                }
                let f = -a[(t, j)].div_floor(&piv);
                a.add_col_multiple(j, t, &f);
                v.add_col_multiple(j, t, &f);
                clean &= a[(t, j)].is_zero();
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..nr).find(|&i| (t + 1..nc).any(|j| !a[(i, j)].is_multiple_of(&piv)));
            match offender {
                Some(i) => {
                    a.add_row_multiple(t, i, &BigInt::one());
                    u.add_row_multiple(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    let d = (0..steps).map(|i| a[(i, i)].clone()).collect();
    SnfResult { d, u, v }
}

/// Invariant factors of `m` (its Smith diagonal).
pub fn invariant_factors(m: &IntMatrix) -> Vec<BigInt> {
    snf(m).d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_hnf_shape(h: &IntMatrix) {
        let mut last: Option<usize> = None;
        for i in 0..h.rows() {
            let p = (0..h.cols()).find(|&j| !h[(i, j)].is_zero()).unwrap();
            assert!(last.is_none_or(|l| p > l));
            assert!(h[(i, p)].is_positive());
            for k in 0..i {
                assert!(!h[(k, p)].is_negative() && h[(k, p)] < h[(i, p)]);
            }
            last = Some(p);
        }
    }

    #[test]
    fn hnf_examples() {
        assert_eq!(hnf(&IntMatrix::identity(3)), IntMatrix::identity(3));
        let r = hnf_with_transform(&IntMatrix::identity(3));
        assert_eq!(r.u, IntMatrix::identity(3));
        assert_eq!(
            hnf(&IntMatrix::from_i64(&[[2, 4], [0, 3]])),
            IntMatrix::from_i64(&[[2, 1], [0, 3]])
        );
        assert_eq!(hnf_with_transform(&IntMatrix::zeros(2, 3)).rank, 0);
        assert_eq!(hnf(&IntMatrix::zeros(2, 3)).rows(), 0);
    }

    #[test]
    fn snf_examples() {
        let b = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(invariant_factors(&IntMatrix::from_i64(&[[2, 0], [0, 3]])), b(&[1, 6]));
        let a1 = IntMatrix::from_i64(&[[1, 1, 0], [1, 1, 4], [6, -2, 24]]);
        assert_eq!(invariant_factors(&a1), b(&[1, 4, 8]));
        let b1 = IntMatrix::from_i64(&[[1, 1, 12], [1, 1, -4], [0, 2, 24]]);
        assert_eq!(invariant_factors(&b1), b(&[1, 2, 16]));
    }

    fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = IntMatrix> {
        proptest::collection::vec(-9i64..=9, rows * cols).prop_map(move |v| {
            IntMatrix::from_fn(rows, cols, |i, j| BigInt::from(v[i * cols + j]))
        })
    }

    proptest! {
        #[test]
        fn hnf_transform_and_idempotence(m in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| small_matrix(r, c))) {
            let r = hnf_with_transform(&m);
            prop_assert_eq!(&(&r.u * &m), &r.h);
            prop_assert!(r.u.det().abs().is_one());
            let basis = r.basis();
            check_hnf_shape(&basis);
            prop_assert_eq!(hnf(&basis), basis.clone());
            prop_assert_eq!(hnf(&m), basis);
        }

        #[test]
        fn snf_properties(m in (1usize..5).prop_flat_map(|n| small_matrix(n, n))) {
            let s = snf(&m);
            prop_assert!(s.u.det().abs().is_one());
            prop_assert!(s.v.det().abs().is_one());
            let d = &(&s.u * &m) * &s.v;
            prop_assert_eq!(d, IntMatrix::diagonal(&s.d));
            for w in s.d.windows(2) {
                prop_assert!(!w[0].is_negative());
                prop_assert!(w[1].is_multiple_of(&w[0]));
            }
            let prod: BigInt = s.d.iter().product();
            prop_assert_eq!(prod, m.det().abs());
        }
    }
}
