#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toralconj_core::bf::hyperbolicity_check;
use toralconj_core::linalg::IntMatrix;

pub fn a1() -> IntMatrix {
    IntMatrix::from_i64(&[[0, 1, 0], [1, 0, 4], [6, -2, 23]])
}

pub fn b1() -> IntMatrix {
    IntMatrix::from_i64(&[[0, 1, 12], [1, 0, -4], [0, 2, 23]])
}

pub fn a2() -> IntMatrix {
    IntMatrix::from_i64(&[[0, 1, 0], [0, 0, 1], [1, 8, 2]])
}

pub fn b2() -> IntMatrix {
    IntMatrix::from_i64(&[[-1, 2, 0], [-1, 1, 1], [-5, 9, 2]])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> IntMatrix {
    IntMatrix::from_fn(n, n, |_, _| BigInt::from(rng.gen_range(-bound..=bound)))
}

pub fn random_unimodular(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> IntMatrix {
    loop {
        let u = random_matrix(rng, n, bound);
        if u.det().abs() == BigInt::from(1) {
            return u;
        }
    }
}

/// Hyperbolic with `det = ±1`.
pub fn random_hyperbolic(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> IntMatrix {
    loop {
        let a = random_unimodular(rng, n, bound);
        if hyperbolicity_check(&a).unwrap().is_hyperbolic() {
            return a;
        }
    }
}

/// `(A, U A U^-1, U)`.
pub fn conjugate_pairs(seed: u64, count: usize) -> Vec<(IntMatrix, IntMatrix, IntMatrix)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let a = random_hyperbolic(&mut r, 3, 9);
            let u = random_unimodular(&mut r, 3, 3);
            let b = &(&u * &a) * &u.unimodular_inverse().unwrap();
            (a, b, u)
        })
        .collect()
}
