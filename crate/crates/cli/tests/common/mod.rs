#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_bigint::BigInt;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toralconj_core::bf::hyperbolicity_check;
use toralconj_core::linalg::IntMatrix;

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toralconj"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toralconj"))
        .args(args)
        .env(key, val)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON report")
}

pub fn write_matrix(dir: &Path, name: &str, m: &IntMatrix) -> PathBuf {
    let text: String = (0..m.rows())
        .map(|i| m.row(i).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ") + "\n")
        .collect();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

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

pub fn random_hyperbolic(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> IntMatrix {
    loop {
        let a = random_unimodular(rng, n, bound);
        if hyperbolicity_check(&a).unwrap().is_hyperbolic() {
            return a;
        }
    }
}

/// `(A, U A U^-1)`.
pub fn conjugate_pairs(seed: u64, count: usize) -> Vec<(IntMatrix, IntMatrix)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let a = random_hyperbolic(&mut r, 3, 9);
            let u = random_unimodular(&mut r, 3, 3);
            let b = &(&u * &a) * &u.unimodular_inverse().unwrap();
            (a, b)
        })
        .collect()
}
