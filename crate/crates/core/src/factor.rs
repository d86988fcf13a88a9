//! Integer factorisation for group orders, backed by `num-prime`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Prime factorisation of `|n|` as `prime -> exponent`; `n = 0` is rejected.
pub fn factorize(n: &BigInt) -> Result<BTreeMap<BigInt, u32>> {
    factorize_with_hints(n, &[])
}

/// As [`factorize`], first splitting `n` along a coprime base refined from
/// `hints` (known divisors such as cyclotomic resultants), which keeps the
/// pieces handed to the general factoriser small.
pub fn factorize_with_hints(n: &BigInt, hints: &[BigInt]) -> Result<BTreeMap<BigInt, u32>> {
    if n.is_zero() {
        return Err(Error::Unsupported("factorisation of zero".into()));
    }
    let n_abs = n.abs();
    let mut base: Vec<BigInt> = Vec::new();
    for h in hints {
        let g = n_abs.gcd(h);
        if g > BigInt::one() {
            base = refine(base, g);
        }
    }
    let mut cofactor = n_abs.clone();
    for b in &base {
        while cofactor.is_multiple_of(b) {
            cofactor /= b;
        }
    }
    base = refine(base, cofactor);
    let mut primes = BTreeSet::new();
    for piece in &base {
        primes.extend(factor_piece(piece)?);
    }
    let mut out = BTreeMap::new();
    for p in primes {
        let mut m = n_abs.clone();
        let mut k = 0u32;
        while m.is_multiple_of(&p) {
            m /= &p;
            k += 1;
        }
        out.insert(p, k);
    }
    Ok(out)
}

fn factor_piece(n: &BigInt) -> Result<Vec<BigInt>> {
    let u: BigUint = n.to_biguint().expect("positive");
    let (found, rest) = num_prime::nt_funcs::factors(u, None);
    if let Some(rest) = rest {
        return Err(Error::cap(
            format!("factorisation of {n} left cofactors {rest:?}"),
            "num-prime default configuration",
        ));
    }
    Ok(found.into_keys().map(|p| BigInt::from_biguint(Sign::Plus, p))
        .collect())
}

/// Adds `x` to a pairwise-coprime base, splitting elements so that the result
/// stays pairwise coprime and generates the same multiplicative support.
fn refine(base: Vec<BigInt>, x: BigInt) -> Vec<BigInt> {
    let mut work = base;
    let mut pending = vec![x];
    while let Some(mut y) = pending.pop() {
        if y <= BigInt::one() {
            continue;
        }
        let mut i = 0;
        while i < work.len() {
            let g = work[i].gcd(&y);
            if g.is_one() {
                i += 1;
                continue;
            }
            let w = work.swap_remove(i);
            let mut a = w.clone();
            while a.is_multiple_of(&g) {
                a /= &g;
            }
            let mut b = y.clone();
            while b.is_multiple_of(&g) {
                b /= &g;
            }
            pending.push(a);
            pending.push(g);
            y = b;
            if y <= BigInt::one() {
                break;
            }
            i = 0;
        }
        if y > BigInt::one() {
            work.push(y);
        }
    }
    work.sort();
    work.dedup();
    work
}
