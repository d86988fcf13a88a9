use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::matrix::IntMatrix;
use crate::error::{Error, Result};

/// Integer polynomial, coefficients lowest degree first with no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    /// `x^m + c`.
    pub fn binomial(m: usize, c: i64) -> Self {
        let mut coeffs = vec![BigInt::zero(); m + 1];
        coeffs[m] = BigInt::one();
        coeffs[0] += c;
        Self::new(coeffs)
    }

    pub fn monomial(c: BigInt, e: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); e + 1];
        coeffs[e] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lc(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(One::is_one)
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + BigRational::from_integer(c.clone());
        }
        acc
    }

    /// Horner evaluation at a square matrix.
    pub fn eval_matrix(&self, m: &IntMatrix) -> IntMatrix {
        let n = m.rows();
        let mut acc = IntMatrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = &acc * m;
            for i in 0..n {
                acc[(i, i)] += c;
            }
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    /// `x^deg p(1/x)`.
    pub fn reciprocal(&self) -> Self {
        let mut c = self.coeffs.clone();
        c.reverse();
        Self::new(c)
    }

    pub fn content(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Primitive part with positive leading coefficient.
    pub fn primitive(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut g = self.content();
        if self.lc().is_negative() {
            g = -g;
        }
        Self::new(self.coeffs.iter().map(|c| c / &g).collect())
    }

    /// Division by a monic divisor; exact over the integers.
    pub fn div_rem_monic(&self, d: &IntPolynomial) -> (IntPolynomial, IntPolynomial) {
        assert!(d.is_monic(), "divisor must be monic");
        let dd = d.degree().unwrap();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![BigInt::zero(); rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let q = rem[i + dd].clone();
            if q.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[i + j] -= &q * dc;
            }
            quot[i] = q;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Exact division if `d` divides `self` over the rationals with integer quotient.
    pub fn exact_div(&self, d: &IntPolynomial) -> Option<IntPolynomial> {
        let (q, r) = QPoly::from(self).div_rem(&QPoly::from(d));
        if !r.is_zero() {
            return None;
        }
        q.to_int()
    }

    /// Monic-normalised gcd over the rationals, returned as a primitive integer polynomial.
    pub fn gcd(&self, other: &IntPolynomial) -> IntPolynomial {
        QPoly::from(self).gcd(&QPoly::from(other)).primitive_int()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// The d-th cyclotomic polynomial, `prod_(e | d) (x^e - 1)^mu(d/e)`.
    pub fn cyclotomic(d: usize) -> Self {
        assert!(d >= 1);
        let mut num = Self::one();
        let mut den = Self::one();
        for e in (1..=d).filter(|e| d.is_multiple_of(*e)) {
            match mobius(d / e) {
                1 => num = &num * &Self::binomial(e, -1),
                -1 => den = &den * &Self::binomial(e, -1),
                _ => {}
            }
        }
        num.div_rem_monic(&den).0
    }

    /// Resultant via the Sylvester determinant.
    pub fn resultant(&self, other: &IntPolynomial) -> BigInt {
        let (Some(m), Some(n)) = (self.degree(), other.degree()) else {
            return BigInt::zero();
        };
        let size = m + n;
        if size == 0 {
            return BigInt::one();
        }
        let mut syl = IntMatrix::zeros(size, size);
        for i in 0..n {
            for (j, c) in self.coeffs.iter().rev().enumerate() {
                syl[(i, i + j)] = c.clone();
            }
        }
        for i in 0..m {
            for (j, c) in other.coeffs.iter().rev().enumerate() {
                syl[(n + i, i + j)] = c.clone();
            }
        }
        syl.det()
    }

    pub fn discriminant(&self) -> Result<BigInt> {
        let n = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => return Err(Error::Unsupported("discriminant of a constant".into())),
        };
        let r = self.resultant(&self.derivative());
        let d = r / self.lc();
        Ok(if (n * (n - 1) / 2) % 2 == 0 { d } else { -d })
    }

    /// `p(x) = x^d q(x + 1/x)` for a self-reciprocal `p` of even degree `2d`.
    pub fn trace_form(&self) -> Option<IntPolynomial> {
        let deg = self.degree()?;
        if deg % 2 != 0 || self.reciprocal() != *self {
            return None;
        }
        let d = deg / 2;
        let t = Self::x();
        let mut q = Self::constant(self.coeff(d));
        // S_0 = 2, S_1 = t, S_{k+1} = t S_k - S_{k-1}; x^k + x^-k = S_k(x + 1/x)
        let mut prev = Self::constant(BigInt::from(2));
        let mut cur = t.clone();
        for k in 1..=d {
            q = &q + &(&cur * &Self::constant(self.coeff(d + k)));
            let next = &(&t * &cur) - &prev;
            prev = cur;
            cur = next;
        }
        Some(q)
    }
}

impl fmt::Debug for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            if e == 0 {
                write!(f, "{}", mag)?;
                continue;
            }
            if !mag.is_one() {
                write!(f, "{}", mag)?;
            }
            if e == 1 {
                write!(f, "x")?;
            } else {
                write!(f, "x^{}", e)?;
            }
        }
        Ok(())
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    /// Grammar: signed terms `c`, `cx`, `cx^e`, `x^e` with an optional `*`; blanks ignored.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let bad = |msg: &str| Error::Parse(format!("{msg} in polynomial {s:?}"));
        let bytes = compact.as_bytes();
        let mut coeffs: Vec<BigInt> = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let mut negative = false;
            let mut saw_sign = false;
            while i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                if saw_sign {
                    return Err(bad("repeated sign"));
                }
                saw_sign = true;
                negative = bytes[i] == b'-';
                i += 1;
            }
            if i > 0 && !saw_sign {
                return Err(bad("missing operator"));
            }
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let coef = if i > start {
                Some(compact[start..i].parse::<BigInt>().map_err(|_| bad("bad coefficient"))?)
            } else {
                None
            };
            let mut exp = 0usize;
            if i < bytes.len() && bytes[i] == b'*' {
                if coef.is_none() {
                    return Err(bad("dangling '*'"));
                }
                i += 1;
                if i >= bytes.len() || bytes[i] != b'x' {
                    return Err(bad("expected x after '*'"));
                }
            }
            if i < bytes.len() && bytes[i] == b'x' {
                i += 1;
                exp = 1;
                if i < bytes.len() && bytes[i] == b'^' {
                    i += 1;
                    let es = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if es == i {
                        return Err(bad("missing exponent"));
                    }
                    exp = compact[es..i].parse().map_err(|_| bad("bad exponent"))?;
                    if exp > 100_000 {
                        return Err(bad("exponent too large"));
                    }
                }
            } else if coef.is_none() {
                return Err(bad("empty term"));
            }
            if i < bytes.len() && bytes[i] != b'+' && bytes[i] != b'-' {
                return Err(bad("unexpected character"));
            }
            let mut c = coef.unwrap_or_else(BigInt::one);
            if negative {
                c = -c;
            }
            if coeffs.len() <= exp {
                coeffs.resize(exp + 1, BigInt::zero());
            }
            coeffs[exp] += c;
        }
        Ok(IntPolynomial::new(coeffs))
    }
}

impl Add for &IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        IntPolynomial::new((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: &IntPolynomial) -> IntPolynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        IntPolynomial::new((0..len).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Neg for &IntPolynomial {
    type Output = IntPolynomial;
    fn neg(self) -> IntPolynomial {
        IntPolynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return IntPolynomial::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPolynomial::new(out)
    }
}

fn mobius(mut n: usize) -> i32 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Evaluates `g(M)` by Horner's rule.
pub fn eval_poly_at_matrix(g: &IntPolynomial, m: &IntMatrix) -> IntMatrix {
    g.eval_matrix(m)
}

/// Polynomial over the rationals; used for gcds, Sturm sequences and
/// Smith forms over `Q[x]`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

impl From<&IntPolynomial> for QPoly {
    fn from(p: &IntPolynomial) -> Self {
        QPoly::new(
            p.coeffs
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect(),
        )
    }
}

impl QPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn zero() -> Self {
        QPoly { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        QPoly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lc(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lc();
        QPoly::new(self.coeffs.iter().map(|c| c / &l).collect())
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        QPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, o: &QPoly) -> Self {
        let len = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..len).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &QPoly) -> Self {
        let len = self.coeffs.len().max(o.coeffs.len());
        QPoly::new((0..len).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }

    pub fn mul(&self, o: &QPoly) -> Self {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn div_rem(&self, d: &QPoly) -> (QPoly, QPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (QPoly::zero(), self.clone());
        }
        let l = d.lc();
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let q = &rem[i + dd] / &l;
            if q.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                let t = &q * dc;
                rem[i + j] -= t;
            }
            quot[i] = q;
        }
        rem.truncate(dd);
        (QPoly::new(quot), QPoly::new(rem))
    }

    /// Monic gcd; the gcd of two zero polynomials is zero.
    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Integer polynomial when every coefficient is integral.
    pub fn to_int(&self) -> Option<IntPolynomial> {
        if self.coeffs.iter().all(|c| c.is_integer()) {
            Some(IntPolynomial::new(
                self.coeffs.iter().map(|c| c.to_integer()).collect(),
            ))
        } else {
            None
        }
    }

    /// Scales to a primitive integer polynomial with positive leading coefficient.
    pub fn primitive_int(&self) -> IntPolynomial {
        let l = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        IntPolynomial::new(
            self.coeffs
                .iter()
                .map(|c| (c * BigRational::from_integer(l.clone())).to_integer())
                .collect(),
        )
        .primitive()
    }

    /// Number of distinct real roots in the closed interval `[a, b]`, by Sturm's theorem.
    pub fn count_real_roots(&self, a: &BigRational, b: &BigRational) -> usize {
        if self.degree().unwrap_or(0) == 0 {
            return 0;
        }
        let sf = self.div_rem(&self.gcd(&self.derivative())).0;
        let mut seq = vec![sf.clone(), sf.derivative()];
        while !seq.last().unwrap().is_zero() {
            let n = seq.len();
            let r = seq[n - 2].div_rem(&seq[n - 1]).1;
            seq.push(r.scale(&-BigRational::one()));
        }
        seq.pop();
        let changes = |x: &BigRational| {
            let signs: Vec<i8> = seq
                .iter()
                .map(|p| {
                    let v = p.eval(x);
                    if v.is_positive() {
                        1
                    } else if v.is_negative() {
                        -1
                    } else {
                        0
                    }
                })
                .filter(|&s| s != 0)
                .collect();
            signs.windows(2).filter(|w| w[0] != w[1]).count()
        };
        let open = changes(a) - changes(b);
        open + usize::from(sf.eval(a).is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> IntPolynomial {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let q = p("x^3-23x^2+7x-1");
        assert_eq!(q, IntPolynomial::from_i64(&[-1, 7, -23, 1]));
        assert_eq!(q.to_string(), "x^3 - 23x^2 + 7x - 1");
        assert_eq!(p(" - x ^2 + 1 "), IntPolynomial::from_i64(&[1, 0, -1]));
        assert_eq!(p("2*x+x+3"), IntPolynomial::from_i64(&[3, 3]));
        assert_eq!(p("x - x"), IntPolynomial::zero());
        assert_eq!(p("1").to_string(), "1");
        assert_eq!(p("-x").to_string(), "-x");
        for bad in ["", "x^", "x+", "2y", "3x2", "x++1", "*x"] {
            assert!(bad.parse::<IntPolynomial>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn resultant_examples() {
        let p1 = p("x^3-23x^2+7x-1");
        assert_eq!(p1.resultant(&p("x+1")).abs(), BigInt::from(32));
        let p2 = p("x^3-2x^2-8x-1");
        assert_eq!(p2.resultant(&p("x-1")).abs(), BigInt::from(10));
        assert_eq!(p2.resultant(&p("x")).abs(), BigInt::from(1));
        assert_eq!(p1.resultant(&p("x")).abs(), p1.eval(&BigInt::zero()).abs());
        // the resultant vanishes exactly on a common root
        assert!(p("x^2-1").resultant(&p("x-1")).is_zero());
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(p("x^3-2x^2-8x-1").discriminant().unwrap(), BigInt::from(1957));
        assert_eq!(p("x^2-1").discriminant().unwrap(), BigInt::from(4));
        assert_eq!(p("x^2+1").discriminant().unwrap(), BigInt::from(-4));
        // b^2 - 4ac for a non-monic quadratic
        assert_eq!(p("3x^2+5x+1").discriminant().unwrap(), BigInt::from(13));
    }

    #[test]
    fn cyclotomic_small() {
        assert_eq!(IntPolynomial::cyclotomic(1), p("x-1"));
        assert_eq!(IntPolynomial::cyclotomic(2), p("x+1"));
        assert_eq!(IntPolynomial::cyclotomic(6), p("x^2-x+1"));
        assert_eq!(IntPolynomial::cyclotomic(12), p("x^4-x^2+1"));
        let mut prod = IntPolynomial::one();
        for d in [1, 2, 3, 6] {
            prod = &prod * &IntPolynomial::cyclotomic(d);
        }
        assert_eq!(prod, p("x^6-1"));
    }

    #[test]
    fn eval_at_matrix() {
        let a = IntMatrix::from_i64(&[[0, 1, 0], [1, 0, 4], [6, -2, 23]]);
        assert_eq!(p("x").eval_matrix(&a), a);
        assert_eq!(p("x+1").eval_matrix(&a), &a + &IntMatrix::identity(3));
        assert!(a.char_poly().eval_matrix(&a).is_zero());
    }

    #[test]
    fn gcd_and_division() {
        let a = p("x^3-1");
        let b = p("x^2-1");
        assert_eq!(a.gcd(&b), p("x-1"));
        assert_eq!(p("x^2-1").exact_div(&p("x+1")), Some(p("x-1")));
        assert_eq!(p("x^2-1").exact_div(&p("2x+1")), None);
        let (q, r) = p("x^3+2").div_rem_monic(&p("x-1"));
        assert_eq!((q, r), (p("x^2+x+1"), p("3")));
    }

    #[test]
    fn trace_form_and_sturm() {
        // x^2 - 3x + 1 = x (t - 3), root 3 outside [-2, 2]
        let h = p("x^2-3x+1");
        assert_eq!(h.trace_form().unwrap(), p("x-3"));
        let q = QPoly::from(&p("x^2-2"));
        let two = BigRational::from_integer(BigInt::from(2));
        assert_eq!(q.count_real_roots(&-two.clone(), &two), 2);
        let q = QPoly::from(&p("x-2"));
        assert_eq!(q.count_real_roots(&-two.clone(), &two), 1);
        let q = QPoly::from(&p("x^2+1"));
        assert_eq!(q.count_real_roots(&-two.clone(), &two), 0);
        // Salem-like factor x^4 - x^3 - x^2 - x + 1 has two roots on the unit circle
        let h = p("x^4-x^3-x^2-x+1");
        let t = h.trace_form().unwrap();
        assert_eq!(t, p("x^2-x-3"));
        assert_eq!(QPoly::from(&t).count_real_roots(&-two.clone(), &two), 1);
    }
}
