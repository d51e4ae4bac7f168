//! Exact arithmetic in rational quaternion algebras `(a,b)/Q` and their
//! orthogonal involutions.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The algebra with basis 1, i, j, ij and i^2 = a, j^2 = b, ij = -ji.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuatAlgebra {
    a: Rational,
    b: Rational,
}

pub type Algebra = Arc<QuatAlgebra>;

impl QuatAlgebra {
    pub fn new(a: Rational, b: Rational) -> Result<Algebra> {
        if a.is_zero() || b.is_zero() {
            return Err(Error::DegenerateAlgebra);
        }
        Ok(Arc::new(QuatAlgebra { a, b }))
    }

    pub fn from_ints(a: i64, b: i64) -> Result<Algebra> {
        Self::new(int(a), int(b))
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn is_definite(&self) -> bool {
        self.a.is_negative() && self.b.is_negative()
    }
}

impl fmt::Display for QuatAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// `w + x i + y j + z ij`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quaternion {
    alg: Algebra,
    c: [Rational; 4],
}

impl Quaternion {
    pub fn new(alg: &Algebra, c: [Rational; 4]) -> Self {
        Quaternion { alg: alg.clone(), c }
    }

    pub fn from_ints(alg: &Algebra, c: [i64; 4]) -> Self {
        Self::new(alg, c.map(int))
    }

    pub fn from_slice(alg: &Algebra, c: &[Rational]) -> Self {
        Self::new(alg, [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()])
    }

    pub fn scalar(alg: &Algebra, s: Rational) -> Self {
        Self::new(alg, [s, Rational::zero(), Rational::zero(), Rational::zero()])
    }

    pub fn zero(alg: &Algebra) -> Self {
        Self::scalar(alg, Rational::zero())
    }

    pub fn one(alg: &Algebra) -> Self {
        Self::scalar(alg, Rational::one())
    }

    pub fn i(alg: &Algebra) -> Self {
        Self::from_ints(alg, [0, 1, 0, 0])
    }

    pub fn j(alg: &Algebra) -> Self {
        Self::from_ints(alg, [0, 0, 1, 0])
    }

    pub fn k(alg: &Algebra) -> Self {
        Self::from_ints(alg, [0, 0, 0, 1])
    }

    pub fn algebra(&self) -> &Algebra {
        &self.alg
    }

    pub fn coords(&self) -> &[Rational; 4] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    pub fn is_scalar(&self) -> bool {
        self.c[1..].iter().all(Zero::is_zero)
    }

    fn check(&self, other: &Quaternion) -> Result<()> {
        if self.alg == other.alg {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    pub fn checked_mul(&self, q: &Quaternion) -> Result<Quaternion> {
        self.check(q)?;
        let (a, b) = (&self.alg.a, &self.alg.b);
        let [w1, x1, y1, z1] = &self.c;
        let [w2, x2, y2, z2] = &q.c;
        let ab = a * b;
        let w = w1 * w2 + a * (x1 * x2) + b * (y1 * y2) - &ab * (z1 * z2);
        let x = w1 * x2 + x1 * w2 - b * (y1 * z2) + b * (z1 * y2);
        let y = w1 * y2 + y1 * w2 + a * (x1 * z2) - a * (z1 * x2);
        let z = w1 * z2 + z1 * w2 + x1 * y2 - y1 * x2;
        Ok(Quaternion { alg: self.alg.clone(), c: [w, x, y, z] })
    }

    pub fn checked_add(&self, q: &Quaternion) -> Result<Quaternion> {
        self.check(q)?;
        Ok(self.zip(q, |x, y| x + y))
    }

    pub fn checked_sub(&self, q: &Quaternion) -> Result<Quaternion> {
        self.check(q)?;
        Ok(self.zip(q, |x, y| x - y))
    }

    fn zip(&self, q: &Quaternion, f: impl Fn(&Rational, &Rational) -> Rational) -> Quaternion {
        let c = [0, 1, 2, 3].map(|k| f(&self.c[k], &q.c[k]));
        Quaternion { alg: self.alg.clone(), c }
    }

    pub fn scale(&self, s: &Rational) -> Quaternion {
        Quaternion { alg: self.alg.clone(), c: [0, 1, 2, 3].map(|k| &self.c[k] * s) }
    }

    pub fn conj(&self) -> Quaternion {
        let [w, x, y, z] = &self.c;
        Quaternion { alg: self.alg.clone(), c: [w.clone(), -x, -y, -z] }
    }

    pub fn nrm(&self) -> Rational {
        let (a, b) = (&self.alg.a, &self.alg.b);
        let [w, x, y, z] = &self.c;
        w * w - a * (x * x) - b * (y * y) + a * b * (z * z)
    }

    pub fn tr(&self) -> Rational {
        &self.c[0] + &self.c[0]
    }

    pub fn inv(&self) -> Result<Quaternion> {
        let n = self.nrm();
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.conj().scale(&n.recip()))
    }

    /// Polarisation of the norm: `(nrm(p+q) - nrm(p) - nrm(q)) / 2`.
    pub fn bilinear(&self, q: &Quaternion) -> Rational {
        let (a, b) = (&self.alg.a, &self.alg.b);
        let [w1, x1, y1, z1] = &self.c;
        let [w2, x2, y2, z2] = &q.c;
        w1 * w2 - a * (x1 * x2) - b * (y1 * y2) + a * b * (z1 * z2)
    }

    pub fn pure_part(&self) -> Quaternion {
        let mut c = self.c.clone();
        c[0] = Rational::zero();
        Quaternion { alg: self.alg.clone(), c }
    }

    /// Parse strings such as `1+i`, `-1/2*j+3*ij`, `ij/2` or `(1+i+j)/2`.
    pub fn parse(alg: &Algebra, s: &str) -> Result<Quaternion> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(rest) = t.strip_prefix('(') {
            if let Some((inner, den)) = rest.rsplit_once(")/") {
                let q = Self::parse(alg, inner)?;
                let d: Rational = den.parse().map_err(|_| Error::Parse(s.to_string()))?;
                if d.is_zero() {
                    return Err(Error::Parse(s.to_string()));
                }
                return Ok(q.scale(&d.recip()));
            }
        }
        let mut c = [Rational::zero(), Rational::zero(), Rational::zero(), Rational::zero()];
        let mut terms = Vec::new();
        let mut cur = String::new();
        for ch in t.chars() {
            if (ch == '+' || ch == '-') && !cur.is_empty() && !cur.ends_with('*') {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        if !cur.is_empty() {
            terms.push(cur);
        }
        if terms.is_empty() {
            return Err(Error::Parse(s.to_string()));
        }
        for term in terms {
            // `ij/2` style: a unit followed by a denominator.
            let (term, tail) = match term.rsplit_once('/') {
                Some((head, den)) if head.ends_with(['i', 'j', 'k']) => {
                    let d: Rational = den.parse().map_err(|_| Error::Parse(s.to_string()))?;
                    if d.is_zero() {
                        return Err(Error::Parse(s.to_string()));
                    }
                    (head.to_string(), d.recip())
                }
                _ => (term, Rational::one()),
            };
            let (coef, unit) = if let Some(p) = term.strip_suffix("ij").or_else(|| term.strip_suffix('k')) {
                (p, 3)
            } else if let Some(p) = term.strip_suffix('i') {
                (p, 1)
            } else if let Some(p) = term.strip_suffix('j') {
                (p, 2)
            } else {
                (term.as_str(), 0)
            };
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let v: Rational = match (coef, unit) {
                ("" | "+", u) if u > 0 => Rational::one(),
                ("-", u) if u > 0 => -Rational::one(),
                (num, _) => num
                    .trim_start_matches('+')
                    .parse()
                    .map_err(|_| Error::Parse(s.to_string()))?,
            };
            c[unit] += v * tail;
        }
        Ok(Quaternion::new(alg, c))
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names = ["", "i", "j", "ij"];
        let mut first = true;
        for (k, v) in self.c.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let neg = v.is_negative();
            let mag = v.abs();
            if neg {
                write!(f, "-")?;
            } else if !first {
                write!(f, "+")?;
            }
            if k == 0 {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", names[k])?;
            } else {
                write!(f, "{mag}*{}", names[k])?;
            }
            first = false;
        }
        Ok(())
    }
}

pub fn quat_mul(p: &Quaternion, q: &Quaternion) -> Result<Quaternion> {
    p.checked_mul(q)
}

// Operator forms panic on mismatched algebras; use the checked methods at
// API boundaries.
impl Mul for &Quaternion {
    type Output = Quaternion;
    fn mul(self, q: &Quaternion) -> Quaternion {
        self.checked_mul(q).expect("quaternions from different algebras")
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        &self * &q
    }
}

impl Add for &Quaternion {
    type Output = Quaternion;
    fn add(self, q: &Quaternion) -> Quaternion {
        self.checked_add(q).expect("quaternions from different algebras")
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, q: Quaternion) -> Quaternion {
        &self + &q
    }
}

impl Sub for &Quaternion {
    type Output = Quaternion;
    fn sub(self, q: &Quaternion) -> Quaternion {
        self.checked_sub(q).expect("quaternions from different algebras")
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, q: Quaternion) -> Quaternion {
        &self - &q
    }
}

impl Neg for &Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(&-Rational::one())
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        -&self
    }
}

/// `z -> u conj(z) u^-1` for a trace-zero invertible `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrthogonalInvolution {
    u: Quaternion,
    u_inv: Quaternion,
}

impl OrthogonalInvolution {
    pub fn new(u: Quaternion) -> Result<Self> {
        if !u.tr().is_zero() || u.nrm().is_zero() {
            return Err(Error::InvalidInvolution);
        }
        let u_inv = u.inv()?;
        Ok(OrthogonalInvolution { u, u_inv })
    }

    /// Conjugation by `ij`, which fixes 1, i, j and negates ij.
    pub fn standard(alg: &Algebra) -> Self {
        Self::new(Quaternion::k(alg)).expect("ij is invertible with trace zero")
    }

    pub fn u(&self) -> &Quaternion {
        &self.u
    }

    pub fn algebra(&self) -> &Algebra {
        self.u.algebra()
    }

    pub fn apply(&self, q: &Quaternion) -> Quaternion {
        &(&self.u * &q.conj()) * &self.u_inv
    }

    pub fn is_fixed(&self, q: &Quaternion) -> bool {
        &self.apply(q) == q
    }

    /// Matrix of the involution on the basis 1, i, j, ij (row k is the image of basis vector k).
    pub fn matrix(&self) -> linalg::RMat {
        (0..4)
            .map(|k| {
                let mut c = [0i64; 4];
                c[k] = 1;
                self.apply(&Quaternion::from_ints(self.algebra(), c)).coords().to_vec()
            })
            .collect()
    }

    fn eigenspace(&self, sign: i64) -> Vec<Quaternion> {
        let m = linalg::transpose(&self.matrix());
        let shifted: linalg::RMat = m
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, x)| if r == c { x - int(sign) } else { x.clone() })
                    .collect()
            })
            .collect();
        linalg::nullspace(&shifted, 4)
            .into_iter()
            .map(|v| Quaternion::from_slice(self.algebra(), &v))
            .collect()
    }

    /// Q-basis of the fixed space H+.
    pub fn fixed_space(&self) -> Vec<Quaternion> {
        self.eigenspace(1)
    }

    /// Q-basis of the negated space H-.
    pub fn negated_space(&self) -> Vec<Quaternion> {
        self.eigenspace(-1)
    }
}

pub fn apply_involution(sigma: &OrthogonalInvolution, q: &Quaternion) -> Result<Quaternion> {
    if sigma.algebra() != q.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    Ok(sigma.apply(q))
}

/// Square class of `-nrm(xi)` for `xi` spanning H-, as a signed squarefree integer.
pub fn disc_involution(sigma: &OrthogonalInvolution) -> BigInt {
    let neg = sigma.negated_space();
    debug_assert_eq!(neg.len(), 1);
    squarefree_part(&-neg[0].nrm())
}

pub fn factor(n: &BigInt) -> Vec<(BigInt, u32)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        let mut e = 0;
        while (&n % &p).is_zero() {
            n /= &p;
            e += 1;
        }
        if e > 0 {
            out.push((p.clone(), e));
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

/// Signed squarefree representative of the square class of a nonzero rational.
pub fn squarefree_part(r: &Rational) -> BigInt {
    assert!(!r.is_zero(), "zero has no square class");
    let prod = r.numer() * r.denom();
    let mut s = BigInt::one();
    for (p, e) in factor(&prod) {
        if e % 2 == 1 {
            s *= p;
        }
    }
    if r.is_negative() {
        -s
    } else {
        s
    }
}

pub fn is_squarefree(n: &BigInt) -> bool {
    !n.is_zero() && factor(n).iter().all(|(_, e)| *e == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(a: i64, b: i64) -> Algebra {
        QuatAlgebra::from_ints(a, b).unwrap()
    }

    #[test]
    fn defining_relations() {
        let h = alg(-1, -1);
        let (i, j, k) = (Quaternion::i(&h), Quaternion::j(&h), Quaternion::k(&h));
        assert_eq!(&i * &j, k);
        assert_eq!(&j * &i, -&k);
        let h2 = alg(-2, -6);
        let i2 = Quaternion::i(&h2);
        assert_eq!(&i2 * &i2, Quaternion::scalar(&h2, int(-2)));
        let j2 = Quaternion::j(&h2);
        assert_eq!(&j2 * &j2, Quaternion::scalar(&h2, int(-6)));
        let k2 = Quaternion::k(&h2);
        assert_eq!(&k2 * &k2, Quaternion::scalar(&h2, int(-12)));
    }

    #[test]
    fn mismatched_algebras() {
        let p = Quaternion::i(&alg(-1, -1));
        let q = Quaternion::i(&alg(-1, -2));
        assert!(matches!(quat_mul(&p, &q), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn norm_trace_inverse() {
        let h = alg(-1, -1);
        let q = Quaternion::from_ints(&h, [1, 1, 1, 1]);
        assert_eq!(q.nrm(), int(4));
        assert_eq!(q.conj(), Quaternion::from_ints(&h, [1, -1, -1, -1]));
        assert_eq!(Quaternion::i(&h).inv().unwrap(), -Quaternion::i(&h));
        assert!(matches!(Quaternion::zero(&h).inv(), Err(Error::DivisionByZero)));
        assert_eq!(q.tr(), int(2));
        let prod = &q * &q.conj();
        assert_eq!(prod, Quaternion::scalar(&h, q.nrm()));
    }

    #[test]
    fn standard_involution_negates_ij() {
        let h = alg(-1, -1);
        let s = OrthogonalInvolution::standard(&h);
        let q = Quaternion::from_ints(&h, [2, 3, 5, 7]);
        assert_eq!(s.apply(&q), Quaternion::from_ints(&h, [2, 3, 5, -7]));
        assert_eq!(s.fixed_space().len(), 3);
        assert_eq!(s.negated_space().len(), 1);
    }

    #[test]
    fn involution_discriminants() {
        let d = |a, b| disc_involution(&OrthogonalInvolution::standard(&alg(a, b)));
        assert_eq!(d(-1, -1), BigInt::from(-1));
        assert_eq!(d(-1, -2), BigInt::from(-2));
        assert_eq!(d(-2, -6), BigInt::from(-3));
    }

    #[test]
    fn invalid_involution() {
        let h = alg(-1, -1);
        assert!(OrthogonalInvolution::new(Quaternion::one(&h)).is_err());
        assert!(OrthogonalInvolution::new(Quaternion::zero(&h)).is_err());
    }

    #[test]
    fn square_classes() {
        assert_eq!(squarefree_part(&rat(-12, 1)), BigInt::from(-3));
        assert_eq!(squarefree_part(&rat(3, 4)), BigInt::from(3));
        assert_eq!(squarefree_part(&rat(2, 3)), BigInt::from(6));
        assert!(is_squarefree(&BigInt::from(22)));
        assert!(!is_squarefree(&BigInt::from(4)));
    }

    #[test]
    fn parse_and_display() {
        let h = alg(-1, -1);
        for s in ["1+i", "-1/2*j+3*ij", "0", "2-i-j-ij", "1/3"] {
            assert_eq!(Quaternion::parse(&h, s).unwrap().to_string(), s);
        }
        let q = Quaternion::parse(&h, "(1+i+j+ij)/2").unwrap();
        assert_eq!(q.coords().to_vec(), vec![rat(1, 2); 4]);
        assert!(Quaternion::parse(&h, "1+x").is_err());
        assert_eq!(Quaternion::parse(&h, "ij/2").unwrap(), Quaternion::parse(&h, "1/2*ij").unwrap());
        assert_eq!(Quaternion::parse(&h, "1-3j/4").unwrap(), Quaternion::parse(&h, "1-3/4*j").unwrap());
        assert!(Quaternion::parse(&h, "i/0").is_err());
    }
}
