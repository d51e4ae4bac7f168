//! Exact enumeration of integer points in ellipsoids `(x-c)^T G (x-c) <= B`
//! for positive definite rational `G` (Fincke-Pohst over Q).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact_quat::Rational;
use crate::linalg::RMat;

/// `G = sum_i d_i (x_i + sum_{j>i} mu_ij x_j)^2`.
#[derive(Clone, Debug)]
pub struct Ldl {
    d: Vec<Rational>,
    mu: RMat,
}

impl Ldl {
    pub fn new(gram: &RMat) -> Result<Ldl> {
        let n = gram.len();
        let mut a = gram.clone();
        let mut d = Vec::with_capacity(n);
        let mut mu = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            if !a[i][i].is_positive() {
                return Err(Error::NotPositiveDefinite);
            }
            d.push(a[i][i].clone());
            for j in i + 1..n {
                mu[i][j] = &a[i][j] / &d[i];
            }
            for k in i + 1..n {
                for l in k..n {
                    let t = &mu[i][k] * &a[i][l];
                    a[k][l] -= &t;
                    if l != k {
                        a[l][k] = a[k][l].clone();
                    }
                }
            }
        }
        Ok(Ldl { d, mu })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }
}

pub fn is_positive_definite(gram: &RMat) -> bool {
    Ldl::new(gram).is_ok()
}

fn floor_rat(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

/// Integers `x` with `(x - m)^2 <= r2`, as an inclusive range.
fn int_range(m: &Rational, r2: &Rational) -> Option<(BigInt, BigInt)> {
    if r2.is_negative() {
        return None;
    }
    let ok = |x: &BigInt| {
        let t = Rational::from_integer(x.clone()) - m;
        &(&t * &t) <= r2
    };
    let approx = r2.to_f64().unwrap_or(f64::MAX).sqrt();
    let base = floor_rat(m);
    let guess = BigInt::from(approx.floor() as i64);
    let mut hi = &base + &guess + 1;
    while ok(&(&hi + 1)) {
        hi += 1;
    }
    while hi >= base && !ok(&hi) {
        hi -= 1;
    }
    let mut lo = &base - &guess;
    while ok(&(&lo - 1)) {
        lo -= 1;
    }
    while lo <= &base + 1 && !ok(&lo) {
        lo += 1;
    }
    if lo > hi || !ok(&lo) {
        return None;
    }
    Some((lo, hi))
}

/// All `x` in Z^n with `(x - c)^T G (x - c) <= bound`, with their values,
/// in lexicographic order of `x`.
pub fn enumerate_ellipsoid(
    ldl: &Ldl,
    center: &[Rational],
    bound: &Rational,
) -> Vec<(Vec<BigInt>, Rational)> {
    let n = ldl.dim();
    let mut out = Vec::new();
    let mut x = vec![BigInt::zero(); n];
    if n == 0 {
        return vec![(Vec::new(), Rational::zero())];
    }
    recurse(ldl, center, n - 1, bound.clone(), &mut x, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn recurse(
    ldl: &Ldl,
    c: &[Rational],
    i: usize,
    rem: Rational,
    x: &mut Vec<BigInt>,
    out: &mut Vec<(Vec<BigInt>, Rational)>,
) {
    let n = ldl.dim();
    // shift = sum_{j>i} mu_ij (x_j - c_j)
    let mut shift = Rational::zero();
    for j in i + 1..n {
        shift += &ldl.mu[i][j] * (Rational::from_integer(x[j].clone()) - &c[j]);
    }
    let m = &c[i] - &shift;
    let r2 = &rem / &ldl.d[i];
    let Some((lo, hi)) = int_range(&m, &r2) else { return };
    let mut v = lo;
    while v <= hi {
        let t = Rational::from_integer(v.clone()) - &m;
        let used = &ldl.d[i] * &t * &t;
        let left = &rem - &used;
        x[i] = v.clone();
        if i == 0 {
            out.push((x.clone(), left));
        } else {
            recurse(ldl, c, i - 1, left, x, out);
        }
        v += 1;
    }
}

/// Evaluate `(x - c)^T G (x - c)`.
pub fn quad_value(gram: &RMat, x: &[Rational]) -> Rational {
    let mut s = Rational::zero();
    for (i, xi) in x.iter().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            s += &gram[i][j] * xi * xj;
        }
    }
    s
}

/// Enumerate and return `(x, value)` where value is the exact quadratic value.
pub fn points_within(gram: &RMat, center: &[Rational], bound: &Rational) -> Result<Vec<(Vec<BigInt>, Rational)>> {
    let ldl = Ldl::new(gram)?;
    Ok(enumerate_ellipsoid(&ldl, center, bound)
        .into_iter()
        .map(|(x, left)| (x, bound - left))
        .collect())
}

/// Closest integer points to `center`; ties are all returned, sorted lexicographically.
pub fn closest_points(gram: &RMat, center: &[Rational]) -> Result<(Vec<Vec<BigInt>>, Rational)> {
    let ldl = Ldl::new(gram)?;
    let rounded: Vec<Rational> = center.iter().map(|c| Rational::from_integer(c.round().to_integer())).collect();
    let diff: Vec<Rational> = rounded.iter().zip(center).map(|(a, b)| a - b).collect();
    let bound = quad_value(gram, &diff);
    let pts = enumerate_ellipsoid(&ldl, center, &bound);
    let best = pts
        .iter()
        .map(|(_, left)| &bound - left)
        .min()
        .expect("rounded point lies inside the search ellipsoid");
    let winners = pts
        .into_iter()
        .filter(|(_, left)| &bound - left == best)
        .map(|(x, _)| x)
        .collect();
    Ok((winners, best))
}
