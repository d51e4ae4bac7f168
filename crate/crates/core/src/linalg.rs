//! Small dense linear algebra over exact rationals and integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::exact_quat::Rational;

pub type RMat = Vec<Vec<Rational>>;

pub fn identity(n: usize) -> RMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect()
}

pub fn det(m: &RMat) -> Rational {
    let n = m.len();
    let mut a = m.clone();
    let mut d = Rational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        let piv = a[col][col].clone();
        d *= &piv;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &piv;
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] -= t;
            }
        }
    }
    d
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(a: &mut RMat) -> Vec<usize> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in 0..cols {
                    let t = &f * &a[r][k];
                    a[i][k] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &RMat) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of `{x : m x = 0}`.
pub fn nullspace(m: &RMat, cols: usize) -> RMat {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

pub fn inverse(m: &RMat) -> Option<RMat> {
    let n = m.len();
    let mut a: RMat = m
        .iter()
        .zip(identity(n))
        .map(|(row, id)| row.iter().cloned().chain(id).collect())
        .collect();
    let pivots = rref(&mut a);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Solve `m x = rhs` for square nonsingular `m`.
pub fn solve(m: &RMat, rhs: &[Rational]) -> Option<Vec<Rational>> {
    let inv = inverse(m)?;
    Some(mat_vec(&inv, rhs))
}

pub fn mat_vec(m: &RMat, v: &[Rational]) -> Vec<Rational> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn mat_mul(a: &RMat, b: &RMat) -> RMat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * &brow[j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &RMat) -> RMat {
    let n = a.first().map_or(0, |r| r.len());
    (0..n).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn lcm_denominators<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Row-style Hermite normal form of an integer matrix. Zero rows are dropped;
/// pivots are positive and entries above each pivot lie in `[0, pivot)`.
pub fn hnf(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..n {
        if r == m {
            break;
        }
        loop {
            let best = (r..m)
                .filter(|&i| !a[i][c].is_zero())
                .min_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs()));
            let Some(p) = best else { break };
            a.swap(r, p);
            let mut clean = true;
            for i in r + 1..m {
                if a[i][c].is_zero() {
                    continue;
                }
                let q = a[i][c].div_floor(&a[r][c]);
                let (head, tail) = a.split_at_mut(i);
                for (x, y) in tail[0].iter_mut().zip(&head[r]) {
                    *x -= &q * y;
                }
                if !a[i][c].is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if r < m && !a[r][c].is_zero() {
            if a[r][c].is_negative() {
                for x in a[r].iter_mut() {
                    *x = -x.clone();
                }
            }
            pivots.push((r, c));
            r += 1;
        }
    }
    for &(pr, pc) in &pivots {
        for i in 0..pr {
            let q = a[i][pc].div_floor(&a[pr][pc]);
            if q.is_zero() {
                continue;
            }
            let (head, tail) = a.split_at_mut(pr);
            for (x, y) in head[i].iter_mut().zip(&tail[0]) {
                *x -= &q * y;
            }
        }
    }
    a.truncate(r);
    a
}

/// Z-basis of the integer vectors `c` with `sum c_i rows_i = 0`.
pub fn integer_kernel(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let m = rows.len();
    if m == 0 {
        return Vec::new();
    }
    let n = rows[0].len();
    let aug: Vec<Vec<BigInt>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..m).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
            v
        })
        .collect();
    let h = hnf(&aug);
    h.into_iter()
        .filter(|row| row[..n].iter().all(Zero::is_zero))
        .map(|row| row[n..].to_vec())
        .collect()
}
