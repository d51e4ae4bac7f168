//! Lattices and orders in a rational quaternion algebra: canonical bases,
//! discriminants, involution closure, ternary forms and class number one.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::enumerate;
use crate::error::{Error, Result};
use crate::exact_quat::{disc_involution, factor, Algebra, OrthogonalInvolution, Quaternion, Rational};
use crate::linalg::{self, RMat};

pub type IMat = Vec<Vec<BigInt>>;

/// A lattice stored as `(1/den) * H` with `H` the row HNF of an integer
/// matrix and `den` the smallest integer making the lattice integral.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    alg: Algebra,
    den: BigInt,
    rows: Vec<Vec<BigInt>>,
}

impl Lattice {
    pub fn from_generators(alg: &Algebra, gens: &[Quaternion]) -> Lattice {
        let den = linalg::lcm_denominators(gens.iter().flat_map(|g| g.coords().iter()));
        let dr = Rational::from_integer(den.clone());
        let scaled: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|g| g.coords().iter().map(|c| (c * &dr).to_integer()).collect())
            .collect();
        let rows = if scaled.is_empty() { Vec::new() } else { linalg::hnf(&scaled) };
        let den = if rows.is_empty() { BigInt::one() } else { den };
        Lattice { alg: alg.clone(), den, rows }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.alg
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn hnf_rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn basis(&self) -> Vec<Quaternion> {
        self.rows.iter().map(|r| self.row_quat(r)).collect()
    }

    fn row_quat(&self, r: &[BigInt]) -> Quaternion {
        let c: Vec<Rational> = r.iter().map(|x| Rational::new(x.clone(), self.den.clone())).collect();
        Quaternion::from_slice(&self.alg, &c)
    }

    pub fn element(&self, coeffs: &[BigInt]) -> Quaternion {
        let mut acc = vec![BigInt::zero(); 4];
        for (c, r) in coeffs.iter().zip(&self.rows) {
            for k in 0..4 {
                acc[k] += c * &r[k];
            }
        }
        self.row_quat(&acc)
    }

    /// Rational coordinates of `q` in the canonical basis, if `q` lies in the span.
    pub fn coordinates(&self, q: &Quaternion) -> Option<Vec<Rational>> {
        let dr = Rational::from_integer(self.den.clone());
        let mut v: Vec<Rational> = q.coords().iter().map(|c| c * &dr).collect();
        let mut out = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let p = r.iter().position(|x| !x.is_zero()).expect("HNF rows are nonzero");
            let c = &v[p] / Rational::from_integer(r[p].clone());
            for k in 0..4 {
                v[k] -= &c * Rational::from_integer(r[k].clone());
            }
            out.push(c);
        }
        v.iter().all(Zero::is_zero).then_some(out)
    }

    pub fn integer_coordinates(&self, q: &Quaternion) -> Option<Vec<BigInt>> {
        let c = self.coordinates(q)?;
        c.iter().all(|x| x.is_integer()).then(|| c.iter().map(|x| x.to_integer()).collect())
    }

    pub fn contains(&self, q: &Quaternion) -> bool {
        q.algebra() == &self.alg && self.integer_coordinates(q).is_some()
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        other.basis().iter().all(|b| self.contains(b))
    }

    /// Gram matrix of the norm form on the canonical basis.
    pub fn gram(&self) -> RMat {
        let b = self.basis();
        b.iter().map(|x| b.iter().map(|y| x.bilinear(y)).collect()).collect()
    }

    pub fn sum(&self, other: &Lattice) -> Lattice {
        let mut g = self.basis();
        g.extend(other.basis());
        Lattice::from_generators(&self.alg, &g)
    }

    /// `[sup : self]` when `self` is a full-rank sublattice of `sup`.
    pub fn index_in(&self, sup: &Lattice) -> Option<BigInt> {
        if self.rank() != sup.rank() {
            return None;
        }
        let m: Option<RMat> = self.basis().iter().map(|b| sup.coordinates(b)).collect();
        let m = m?;
        if m.iter().flatten().any(|x| !x.is_integer()) {
            return None;
        }
        Some(linalg::det(&m).abs().to_integer())
    }

    /// Sublattice of elements `x` with `f(x) = 0` for a Q-linear `f`.
    pub fn kernel_of(&self, f: impl Fn(&Quaternion) -> Vec<Rational>) -> Lattice {
        let basis = self.basis();
        let images: Vec<Vec<Rational>> = basis.iter().map(&f).collect();
        let den = linalg::lcm_denominators(images.iter().flatten());
        let dr = Rational::from_integer(den);
        let rows: Vec<Vec<BigInt>> =
            images.iter().map(|r| r.iter().map(|x| (x * &dr).to_integer()).collect()).collect();
        let ker = linalg::integer_kernel(&rows);
        let gens: Vec<Quaternion> = ker.iter().map(|c| self.element(c)).collect();
        Lattice::from_generators(&self.alg, &gens)
    }
}

/// Smallest lattice containing 1 and `gens` that is closed under multiplication.
pub fn ring_generated(alg: &Algebra, gens: &[Quaternion]) -> Result<Lattice> {
    let mut g = vec![Quaternion::one(alg)];
    g.extend(gens.iter().cloned());
    let mut lat = Lattice::from_generators(alg, &g);
    for _ in 0..64 {
        let b = lat.basis();
        let mut all = b.clone();
        for x in &b {
            for y in &b {
                all.push(x.checked_mul(y)?);
            }
        }
        let next = Lattice::from_generators(alg, &all);
        if next == lat {
            return Ok(lat);
        }
        lat = next;
    }
    Err(Error::NotALattice(lat.rank()))
}

/// A full-rank lattice containing 1 and closed under multiplication.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Order {
    lattice: Lattice,
}

impl Order {
    pub fn from_lattice(lattice: Lattice) -> Result<Order> {
        if lattice.rank() != 4 {
            return Err(Error::NotALattice(lattice.rank()));
        }
        let alg = lattice.algebra().clone();
        if !lattice.contains(&Quaternion::one(&alg)) {
            return Err(Error::MissingOne);
        }
        let b = lattice.basis();
        for x in &b {
            for y in &b {
                if !lattice.contains(&x.checked_mul(y)?) {
                    return Err(Error::NotARing);
                }
            }
        }
        Ok(Order { lattice })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn algebra(&self) -> &Algebra {
        self.lattice.algebra()
    }

    pub fn basis(&self) -> Vec<Quaternion> {
        self.lattice.basis()
    }

    pub fn contains(&self, q: &Quaternion) -> bool {
        self.lattice.contains(q)
    }
}

pub fn make_order(alg: &Algebra, generators: &[Quaternion]) -> Result<Order> {
    for g in generators {
        if g.algebra() != alg {
            return Err(Error::AlgebraMismatch);
        }
    }
    Order::from_lattice(Lattice::from_generators(alg, generators))
}

/// Parse a list of quaternion strings and build the order they span.
pub fn order_from_strings(alg: &Algebra, gens: &[&str]) -> Result<Order> {
    let g: Result<Vec<Quaternion>> = gens.iter().map(|s| Quaternion::parse(alg, s)).collect();
    make_order(alg, &g?)
}

/// Rank-3 sublattice, used for the plus part and the trace-zero part.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubLattice3 {
    lattice: Lattice,
}

impl SubLattice3 {
    pub fn new(lattice: Lattice) -> Result<SubLattice3> {
        if lattice.rank() != 3 {
            return Err(Error::Validation(format!("expected rank 3, got {}", lattice.rank())));
        }
        Ok(SubLattice3 { lattice })
    }

    pub fn from_generators(alg: &Algebra, gens: &[Quaternion]) -> Result<SubLattice3> {
        Self::new(Lattice::from_generators(alg, gens))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn algebra(&self) -> &Algebra {
        self.lattice.algebra()
    }

    pub fn basis(&self) -> Vec<Quaternion> {
        self.lattice.basis()
    }

    pub fn contains(&self, q: &Quaternion) -> bool {
        self.lattice.contains(q)
    }
}

pub fn order_disc(o: &Order) -> BigInt {
    let b = o.basis();
    let m: RMat = b.iter().map(|x| b.iter().map(|y| (x * y).tr()).collect()).collect();
    let d = linalg::det(&m).abs();
    debug_assert!(d.is_integer());
    let d = d.to_integer();
    let r = d.sqrt();
    debug_assert_eq!(&r * &r, d);
    r
}

fn legendre(a: &BigInt, p: &BigInt) -> i32 {
    let e = (p - 1u32) / 2u32;
    let r = a.mod_floor(p).modpow(&e, p);
    if r.is_one() {
        1
    } else if r.is_zero() {
        0
    } else {
        -1
    }
}

fn valuation(n: &BigInt, p: &BigInt) -> (u32, BigInt) {
    let mut n = n.clone();
    let mut v = 0;
    while (&n % p).is_zero() {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// Hilbert symbol `(a,b)_p` for nonzero integers and a prime `p`.
pub fn hilbert_symbol(a: &BigInt, b: &BigInt, p: &BigInt) -> i32 {
    let (alpha, u) = valuation(a, p);
    let (beta, v) = valuation(b, p);
    let two = BigInt::from(2);
    let bit = |x: &BigInt| -> u32 { (x.mod_floor(&two)).is_one() as u32 };
    if p == &two {
        let eps = |x: &BigInt| bit(&((x.mod_floor(&BigInt::from(8)) - 1u32) / 2u32));
        let omega = |x: &BigInt| {
            let m = x.mod_floor(&BigInt::from(16));
            bit(&((&m * &m - 1u32) / 8u32))
        };
        let e = eps(&u) * eps(&v) + alpha * omega(&v) + beta * omega(&u);
        if e % 2 == 0 {
            1
        } else {
            -1
        }
    } else {
        let eps_p = bit(&((p - 1u32) / 2u32));
        let mut s = if (alpha * beta * eps_p) % 2 == 1 { -1 } else { 1 };
        if beta % 2 == 1 {
            s *= legendre(&u, p);
        }
        if alpha % 2 == 1 {
            s *= legendre(&v, p);
        }
        s
    }
}

fn square_class_int(r: &Rational) -> BigInt {
    r.numer() * r.denom()
}

/// Product of the finite primes ramified in a definite algebra.
pub fn algebra_disc(alg: &Algebra) -> Result<BigInt> {
    if !alg.is_definite() {
        return Err(Error::IndefiniteUnsupported);
    }
    let a = square_class_int(alg.a());
    let b = square_class_int(alg.b());
    let mut d = BigInt::one();
    for (p, _) in factor(&(BigInt::from(2) * &a * &b)) {
        if hilbert_symbol(&a, &b, &p) == -1 {
            d *= p;
        }
    }
    Ok(d)
}

pub fn is_ddagger_order(o: &Order, sigma: &OrthogonalInvolution) -> bool {
    sigma.algebra() == o.algebra() && o.basis().iter().all(|b| o.contains(&sigma.apply(b)))
}

/// `O+ = O` intersected with the fixed space of `sigma`.
pub fn plus_part(o: &Order, sigma: &OrthogonalInvolution) -> Result<SubLattice3> {
    SubLattice3::new(o.lattice().kernel_of(|x| (&sigma.apply(x) - x).coords().to_vec()))
}

pub fn trace_zero_part(o: &Order) -> SubLattice3 {
    SubLattice3::new(o.lattice().kernel_of(|x| vec![x.tr()])).expect("trace is a nonzero functional")
}

pub fn is_maximal_ddagger_order(o: &Order, sigma: &OrthogonalInvolution) -> Result<bool> {
    if !is_ddagger_order(o, sigma) {
        return Err(Error::NotClosedUnderInvolution);
    }
    let dh = algebra_disc(o.algebra())?;
    let di = disc_involution(sigma).abs();
    Ok(order_disc(o) == dh.lcm(&di))
}

/// Symmetric 3x3 rational matrix; the form is `x -> x^T G x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TernaryForm {
    gram: RMat,
}

impl TernaryForm {
    pub fn new(gram: RMat) -> Result<TernaryForm> {
        let ok = gram.len() == 3
            && gram.iter().all(|r| r.len() == 3)
            && (0..3).all(|i| (0..3).all(|j| gram[i][j] == gram[j][i]));
        if !ok {
            return Err(Error::Validation("ternary form must be a symmetric 3x3 matrix".into()));
        }
        Ok(TernaryForm { gram })
    }

    /// Read a printed coefficient matrix: diagonal entries as is, off-diagonal halved.
    pub fn from_coefficients(m: &[[i64; 3]; 3]) -> Result<TernaryForm> {
        let g = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { Rational::from_integer(m[i][j].into()) } else { Rational::new(m[i][j].into(), 2.into()) })
                    .collect()
            })
            .collect();
        Self::new(g)
    }

    pub fn from_gram_ints(m: &[[i64; 3]; 3]) -> Result<TernaryForm> {
        Self::new(m.iter().map(|r| r.iter().map(|&x| Rational::from_integer(x.into())).collect()).collect())
    }

    pub fn gram(&self) -> &RMat {
        &self.gram
    }

    pub fn det(&self) -> Rational {
        linalg::det(&self.gram)
    }

    pub fn is_positive_definite(&self) -> bool {
        enumerate::is_positive_definite(&self.gram)
    }

    pub fn value(&self, x: &[BigInt]) -> Rational {
        let v: Vec<Rational> = x.iter().map(|c| Rational::from_integer(c.clone())).collect();
        enumerate::quad_value(&self.gram, &v)
    }

    pub fn scale(&self, s: &Rational) -> TernaryForm {
        TernaryForm { gram: self.gram.iter().map(|r| r.iter().map(|x| x * s).collect()).collect() }
    }

    /// `U^T G U`.
    pub fn transform(&self, u: &IMat) -> TernaryForm {
        let ur = to_rmat(u);
        let g = linalg::mat_mul(&linalg::mat_mul(&linalg::transpose(&ur), &self.gram), &ur);
        TernaryForm { gram: g }
    }
}

pub fn to_rmat(u: &IMat) -> RMat {
    u.iter().map(|r| r.iter().map(|x| Rational::from_integer(x.clone())).collect()).collect()
}

pub fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let n = b[0].len();
    a.iter()
        .map(|r| (0..n).map(|j| r.iter().zip(b).map(|(x, br)| x * &br[j]).sum()).collect())
        .collect()
}

/// Inverse of an integer matrix with determinant +-1.
pub fn imat_inverse(u: &IMat) -> Option<IMat> {
    let inv = linalg::inverse(&to_rmat(u))?;
    inv.iter()
        .map(|r| r.iter().map(|x| x.is_integer().then(|| x.to_integer())).collect())
        .collect()
}

pub fn ternary_gram(l: &SubLattice3) -> TernaryForm {
    TernaryForm { gram: l.lattice().gram() }
}

fn pairing(g: &RMat, x: &[BigInt], y: &[BigInt]) -> Rational {
    let mut s = Rational::zero();
    for i in 0..x.len() {
        if x[i].is_zero() {
            continue;
        }
        for j in 0..y.len() {
            s += &g[i][j] * Rational::from_integer(&x[i] * &y[j]);
        }
    }
    s
}

fn isometry_search(f1: &TernaryForm, f2: &TernaryForm, first_only: bool) -> Result<Vec<IMat>> {
    if !f1.is_positive_definite() || !f2.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    if f1.det() != f2.det() {
        return Ok(Vec::new());
    }
    let g1 = &f1.gram;
    let g2 = &f2.gram;
    let bound = (0..3).map(|i| g2[i][i].clone()).max().unwrap();
    let pts = enumerate::points_within(g1, &[Rational::zero(), Rational::zero(), Rational::zero()], &bound)?;
    let cands: Vec<Vec<&Vec<BigInt>>> = (0..3)
        .map(|c| pts.iter().filter(|(_, v)| v == &g2[c][c]).map(|(x, _)| x).collect())
        .collect();
    let mut out = Vec::new();
    for u0 in &cands[0] {
        for u1 in &cands[1] {
            if pairing(g1, u0, u1) != g2[0][1] {
                continue;
            }
            for u2 in &cands[2] {
                if pairing(g1, u0, u2) != g2[0][2] || pairing(g1, u1, u2) != g2[1][2] {
                    continue;
                }
                let u: IMat = (0..3).map(|r| vec![u0[r].clone(), u1[r].clone(), u2[r].clone()]).collect();
                if linalg::det(&to_rmat(&u)).abs().is_one() {
                    out.push(u);
                    if first_only {
                        return Ok(out);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A unimodular `U` with `U^T F1 U = F2`, if one exists.
pub fn forms_equivalent(f1: &TernaryForm, f2: &TernaryForm) -> Result<Option<IMat>> {
    Ok(isometry_search(f1, f2, true)?.into_iter().next())
}

/// Every unimodular `U` with `U^T F1 U = F2`.
pub fn isometries(f1: &TernaryForm, f2: &TernaryForm) -> Result<Vec<IMat>> {
    isometry_search(f1, f2, false)
}

pub fn automorphisms(f: &TernaryForm) -> Result<Vec<IMat>> {
    isometries(f, f)
}

const TABLE2_JSON: &str = include_str!("../data/table2_forms.json");

/// The 24 printed matrices of the class-number-one table, verbatim.
pub fn table2_matrices() -> Vec<[[i64; 3]; 3]> {
    #[derive(serde::Deserialize)]
    struct File {
        forms: Vec<[[i64; 3]; 3]>,
    }
    let f: File = serde_json::from_str(TABLE2_JSON).expect("bundled table is valid JSON");
    f.forms
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Table2Convention {
    /// Entries are the Gram matrix.
    Gram,
    /// Entries are coefficients of `sum a_ij x_i x_j` with `i <= j`.
    Coefficient,
}

pub fn table2_forms(conv: Table2Convention) -> Vec<Option<TernaryForm>> {
    table2_matrices()
        .iter()
        .map(|m| {
            let f = match conv {
                Table2Convention::Gram => TernaryForm::from_gram_ints(m),
                Table2Convention::Coefficient => TernaryForm::from_coefficients(m),
            }
            .ok()?;
            f.is_positive_definite().then_some(f)
        })
        .collect()
}

/// The Gross lattice `{2x - tr(x) : x in O}`.
pub fn gross_lattice(o: &Order) -> SubLattice3 {
    let alg = o.algebra();
    let g: Vec<Quaternion> = o
        .basis()
        .iter()
        .map(|b| &b.scale(&Rational::from_integer(2.into())) - &Quaternion::scalar(alg, b.tr()))
        .collect();
    SubLattice3::from_generators(alg, &g).expect("image of an order under 2x - tr x has rank 3")
}

/// `disc(O) * G^-1` for `G` the norm Gram matrix of the Gross lattice.
pub fn class_number_form(o: &Order) -> TernaryForm {
    let g = gross_lattice(o).lattice().gram();
    let inv = linalg::inverse(&g).expect("norm form is nondegenerate");
    TernaryForm { gram: inv }.scale(&Rational::from_integer(order_disc(o)))
}

/// Decide the convention by matching the Hurwitz order's class form.
pub fn calibrate_table2() -> Option<Table2Convention> {
    let h = crate::exact_quat::QuatAlgebra::from_ints(-1, -1).ok()?;
    let hur = order_from_strings(&h, &["1", "i", "j", "(1+i+j+ij)/2"]).ok()?;
    let f = class_number_form(&hur);
    [Table2Convention::Gram, Table2Convention::Coefficient].into_iter().find(|&c| {
        let forms = table2_forms(c);
        forms.iter().all(Option::is_some)
            && forms.iter().flatten().any(|t| matches!(forms_equivalent(&f, t), Ok(Some(_))))
    })
}

/// Index of the Table 2 entry equivalent to the order's class form.
pub fn table2_index(o: &Order) -> Result<Option<usize>> {
    if !o.algebra().is_definite() {
        return Err(Error::IndefiniteUnsupported);
    }
    let f = class_number_form(o);
    for (k, t) in table2_forms(Table2Convention::Coefficient).iter().enumerate() {
        if let Some(t) = t {
            if forms_equivalent(&f, t)?.is_some() {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

pub fn has_class_number_one(o: &Order) -> Result<bool> {
    Ok(table2_index(o)?.is_some())
}

/// All elements of norm 1, sorted by coefficient vector.
pub fn unit_group(o: &Order) -> Result<Vec<Quaternion>> {
    if !o.algebra().is_definite() {
        return Err(Error::IndefiniteUnsupported);
    }
    let l = o.lattice();
    let pts = enumerate::points_within(&l.gram(), &vec![Rational::zero(); 4], &Rational::one())?;
    Ok(pts.into_iter().filter(|(_, v)| v.is_one()).map(|(x, _)| l.element(&x)).collect())
}
