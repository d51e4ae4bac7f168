//! The twisted Euclidean algorithm over a ‡-order, the twisted special
//! linear group and its elementary generators.

use std::fmt;

use num_traits::One;

use crate::enumerate;
use crate::error::{Error, Result};
use crate::exact_quat::{OrthogonalInvolution, Quaternion, Rational};
use crate::lattice_orders::{plus_part, Order, SubLattice3};
use crate::linalg::RMat;

/// 2x2 matrix `((a, b), (c, d))` of quaternions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuatMatrix {
    pub a: Quaternion,
    pub b: Quaternion,
    pub c: Quaternion,
    pub d: Quaternion,
}

impl QuatMatrix {
    pub fn new(a: Quaternion, b: Quaternion, c: Quaternion, d: Quaternion) -> Self {
        QuatMatrix { a, b, c, d }
    }

    pub fn identity(alg: &crate::exact_quat::Algebra) -> Self {
        let (o, z) = (Quaternion::one(alg), Quaternion::zero(alg));
        QuatMatrix::new(o.clone(), z.clone(), z, o)
    }

    pub fn inversion(alg: &crate::exact_quat::Algebra) -> Self {
        let (o, z) = (Quaternion::one(alg), Quaternion::zero(alg));
        QuatMatrix::new(z.clone(), o.clone(), -o, z)
    }

    pub fn translation(tau: &Quaternion) -> Self {
        let alg = tau.algebra();
        QuatMatrix::new(Quaternion::one(alg), tau.clone(), Quaternion::zero(alg), Quaternion::one(alg))
    }

    pub fn unit(u: &Quaternion, sigma: &OrthogonalInvolution) -> Result<Self> {
        let alg = u.algebra();
        let d = sigma.apply(u).inv()?;
        Ok(QuatMatrix::new(u.clone(), Quaternion::zero(alg), Quaternion::zero(alg), d))
    }

    pub fn mul(&self, m: &QuatMatrix) -> QuatMatrix {
        QuatMatrix::new(
            &(&self.a * &m.a) + &(&self.b * &m.c),
            &(&self.a * &m.b) + &(&self.b * &m.d),
            &(&self.c * &m.a) + &(&self.d * &m.c),
            &(&self.c * &m.b) + &(&self.d * &m.d),
        )
    }

    pub fn entries(&self) -> [&Quaternion; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }
}

impl fmt::Display for QuatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(({}, {}), ({}, {}))", self.a, self.b, self.c, self.d)
    }
}

/// `((a,b),(c,d)) -> ((σd, -σb), (-σc, σa))`.
pub fn hat_sigma(m: &QuatMatrix, sigma: &OrthogonalInvolution) -> QuatMatrix {
    QuatMatrix::new(sigma.apply(&m.d), -sigma.apply(&m.b), -sigma.apply(&m.c), sigma.apply(&m.a))
}

pub fn sl_check(m: &QuatMatrix, sigma: &OrthogonalInvolution) -> bool {
    let h = hat_sigma(m, sigma);
    let id = QuatMatrix::identity(m.a.algebra());
    m.mul(&h) == id && h.mul(m) == id
}

/// `true` when `x sigma(y)` is fixed by `sigma`.
pub fn is_compatible(x: &Quaternion, y: &Quaternion, sigma: &OrthogonalInvolution) -> bool {
    sigma.is_fixed(&(x * &sigma.apply(y)))
}

/// `true` when `x = y d` for some `y` in `O`.
pub fn right_divides(d: &Quaternion, x: &Quaternion, o: &Order) -> bool {
    match d.inv() {
        Ok(di) => o.contains(&(x * &di)),
        Err(_) => x.is_zero(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisionStep {
    pub q: Quaternion,
    pub r: Quaternion,
    pub decreased: bool,
}

/// Record of one run: `r_{i} = r_{i-2} - r_{i-1} q_{i-1}` and
/// `a σ(s_i) - b σ(t_i) = r_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EuclideanTranscript {
    pub r_list: Vec<Quaternion>,
    pub s_list: Vec<Quaternion>,
    pub t_list: Vec<Quaternion>,
    pub q_list: Vec<Quaternion>,
}

impl EuclideanTranscript {
    /// Index `k` of the last nonzero remainder.
    pub fn k(&self) -> usize {
        self.r_list.len() - 2
    }

    pub fn gcd(&self) -> &Quaternion {
        &self.r_list[self.k()]
    }

    /// `P_k = ((t_k, s_k), ((-1)^k t_{k+1}, (-1)^k s_{k+1}))`.
    pub fn matrix(&self) -> QuatMatrix {
        let k = self.k();
        let sign = |q: &Quaternion| if k % 2 == 0 { q.clone() } else { -q };
        QuatMatrix::new(
            self.t_list[k].clone(),
            self.s_list[k].clone(),
            sign(&self.t_list[k + 1]),
            sign(&self.s_list[k + 1]),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    Translation(Quaternion),
    Unit(Quaternion),
    Inversion,
}

impl Generator {
    pub fn matrix(&self, sigma: &OrthogonalInvolution) -> QuatMatrix {
        let alg = sigma.algebra();
        match self {
            Generator::Translation(t) => QuatMatrix::translation(t),
            Generator::Unit(u) => QuatMatrix::unit(u, sigma).expect("unit payloads are invertible"),
            Generator::Inversion => QuatMatrix::inversion(alg),
        }
    }

    /// Generators whose product is the inverse of this one.
    pub fn inverse(&self, sigma: &OrthogonalInvolution) -> Vec<Generator> {
        match self {
            Generator::Translation(t) => vec![Generator::Translation(-t)],
            Generator::Unit(u) => vec![Generator::Unit(u.inv().expect("unit"))],
            Generator::Inversion => vec![Generator::Unit(-Quaternion::one(sigma.algebra())), Generator::Inversion],
        }
    }
}

/// Product of generators, read left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratorWord(pub Vec<Generator>);

impl GeneratorWord {
    pub fn evaluate(&self, sigma: &OrthogonalInvolution) -> QuatMatrix {
        let mut m = QuatMatrix::identity(sigma.algebra());
        for g in &self.0 {
            m = m.mul(&g.matrix(sigma));
        }
        m
    }

    pub fn inverse(&self, sigma: &OrthogonalInvolution) -> GeneratorWord {
        GeneratorWord(self.0.iter().rev().flat_map(|g| g.inverse(sigma)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An order with involution, its plus part and the plus-part norm Gram matrix.
#[derive(Clone, Debug)]
pub struct TwistedRing {
    order: Order,
    sigma: OrthogonalInvolution,
    plus: SubLattice3,
    gram: RMat,
}

impl TwistedRing {
    pub fn new(order: Order, sigma: OrthogonalInvolution) -> Result<TwistedRing> {
        if !crate::lattice_orders::is_ddagger_order(&order, &sigma) {
            return Err(Error::NotClosedUnderInvolution);
        }
        if !order.algebra().is_definite() {
            return Err(Error::IndefiniteUnsupported);
        }
        let plus = plus_part(&order, &sigma)?;
        let gram = plus.lattice().gram();
        Ok(TwistedRing { order, sigma, plus, gram })
    }

    pub fn standard(order: Order) -> Result<TwistedRing> {
        let s = OrthogonalInvolution::standard(order.algebra());
        Self::new(order, s)
    }

    pub fn order(&self) -> &Order {
        &self.order
    }

    pub fn sigma(&self) -> &OrthogonalInvolution {
        &self.sigma
    }

    pub fn plus(&self) -> &SubLattice3 {
        &self.plus
    }

    pub fn plus_gram(&self) -> &RMat {
        &self.gram
    }

    /// Points of `O+` closest to `target` (in H+) under the norm, lexicographically sorted.
    pub fn closest_plus(&self, target: &Quaternion) -> Result<(Vec<Quaternion>, Rational)> {
        let coords = self
            .plus
            .lattice()
            .coordinates(target)
            .ok_or_else(|| Error::Validation(format!("{target} is not in the fixed space")))?;
        let (w, d) = enumerate::closest_points(&self.gram, &coords)?;
        Ok((w.iter().map(|x| self.plus.lattice().element(x)).collect(), d))
    }

    pub fn divide_step(&self, a: &Quaternion, b: &Quaternion) -> Result<DivisionStep> {
        if b.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        if !is_compatible(a, b, &self.sigma) {
            return Err(Error::NotCompatiblePair);
        }
        let target = &b.inv()? * a;
        let (w, _) = self.closest_plus(&target)?;
        let q = w.into_iter().next().expect("closest point exists");
        let r = a - &(b * &q);
        let decreased = r.nrm() < b.nrm();
        Ok(DivisionStep { q, r, decreased })
    }

    pub fn twisted_euclidean(&self, a: &Quaternion, b: &Quaternion) -> Result<EuclideanTranscript> {
        if !is_compatible(a, b, &self.sigma) {
            return Err(Error::NotCompatiblePair);
        }
        let alg = a.algebra();
        let one = Quaternion::one(alg);
        let zero = Quaternion::zero(alg);
        let mut tr = EuclideanTranscript {
            r_list: vec![a.clone(), b.clone()],
            s_list: vec![one.clone(), zero.clone()],
            t_list: vec![zero, -one],
            q_list: Vec::new(),
        };
        while !tr.r_list.last().unwrap().is_zero() {
            let i = tr.r_list.len();
            let step = self.divide_step(&tr.r_list[i - 2], &tr.r_list[i - 1])?;
            if !step.decreased {
                return Err(Error::StathmNotDecreased(Box::new(tr)));
            }
            let q = step.q;
            let s = &tr.s_list[i - 2] - &(&q * &tr.s_list[i - 1]);
            let t = &tr.t_list[i - 2] - &(&q * &tr.t_list[i - 1]);
            tr.r_list.push(step.r);
            tr.s_list.push(s);
            tr.t_list.push(t);
            tr.q_list.push(q);
        }
        Ok(tr)
    }

    /// A matrix of the twisted special linear group with bottom row `(c, d)`.
    pub fn complete_row(&self, c: &Quaternion, d: &Quaternion) -> Result<QuatMatrix> {
        if c.is_zero() && d.is_zero() {
            return Err(Error::NotCoprime("0".into()));
        }
        let tr = self.twisted_euclidean(c, d)?;
        let g = tr.gcd();
        if !g.nrm().is_one() {
            return Err(Error::NotCoprime(g.nrm().to_string()));
        }
        let u = self.sigma.apply(&-g).inv()?;
        Ok(QuatMatrix::unit(&u, &self.sigma)?.mul(&tr.matrix()))
    }

    fn in_plus(&self, x: &Quaternion) -> bool {
        self.sigma.is_fixed(x) && self.order.contains(x)
    }

    fn is_unit(&self, x: &Quaternion) -> bool {
        self.order.contains(x) && x.nrm().is_one()
    }

    /// `((a,b),(0,d)) = Unit(a) Tr(a^-1 b)`.
    fn factor_upper(&self, m: &QuatMatrix, out: &mut Vec<Generator>) -> Result<()> {
        if !self.is_unit(&m.a) {
            return Err(Error::NotEuclideanReducible);
        }
        let tau = &m.a.inv()? * &m.b;
        if !self.in_plus(&tau) {
            return Err(Error::NotEuclideanReducible);
        }
        if !m.a.is_one() {
            out.push(Generator::Unit(m.a.clone()));
        }
        if !tau.is_zero() {
            out.push(Generator::Translation(tau));
        }
        Ok(())
    }

    /// `((a,0),(c,d)) = Unit(-a) J Tr(-d^-1 c) J`.
    fn factor_lower(&self, m: &QuatMatrix, out: &mut Vec<Generator>) -> Result<()> {
        if !self.is_unit(&m.a) {
            return Err(Error::NotEuclideanReducible);
        }
        let x = -(&m.d.inv()? * &m.c);
        if !self.in_plus(&x) {
            return Err(Error::NotEuclideanReducible);
        }
        let na = -&m.a;
        if !na.is_one() {
            out.push(Generator::Unit(na));
        }
        out.push(Generator::Inversion);
        if !x.is_zero() {
            out.push(Generator::Translation(x));
        }
        out.push(Generator::Inversion);
        Ok(())
    }

    /// Write `P_k = E_k ... E_1 J`.
    fn transcript_word(&self, tr: &EuclideanTranscript) -> Vec<Generator> {
        let minus_one = -Quaternion::one(self.sigma.algebra());
        let mut out = Vec::new();
        for i in (1..=tr.k()).rev() {
            let q = &tr.q_list[i - 1];
            if i % 2 == 1 {
                out.push(Generator::Inversion);
                if !q.is_zero() {
                    out.push(Generator::Translation(-q));
                }
            } else {
                out.push(Generator::Unit(minus_one.clone()));
                out.push(Generator::Inversion);
                if !q.is_zero() {
                    out.push(Generator::Translation(q.clone()));
                }
            }
        }
        out.push(Generator::Inversion);
        out
    }

    pub fn factor_into_generators(&self, m: &QuatMatrix) -> Result<GeneratorWord> {
        if !sl_check(m, &self.sigma) {
            return Err(Error::Validation("matrix fails the twisted special linear check".into()));
        }
        let mut out = Vec::new();
        if m.c.is_zero() {
            self.factor_upper(m, &mut out)?;
        } else if m.b.is_zero() {
            self.factor_lower(m, &mut out)?;
        } else {
            let tr = match self.twisted_euclidean(&m.a, &m.b) {
                Ok(t) => t,
                Err(Error::StathmNotDecreased(_)) => return Err(Error::NotEuclideanReducible),
                Err(e) => return Err(e),
            };
            let p = tr.matrix();
            // M hat(P) has top row (0, -r_k); right multiplication by J makes it lower triangular.
            let t = m.mul(&hat_sigma(&p, &self.sigma)).mul(&QuatMatrix::inversion(m.a.algebra()));
            if !t.b.is_zero() {
                return Err(Error::NotEuclideanReducible);
            }
            self.factor_lower(&t, &mut out)?;
            out.push(Generator::Unit(-Quaternion::one(m.a.algebra())));
            out.push(Generator::Inversion);
            out.extend(self.transcript_word(&tr));
        }
        let word = GeneratorWord(out);
        if &word.evaluate(&self.sigma) != m {
            return Err(Error::NotEuclideanReducible);
        }
        Ok(word)
    }
}

pub fn divide_step(a: &Quaternion, b: &Quaternion, o: &Order, sigma: &OrthogonalInvolution) -> Result<DivisionStep> {
    TwistedRing::new(o.clone(), sigma.clone())?.divide_step(a, b)
}

pub fn twisted_euclidean(
    a: &Quaternion,
    b: &Quaternion,
    o: &Order,
    sigma: &OrthogonalInvolution,
) -> Result<EuclideanTranscript> {
    TwistedRing::new(o.clone(), sigma.clone())?.twisted_euclidean(a, b)
}

pub fn complete_row(c: &Quaternion, d: &Quaternion, o: &Order, sigma: &OrthogonalInvolution) -> Result<QuatMatrix> {
    TwistedRing::new(o.clone(), sigma.clone())?.complete_row(c, d)
}

pub fn factor_into_generators(m: &QuatMatrix, o: &Order, sigma: &OrthogonalInvolution) -> Result<GeneratorWord> {
    TwistedRing::new(o.clone(), sigma.clone())?.factor_into_generators(m)
}

trait IsOne {
    fn is_one(&self) -> bool;
}

impl IsOne for Quaternion {
    fn is_one(&self) -> bool {
        self.is_scalar() && self.coords()[0].is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_quat::{int, Algebra, QuatAlgebra};
    use crate::lattice_orders::{order_from_strings, unit_group};

    fn hurwitz() -> TwistedRing {
        let h = QuatAlgebra::from_ints(-1, -1).unwrap();
        TwistedRing::standard(order_from_strings(&h, &["1", "i", "j", "(1+i+j+ij)/2"]).unwrap()).unwrap()
    }

    fn q(r: &TwistedRing, s: &str) -> Quaternion {
        Quaternion::parse(r.order().algebra(), s).unwrap()
    }

    fn alg(r: &TwistedRing) -> Algebra {
        r.order().algebra().clone()
    }

    #[test]
    fn hat_sigma_examples() {
        let r = hurwitz();
        let s = r.sigma();
        let id = QuatMatrix::identity(&alg(&r));
        assert_eq!(hat_sigma(&id, s), id);
        let j = QuatMatrix::inversion(&alg(&r));
        let hj = hat_sigma(&j, s);
        assert_eq!(hj, QuatMatrix::new(q(&r, "0"), q(&r, "-1"), q(&r, "1"), q(&r, "0")));
        let m = QuatMatrix::new(q(&r, "1+ij"), q(&r, "i-j"), q(&r, "2+3*ij"), q(&r, "1/2*i"));
        assert_eq!(hat_sigma(&hat_sigma(&m, s), s), m);
    }

    #[test]
    fn sl_examples() {
        let r = hurwitz();
        let s = r.sigma();
        assert!(sl_check(&QuatMatrix::identity(&alg(&r)), s));
        assert!(sl_check(&QuatMatrix::translation(&q(&r, "1+i+j")), s));
        assert!(!sl_check(&QuatMatrix::translation(&q(&r, "ij")), s));
        assert!(sl_check(&QuatMatrix::inversion(&alg(&r)), s));
    }

    #[test]
    fn divide_examples() {
        let r = hurwitz();
        let st = r.divide_step(&q(&r, "1+i+j"), &q(&r, "1")).unwrap();
        assert_eq!((st.q, st.r), (q(&r, "1+i+j"), q(&r, "0")));
        let st = r.divide_step(&q(&r, "2"), &q(&r, "1+i")).unwrap();
        assert_eq!((st.q.clone(), st.r.clone()), (q(&r, "1-i"), q(&r, "0")));
        // exhaustive oracle over q in O+ with nrm(q) <= 9
        let mut best = None;
        for x in -3..=3i64 {
            for y in -3..=3i64 {
                for z in -3..=3i64 {
                    let cand = Quaternion::from_ints(&alg(&r), [x, y, z, 0]);
                    if cand.nrm() > int(9) {
                        continue;
                    }
                    let n = (&q(&r, "2") - &(&q(&r, "1+i") * &cand)).nrm();
                    if best.as_ref().map_or(true, |(b, _)| &n < b) {
                        best = Some((n, cand));
                    }
                }
            }
        }
        assert_eq!(best.unwrap().1, st.q);
        let st = r.divide_step(&q(&r, "0"), &q(&r, "i")).unwrap();
        assert_eq!((st.q, st.r), (q(&r, "0"), q(&r, "0")));
        assert!(matches!(r.divide_step(&q(&r, "1"), &q(&r, "0")), Err(Error::ZeroDivisor)));
        assert!(matches!(r.divide_step(&q(&r, "ij"), &q(&r, "1")), Err(Error::NotCompatiblePair)));
    }

    #[test]
    fn euclid_examples() {
        let r = hurwitz();
        let t = r.twisted_euclidean(&q(&r, "2"), &q(&r, "1+i")).unwrap();
        assert_eq!(t.r_list, vec![q(&r, "2"), q(&r, "1+i"), q(&r, "0")]);
        assert_eq!(t.gcd(), &q(&r, "1+i"));
        let t = r.twisted_euclidean(&q(&r, "1+j"), &q(&r, "0")).unwrap();
        assert_eq!(t.gcd(), &q(&r, "1+j"));
        assert!(t.q_list.is_empty());
        let t = r.twisted_euclidean(&q(&r, "1"), &q(&r, "i")).unwrap();
        assert_eq!(t.gcd().nrm(), int(1));
        for tr in [t] {
            assert!(sl_check(&tr.matrix(), r.sigma()));
        }
    }

    #[test]
    fn complete_row_examples() {
        let r = hurwitz();
        let a = alg(&r);
        assert_eq!(r.complete_row(&q(&r, "0"), &q(&r, "1")).unwrap(), QuatMatrix::identity(&a));
        assert_eq!(r.complete_row(&q(&r, "-1"), &q(&r, "0")).unwrap(), QuatMatrix::inversion(&a));
        let m = r.complete_row(&q(&r, "1"), &q(&r, "1")).unwrap();
        assert_eq!(m, QuatMatrix::new(q(&r, "1"), q(&r, "0"), q(&r, "1"), q(&r, "1")));
        assert!(sl_check(&m, r.sigma()));
        assert!(matches!(r.complete_row(&q(&r, "2"), &q(&r, "0")), Err(Error::NotCoprime(_))));
    }

    #[test]
    fn factor_examples() {
        let r = hurwitz();
        let s = r.sigma();
        let tau = q(&r, "1+i");
        let w = r.factor_into_generators(&QuatMatrix::translation(&tau)).unwrap();
        assert_eq!(w, GeneratorWord(vec![Generator::Translation(tau)]));
        let u = q(&r, "(1+i+j+ij)/2");
        let w = r.factor_into_generators(&QuatMatrix::unit(&u, s).unwrap()).unwrap();
        assert_eq!(w, GeneratorWord(vec![Generator::Unit(u)]));
        let m = QuatMatrix::new(q(&r, "1"), q(&r, "0"), q(&r, "1"), q(&r, "1"));
        let w = r.factor_into_generators(&m).unwrap();
        assert!(w.len() <= 6);
        assert_eq!(w.evaluate(s), m);
    }

    #[test]
    fn general_factorization() {
        let r = hurwitz();
        let s = r.sigma();
        let units = unit_group(r.order()).unwrap();
        let word = GeneratorWord(vec![
            Generator::Translation(q(&r, "1+j")),
            Generator::Inversion,
            Generator::Unit(units[3].clone()),
            Generator::Translation(q(&r, "-2+i")),
            Generator::Inversion,
            Generator::Translation(q(&r, "(1+i+j)/1")),
        ]);
        let m = word.evaluate(s);
        assert!(sl_check(&m, s));
        let f = r.factor_into_generators(&m).unwrap();
        assert_eq!(f.evaluate(s), m);
        assert_eq!(word.inverse(s).evaluate(s), hat_sigma(&m, s));
    }
}
