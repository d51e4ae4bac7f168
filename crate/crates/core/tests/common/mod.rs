#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use dagger_core::data::{bundled_table3, OrderRecord};
use dagger_core::enumerate::points_within;
use dagger_core::h4_geom::{Frame, H4Point};
use dagger_core::lattice_orders::{plus_part, unit_group, Lattice, Order};
use dagger_core::twisted_euclid::{Generator, GeneratorWord, TwistedRing};
use dagger_core::{OrthogonalInvolution, Quaternion, Rational};

pub struct Case {
    pub label: String,
    pub ring: TwistedRing,
    pub plus: Vec<Quaternion>,
    pub units: Vec<Quaternion>,
}

impl Case {
    pub fn order(&self) -> &Order {
        self.ring.order()
    }

    pub fn sigma(&self) -> &OrthogonalInvolution {
        self.ring.sigma()
    }
}

pub fn case_of(r: &OrderRecord) -> Case {
    let o = r.order().unwrap();
    let s = r.involution().unwrap();
    let plus = plus_part(&o, &s).unwrap().basis();
    let units = unit_group(&o).unwrap();
    Case {
        label: format!("({},{}) {:?}", r.algebra.a, r.algebra.b, r.basis),
        ring: TwistedRing::new(o, s).unwrap(),
        plus,
        units,
    }
}

/// Every Euclidean row of the answer key: the maximal ones and the two suborders.
pub fn table1_cases() -> Vec<Case> {
    bundled_table3().unwrap().iter().filter(|r| r.in_table("1")).map(case_of).collect()
}

pub fn hurwitz_case() -> Case {
    case_of(&bundled_table3().unwrap()[0])
}

pub fn combo(rng: &mut ChaCha8Rng, basis: &[Quaternion], k: i64) -> Quaternion {
    let mut x = Quaternion::zero(basis[0].algebra());
    for b in basis {
        let c = rng.gen_range(-k..=k);
        if c != 0 {
            x = &x + &b.scale(&Rational::from_integer(c.into()));
        }
    }
    x
}

pub fn element(rng: &mut ChaCha8Rng, case: &Case, k: i64) -> Quaternion {
    combo(rng, &case.order().basis(), k)
}

pub fn plus_element(rng: &mut ChaCha8Rng, case: &Case, k: i64) -> Quaternion {
    combo(rng, &case.plus, k)
}

/// A compatible pair `(x a, x b)` with `a = h conj(sigma b) + b q`; `h, q` in the plus part.
pub fn compatible_pair(rng: &mut ChaCha8Rng, case: &Case) -> (Quaternion, Quaternion) {
    let s = case.sigma();
    let b = element(rng, case, 2);
    let h = plus_element(rng, case, 2);
    let q = plus_element(rng, case, 2);
    let a = &(&h * &s.apply(&b).conj()) + &(&b * &q);
    let x = if rng.gen_bool(0.5) { element(rng, case, 1) } else { Quaternion::one(b.algebra()) };
    if x.is_zero() {
        return (a, b);
    }
    (&x * &a, &x * &b)
}

pub fn random_word(rng: &mut ChaCha8Rng, case: &Case, len: usize) -> GeneratorWord {
    let mut w = Vec::with_capacity(len);
    for _ in 0..len {
        let g = match rng.gen_range(0..3) {
            0 => Generator::Translation(plus_element(rng, case, 2)),
            1 => Generator::Unit(case.units[rng.gen_range(0..case.units.len())].clone()),
            _ => Generator::Inversion,
        };
        w.push(g);
    }
    GeneratorWord(w)
}

pub fn small_rational(rng: &mut ChaCha8Rng, num: i64, den: i64) -> Rational {
    Rational::new(rng.gen_range(-num..=num).into(), rng.gen_range(1..=den).into())
}

pub fn positive_rational(rng: &mut ChaCha8Rng, num: i64, den: i64) -> Rational {
    Rational::new(rng.gen_range(1..=num).into(), rng.gen_range(1..=den).into())
}

pub fn random_point(rng: &mut ChaCha8Rng, frame: &Frame, plus: &[Quaternion]) -> H4Point {
    let mut alpha = Quaternion::zero(plus[0].algebra());
    for b in plus {
        alpha = &alpha + &b.scale(&small_rational(rng, 6, 5));
    }
    frame.point(alpha, positive_rational(rng, 7, 4)).unwrap()
}

/// `a = g x` with `x` in `O`.
pub fn left_divides(g: &Quaternion, a: &Quaternion, o: &Order) -> bool {
    match g.inv() {
        Ok(gi) => o.contains(&(&gi * a)),
        Err(_) => a.is_zero(),
    }
}

pub fn right_ideal(o: &Order, gens: &[&Quaternion]) -> Lattice {
    let basis = o.basis();
    let prods: Vec<Quaternion> = gens.iter().flat_map(|g| basis.iter().map(move |b| *g * b)).collect();
    Lattice::from_generators(o.algebra(), &prods)
}

/// Every `d` in `O` with `nrm(d) <= bound`, zero excluded.
pub fn elements_up_to(o: &Order, bound: &Rational) -> Vec<Quaternion> {
    let l = o.lattice();
    points_within(&l.gram(), &vec![Rational::zero(); 4], bound)
        .unwrap()
        .into_iter()
        .filter(|(x, _)| x.iter().any(|c| !c.is_zero()))
        .map(|(x, _)| l.element(&x))
        .collect()
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn one() -> Rational {
    Rational::one()
}

pub const DIVISOR_SCAN: i64 = 30;

/// The four transcript properties. With `divisors`, also scan every element of
/// norm at most `min(nrm(gcd), DIVISOR_SCAN)` for a common left factor not
/// dividing the gcd.
pub fn check_transcript(case: &Case, a: &Quaternion, b: &Quaternion, divisors: bool) -> Result<(), String> {
    use dagger_core::twisted_euclid::sl_check;
    let o = case.order();
    let s = case.sigma();
    let tr = case.ring.twisted_euclidean(a, b).map_err(|e| format!("{}: {e}", case.label))?;
    let fail = |what: &str| Err(format!("{} a={a} b={b}: {what}", case.label));
    if !tr.r_list.last().unwrap().is_zero() {
        return fail("last remainder is nonzero");
    }
    let g = tr.gcd();
    let k = tr.k();
    if &(&(a * &s.apply(&tr.s_list[k])) - &(b * &s.apply(&tr.t_list[k]))) != g {
        return fail("Bezout identity");
    }
    if !left_divides(g, a, o) || !left_divides(g, b, o) {
        return fail("gcd does not divide both");
    }
    if !g.is_zero() && right_ideal(o, &[a, b]) != right_ideal(o, &[g]) {
        return fail("aO + bO differs from gO");
    }
    if divisors && !g.is_zero() {
        for d in elements_up_to(o, &g.nrm().min(int(DIVISOR_SCAN))) {
            if left_divides(&d, a, o) && left_divides(&d, b, o) && !left_divides(&d, g, o) {
                return fail(&format!("common divisor {d} does not divide the gcd"));
            }
        }
    }
    if !sl_check(&tr.matrix(), s) {
        return fail("transcript matrix fails sl_check");
    }
    Ok(())
}

pub fn check_factorization(case: &Case, word: &GeneratorWord) -> Result<(), String> {
    let s = case.sigma();
    let m = word.evaluate(s);
    let f = case.ring.factor_into_generators(&m).map_err(|e| format!("{}: {e} on {m}", case.label))?;
    if f.evaluate(s) != m {
        return Err(format!("{}: factorization of {m} evaluates differently", case.label));
    }
    Ok(())
}

/// `complete_row` on the bottom row of `word`, which is coprime.
pub fn check_complete_row(case: &Case, word: &GeneratorWord) -> Result<(), String> {
    use dagger_core::twisted_euclid::sl_check;
    let s = case.sigma();
    let m = word.evaluate(s);
    let c = case.ring.complete_row(&m.c, &m.d).map_err(|e| format!("{}: {e} on ({}, {})", case.label, m.c, m.d))?;
    if !sl_check(&c, s) || c.c != m.c || c.d != m.d {
        return Err(format!("{}: bad completion {c} of ({}, {})", case.label, m.c, m.d));
    }
    Ok(())
}

pub enum Identity {
    Cocycle,
    HeightLaw,
    Invariance,
    Bisector,
}

pub fn check_identity(rng: &mut ChaCha8Rng, case: &Case, identity: &Identity) -> Result<(), String> {
    let s = case.sigma();
    let frame = Frame::new(s);
    match identity {
        Identity::Cocycle => {
            let g1 = random_word(rng, case, 4).evaluate(s);
            let g2 = random_word(rng, case, 4).evaluate(s);
            let z = random_point(rng, &frame, &case.plus);
            let g2z = frame.mobius_apply(&g2, &z).unwrap();
            let lhs = frame.height_factor(&g1.mul(&g2), &z);
            let rhs = frame.height_factor(&g1, &g2z) * frame.height_factor(&g2, &z);
            (lhs == rhs).then_some(()).ok_or(format!("cocycle fails for {g1}, {g2} at {}", z.quaternion()))
        }
        Identity::HeightLaw => {
            let g = random_word(rng, case, 5).evaluate(s);
            let z = random_point(rng, &frame, &case.plus);
            let gz = frame.mobius_apply(&g, &z).unwrap();
            let f = frame.height_factor(&g, &z);
            (gz.height_sq() * &f * &f == *z.height_sq())
                .then_some(())
                .ok_or(format!("height law fails for {g} at {}", z.quaternion()))
        }
        Identity::Invariance => {
            let g = random_word(rng, case, 5).evaluate(s);
            let p = random_point(rng, &frame, &case.plus);
            let q = random_point(rng, &frame, &case.plus);
            let gp = frame.mobius_apply(&g, &p).unwrap();
            let gq = frame.mobius_apply(&g, &q).unwrap();
            (frame.cosh_surrogate(&gp, &gq) == frame.cosh_surrogate(&p, &q))
                .then_some(())
                .ok_or(format!("distance changes under {g}"))
        }
        Identity::Bisector => check_bisector(rng, case, &frame),
    }
}

// On the sphere both distances agree: s_w (cosh(w, A) - cosh(w, B)) is a fixed
// multiple of nrm(w - c) - r^2, with the sign that puts A on the outside.
fn check_bisector(rng: &mut ChaCha8Rng, case: &Case, frame: &Frame) -> Result<(), String> {
    use dagger_core::h4_geom::HalfSpaceH4;
    use dagger_core::twisted_euclid::QuatMatrix;
    let alg = case.order().algebra().clone();
    let z = loop {
        let z = random_point(rng, frame, &case.plus);
        if z.quaternion().nrm() > one() {
            break z;
        }
    };
    let tau = plus_element(rng, case, 2);
    let h = frame.bisector_halfspace(&z, &tau).map_err(|e| e.to_string())?;
    let HalfSpaceH4::Sphere { center, radius_sq, .. } = &h else {
        return Err("bisector is not a sphere".into());
    };
    let t = QuatMatrix::translation(&tau);
    let a = frame.mobius_apply(&t, &z).unwrap();
    let b = frame.mobius_apply(&t, &frame.mobius_apply(&QuatMatrix::inversion(&alg), &z).unwrap()).unwrap();
    let mut ratio: Option<Rational> = None;
    for _ in 0..4 {
        let w = random_point(rng, frame, &case.plus);
        let diff = w.s() * (frame.cosh_surrogate(&w, &a) - frame.cosh_surrogate(&w, &b));
        let sph = (w.quaternion() - center).nrm() - radius_sq;
        if sph.is_zero() {
            if !diff.is_zero() {
                return Err(format!("point on the bisector of {} is not equidistant", z.quaternion()));
            }
            continue;
        }
        let r = diff / sph;
        if ratio.get_or_insert_with(|| r.clone()) != &r {
            return Err(format!("bisector of {} is not a level set", z.quaternion()));
        }
    }
    match ratio {
        Some(r) if r < Rational::zero() => Ok(()),
        Some(_) => Err("bisector has the wrong orientation".into()),
        None => Ok(()),
    }
}
