//! Orthogonal involutions on class-number-one orders, standard bases, and the
//! classification of the norm-Euclidean orders with involution.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::covering::is_norm_euclidean;
use crate::data::{bundled_table3, OrderRecord};
use crate::enumerate;
use crate::error::{Error, Result};
use crate::exact_quat::{disc_involution, is_squarefree, OrthogonalInvolution, QuatAlgebra, Quaternion, Rational};
use crate::lattice_orders::{
    algebra_disc, forms_equivalent, has_class_number_one, is_ddagger_order, is_maximal_ddagger_order, order_disc,
    plus_part, ring_generated, table2_index, ternary_gram, trace_zero_part, Lattice, Order, SubLattice3, TernaryForm,
};

fn canonical_sort(v: &mut [Quaternion]) {
    v.sort_by(|a, b| (a.nrm(), a.coords()).cmp(&(b.nrm(), b.coords())));
}

fn int_norm(q: &Quaternion) -> Option<BigInt> {
    let n = q.nrm();
    n.is_integer().then(|| n.to_integer())
}

/// Trace-zero points of `l` whose norm lies in `s`.
pub fn lattice_points_of_norm(l: &SubLattice3, s: &[BigInt]) -> Result<Vec<Quaternion>> {
    if !l.algebra().is_definite() {
        return Err(Error::IndefiniteUnsupported);
    }
    let Some(max) = s.iter().max() else { return Ok(Vec::new()) };
    if max.is_negative() {
        return Ok(Vec::new());
    }
    let lat = l.lattice();
    let zero = vec![Rational::zero(); 3];
    let mut out: Vec<Quaternion> = enumerate::points_within(&lat.gram(), &zero, &Rational::from_integer(max.clone()))?
        .into_iter()
        .map(|(x, _)| lat.element(&x))
        .filter(|q| q.tr().is_zero() && int_norm(q).is_some_and(|n| s.contains(&n)))
        .collect();
    canonical_sort(&mut out);
    Ok(out)
}

/// Nonzero trace-zero points `j` of `l` with `xi j = -j xi` and `nrm(j) <= n`.
pub fn anticommuting_elements(l: &SubLattice3, xi: &Quaternion, n: &BigInt) -> Result<Vec<Quaternion>> {
    if !l.algebra().is_definite() {
        return Err(Error::IndefiniteUnsupported);
    }
    if !n.is_positive() {
        return Ok(Vec::new());
    }
    let lat = l.lattice();
    let zero = vec![Rational::zero(); 3];
    let mut out: Vec<Quaternion> = enumerate::points_within(&lat.gram(), &zero, &Rational::from_integer(n.clone()))?
        .into_iter()
        .map(|(x, _)| lat.element(&x))
        .filter(|j| !j.is_zero() && j.tr().is_zero() && &(xi * j) == &-(j * xi))
        .collect();
    canonical_sort(&mut out);
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct InvolutionCandidate {
    /// Trace-zero element of the input order inducing `z -> xi conj(z) xi^-1`.
    pub xi: Quaternion,
    /// `(i', j')` in the input algebra.
    pub standard_basis: (Quaternion, Quaternion),
    /// The order rewritten in the algebra `(i'^2, j'^2)`, where the involution is conjugation by `ij`.
    pub rebased_order: Order,
    pub disc_invol: BigInt,
}

impl InvolutionCandidate {
    pub fn involution(&self) -> OrthogonalInvolution {
        OrthogonalInvolution::standard(self.rebased_order.algebra())
    }
}

// Coordinates of q in the orthogonal basis 1, i', j', i'j'.
fn rebase(q: &Quaternion, basis: &[Quaternion; 4]) -> [Rational; 4] {
    std::array::from_fn(|k| q.bilinear(&basis[k]) / basis[k].bilinear(&basis[k]))
}

/// Candidate maximal orders with involution carried by `o`, one per
/// conjugacy class of involutions up to the duplicates the conjugation test
/// misses.
pub fn candidate_involutions(o: &Order) -> Result<Vec<InvolutionCandidate>> {
    if !has_class_number_one(o)? {
        return Err(Error::ClassNumberNotOne);
    }
    let disc = order_disc(o);
    if !is_squarefree(&disc) {
        return Ok(Vec::new());
    }
    let alg = o.algebra();
    let dh = algebra_disc(alg)?;
    let top = u64::try_from(&disc).map_err(|_| Error::Validation(format!("discriminant {disc} is too large")))?;
    let divisors: Vec<BigInt> = (1..=top)
        .map(BigInt::from)
        .filter(|d| disc.is_multiple_of(d))
        .collect();
    let tz = trace_zero_part(o);
    let mut conj = vec![Quaternion::one(alg)];
    conj.extend(lattice_points_of_norm(&tz, &divisors)?);
    let quotient = &disc / &dh;
    let wanted: Vec<BigInt> = divisors.iter().filter(|d| d.is_multiple_of(&quotient)).cloned().collect();
    let pool = lattice_points_of_norm(&tz, &wanted)?;

    let mut kept: Vec<Quaternion> = Vec::new();
    for xi in pool {
        let xi_inv = xi.inv()?;
        let dup = kept.iter().any(|k| {
            conj.iter().any(|x| {
                let x_inv = x.inv().expect("nonzero");
                (&(&(x * k) * &x_inv) * &xi_inv).is_scalar()
            })
        });
        if !dup {
            kept.push(xi);
        }
    }

    let mut out: Vec<InvolutionCandidate> = Vec::new();
    for xi in kept {
        let mut t = int_norm(&xi).expect("norms of order elements are integers");
        let mut b = anticommuting_elements(&tz, &xi, &t)?;
        while b.is_empty() {
            t *= 2;
            b = anticommuting_elements(&tz, &xi, &t)?;
        }
        let ip = b.swap_remove(0);
        let g = int_norm(&ip).unwrap().gcd(&int_norm(&xi).unwrap());
        let jp = (&ip * &xi).scale(&Rational::from_integer(g).recip());
        let new_alg = QuatAlgebra::new(-ip.nrm(), -jp.nrm())?;
        let basis = [Quaternion::one(alg), ip.clone(), jp.clone(), &ip * &jp];
        let gens: Vec<Quaternion> = o.basis().iter().map(|q| Quaternion::new(&new_alg, rebase(q, &basis))).collect();
        let rebased = Order::from_lattice(Lattice::from_generators(&new_alg, &gens))?;
        let sigma = OrthogonalInvolution::standard(&new_alg);
        debug_assert!(is_ddagger_order(&rebased, &sigma));
        if out.iter().any(|c| c.rebased_order == rebased) {
            continue;
        }
        out.push(InvolutionCandidate {
            xi,
            standard_basis: (ip, jp),
            rebased_order: rebased,
            disc_invol: disc_involution(&sigma),
        });
    }
    Ok(out)
}

/// Every order with involution between the ring generated by `O+` and `omax`
/// whose plus part equals that of `omax`.
pub fn suborders_same_plus_part(omax: &Order, sigma: &OrthogonalInvolution) -> Result<Vec<Order>> {
    let plus = plus_part(omax, sigma)?;
    let alg = omax.algebra();
    let floor = ring_generated(alg, &plus.basis())?;
    let top = omax.lattice();
    // Coset representatives of omax / floor from the triangular basis of floor in omax coordinates.
    let rows: Vec<Vec<BigInt>> = floor
        .basis()
        .iter()
        .map(|b| top.integer_coordinates(b).expect("floor lies in omax"))
        .collect();
    let hnf = crate::linalg::hnf(&rows);
    let mut reps: Vec<Quaternion> = vec![Quaternion::zero(alg)];
    for row in &hnf {
        let pivot = row.iter().position(|c| !c.is_zero()).expect("full rank");
        let d = row[pivot].abs();
        let mut next = Vec::new();
        for r in &reps {
            let mut c = BigInt::zero();
            while c < d {
                let mut e = vec![BigInt::zero(); 4];
                e[pivot] = c.clone();
                next.push(r + &top.element(&e));
                c += 1;
            }
        }
        reps = next;
    }
    let mut seen: HashSet<Lattice> = HashSet::new();
    let mut queue: VecDeque<Lattice> = VecDeque::new();
    seen.insert(floor.clone());
    queue.push_back(floor);
    let mut out = Vec::new();
    while let Some(l) = queue.pop_front() {
        if let Ok(o) = Order::from_lattice(l.clone()) {
            if is_ddagger_order(&o, sigma) && plus_part(&o, sigma)? == plus {
                out.push(o);
            }
        }
        for r in &reps {
            if l.contains(r) {
                continue;
            }
            let bigger = l.sum(&Lattice::from_generators(alg, std::slice::from_ref(r)));
            if seen.insert(bigger.clone()) {
                queue.push_back(bigger);
            }
        }
    }
    out.sort_by_key(|o| order_disc(o));
    Ok(out)
}

/// Invariants of an order with involution that separate the classified rows.
#[derive(Clone, Debug)]
pub struct RowKey {
    pub disc_h: BigInt,
    pub disc_inv: BigInt,
    /// Generator of the ideal of traces of `O+`.
    pub trace_ideal: BigInt,
    pub rho: Rational,
    pub plus_form: TernaryForm,
}

impl RowKey {
    pub fn of(o: &Order, sigma: &OrthogonalInvolution) -> Result<RowKey> {
        let plus = plus_part(o, sigma)?;
        let trace_ideal = plus
            .basis()
            .iter()
            .map(|b| b.tr().to_integer())
            .fold(BigInt::zero(), |a, b| a.gcd(&b));
        Ok(RowKey {
            disc_h: algebra_disc(o.algebra())?,
            disc_inv: disc_involution(sigma),
            trace_ideal,
            rho: crate::covering::rho_lattice(&plus)?.rho,
            plus_form: ternary_gram(&plus),
        })
    }

    pub fn matches(&self, other: &RowKey) -> Result<bool> {
        if self.disc_h != other.disc_h
            || self.disc_inv != other.disc_inv
            || self.trace_ideal != other.trace_ideal
            || self.rho != other.rho
        {
            return Ok(false);
        }
        Ok(forms_equivalent(&self.plus_form, &other.plus_form)?.is_some())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifiedOrder {
    /// `[a, b]` of the algebra `(a, b)`.
    pub algebra: [String; 2],
    /// Z-basis in the algebra's standard basis.
    pub order: Vec<String>,
    #[serde(rename = "disc_H")]
    pub disc_h: i64,
    pub disc_inv: i64,
    pub disc: i64,
    pub trace_ideal: i64,
    pub rho: String,
    pub euclidean: bool,
    pub maximal: bool,
    /// "1" for Euclidean maximal orders, "3" for the other maximal ones, "4" for Euclidean non-maximal ones.
    pub table_tag: String,
    #[serde(skip)]
    pub key: RowKey,
    #[serde(skip)]
    pub order_obj: Order,
}

fn small(n: &BigInt) -> i64 {
    i64::try_from(n).expect("invariant fits in i64")
}

fn classified(o: &Order, key: RowKey, euclidean: bool, maximal: bool) -> ClassifiedOrder {
    let alg = o.algebra();
    let table_tag = match (maximal, euclidean) {
        (true, true) => "1",
        (true, false) => "3",
        (false, _) => "4",
    };
    ClassifiedOrder {
        algebra: [alg.a().to_string(), alg.b().to_string()],
        order: o.basis().iter().map(|b| b.to_string()).collect(),
        disc_h: small(&key.disc_h),
        disc_inv: small(&key.disc_inv),
        disc: small(&order_disc(o)),
        trace_ideal: small(&key.trace_ideal),
        rho: key.rho.to_string(),
        euclidean,
        maximal,
        table_tag: table_tag.to_string(),
        key,
        order_obj: o.clone(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    /// Bases of the seed orders, one per class-number-one form with squarefree discriminant.
    pub seeds: Vec<Vec<String>>,
    pub rows: Vec<ClassifiedOrder>,
    pub failures: Vec<String>,
}

impl PipelineReport {
    pub fn tagged(&self, tag: &str) -> impl Iterator<Item = &ClassifiedOrder> {
        let tag = tag.to_string();
        self.rows.iter().filter(move |r| r.table_tag == tag)
    }

    pub fn maximal(&self) -> impl Iterator<Item = &ClassifiedOrder> {
        self.rows.iter().filter(|r| r.maximal)
    }
}

/// One seed order per class-number-one form hit by the bundled orders.
pub fn seed_orders(records: &[OrderRecord]) -> Result<Vec<Order>> {
    let mut hit: Vec<usize> = Vec::new();
    let mut seeds = Vec::new();
    for r in records.iter().filter(|r| r.in_table("3")) {
        let o = r.order()?;
        if let Some(k) = table2_index(&o)? {
            if !hit.contains(&k) {
                hit.push(k);
                seeds.push(o);
            }
        }
    }
    Ok(seeds)
}

pub fn classify_pipeline() -> Result<PipelineReport> {
    classify_from(&bundled_table3()?)
}

/// Run the involution search on the seeds, certify every candidate, and add
/// the Euclidean suborders sharing a plus part.
pub fn classify_from(records: &[OrderRecord]) -> Result<PipelineReport> {
    let seeds = seed_orders(records)?;
    let mut rows: Vec<ClassifiedOrder> = Vec::new();
    let mut failures = Vec::new();
    for seed in &seeds {
        let cands = match candidate_involutions(seed) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("{}: {e}", seed.algebra()));
                continue;
            }
        };
        for c in cands {
            let o = c.rebased_order.clone();
            let sigma = c.involution();
            let key = RowKey::of(&o, &sigma)?;
            let mut dup = false;
            for r in rows.iter().filter(|r| r.maximal) {
                if r.key.matches(&key)? {
                    dup = true;
                    break;
                }
            }
            if dup {
                continue;
            }
            let maximal = is_maximal_ddagger_order(&o, &sigma)?;
            if !maximal {
                failures.push(format!("candidate {:?} in {} is not maximal", o.basis(), o.algebra()));
                continue;
            }
            let (euclidean, _) = is_norm_euclidean(&o, &sigma)?;
            rows.push(classified(&o, key, euclidean, true));
        }
    }
    let maximal_euclidean: Vec<Order> = rows.iter().filter(|r| r.euclidean).map(|r| r.order_obj.clone()).collect();
    let mut subs: Vec<ClassifiedOrder> = Vec::new();
    for o in &maximal_euclidean {
        let sigma = OrthogonalInvolution::standard(o.algebra());
        for s in suborders_same_plus_part(o, &sigma)? {
            if &s == o || is_maximal_ddagger_order(&s, &sigma)? {
                continue;
            }
            let key = RowKey::of(&s, &sigma)?;
            let disc = order_disc(&s);
            let mut dup = false;
            for r in &subs {
                if r.key.matches(&key)? && BigInt::from(r.disc) == disc {
                    dup = true;
                    break;
                }
            }
            if !dup {
                // Same plus part, so the Euclidean certificate carries over.
                let (euclidean, _) = is_norm_euclidean(&s, &sigma)?;
                subs.push(classified(&s, key, euclidean, false));
            }
        }
    }
    rows.extend(subs);
    Ok(PipelineReport {
        seeds: seeds.iter().map(|o| o.basis().iter().map(|b| b.to_string()).collect()).collect(),
        rows,
        failures,
    })
}

/// Key of a bundled row, for comparing the pipeline against the answer key.
pub fn record_key(r: &OrderRecord) -> Result<RowKey> {
    RowKey::of(&r.order()?, &r.involution()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_orders::order_from_strings;
    use num_traits::One;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn lipschitz() -> Order {
        let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
        order_from_strings(&alg, &["1", "i", "j", "ij"]).unwrap()
    }

    fn hurwitz() -> Order {
        let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
        order_from_strings(&alg, &["1", "i", "j", "(1+i+j+ij)/2"]).unwrap()
    }

    #[test]
    fn norm_filter() {
        let tz = trace_zero_part(&lipschitz());
        let alg = tz.algebra().clone();
        assert_eq!(lattice_points_of_norm(&tz, &ints(&[0])).unwrap(), vec![Quaternion::zero(&alg)]);
        assert!(lattice_points_of_norm(&tz, &[]).unwrap().is_empty());
        let ones = lattice_points_of_norm(&tz, &ints(&[1])).unwrap();
        let mut expect: Vec<Quaternion> = ["i", "-i", "j", "-j", "ij", "-ij"]
            .iter()
            .map(|s| Quaternion::parse(&alg, s).unwrap())
            .collect();
        canonical_sort(&mut expect);
        assert_eq!(ones, expect);
    }

    #[test]
    fn anticommuting() {
        let tz = trace_zero_part(&lipschitz());
        let alg = tz.algebra().clone();
        let k = Quaternion::k(&alg);
        let got = anticommuting_elements(&tz, &k, &BigInt::one()).unwrap();
        let mut expect: Vec<Quaternion> = ["i", "-i", "j", "-j"].iter().map(|s| Quaternion::parse(&alg, s).unwrap()).collect();
        canonical_sort(&mut expect);
        assert_eq!(got, expect);
        assert!(anticommuting_elements(&tz, &k, &BigInt::zero()).unwrap().is_empty());
    }

    #[test]
    fn lipschitz_has_no_candidates() {
        assert!(candidate_involutions(&lipschitz()).unwrap().is_empty());
    }

    #[test]
    fn hurwitz_candidate() {
        let c = candidate_involutions(&hurwitz()).unwrap();
        assert!(!c.is_empty());
        let first = c.iter().find(|c| c.disc_invol == BigInt::from(-1)).expect("disc -1 candidate");
        let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
        assert_eq!(first.rebased_order.algebra(), &alg);
        assert_eq!(first.rebased_order, hurwitz());
        for c in &c {
            let sigma = c.involution();
            assert!(is_ddagger_order(&c.rebased_order, &sigma));
            assert_eq!(order_disc(&c.rebased_order), order_disc(&hurwitz()));
            let (ip, jp) = &c.standard_basis;
            assert_eq!(&(ip * &c.xi), &-(&c.xi * ip));
            assert!((&(ip * jp) * &c.xi.inv().unwrap()).is_scalar());
        }
    }

    #[test]
    fn rebased_involution_negates_only_ij() {
        for c in candidate_involutions(&hurwitz()).unwrap() {
            let sigma = c.involution();
            let alg = c.rebased_order.algebra().clone();
            for (k, sign) in [(0usize, 1i64), (1, 1), (2, 1), (3, -1)] {
                let mut e = [0i64; 4];
                e[k] = 1;
                let q = Quaternion::from_ints(&alg, e);
                assert_eq!(sigma.apply(&q), q.scale(&Rational::from_integer(sign.into())));
            }
        }
    }

    #[test]
    fn stable_under_generator_permutation() {
        let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
        let a = order_from_strings(&alg, &["(1+i+j+ij)/2", "j", "i", "1"]).unwrap();
        let x: Vec<Order> = candidate_involutions(&a).unwrap().into_iter().map(|c| c.rebased_order).collect();
        let y: Vec<Order> = candidate_involutions(&hurwitz()).unwrap().into_iter().map(|c| c.rebased_order).collect();
        assert_eq!(x, y);
    }

    #[test]
    fn minus_one_minus_three_gives_two() {
        let alg = QuatAlgebra::from_ints(-1, -3).unwrap();
        let o = order_from_strings(&alg, &["1", "i", "(i+j)/2", "(1+ij)/2"]).unwrap();
        let c = candidate_involutions(&o).unwrap();
        let minus3: Vec<&InvolutionCandidate> = c.iter().filter(|c| c.disc_invol == BigInt::from(-3)).collect();
        let mut keys: Vec<RowKey> = Vec::new();
        for c in minus3 {
            let k = RowKey::of(&c.rebased_order, &c.involution()).unwrap();
            let mut new = true;
            for seen in &keys {
                if seen.matches(&k).unwrap() {
                    new = false;
                }
            }
            if new {
                keys.push(k);
            }
        }
        assert_eq!(keys.len(), 2);
        let mut ideals: Vec<BigInt> = keys.iter().map(|k| k.trace_ideal.clone()).collect();
        ideals.sort();
        assert_eq!(ideals, ints(&[1, 2]));
    }

    #[test]
    fn suborders() {
        let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
        let s = OrthogonalInvolution::standard(&alg);
        let got = suborders_same_plus_part(&hurwitz(), &s).unwrap();
        assert_eq!(got, vec![hurwitz(), lipschitz()]);

        let alg = QuatAlgebra::from_ints(-2, -6).unwrap();
        let s = OrthogonalInvolution::standard(&alg);
        let max = order_from_strings(&alg, &["1", "i", "(i+j)/2", "(2+ij)/4"]).unwrap();
        let t4 = order_from_strings(&alg, &["1", "i", "(i+j)/2", "ij/2"]).unwrap();
        assert_eq!(suborders_same_plus_part(&max, &s).unwrap(), vec![max, t4]);

        let alg = QuatAlgebra::from_ints(-1, -2).unwrap();
        let s = OrthogonalInvolution::standard(&alg);
        let max = order_from_strings(&alg, &["1", "i", "(1+i+j)/2", "(1+i+ij)/2"]).unwrap();
        assert_eq!(suborders_same_plus_part(&max, &s).unwrap(), vec![max]);
    }
}
