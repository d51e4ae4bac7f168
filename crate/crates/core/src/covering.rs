//! Covering radius of the plus part under the norm form, deep holes and the
//! norm-Euclidean test.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::enumerate;
use crate::error::{Error, Result};
use crate::exact_quat::{OrthogonalInvolution, Quaternion, Rational};
use crate::lattice_orders::{automorphisms, plus_part, ternary_gram, Order, SubLattice3};
use crate::linalg::{self, RMat};
use crate::polytope::{Plane3, Point3, Polytope3};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoveringCertificate {
    #[serde(serialize_with = "ser_rat")]
    pub rho: Rational,
    #[serde(serialize_with = "ser_quat")]
    pub deep_hole: Quaternion,
    #[serde(serialize_with = "ser_quats")]
    pub voronoi_relevant: Vec<Quaternion>,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_quat<S: serde::Serializer>(q: &Quaternion, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(q.coords().iter().map(|c| c.to_string()))
}

fn ser_quats<S: serde::Serializer>(q: &[Quaternion], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(q.iter().map(|x| x.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>()))
}

fn check_definite(l: &SubLattice3) -> Result<RMat> {
    if !l.algebra().is_definite() {
        return Err(Error::IndefiniteUnsupported);
    }
    Ok(l.lattice().gram())
}

/// `min nrm(p - tau)` over `tau` in the lattice.
pub fn rho_point(p: &Quaternion, l: &SubLattice3) -> Result<Rational> {
    let g = check_definite(l)?;
    let c = l
        .lattice()
        .coordinates(p)
        .ok_or_else(|| Error::Validation(format!("{p} is not in the span of the lattice")))?;
    Ok(enumerate::closest_points(&g, &c)?.1)
}

/// Voronoi-relevant vectors in lattice coordinates: `v` is relevant iff `±v`
/// are the only shortest vectors of `v + 2L`.
pub fn voronoi_relevant(gram: &RMat) -> Result<Vec<Vec<BigInt>>> {
    let mut bound = Rational::zero();
    for mask in 1..8u32 {
        let mut best: Option<Rational> = None;
        for signs in 0..8u32 {
            let v: Vec<Rational> = (0..3)
                .map(|k| {
                    let e = if mask >> k & 1 == 1 { Rational::one() } else { Rational::zero() };
                    if signs >> k & 1 == 1 {
                        -e
                    } else {
                        e
                    }
                })
                .collect();
            let q = enumerate::quad_value(gram, &v);
            if best.as_ref().map_or(true, |b| &q < b) {
                best = Some(q);
            }
        }
        bound = bound.max(best.unwrap());
    }
    let zero = vec![Rational::zero(); 3];
    let mut cosets: BTreeMap<Vec<bool>, Vec<(Vec<BigInt>, Rational)>> = BTreeMap::new();
    for (x, v) in enumerate::points_within(gram, &zero, &bound)? {
        if x.iter().all(Zero::is_zero) {
            continue;
        }
        cosets.entry(x.iter().map(|c| c.is_odd()).collect()).or_default().push((x, v));
    }
    let mut out = Vec::new();
    for (_, pts) in cosets {
        let m = pts.iter().map(|(_, v)| v).min().unwrap().clone();
        let short: Vec<Vec<BigInt>> = pts.into_iter().filter(|(_, v)| *v == m).map(|(x, _)| x).collect();
        if short.len() == 2 {
            out.extend(short);
        }
    }
    out.sort();
    Ok(out)
}

/// The cell `{x : x^T G x <= (x - v)^T G (x - v)}` over the relevant vectors.
pub fn voronoi_cell(gram: &RMat, relevant: &[Vec<BigInt>]) -> Polytope3 {
    let planes = relevant
        .iter()
        .map(|v| {
            let vr: Vec<Rational> = v.iter().map(|c| Rational::from_integer(c.clone())).collect();
            let gv = linalg::mat_vec(gram, &vr);
            let two = Rational::from_integer(2.into());
            let n: Point3 = [&gv[0] * &two, &gv[1] * &two, &gv[2] * &two];
            Plane3::new(n, enumerate::quad_value(gram, &vr))
        })
        .collect();
    Polytope3::from_planes(planes)
}

fn reduce_mod_one(x: &[Rational]) -> Vec<Rational> {
    x.iter().map(|c| c - c.floor()).collect()
}

/// Covering radius of a rank-3 lattice in `H+`: the largest value of the
/// norm form on the vertices of the Voronoi cell.
pub fn rho_lattice(l: &SubLattice3) -> Result<CoveringCertificate> {
    let g = check_definite(l)?;
    let rel = voronoi_relevant(&g)?;
    let cell = voronoi_cell(&g, &rel);
    let rho = cell
        .vertices()
        .iter()
        .map(|v| enumerate::quad_value(&g, v))
        .max()
        .ok_or(Error::NotPositiveDefinite)?;
    let alg = l.algebra();
    let basis = l.basis();
    let to_quat = |c: &[Rational]| {
        let mut q = Quaternion::zero(alg);
        for (x, b) in c.iter().zip(&basis) {
            q = &q + &b.scale(x);
        }
        q
    };
    let deep_hole = cell
        .vertices()
        .iter()
        .filter(|v| enumerate::quad_value(&g, &v[..]) == rho)
        .map(|v| to_quat(&reduce_mod_one(v)))
        .min_by(|a, b| a.coords().cmp(b.coords()))
        .expect("some vertex attains the maximum");
    let voronoi_relevant = rel
        .iter()
        .map(|v| to_quat(&v.iter().map(|c| Rational::from_integer(c.clone())).collect::<Vec<_>>()))
        .collect();
    Ok(CoveringCertificate { rho, deep_hole, voronoi_relevant })
}

pub fn rho_order(o: &Order, sigma: &OrthogonalInvolution) -> Result<CoveringCertificate> {
    if !o.algebra().is_definite() {
        return Err(Error::IndefiniteUnsupported);
    }
    rho_lattice(&plus_part(o, sigma)?)
}

pub fn is_norm_euclidean(o: &Order, sigma: &OrthogonalInvolution) -> Result<(bool, CoveringCertificate)> {
    let c = rho_order(o, sigma)?;
    Ok((c.rho < Rational::one(), c))
}

/// `true` when `h` maps to `p` under some automorphism of the norm form
/// followed by a lattice translation.
pub fn holes_equivalent(l: &SubLattice3, h: &Quaternion, p: &Quaternion) -> Result<bool> {
    let lat = l.lattice();
    let (Some(hc), Some(pc)) = (lat.coordinates(h), lat.coordinates(p)) else {
        return Ok(false);
    };
    for u in automorphisms(&ternary_gram(l))? {
        let img: Vec<Rational> = (0..3)
            .map(|r| (0..3).map(|c| Rational::from_integer(u[r][c].clone()) * &hc[c]).sum())
            .collect();
        if img.iter().zip(&pc).all(|(a, b)| (a - b).is_integer()) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Largest `rho_point` over the grid `(1/n) Z^3` in the unit cell.
pub fn grid_rho(l: &SubLattice3, n: i64) -> Result<(Rational, Vec<Rational>)> {
    let g = check_definite(l)?;
    let mut best = (Rational::zero(), vec![Rational::zero(); 3]);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let x = vec![Rational::new(a.into(), n.into()), Rational::new(b.into(), n.into()), Rational::new(c.into(), n.into())];
                let d = enumerate::closest_points(&g, &x)?.1;
                if d > best.0 {
                    best = (d, x);
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_quat::{rat, QuatAlgebra};
    use crate::lattice_orders::order_from_strings;

    fn lat(a: i64, b: i64, gens: &[&str]) -> SubLattice3 {
        let alg = QuatAlgebra::from_ints(a, b).unwrap();
        let g: Vec<Quaternion> = gens.iter().map(|s| Quaternion::parse(&alg, s).unwrap()).collect();
        SubLattice3::from_generators(&alg, &g).unwrap()
    }

    #[test]
    fn rho_point_examples() {
        let l = lat(-1, -1, &["1", "i", "j"]);
        let alg = l.algebra().clone();
        assert_eq!(rho_point(&Quaternion::zero(&alg), &l).unwrap(), rat(0, 1));
        assert_eq!(rho_point(&Quaternion::parse(&alg, "(1+i+j)/2").unwrap(), &l).unwrap(), rat(3, 4));
        let l2 = lat(-1, -2, &["1", "i", "(1+i+j)/2"]);
        let p = Quaternion::parse(l2.algebra(), "(1+i)/2").unwrap();
        assert_eq!(rho_point(&p, &l2).unwrap(), rat(1, 2));
    }

    #[test]
    fn cubic_lattice() {
        let l = lat(-1, -1, &["1", "i", "j"]);
        let g = l.lattice().gram();
        assert_eq!(voronoi_relevant(&g).unwrap().len(), 6);
        let c = rho_lattice(&l).unwrap();
        assert_eq!(c.rho, rat(3, 4));
        assert_eq!(c.deep_hole, Quaternion::parse(l.algebra(), "(1+i+j)/2").unwrap());
    }

    #[test]
    fn relevant_vectors_of_an_fcc_like_lattice() {
        // Six of the seven classes mod 2L have a unique shortest pair; (1,1,0) has three.
        let l = lat(-1, -2, &["1", "i", "(1+i+j)/2"]);
        assert_eq!(voronoi_relevant(&l.lattice().gram()).unwrap().len(), 12);
    }

    #[test]
    fn hurwitz_and_lipschitz_share_plus_part() {
        let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
        let s = OrthogonalInvolution::standard(&alg);
        let h = order_from_strings(&alg, &["1", "i", "j", "(1+i+j+ij)/2"]).unwrap();
        let l = order_from_strings(&alg, &["1", "i", "j", "ij"]).unwrap();
        assert_eq!(rho_order(&h, &s).unwrap().rho, rat(3, 4));
        assert_eq!(rho_order(&l, &s).unwrap().rho, rat(3, 4));
    }

    #[test]
    fn non_euclidean_example() {
        let alg = QuatAlgebra::from_ints(-1, -5).unwrap();
        let s = OrthogonalInvolution::standard(&alg);
        let o = order_from_strings(&alg, &["1", "i", "j", "(1+i+j+ij)/2"]).unwrap();
        let (e, c) = is_norm_euclidean(&o, &s).unwrap();
        assert!(!e);
        assert_eq!(c.rho, rat(7, 4));
    }

    #[test]
    fn grid_agrees_with_vertices() {
        let l = lat(-2, -6, &["1", "i", "(i+j)/2"]);
        let c = rho_lattice(&l).unwrap();
        assert_eq!(c.rho, rat(11, 12));
        let (g, _) = grid_rho(&l, 6).unwrap();
        assert_eq!(g, c.rho);
    }

    #[test]
    fn hole_equivalence_uses_translations_and_symmetries() {
        let l = lat(-1, -1, &["1", "i", "j"]);
        let alg = l.algebra().clone();
        let a = Quaternion::parse(&alg, "(1+i+j)/2").unwrap();
        let b = Quaternion::parse(&alg, "(-1+3*i-j)/2").unwrap();
        assert!(holes_equivalent(&l, &a, &b).unwrap());
        let c = Quaternion::parse(&alg, "(1+i)/2").unwrap();
        assert!(!holes_equivalent(&l, &a, &c).unwrap());
    }
}
