//! Bounded convex polytopes in Q^3 given by half-spaces, with exact vertices.

use num_traits::{Signed, Zero};

use crate::exact_quat::Rational;
use crate::linalg;

pub type Point3 = [Rational; 3];

/// The half-space `normal . x <= offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plane3 {
    pub normal: Point3,
    pub offset: Rational,
}

impl Plane3 {
    pub fn new(normal: Point3, offset: Rational) -> Plane3 {
        Plane3 { normal, offset }
    }

    /// `offset - normal . x`; nonnegative inside.
    pub fn slack(&self, x: &Point3) -> Rational {
        let mut s = self.offset.clone();
        for k in 0..3 {
            s -= &self.normal[k] * &x[k];
        }
        s
    }

    // Scaled so the first nonzero normal entry has absolute value 1.
    fn normalized(&self) -> Plane3 {
        let p = self.normal.iter().find(|c| !c.is_zero()).expect("plane normal is nonzero").abs();
        Plane3 {
            normal: [&self.normal[0] / &p, &self.normal[1] / &p, &self.normal[2] / &p],
            offset: &self.offset / &p,
        }
    }
}

fn affine_dim(pts: &[Point3]) -> usize {
    let Some(p0) = pts.first() else { return 0 };
    let rows: linalg::RMat = pts[1..].iter().map(|p| (0..3).map(|k| &p[k] - &p0[k]).collect()).collect();
    if rows.is_empty() {
        0
    } else {
        linalg::rank(&rows)
    }
}

#[derive(Clone, Debug)]
pub struct Polytope3 {
    planes: Vec<Plane3>,
    vertices: Vec<Point3>,
}

impl Polytope3 {
    /// Vertices by intersecting every triple of planes. The planes must cut out a bounded set.
    pub fn from_planes(planes: Vec<Plane3>) -> Polytope3 {
        let mut uniq: Vec<Plane3> = Vec::new();
        for p in planes {
            let n = p.normalized();
            if !uniq.contains(&n) {
                uniq.push(n);
            }
        }
        let mut vertices: Vec<Point3> = Vec::new();
        let m = uniq.len();
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    let mat = vec![uniq[a].normal.to_vec(), uniq[b].normal.to_vec(), uniq[c].normal.to_vec()];
                    if linalg::det(&mat).is_zero() {
                        continue;
                    }
                    let rhs = [uniq[a].offset.clone(), uniq[b].offset.clone(), uniq[c].offset.clone()];
                    let x = linalg::solve(&mat, &rhs).expect("nonsingular");
                    let x: Point3 = [x[0].clone(), x[1].clone(), x[2].clone()];
                    if uniq.iter().all(|p| !p.slack(&x).is_negative()) && !vertices.contains(&x) {
                        vertices.push(x);
                    }
                }
            }
        }
        vertices.sort();
        // Facet pruning is only sound for full-dimensional polytopes.
        let planes = if affine_dim(&vertices) == 3 {
            uniq.into_iter()
                .filter(|p| vertices.iter().filter(|v| p.slack(v).is_zero()).count() >= 3)
                .collect()
        } else {
            uniq
        };
        Polytope3 { planes, vertices }
    }

    pub fn planes(&self) -> &[Plane3] {
        &self.planes
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn contains(&self, x: &Point3) -> bool {
        self.planes.iter().all(|p| !p.slack(x).is_negative())
    }

    /// Intersect with one more half-space. Returns `false` when it was redundant.
    pub fn clip(&mut self, p: Plane3) -> bool {
        if self.vertices.iter().all(|v| !p.slack(v).is_negative()) {
            return false;
        }
        let mut planes = self.planes.clone();
        planes.push(p);
        *self = Polytope3::from_planes(planes);
        true
    }
}
