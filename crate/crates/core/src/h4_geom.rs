//! Upper half-space geometry in dimension four for the twisted special linear
//! group of a ‡-order. Points are `alpha + s*xi` with `alpha` in the fixed
//! space and `xi` spanning the negated line, so everything stays rational.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::covering;
use crate::enumerate;
use crate::error::{Error, Result};
use crate::exact_quat::{OrthogonalInvolution, Quaternion, Rational};
use crate::lattice_orders::{unit_group, Order};
use crate::linalg::RMat;
use crate::polytope::{Plane3, Point3, Polytope3};
use crate::twisted_euclid::{hat_sigma, sl_check, Generator, GeneratorWord, QuatMatrix, TwistedRing};

/// A point `alpha + s*xi` of the upper half-space, `s > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct H4Point {
    alpha: Quaternion,
    s: Rational,
    quat: Quaternion,
    height_sq: Rational,
}

impl H4Point {
    pub fn alpha(&self) -> &Quaternion {
        &self.alpha
    }

    pub fn s(&self) -> &Rational {
        &self.s
    }

    /// The point as an element of the algebra.
    pub fn quaternion(&self) -> &Quaternion {
        &self.quat
    }

    /// `s^2 nrm(xi)`, the squared height.
    pub fn height_sq(&self) -> &Rational {
        &self.height_sq
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SphereSide {
    Inside,
    Outside,
}

/// A closed half-space of the upper half-space model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HalfSpaceH4 {
    /// `nrm(w - center) >= radius_sq` (outside) or `<=` (inside); `center` is horizontal.
    Sphere { center: Quaternion, radius_sq: Rational, side: SphereSide },
    /// `B(alpha_w, normal) <= offset`.
    VerticalPlane { normal: Quaternion, offset: Rational },
}

impl HalfSpaceH4 {
    /// Nonnegative exactly on the half-space, zero on its boundary.
    pub fn slack(&self, p: &H4Point) -> Rational {
        match self {
            HalfSpaceH4::Sphere { center, radius_sq, side } => {
                let v = (&p.alpha - center).nrm() + &p.height_sq - radius_sq;
                match side {
                    SphereSide::Outside => v,
                    SphereSide::Inside => -v,
                }
            }
            HalfSpaceH4::VerticalPlane { normal, offset } => offset - p.alpha.bilinear(normal),
        }
    }

    pub fn contains(&self, p: &H4Point) -> bool {
        !self.slack(p).is_negative()
    }

    pub fn translate(&self, tau: &Quaternion) -> HalfSpaceH4 {
        match self {
            HalfSpaceH4::Sphere { center, radius_sq, side } => HalfSpaceH4::Sphere {
                center: center + tau,
                radius_sq: radius_sq.clone(),
                side: side.clone(),
            },
            HalfSpaceH4::VerticalPlane { normal, offset } => HalfSpaceH4::VerticalPlane {
                normal: normal.clone(),
                offset: offset + tau.bilinear(normal),
            },
        }
    }
}

/// The half-space of points at least as close to `z` as to `gamma z`.
#[derive(Clone, Debug)]
pub struct Wall {
    pub gamma: QuatMatrix,
    pub image: H4Point,
    pub g: Rational,
    pub halfspace: HalfSpaceH4,
}

impl Wall {
    /// `g nrm(w - gamma z) - nrm(w - z)`; negative when `w` is closer to `gamma z`.
    pub fn excess(&self, z: &H4Point, w: &H4Point) -> Rational {
        &self.g * (&w.quat - &self.image.quat).nrm() - (&w.quat - &z.quat).nrm()
    }
}

/// The involution together with the chosen vertical direction `xi`.
#[derive(Clone, Debug)]
pub struct Frame {
    sigma: OrthogonalInvolution,
    xi: Quaternion,
    xi_nrm: Rational,
}

impl Frame {
    pub fn new(sigma: &OrthogonalInvolution) -> Frame {
        let xi = sigma.negated_space().into_iter().next().expect("the negated line is one-dimensional");
        let xi_nrm = xi.nrm();
        Frame { sigma: sigma.clone(), xi, xi_nrm }
    }

    pub fn sigma(&self) -> &OrthogonalInvolution {
        &self.sigma
    }

    pub fn xi(&self) -> &Quaternion {
        &self.xi
    }

    pub fn xi_nrm(&self) -> &Rational {
        &self.xi_nrm
    }

    pub fn point(&self, alpha: Quaternion, s: Rational) -> Result<H4Point> {
        if !s.is_positive() {
            return Err(Error::Validation(format!("height coefficient {s} is not positive")));
        }
        if !self.sigma.is_fixed(&alpha) {
            return Err(Error::Validation(format!("{alpha} is not in the fixed space")));
        }
        let quat = &alpha + &self.xi.scale(&s);
        let height_sq = &s * &s * &self.xi_nrm;
        Ok(H4Point { alpha, s, quat, height_sq })
    }

    /// Split `w` into its fixed part and its `xi` coefficient.
    pub fn from_quaternion(&self, w: &Quaternion) -> Result<H4Point> {
        let s = w.bilinear(&self.xi) / &self.xi_nrm;
        let alpha = w - &self.xi.scale(&s);
        self.point(alpha, s)
    }

    pub fn mobius_apply(&self, m: &QuatMatrix, z: &H4Point) -> Result<H4Point> {
        let num = &(&m.a * &z.quat) + &m.b;
        let den = &(&m.c * &z.quat) + &m.d;
        self.from_quaternion(&(&num * &den.inv()?))
    }

    /// `g(M, z) = nrm(cz + d)`.
    pub fn height_factor(&self, m: &QuatMatrix, z: &H4Point) -> Rational {
        (&(&m.c * &z.quat) + &m.d).nrm()
    }

    /// `cosh d(p, q) - 1`.
    pub fn cosh_surrogate(&self, p: &H4Point, q: &H4Point) -> Rational {
        let two = Rational::from_integer(2.into());
        (&p.quat - &q.quat).nrm() / (two * &p.s * &q.s * &self.xi_nrm)
    }

    pub fn wall(&self, z: &H4Point, gamma: &QuatMatrix) -> Result<Wall> {
        let image = self.mobius_apply(gamma, z)?;
        let g = self.height_factor(gamma, z);
        let two = Rational::from_integer(2.into());
        let halfspace = if g.is_one() {
            let normal = &image.alpha - &z.alpha;
            if normal.is_zero() {
                return Err(Error::Validation("the matrix fixes the base point".into()));
            }
            HalfSpaceH4::VerticalPlane { normal, offset: (image.quat.nrm() - z.quat.nrm()) / two }
        } else {
            let gm1 = &g - Rational::one();
            let center = (&image.quat.scale(&g) - &z.quat).scale(&gm1.recip());
            debug_assert!(center.bilinear(&self.xi).is_zero());
            let radius_sq = &g * (&z.quat - &image.quat).nrm() / (&gm1 * &gm1);
            let side = if g > Rational::one() { SphereSide::Outside } else { SphereSide::Inside };
            HalfSpaceH4::Sphere { center, radius_sq, side }
        };
        Ok(Wall { gamma: gamma.clone(), image, g, halfspace })
    }

    /// Bisector of `z + tau` and `-z^-1 + tau`.
    pub fn bisector_halfspace(&self, z: &H4Point, tau: &Quaternion) -> Result<HalfSpaceH4> {
        let n = z.quat.nrm();
        if n <= Rational::one() {
            return Err(Error::DegenerateBisector);
        }
        let nm1 = &n - Rational::one();
        let tr = z.quat.tr();
        let center = tau - &Quaternion::scalar(self.sigma.algebra(), &tr / &nm1);
        let radius_sq = Rational::one() + &tr * &tr / (&nm1 * &nm1);
        Ok(HalfSpaceH4::Sphere { center, radius_sq, side: SphereSide::Outside })
    }
}

pub fn mobius_apply(m: &QuatMatrix, z: &H4Point, sigma: &OrthogonalInvolution) -> Result<H4Point> {
    Frame::new(sigma).mobius_apply(m, z)
}

pub fn height_factor(m: &QuatMatrix, z: &H4Point) -> Rational {
    (&(&m.c * &z.quat) + &m.d).nrm()
}

pub fn cosh_surrogate(p: &H4Point, q: &H4Point, sigma: &OrthogonalInvolution) -> Rational {
    Frame::new(sigma).cosh_surrogate(p, q)
}

pub fn bisector_halfspace(z: &H4Point, tau: &Quaternion, sigma: &OrthogonalInvolution) -> Result<HalfSpaceH4> {
    Frame::new(sigma).bisector_halfspace(z, tau)
}

/// Rational `r <= sqrt(x)`, within `2^-32` relative slack.
fn sqrt_lower(x: &Rational) -> Rational {
    sqrt_bound(x, false)
}

/// Rational `r >= sqrt(x)`.
fn sqrt_upper(x: &Rational) -> Rational {
    sqrt_bound(x, true)
}

fn sqrt_bound(x: &Rational, up: bool) -> Rational {
    if !x.is_positive() {
        return Rational::zero();
    }
    let k = BigInt::one() << 32;
    let den = x.denom() * &k;
    let n: BigInt = x.numer() * x.denom() * &k * &k;
    let mut r = n.sqrt();
    if up && &r * &r < n {
        r += 1;
    }
    Rational::new(r, den)
}

/// Exact rational square root, if there is one.
fn exact_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let (a, b) = (x.numer().sqrt(), x.denom().sqrt());
    (&a * &a == *x.numer() && &b * &b == *x.denom()).then(|| Rational::new(a, b))
}

/// Ring data shared by every domain built over one order.
#[derive(Debug)]
pub struct Context {
    ring: TwistedRing,
    frame: Frame,
    plus_basis: Vec<Quaternion>,
    plus_gram: RMat,
    units: Vec<Quaternion>,
    units_mod_sign: Vec<Quaternion>,
    rho: Rational,
}

impl Context {
    pub fn new(order: &Order, sigma: &OrthogonalInvolution) -> Result<Context> {
        let ring = TwistedRing::new(order.clone(), sigma.clone())?;
        let frame = Frame::new(sigma);
        let plus_basis = ring.plus().basis();
        let plus_gram = ring.plus_gram().clone();
        let units = unit_group(order)?;
        let units_mod_sign: Vec<Quaternion> = units
            .iter()
            .filter(|u| u.coords().iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_positive()))
            .cloned()
            .collect();
        let rho = covering::rho_lattice(ring.plus())?.rho;
        Ok(Context { ring, frame, plus_basis, plus_gram, units, units_mod_sign, rho })
    }

    pub fn ring(&self) -> &TwistedRing {
        &self.ring
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn units(&self) -> &[Quaternion] {
        &self.units
    }

    pub fn rho(&self) -> &Rational {
        &self.rho
    }

    fn plus_coords(&self, q: &Quaternion) -> Result<Vec<Rational>> {
        self.ring
            .plus()
            .lattice()
            .coordinates(q)
            .ok_or_else(|| Error::Validation(format!("{q} is not in the fixed space")))
    }

    fn plus_element(&self, x: &[BigInt]) -> Quaternion {
        self.ring.plus().lattice().element(x)
    }

    fn from_coords(&self, x: &[Rational]) -> Quaternion {
        let mut q = Quaternion::zero(self.frame.sigma.algebra());
        for (c, b) in x.iter().zip(&self.plus_basis) {
            q = &q + &b.scale(c);
        }
        q
    }

    /// `u x sigma(u)`.
    fn rotate(&self, u: &Quaternion, x: &Quaternion) -> Quaternion {
        &(u * x) * &self.frame.sigma.apply(u)
    }

    fn unit_matrix(&self, u: &Quaternion) -> QuatMatrix {
        QuatMatrix::unit(u, &self.frame.sigma).expect("units are invertible")
    }

    /// `true` when some `u != ±1` and translation fix `alpha`.
    fn has_stabilizer(&self, alpha: &Quaternion) -> bool {
        self.units_mod_sign
            .iter()
            .filter(|u| !u.is_scalar())
            .any(|u| self.ring.plus().contains(&(alpha - &self.rotate(u, alpha))))
    }
}

pub fn stabilizer_infinity(order: &Order, sigma: &OrthogonalInvolution) -> Result<Vec<QuatMatrix>> {
    let ctx = Context::new(order, sigma)?;
    let mut out: Vec<QuatMatrix> = ctx.plus_basis.iter().map(QuatMatrix::translation).collect();
    out.extend(ctx.units.iter().map(|u| ctx.unit_matrix(u)));
    Ok(out)
}

/// Every `(c, d)` in `O x O` with `c sigma(d)` fixed, `(c, d) != 0` and `nrm(cz + d) < r`.
pub fn enumerate_bounded_pairs(
    order: &Order,
    sigma: &OrthogonalInvolution,
    z: &H4Point,
    r: &Rational,
) -> Result<Vec<(Quaternion, Quaternion)>> {
    bounded_pairs(&Context::new(order, sigma)?, z, r)
}

fn bounded_pairs(ctx: &Context, z: &H4Point, r: &Rational) -> Result<Vec<(Quaternion, Quaternion)>> {
    let o = ctx.ring.order().lattice();
    let zero4 = vec![Rational::zero(); 4];
    let gram4 = o.gram();
    let mut out = Vec::new();
    for (cx, cn) in enumerate::points_within(&gram4, &zero4, &(r / &z.height_sq))? {
        if &cn * &z.height_sq >= *r {
            continue;
        }
        let c = o.element(&cx);
        if c.is_zero() {
            for (dx, dn) in enumerate::points_within(&gram4, &zero4, r)? {
                if dn < *r && !dn.is_zero() {
                    out.push((c.clone(), o.element(&dx)));
                }
            }
            continue;
        }
        // d ranges over c H+ inside O; nrm(cz + d) = nrm(c) t^2 + nrm(d + c alpha).
        let sub = o.kernel_of(|d| vec![(&c * &ctx.frame.sigma.apply(d)).bilinear(&ctx.frame.xi)]);
        let bound = r - &cn * &z.height_sq;
        let center = -(&c * &z.alpha);
        let cc = sub.coordinates(&center).expect("c alpha lies in c H+");
        for (dx, dn) in enumerate::points_within(&sub.gram(), &cc, &bound)? {
            if dn < bound {
                out.push((c.clone(), sub.element(&dx)));
            }
        }
    }
    out.sort_by(|a, b| (a.0.coords(), a.1.coords()).cmp(&(b.0.coords(), b.1.coords())));
    Ok(out)
}

/// Half-spaces of the domain, the group elements whose walls they are and
/// the certified data used to build them.
#[derive(Clone, Debug)]
pub struct DomainDescription {
    pub halfspaces: Vec<HalfSpaceH4>,
    pub gamma_prime: Vec<QuatMatrix>,
    pub base_point: H4Point,
    pub cusp_count: usize,
    /// Walls of the cell of the stabilizer of infinity at `alpha`, in `H+`.
    pub cell: Vec<HalfSpaceH4>,
    pub walls: Vec<Wall>,
    /// Largest `nrm(p - alpha)` over the cell.
    pub rho_f: Rational,
    /// Lower bound for the squared height on the coarse domain.
    pub height_floor_sq: Rational,
    /// Upper bound for `cosh d(gamma z, z) - 1` over the walls that matter; `None` for a coarse domain.
    pub c_hat: Option<Rational>,
    /// Indices into `walls` of the walls that can cut the coarse domain; every
    /// point of the coarse domain satisfies the others.
    pub live_walls: Vec<usize>,
    /// The first `coarse_walls` entries of `walls` bound the coarse domain.
    pub coarse_walls: usize,
    /// `(max nrm(p - alpha), squared height floor)` per piece of the cell.
    pieces: Vec<(Rational, Rational)>,
    ctx: Arc<Context>,
}

impl DomainDescription {
    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn contains(&self, w: &H4Point) -> bool {
        self.halfspaces.iter().all(|h| h.contains(w))
    }

    pub fn strictly_contains(&self, w: &H4Point) -> bool {
        self.halfspaces.iter().all(|h| h.slack(w).is_positive())
    }

    pub fn in_coarse(&self, w: &H4Point) -> bool {
        self.cell.iter().all(|h| h.contains(w)) && self.walls[..self.coarse_walls].iter().all(|x| x.halfspace.contains(w))
    }

    /// Same answer as `contains`, checking only the live walls past the coarse domain.
    pub fn contains_fast(&self, w: &H4Point) -> bool {
        self.in_coarse(w)
            && self.live_walls.iter().filter(|&&k| k >= self.coarse_walls).all(|&k| self.walls[k].halfspace.contains(w))
    }
}

// False when every point over the cell at squared height >= floor lies on the
// closed side of `h`.
fn can_cut(cell: &[HalfSpaceH4], floor: &Rational, h: &HalfSpaceH4) -> bool {
    match h {
        HalfSpaceH4::Sphere { center, radius_sq, side: SphereSide::Outside } => {
            let mut gap = Rational::zero();
            for c in cell {
                if let HalfSpaceH4::VerticalPlane { normal, offset } = c {
                    let v = center.bilinear(normal) - offset;
                    if v.is_positive() {
                        gap = gap.max(&v * &v / normal.nrm());
                    }
                }
            }
            radius_sq - gap > *floor
        }
        _ => true,
    }
}

/// The cell `{p : nrm(p - alpha) <= nrm(p - u alpha sigma(u) - tau)}` in plus coordinates.
fn stabilizer_cell(ctx: &Context, alpha: &Quaternion) -> Result<Polytope3> {
    let g = &ctx.plus_gram;
    let ac = ctx.plus_coords(alpha)?;
    let na = alpha.nrm();
    let bound = &ctx.rho * Rational::from_integer(4.into());
    let two = Rational::from_integer(2.into());
    let mut cands: Vec<(Rational, Plane3)> = Vec::new();
    for u in &ctx.units_mod_sign {
        let beta = ctx.rotate(u, alpha);
        let shift = ctx.plus_coords(&(alpha - &beta))?;
        for (x, v) in enumerate::points_within(g, &shift, &bound)? {
            let img = &beta + &ctx.plus_element(&x);
            if &img == alpha {
                continue;
            }
            let vc: Vec<Rational> = ctx.plus_coords(&(&img - alpha))?;
            let gv = crate::linalg::mat_vec(g, &vc);
            let n: Point3 = [&gv[0] * &two, &gv[1] * &two, &gv[2] * &two];
            cands.push((v, Plane3::new(n, img.nrm() - &na)));
        }
    }
    cands.sort_by(|a, b| a.0.cmp(&b.0));
    // Start from the translation cell, which is bounded, then clip by rotations.
    let rel = covering::voronoi_relevant(g)?;
    let planes = rel
        .iter()
        .map(|v| {
            let vr: Vec<Rational> = v.iter().map(|c| Rational::from_integer(c.clone())).collect();
            let gv = crate::linalg::mat_vec(g, &vr);
            let n: Point3 = [&gv[0] * &two, &gv[1] * &two, &gv[2] * &two];
            let off: Rational = (0..3).map(|k| &n[k] * &ac[k]).sum::<Rational>() + enumerate::quad_value(g, &vr);
            Plane3::new(n, off)
        })
        .collect();
    let mut cell = Polytope3::from_planes(planes);
    for (_, p) in cands {
        cell.clip(p);
    }
    Ok(cell)
}

fn plane_to_halfspace(ctx: &Context, p: &Plane3) -> Result<HalfSpaceH4> {
    // n . x = 2 B(x, v) with n = 2 G v_c.
    let inv = crate::linalg::inverse(&ctx.plus_gram).ok_or(Error::NotPositiveDefinite)?;
    let half = Rational::new(1.into(), 2.into());
    let vc: Vec<Rational> = crate::linalg::mat_vec(&inv, &p.normal).into_iter().map(|x| x * &half).collect();
    Ok(HalfSpaceH4::VerticalPlane { normal: ctx.from_coords(&vc), offset: &p.offset * &half })
}

/// A rational `s` with `s^2 nrm(xi) = 9/4` when possible, otherwise the
/// smallest `m/q` (`q <= 12`) with `s^2 nrm(xi) >= 9/4`.
pub fn default_height(frame: &Frame) -> Rational {
    let target = Rational::new(9.into(), 4.into());
    if let Some(s) = exact_sqrt(&(&target / frame.xi_nrm())) {
        return s;
    }
    let mut best: Option<(Rational, Rational)> = None;
    for q in 1..=12i64 {
        let qr = Rational::from_integer(q.into());
        let m0 = sqrt_lower(&(&target / frame.xi_nrm())) * &qr;
        let mut m = m0.floor();
        loop {
            let s = &m / &qr;
            let t2 = &s * &s * frame.xi_nrm();
            if s.is_positive() && t2 >= target {
                if best.as_ref().map_or(true, |(b, _)| t2 < *b) {
                    best = Some((t2, s));
                }
                break;
            }
            m += Rational::one();
        }
    }
    best.expect("q = 1 always succeeds").1
}

/// Candidate base points `b1/d1 + b2/d2 + b3/d3` over the plus basis, in search order.
fn alpha_candidates(ctx: &Context) -> Vec<Quaternion> {
    let mut out = Vec::new();
    for m in 2..=13i64 {
        for d1 in 2..=m {
            for d2 in 2..=m {
                for d3 in 2..=m {
                    if d1.max(d2).max(d3) != m || d1 == d2 || d2 == d3 || d1 == d3 {
                        continue;
                    }
                    let c: Vec<Rational> = [d1, d2, d3].iter().map(|d| Rational::new(1.into(), (*d).into())).collect();
                    out.push(ctx.from_coords(&c));
                }
            }
        }
    }
    out
}

pub fn coarse_domain(
    order: &Order,
    sigma: &OrthogonalInvolution,
    alpha: &Quaternion,
    s: &Rational,
) -> Result<DomainDescription> {
    coarse_with(euclidean_context(order, sigma)?, alpha, s)
}

// Stage one of the reduction only raises heights when rho < 1.
fn euclidean_context(order: &Order, sigma: &OrthogonalInvolution) -> Result<Arc<Context>> {
    let ctx = Context::new(order, sigma)?;
    if ctx.rho >= Rational::one() {
        return Err(Error::NotEuclideanOrder(ctx.rho.to_string()));
    }
    Ok(Arc::new(ctx))
}

/// Lowest squared height on the coarse domain. Outside the wall of
/// `Tr(tau) J` a point over `p` has `h^2 >= t^2/n - phi_tau(p)/(n-1)` with
/// `phi_tau(p) = n nrm(p - beta_tau) - nrm(p - alpha)`; on the part of the
/// cell nearest to `beta_tau` that bound is convex, so vertices suffice.
/// Pieces of the cell cut out by the Voronoi cells of the inversion images
/// `beta0 + tau`, each with its largest `nrm(p - alpha)` and a lower bound for
/// the squared height of the coarse domain above it.
fn height_pieces(
    ctx: &Context,
    cell: &Polytope3,
    alpha: &Quaternion,
    beta0: &Quaternion,
    n: &Rational,
    t2: &Rational,
    rho_f: &Rational,
) -> Result<Vec<(Rational, Rational)>> {
    let g = &ctx.plus_gram;
    let ac = ctx.plus_coords(alpha)?;
    let b0 = ctx.plus_coords(beta0)?;
    let two = Rational::from_integer(2.into());
    let nm1 = n - Rational::one();
    let rel = covering::voronoi_relevant(g)?;
    let shift = ctx.plus_coords(&(alpha - beta0))?;
    let reach = &two * (rho_f + &ctx.rho);
    let mut out = Vec::new();
    for (x, _) in enumerate::points_within(g, &shift, &reach)? {
        let bc: Vec<Rational> = b0.iter().zip(&x).map(|(b, k)| b + Rational::from_integer(k.clone())).collect();
        let mut piece = cell.clone();
        for v in &rel {
            let vr: Vec<Rational> = v.iter().map(|c| Rational::from_integer(c.clone())).collect();
            let gv = crate::linalg::mat_vec(g, &vr);
            let nv: Point3 = [&gv[0] * &two, &gv[1] * &two, &gv[2] * &two];
            let off: Rational = (0..3).map(|k| &nv[k] * &bc[k]).sum::<Rational>() + enumerate::quad_value(g, &vr);
            piece.clip(Plane3::new(nv, off));
            if piece.vertices().is_empty() {
                break;
            }
        }
        // phi is convex, so its maximum over the piece sits at a vertex.
        let mut worst: Option<Rational> = None;
        let mut far = Rational::zero();
        for p in piece.vertices() {
            let dp: Vec<Rational> = p.iter().zip(&bc).map(|(a, b)| a - b).collect();
            let da: Vec<Rational> = p.iter().zip(&ac).map(|(a, b)| a - b).collect();
            let na = enumerate::quad_value(g, &da);
            let phi = n * enumerate::quad_value(g, &dp) - &na;
            if worst.as_ref().map_or(true, |w| phi > *w) {
                worst = Some(phi);
            }
            far = far.max(na);
        }
        if let Some(w) = worst {
            out.push((far, t2 / n - w / &nm1));
        }
    }
    if out.is_empty() {
        return Err(Error::BadBasePoint("empty cell".into()));
    }
    Ok(out)
}

fn coarse_with(ctx: Arc<Context>, alpha: &Quaternion, s: &Rational) -> Result<DomainDescription> {
    let frame = ctx.frame.clone();
    let z = frame.point(alpha.clone(), s.clone())?;
    let two = Rational::from_integer(2.into());
    if z.height_sq <= two {
        return Err(Error::HeightTooLow);
    }
    if alpha.nrm() > Rational::one() {
        return Err(Error::BadBasePoint("nrm(alpha) > 1".into()));
    }
    if ctx.has_stabilizer(alpha) {
        return Err(Error::BadBasePoint("alpha has a nontrivial stabilizer".into()));
    }
    let cell = stabilizer_cell(&ctx, alpha)?;
    let ac = ctx.plus_coords(alpha)?;
    let rho_f = cell
        .vertices()
        .iter()
        .map(|v| {
            let d: Vec<Rational> = v.iter().zip(&ac).map(|(a, b)| a - b).collect();
            enumerate::quad_value(&ctx.plus_gram, &d)
        })
        .max()
        .ok_or_else(|| Error::BadBasePoint("empty cell".into()))?;
    let t2 = z.height_sq.clone();
    let n = z.quat.nrm();
    let alg = frame.sigma.algebra().clone();
    let j = QuatMatrix::inversion(&alg);
    let jz = frame.mobius_apply(&j, &z)?;
    let beta0 = jz.alpha.clone();
    let pieces = height_pieces(&ctx, &cell, alpha, &beta0, &n, &t2, &rho_f)?;
    let floor = pieces.iter().map(|(_, h)| h.clone()).min().expect("nonempty");
    if !floor.is_positive() {
        return Err(Error::BadBasePoint(format!("no certified height floor (bound {floor})")));
    }
    let eight = Rational::from_integer(8.into());
    let reach = (&eight * &rho_f + &eight * &t2 / &n).max(&two * (&rho_f + &ctx.rho));
    let mut walls = Vec::new();
    let mut gamma_prime = Vec::new();
    let shift = ctx.plus_coords(&(alpha - &beta0))?;
    for (x, _) in enumerate::points_within(&ctx.plus_gram, &shift, &reach)? {
        let tau = ctx.plus_element(&x);
        let gamma = QuatMatrix::translation(&tau).mul(&j);
        let w = frame.wall(&z, &gamma)?;
        if !tau.is_zero() {
            if let HalfSpaceH4::Sphere { center, radius_sq, .. } = &w.halfspace {
                let d2 = (center - alpha).nrm();
                let gap = &d2 - &rho_f - radius_sq;
                if gap.is_positive() && &gap * &gap > Rational::from_integer(4.into()) * &rho_f * radius_sq {
                    continue;
                }
            }
        }
        gamma_prime.push(gamma);
        walls.push(w);
    }
    let cell_hs: Vec<HalfSpaceH4> = cell.planes().iter().map(|p| plane_to_halfspace(&ctx, p)).collect::<Result<_>>()?;
    let mut halfspaces = cell_hs.clone();
    halfspaces.extend(walls.iter().map(|w| w.halfspace.clone()));
    let n_walls = walls.len();
    let d = DomainDescription {
        halfspaces,
        gamma_prime,
        base_point: z,
        cusp_count: 1,
        cell: cell_hs,
        walls,
        rho_f,
        height_floor_sq: floor,
        pieces,
        c_hat: None,
        live_walls: (0..n_walls).collect(),
        coarse_walls: n_walls,
        ctx,
    };
    if !d.strictly_contains(&d.base_point) {
        return Err(Error::BadBasePoint("base point is not interior".into()));
    }
    Ok(d)
}

/// First candidate base point, in a fixed search order, that yields a coarse domain.
pub fn default_coarse_domain(order: &Order, sigma: &OrthogonalInvolution) -> Result<DomainDescription> {
    let ctx = euclidean_context(order, sigma)?;
    let s = default_height(&ctx.frame);
    let mut last = Error::BadBasePoint("no candidate".into());
    for alpha in alpha_candidates(&ctx) {
        match coarse_with(ctx.clone(), &alpha, &s) {
            Ok(d) => return Ok(d),
            Err(e @ Error::BadBasePoint(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

pub fn dirichlet_domain(
    order: &Order,
    sigma: &OrthogonalInvolution,
    alpha: &Quaternion,
    s: &Rational,
) -> Result<DomainDescription> {
    let coarse = coarse_domain(order, sigma, alpha, s)?;
    dirichlet_from_coarse(coarse)
}

/// Refine a coarse domain by the walls of every `gamma` with
/// `cosh d(gamma z, z) - 1 <= C`, where `C` bounds `cosh(2L) - 1` and `L`
/// bounds the distance from `z` to the part of the coarse domain below the
/// height where only the stabilizer of infinity contributes walls.
pub fn dirichlet_from_coarse(coarse: DomainDescription) -> Result<DomainDescription> {
    let ctx = coarse.ctx.clone();
    if ctx.rho >= Rational::one() {
        return Err(Error::NotEuclideanOrder(ctx.rho.to_string()));
    }
    let frame = &ctx.frame;
    let z = coarse.base_point.clone();
    let one = Rational::one();
    let two = Rational::from_integer(2.into());
    let t2 = z.height_sq.clone();
    let rho_f = coarse.rho_f.clone();
    // Above this height every wall with c != 0 is satisfied, since g >= t^2 there.
    let top_sq = (&rho_f + &t2) / (&t2 - &one);
    // Over a piece, cosh d(w, z) - 1 <= f(h) = (rho + t^2) / (2 t h) + h / (2 t) - 1,
    // which is convex in h, so its maximum sits at an end of [floor, top].
    let f_upper = |rho: &Rational, h2: &Rational| {
        let th = sqrt_lower(&(&t2 * h2));
        let h_over_t = sqrt_upper(&(h2 / &t2));
        (rho + &t2) / (&two * th) + h_over_t / &two - &one
    };
    let x_hat = coarse
        .pieces
        .iter()
        .filter(|(_, h2)| *h2 < top_sq)
        .map(|(rho, h2)| f_upper(rho, h2).max(f_upper(rho, &top_sq)))
        .max()
        .unwrap_or_else(|| f_upper(&rho_f, &top_sq));
    let c_hat = &two * &x_hat * (&x_hat + &two);
    let g_max = &two * (&one + &c_hat);
    let pairs = bounded_pairs(&ctx, &z, &g_max)?;
    let mut seen: HashSet<(Quaternion, Quaternion)> = HashSet::new();
    let mut gammas: Vec<QuatMatrix> = Vec::new();
    for (c, d) in pairs {
        if seen.contains(&(c.clone(), d.clone())) {
            continue;
        }
        let m = match ctx.ring.complete_row(&c, &d) {
            Ok(m) => m,
            Err(Error::NotCoprime(_)) => {
                seen.insert((-&c, -&d));
                continue;
            }
            Err(e) => return Err(e),
        };
        debug_assert!(m.c == c && m.d == d);
        for u in &ctx.units {
            let mu = ctx.unit_matrix(u).mul(&m);
            seen.insert((mu.c.clone(), mu.d.clone()));
        }
        for u in &ctx.units_mod_sign {
            let mu = ctx.unit_matrix(u).mul(&m);
            let g = frame.height_factor(&mu, &z);
            let img = frame.mobius_apply(&mu, &z)?;
            let drop = &t2 * (&one - g.recip()) * (&one - g.recip());
            let bound = &two * &c_hat * &t2 / &g - drop;
            if bound.is_negative() {
                continue;
            }
            let shift = ctx.plus_coords(&(&z.alpha - &img.alpha))?;
            for (x, _) in enumerate::points_within(&ctx.plus_gram, &shift, &bound)? {
                let gamma = QuatMatrix::translation(&ctx.plus_element(&x)).mul(&mu);
                let gz = frame.mobius_apply(&gamma, &z)?;
                if gz == z {
                    continue;
                }
                if frame.cosh_surrogate(&gz, &z) <= c_hat {
                    gammas.push(gamma);
                }
            }
        }
    }
    let mut walls = coarse.walls.clone();
    let mut gamma_prime = coarse.gamma_prime.clone();
    let mut known: HashSet<QuatMatrix> = gamma_prime.iter().cloned().collect();
    for gamma in gammas {
        if known.insert(gamma.clone()) {
            walls.push(frame.wall(&z, &gamma)?);
            gamma_prime.push(gamma);
        }
    }
    let mut halfspaces = coarse.cell.clone();
    let mut hs: HashSet<HalfSpaceH4> = halfspaces.iter().cloned().collect();
    for w in &walls {
        if hs.insert(w.halfspace.clone()) {
            halfspaces.push(w.halfspace.clone());
        }
    }
    let mut live_walls: Vec<usize> = (0..coarse.coarse_walls).collect();
    for (k, w) in walls.iter().enumerate().skip(coarse.coarse_walls) {
        if can_cut(&coarse.cell, &coarse.height_floor_sq, &w.halfspace) {
            live_walls.push(k);
        }
    }
    let d = DomainDescription {
        halfspaces,
        gamma_prime,
        walls,
        c_hat: Some(c_hat),
        live_walls,
        ..coarse
    };
    if !d.strictly_contains(&d.base_point) {
        return Err(Error::BadBasePoint("base point is not interior".into()));
    }
    Ok(d)
}

/// Result of moving a point into a domain.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// `point = word . input`.
    pub word: GeneratorWord,
    pub point: H4Point,
    /// Squared heights before the first and after each inversion of the first stage.
    pub inversion_heights: Vec<Rational>,
    pub steps: usize,
}

pub const REDUCTION_CAP: usize = 10_000;

/// Move `w` into the domain. Stage one alternates reduction by the
/// stabilizer of infinity with inversions that strictly raise the height;
/// stage two crosses violated walls, strictly lowering the distance to the
/// base point.
pub fn reduce_point(domain: &DomainDescription, w: &H4Point) -> Result<Reduction> {
    let ctx = &domain.ctx;
    let frame = &ctx.frame;
    let sigma = frame.sigma();
    let mut word = GeneratorWord::default();
    let mut p = w.clone();
    let mut heights = vec![p.height_sq.clone()];
    let mut steps = 0;
    if domain.contains_fast(&p) {
        return Ok(Reduction { word, point: p, inversion_heights: heights, steps });
    }
    let prepend = |word: &mut GeneratorWord, step: Vec<Generator>| {
        let mut v = step;
        v.append(&mut word.0);
        word.0 = v;
    };
    let mut stage_two = false;
    loop {
        steps += 1;
        if steps > REDUCTION_CAP {
            return Err(Error::NonTermination(REDUCTION_CAP));
        }
        let (gens, q) = stabilizer_reduce(domain, &p)?;
        if !gens.is_empty() {
            prepend(&mut word, gens);
            p = q;
        }
        if !stage_two {
            let (pts, d) = ctx.ring.closest_plus(&p.alpha)?;
            let tau = pts.into_iter().next().expect("closest point exists");
            if &d + &p.height_sq < Rational::one() {
                let mut step = vec![Generator::Inversion];
                if !tau.is_zero() {
                    step.push(Generator::Translation(-&tau));
                }
                let m = GeneratorWord(step.clone()).evaluate(sigma);
                p = frame.mobius_apply(&m, &p)?;
                prepend(&mut word, step);
                heights.push(p.height_sq.clone());
                continue;
            }
            stage_two = true;
        }
        let pick = |ks: &mut dyn Iterator<Item = usize>| {
            ks.map(|k| (domain.walls[k].excess(&domain.base_point, &p), k))
                .filter(|(e, _)| e.is_negative())
                .min_by(|a, b| a.0.cmp(&b.0))
        };
        let worst = pick(&mut (0..domain.coarse_walls))
            .or_else(|| pick(&mut domain.live_walls.iter().copied().filter(|&k| k >= domain.coarse_walls)))
            .map(|(e, k)| (e, &domain.walls[k]));
        let Some((_, wall)) = worst else { break };
        let inv = hat_sigma(&wall.gamma, sigma);
        let step = ctx.ring.factor_into_generators(&inv)?;
        p = frame.mobius_apply(&inv, &p)?;
        prepend(&mut word, step.0);
    }
    if !domain.contains_fast(&p) {
        return Err(Error::Validation("reduced point misses a stabilizer wall".into()));
    }
    Ok(Reduction { word, point: p, inversion_heights: heights, steps })
}

/// Closest image of `w` to the base point under the stabilizer of infinity,
/// preferring `w` itself on ties.
fn stabilizer_reduce(domain: &DomainDescription, w: &H4Point) -> Result<(Vec<Generator>, H4Point)> {
    let ctx = &domain.ctx;
    let alpha = &domain.base_point.alpha;
    let mut best: Option<(Rational, Quaternion, Quaternion)> = None;
    for u in &ctx.units_mod_sign {
        let beta = ctx.rotate(u, &w.alpha);
        let target = ctx.plus_coords(&(alpha - &beta))?;
        let (xs, d) = enumerate::closest_points(&ctx.plus_gram, &target)?;
        if best.as_ref().map_or(true, |(b, _, _)| d < *b) {
            best = Some((d, u.clone(), ctx.plus_element(&xs[0])));
        }
    }
    let (d, u, tau) = best.expect("the unit group is nonempty");
    if (&w.alpha - alpha).nrm() <= d {
        return Ok((Vec::new(), w.clone()));
    }
    let mut gens = Vec::new();
    if !tau.is_zero() {
        gens.push(Generator::Translation(tau.clone()));
    }
    if !u.is_scalar() {
        gens.push(Generator::Unit(u.clone()));
    }
    let alpha2 = &ctx.rotate(&u, &w.alpha) + &tau;
    let p = ctx.frame.point(alpha2, w.s.clone())?;
    Ok((gens, p))
}

/// Check the twisted special linear condition before acting.
pub fn checked_mobius(m: &QuatMatrix, z: &H4Point, sigma: &OrthogonalInvolution) -> Result<H4Point> {
    if !sl_check(m, sigma) {
        return Err(Error::Validation("matrix fails the twisted special linear check".into()));
    }
    mobius_apply(m, z, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_quat::{int, rat, QuatAlgebra};
    use crate::lattice_orders::order_from_strings;

    fn hurwitz() -> (Order, OrthogonalInvolution) {
        let alg = QuatAlgebra::from_ints(-1, -1).unwrap();
        let o = order_from_strings(&alg, &["1", "i", "j", "(1+i+j+ij)/2"]).unwrap();
        let s = OrthogonalInvolution::standard(&alg);
        (o, s)
    }

    fn q(o: &Order, s: &str) -> Quaternion {
        Quaternion::parse(o.algebra(), s).unwrap()
    }

    #[test]
    fn trivial_actions() {
        let (o, s) = hurwitz();
        let f = Frame::new(&s);
        let alg = o.algebra().clone();
        let z = f.point(Quaternion::zero(&alg), int(1)).unwrap();
        assert_eq!(f.mobius_apply(&QuatMatrix::inversion(&alg), &z).unwrap(), z);
        assert_eq!(f.height_factor(&QuatMatrix::identity(&alg), &z), int(1));
        let tau = q(&o, "1+i");
        let w = f.mobius_apply(&QuatMatrix::translation(&tau), &z).unwrap();
        assert_eq!(w.alpha(), &tau);
        assert_eq!(w.height_sq(), z.height_sq());
    }

    #[test]
    fn vertical_distance() {
        let (o, s) = hurwitz();
        let f = Frame::new(&s);
        let zero = Quaternion::zero(o.algebra());
        let p = f.point(zero.clone(), int(3)).unwrap();
        let q2 = f.point(zero, int(6)).unwrap();
        assert_eq!(f.cosh_surrogate(&p, &q2), rat(1, 4));
        assert_eq!(f.cosh_surrogate(&p, &p), int(0));
    }

    #[test]
    fn bisector_examples() {
        let (o, s) = hurwitz();
        let f = Frame::new(&s);
        let zero = Quaternion::zero(o.algebra());
        let z = f.point(zero.clone(), int(2)).unwrap();
        let h = f.bisector_halfspace(&z, &zero).unwrap();
        assert_eq!(h, HalfSpaceH4::Sphere { center: zero.clone(), radius_sq: int(1), side: SphereSide::Outside });
        let z = f.point(q(&o, "1"), int(2)).unwrap();
        let h = f.bisector_halfspace(&z, &zero).unwrap();
        assert_eq!(h, HalfSpaceH4::Sphere { center: q(&o, "-1/2"), radius_sq: rat(5, 4), side: SphereSide::Outside });
        let tau = q(&o, "1+j");
        assert_eq!(f.bisector_halfspace(&z, &tau).unwrap(), h.translate(&tau));
        let low = f.point(zero, rat(1, 2)).unwrap();
        assert!(matches!(f.bisector_halfspace(&low, &tau), Err(Error::DegenerateBisector)));
    }

    #[test]
    fn bisector_is_equidistant_off_real_axis() {
        // With alpha = 1/5 + i/7 the sphere still separates z from -1/z exactly.
        let (o, s) = hurwitz();
        let f = Frame::new(&s);
        let z = f.point(q(&o, "1/5+1/7*i"), rat(3, 2)).unwrap();
        let zero = Quaternion::zero(o.algebra());
        let h = f.bisector_halfspace(&z, &zero).unwrap();
        let jz = f.mobius_apply(&QuatMatrix::inversion(o.algebra()), &z).unwrap();
        for (a, sv) in [("0", rat(1, 3)), ("1/2+i", rat(2, 1)), ("-1+j", rat(1, 1))] {
            let w = f.point(q(&o, a), sv).unwrap();
            let diff = f.cosh_surrogate(&w, &z) - f.cosh_surrogate(&w, &jz);
            let sl = h.slack(&w);
            assert_eq!(diff.is_negative(), sl.is_positive());
            assert_eq!(diff.is_zero(), sl.is_zero());
        }
    }

    #[test]
    fn wall_of_inversion_matches_bisector() {
        let (o, s) = hurwitz();
        let f = Frame::new(&s);
        let z = f.point(q(&o, "1/5+1/7*i+1/11*j"), int(2)).unwrap();
        let w = f.wall(&z, &QuatMatrix::inversion(o.algebra())).unwrap();
        let b = f.bisector_halfspace(&z, &Quaternion::zero(o.algebra())).unwrap();
        assert_eq!(w.halfspace, b);
    }

    #[test]
    fn bounded_pairs_examples() {
        let (o, s) = hurwitz();
        let f = Frame::new(&s);
        let z = f.point(Quaternion::zero(o.algebra()), int(2)).unwrap();
        assert!(enumerate_bounded_pairs(&o, &s, &z, &int(1)).unwrap().is_empty());
        let p = enumerate_bounded_pairs(&o, &s, &z, &int(2)).unwrap();
        assert_eq!(p.len(), 24);
        assert!(p.iter().all(|(c, d)| c.is_zero() && d.nrm().is_one()));
        let p = enumerate_bounded_pairs(&o, &s, &z, &int(4)).unwrap();
        assert!(p.iter().all(|(c, _)| c.is_zero()));
    }

    #[test]
    fn stabilizer_generators() {
        let (o, s) = hurwitz();
        let g = stabilizer_infinity(&o, &s).unwrap();
        assert_eq!(g.len(), 27);
        assert!(g.iter().all(|m| sl_check(m, &s) && m.c.is_zero()));
        let alg = o.algebra().clone();
        let l = order_from_strings(&alg, &["1", "i", "j", "ij"]).unwrap();
        assert_eq!(stabilizer_infinity(&l, &s).unwrap().len(), 11);
    }

    #[test]
    fn coarse_domain_example() {
        let (o, s) = hurwitz();
        let alpha = q(&o, "1/5+1/7*i+1/11*j");
        let d = coarse_domain(&o, &s, &alpha, &int(2)).unwrap();
        assert!(d.strictly_contains(&d.base_point));
        assert!(d.height_floor_sq.is_positive());
        let real = q(&o, "1/5");
        assert!(matches!(coarse_domain(&o, &s, &real, &int(2)), Err(Error::BadBasePoint(_))));
        assert!(matches!(coarse_domain(&o, &s, &alpha, &int(1)), Err(Error::HeightTooLow)));
    }

    #[test]
    fn non_euclidean_orders_are_refused() {
        let alg = QuatAlgebra::from_ints(-1, -5).unwrap();
        let o = order_from_strings(&alg, &["1", "i", "j", "(1+i+j+ij)/2"]).unwrap();
        let s = OrthogonalInvolution::standard(&alg);
        assert!(matches!(default_coarse_domain(&o, &s), Err(Error::NotEuclideanOrder(_))));
    }

    #[test]
    fn reduce_translate_of_base_point() {
        let (o, s) = hurwitz();
        let alpha = q(&o, "1/5+1/7*i+1/11*j");
        let d = coarse_domain(&o, &s, &alpha, &int(2)).unwrap();
        let f = Frame::new(&s);
        let tau = q(&o, "2-i+j");
        let w = f.point(&alpha + &tau, int(2)).unwrap();
        let r = reduce_point(&d, &w).unwrap();
        assert_eq!(r.word, GeneratorWord(vec![Generator::Translation(-&tau)]));
        assert_eq!(r.point, d.base_point);
        let r = reduce_point(&d, &d.base_point).unwrap();
        assert!(r.word.is_empty());
    }

    #[test]
    fn sqrt_bounds_bracket() {
        for x in [rat(2, 1), rat(9, 4), rat(1, 7)] {
            let (lo, hi) = (sqrt_lower(&x), sqrt_upper(&x));
            assert!(&lo * &lo <= x && &hi * &hi >= x && lo <= hi);
        }
        assert_eq!(exact_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(exact_sqrt(&rat(2, 1)), None);
    }
}
