//! The floor of the Bianchi fundamental polyhedron, computed by Swan's
//! hemisphere sweep.
//!
//! A unimodular pair (mu, lambda), mu != 0, carries the hemisphere of center
//! lambda/mu and squared radius 1/N(mu). A point of upper half-space lies in
//! the fundamental domain iff it is on or above every such hemisphere; the
//! floor is the lower envelope. In the (a, b) chart the envelope is the power
//! diagram of the hemispheres with respect to the norm form, so every cell is
//! a convex rational polygon and the whole structure is exact.
//!
//! The floor is computed over the translation square [0,1]^2 in omega
//! coordinates, with doubling norm bounds until the cell structure is
//! witnessed stable twice.

use crate::exact::{QuadElem, Rat, RingBasis, RingElem, UhsPoint};
use crate::geom::{ConvexPoly, Line, Pt};
use crate::moebius::MoebiusElt;
use crate::BianchiError;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Hemisphere carried by the unimodular pair (mu, lambda).
#[derive(Clone, Debug)]
pub struct Hemisphere {
    pub mu: RingElem,
    pub lambda: RingElem,
    pub center: Pt,
    pub rsq: Rat,
}

impl Hemisphere {
    pub fn from_pair(mu: RingElem, lambda: RingElem) -> Self {
        let n = mu.norm();
        let c = &lambda.to_quad() / &mu.to_quad();
        Hemisphere {
            center: Pt::new(c.a.clone(), c.b.clone()),
            rsq: Rat(num_rational::BigRational::new(1.into(), n)),
            mu,
            lambda,
        }
    }

    /// Power of the chart point p: Q(p - center) - rsq. Negative strictly
    /// under the dome, zero on the boundary circle.
    pub fn power(&self, basis: &RingBasis, p: &Pt) -> Rat {
        let da = &p.a - &self.center.a;
        let db = &p.b - &self.center.b;
        &basis.qform(&da, &db) - &self.rsq
    }

    /// Height squared of the dome over p (may be negative off the disc).
    pub fn height_sq(&self, basis: &RingBasis, p: &Pt) -> Rat {
        -&self.power(basis, p)
    }

    pub fn lift(&self, basis: &RingBasis, p: &Pt) -> UhsPoint {
        let z = QuadElem::new(p.a.clone(), p.b.clone(), *basis);
        UhsPoint::new(z, self.height_sq(basis, p)).expect("lift outside dome")
    }

    /// The hemisphere translated by the lattice element (ta, tb).
    pub fn translated(&self, ta: &BigInt, tb: &BigInt) -> Hemisphere {
        let basis = self.mu.basis;
        let t = RingElem::from_big(ta.clone(), tb.clone(), basis);
        Hemisphere::from_pair(self.mu.clone(), self.lambda.add(&t.mul(&self.mu)))
    }
}

/// Tag on a polygon edge: which constraint produced it.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum EdgeTag {
    /// One of the four square walls: 0: a=0, 1: a=1, 2: b=0, 3: b=1.
    Wall(u8),
    /// Bisector with another hemisphere (index into the hemisphere list).
    Bis(usize),
    /// Interior cut introduced by refinement or pairing exactness.
    Cut,
}

/// A 2-cell of the floor: a convex piece of the power cell of `carrier`,
/// clipped to the chart square.
#[derive(Clone, Debug)]
pub struct Face {
    pub carrier: usize,
    pub poly: ConvexPoly<EdgeTag>,
}

/// One side-pairing: `elt` maps face `face` exactly onto face `mate`.
#[derive(Clone, Debug)]
pub struct Pairing {
    pub face: usize,
    pub mate: usize,
    pub elt: MoebiusElt,
}

/// The floor complex over one translation square.
#[derive(Clone, Debug)]
pub struct FloorComplex {
    pub basis: RingBasis,
    /// Norm bound at which the sweep stabilised.
    pub norm_bound: u64,
    /// Bounds at which the two stabilisation witnesses were observed.
    pub witnesses: (u64, u64),
    pub hemispheres: Vec<Hemisphere>,
    pub faces: Vec<Face>,
    pub pairings: Vec<Pairing>,
    /// Wall translations: z -> z+1 pairs the a-walls, z -> z+omega the b-walls.
    pub wall_pairings: (MoebiusElt, MoebiusElt),
}

impl FloorComplex {
    /// All face corner points, deduplicated, with their floor heights.
    pub fn vertices(&self) -> Vec<(Pt, Rat)> {
        let mut seen: BTreeMap<Pt, Rat> = BTreeMap::new();
        for f in &self.faces {
            let h = &self.hemispheres[f.carrier];
            for p in f.poly.points() {
                seen.entry(p.clone())
                    .or_insert_with(|| h.height_sq(&self.basis, p));
            }
        }
        seen.into_iter().collect()
    }

    /// Vertices reduced into [0,1)^2, one representative per lattice class.
    pub fn vertices_mod_lattice(&self) -> Vec<(Pt, Rat)> {
        let mut seen: BTreeMap<Pt, Rat> = BTreeMap::new();
        for (p, h) in self.vertices() {
            let (q, _) = reduce_mod_lattice(&p);
            seen.entry(q).or_insert(h);
        }
        seen.into_iter().collect()
    }

    /// Cusps: floor points at height zero.
    pub fn cusps(&self) -> Vec<Pt> {
        self.vertices()
            .into_iter()
            .filter(|(_, h)| h.is_zero())
            .map(|(p, _)| p)
            .collect()
    }

    /// Edge list: (endpoints, tag) per face boundary, deduplicated by segment.
    pub fn edges(&self) -> Vec<((Pt, Pt), EdgeTag)> {
        let mut out: BTreeMap<(Pt, Pt), EdgeTag> = BTreeMap::new();
        for f in &self.faces {
            let n = f.poly.len();
            for i in 0..n {
                let p = f.poly.verts[i].0.clone();
                let q = f.poly.verts[(i + 1) % n].0.clone();
                let tag = f.poly.verts[i].1;
                let key = if p <= q { (p, q) } else { (q, p) };
                out.entry(key).or_insert(tag);
            }
        }
        out.into_iter().map(|(k, t)| (k, t)).collect()
    }

    /// Canonical signature used for the stabilisation witness.
    pub fn signature(&self) -> Vec<String> {
        let mut sig: Vec<String> = Vec::new();
        for f in &self.faces {
            let h = &self.hemispheres[f.carrier];
            let mut pts: Vec<String> = f.poly.points().map(|p| format!("{:?},{:?}", p.a, p.b)).collect();
            pts.sort();
            sig.push(format!(
                "c={:?},{:?} r={:?} [{}]",
                h.center.a,
                h.center.b,
                h.rsq,
                pts.join(";")
            ));
        }
        sig.sort();
        sig
    }
}

/// Reduce a chart point into [0,1)^2; returns the representative and the
/// integer translation subtracted.
pub fn reduce_mod_lattice(p: &Pt) -> (Pt, (BigInt, BigInt)) {
    let fa = p.a.floor_int();
    let fb = p.b.floor_int();
    let q = Pt::new(
        &p.a - &Rat::from_big(fa.clone()),
        &p.b - &Rat::from_big(fb.clone()),
    );
    (q, (fa, fb))
}

/// Enumerate hemispheres with N(mu) <= bound and center inside the margin box
/// around the translation square, unimodular pairs only, deduplicated.
pub fn enumerate_hemispheres(basis: RingBasis, bound: u64) -> Vec<Hemisphere> {
    let mut out: BTreeMap<(Pt, Rat), Hemisphere> = BTreeMap::new();
    let margin = 2i64;
    let lo = Rat::from_int(-margin);
    let hi = Rat::from_int(margin + 1);
    for mu in ring_elements_with_norm_up_to(basis, bound) {
        if mu.is_zero() {
            continue;
        }
        // one representative of {mu, -mu}
        if !first_nonzero_positive(&mu) {
            continue;
        }
        let n = mu.norm();
        for lam in lattice_in_center_box(&mu, &lo, &hi) {
            if !crate::exact::is_unimodular_pair(&lam, &mu) {
                continue;
            }
            let h = Hemisphere::from_pair(mu.clone(), lam);
            if h.center.a < lo
                || h.center.a > hi
                || h.center.b < lo
                || h.center.b > hi
            {
                continue;
            }
            let key = (h.center.clone(), h.rsq.clone());
            out.entry(key).or_insert(h);
        }
        let _ = n;
    }
    out.into_values().collect()
}

fn first_nonzero_positive(e: &RingElem) -> bool {
    if e.x.is_positive() {
        return true;
    }
    if e.x.is_negative() {
        return false;
    }
    e.y.is_positive()
}

/// All ring elements with 0 < N <= bound (both signs).
fn ring_elements_with_norm_up_to(basis: RingBasis, bound: u64) -> Vec<RingElem> {
    let mut out = Vec::new();
    if bound == 0 {
        return out;
    }
    let m = basis.m as i64;
    let bound_i = bound as i64;
    // |y| <= sqrt(4*bound/m) covers both basis cases
    let ymax = int_sqrt(4 * bound_i / m) + 1;
    for y in -ymax..=ymax {
        // x range: solve Q(x, y) <= bound exactly by scanning a safe window
        let xmax = int_sqrt(bound_i) + y.abs() + 1;
        for x in -xmax..=xmax {
            let e = RingElem::new(x, y, basis);
            let n = e.norm();
            if !n.is_zero() && n <= BigInt::from(bound) {
                out.push(e);
            }
        }
    }
    out
}

fn int_sqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut x = n;
    let mut y = (x + 1) / 2;
    while y < x {
        x = y;
        y = (x + n / x) / 2;
    }
    x
}

/// Lattice points lam with lam/mu inside the box [lo,hi]^2 (chart coords).
fn lattice_in_center_box(mu: &RingElem, lo: &Rat, hi: &Rat) -> Vec<RingElem> {
    let basis = mu.basis;
    let corners = [
        (lo.clone(), lo.clone()),
        (lo.clone(), hi.clone()),
        (hi.clone(), lo.clone()),
        (hi.clone(), hi.clone()),
    ];
    // lam = c * mu, linear in c; bound lam coordinates by the corner images
    let mut xs: Vec<Rat> = Vec::new();
    let mut ys: Vec<Rat> = Vec::new();
    for (ca, cb) in &corners {
        let c = QuadElem::new(ca.clone(), cb.clone(), basis);
        let lam = &c * &mu.to_quad();
        xs.push(lam.a.clone());
        ys.push(lam.b.clone());
    }
    let to_i = |r: &Rat| -> i64 { r.floor_int().to_i64().expect("lattice window overflow") };
    let xmin = to_i(xs.iter().min().unwrap());
    let xmax = to_i(xs.iter().max().unwrap()) + 1;
    let ymin = to_i(ys.iter().min().unwrap());
    let ymax = to_i(ys.iter().max().unwrap()) + 1;
    let mut out = Vec::new();
    for y in ymin..=ymax {
        for x in xmin..=xmax {
            let lam = RingElem::new(x, y, basis);
            let c = &lam.to_quad() / &mu.to_quad();
            if &c.a >= lo && &c.a <= hi && &c.b >= lo && &c.b <= hi {
                out.push(lam);
            }
        }
    }
    out
}

/// Minimum of Q(center - p) over the closed unit square.
fn min_qdist_to_square(basis: &RingBasis, c: &Pt) -> Rat {
    let zero = Rat::zero();
    let one = Rat::one();
    let inside = c.a >= zero && c.a <= one && c.b >= zero && c.b <= one;
    if inside {
        return Rat::zero();
    }
    // minimise over the four edges; Q is convex so edge minima suffice
    let mut best: Option<Rat> = None;
    let corners = [
        Pt::new(zero.clone(), zero.clone()),
        Pt::new(one.clone(), zero.clone()),
        Pt::new(one.clone(), one.clone()),
        Pt::new(zero.clone(), one.clone()),
    ];
    for i in 0..4 {
        let p = &corners[i];
        let q = &corners[(i + 1) % 4];
        let v = min_qdist_on_segment(basis, c, p, q);
        best = Some(match best {
            None => v,
            Some(b) => {
                if v < b {
                    v
                } else {
                    b
                }
            }
        });
    }
    best.unwrap()
}

fn min_qdist_on_segment(basis: &RingBasis, c: &Pt, p: &Pt, q: &Pt) -> Rat {
    // f(t) = Q(c - (p + t(q-p))), quadratic convex in t on [0,1]
    let eval = |t: &Rat| -> Rat {
        let x = p.lerp(q, t);
        let da = &c.a - &x.a;
        let db = &c.b - &x.b;
        basis.qform(&da, &db)
    };
    // critical point of the quadratic via three samples
    let f0 = eval(&Rat::zero());
    let f1 = eval(&Rat::one());
    let fh = eval(&Rat::new(1, 2));
    // f(t) = A t^2 + B t + C with C = f0, A = 2 f0 + 2 f1 - 4 fh, B = f1 - f0 - A
    let a2 = &(&(&f0 + &f1) + &(&f0 + &f1)) - &(&(&fh + &fh) + &(&fh + &fh));
    let b = &(&f1 - &f0) - &a2;
    if a2.is_positive() {
        let tstar = &(-&b) / &(&a2 + &a2);
        if tstar.is_positive() && tstar < Rat::one() {
            return eval(&tstar);
        }
    }
    if f0 < f1 {
        f0
    } else {
        f1
    }
}

/// Half-plane {power_h <= power_g} in the chart.
pub fn bisector(basis: &RingBasis, h: &Hemisphere, g: &Hemisphere) -> Line {
    let t = basis.omega_trace();
    let n = basis.omega_norm();
    let da = &g.center.a - &h.center.a;
    let db = &g.center.b - &h.center.b;
    let two = Rat::from_int(2);
    let nx = &(&two * &da) + &(&t * &db);
    let ny = &(&t * &da) + &(&(&two * &n) * &db);
    let qg = basis.qform(&g.center.a, &g.center.b);
    let qh = basis.qform(&h.center.a, &h.center.b);
    let c = &(&qg - &qh) - &(&g.rsq - &h.rsq);
    Line::new(nx, ny, c)
}

fn discs_interact(basis: &RingBasis, h: &Hemisphere, g: &Hemisphere) -> bool {
    let da = &g.center.a - &h.center.a;
    let db = &g.center.b - &h.center.b;
    let q = basis.qform(&da, &db);
    let s = &(&h.rsq + &g.rsq) - &q;
    if s.is_positive() || s.is_zero() {
        return true;
    }
    // q > rsq_h + rsq_g: intersect iff (q - rh - rg)^2 <= 4 rh rg
    let four = Rat::from_int(4);
    &(&s * &s) <= &(&(&four * &h.rsq) * &g.rsq)
}

fn unit_square_poly() -> ConvexPoly<EdgeTag> {
    ConvexPoly::new(vec![
        (Pt::from_ints(0, 0), EdgeTag::Wall(2)),
        (Pt::from_ints(1, 0), EdgeTag::Wall(1)),
        (Pt::from_ints(1, 1), EdgeTag::Wall(3)),
        (Pt::from_ints(0, 1), EdgeTag::Wall(0)),
    ])
}

/// Compute the chart pieces of the power diagram for a fixed hemisphere list.
/// Fails when some piece has a vertex strictly below another hemisphere,
/// which signals insufficient coverage (the caller then raises the bound).
fn compute_pieces(
    basis: &RingBasis,
    hemis: &[Hemisphere],
) -> Result<Vec<Face>, CoverageFailure> {
    let mut faces = Vec::new();
    for (i, h) in hemis.iter().enumerate() {
        if min_qdist_to_square(basis, &h.center) > h.rsq {
            continue; // disc misses the square entirely
        }
        let mut poly = unit_square_poly();
        for (j, g) in hemis.iter().enumerate() {
            if i == j {
                continue;
            }
            if !discs_interact(basis, h, g) {
                continue;
            }
            let l = bisector(basis, h, g);
            poly = poly.clip(&l, EdgeTag::Bis(j));
            if poly.is_empty() {
                break;
            }
        }
        if poly.has_interior() {
            faces.push(Face { carrier: i, poly });
        }
    }
    // coverage audit: every vertex must lie on or above its carrier dome
    for f in &faces {
        let h = &hemis[f.carrier];
        for p in f.poly.points() {
            if h.power(basis, p).is_positive() {
                return Err(CoverageFailure);
            }
        }
    }
    // the pieces must tile the square exactly
    let mut area = Rat::zero();
    for f in &faces {
        area = &area + &f.poly.area2();
    }
    if area != Rat::from_int(2) {
        return Err(CoverageFailure);
    }
    Ok(faces)
}

struct CoverageFailure;

/// Compute the floor, doubling the norm bound until the cell structure is
/// identical for two consecutive bounds (two stabilisation witnesses).
pub fn compute_floor(basis: RingBasis, norm_ceiling: u64) -> Result<FloorComplex, BianchiError> {
    let mut bound: u64 = 1;
    let mut prev: Option<(u64, Vec<Hemisphere>, Vec<Face>, Vec<String>)> = None;
    let mut witness1: Option<u64> = None;
    loop {
        if bound > norm_ceiling {
            return Err(BianchiError::NoStabilisation(norm_ceiling));
        }
        let hemis = enumerate_hemispheres(basis, bound);
        let attempt = compute_pieces(&basis, &hemis);
        match attempt {
            Err(CoverageFailure) => {
                prev = None;
                witness1 = None;
                bound *= 2;
                continue;
            }
            Ok(faces) => {
                let sig = signature_of(&basis, &hemis, &faces);
                if let Some((pb, _, _, psig)) = &prev {
                    if *psig == sig {
                        match witness1 {
                            None => {
                                witness1 = Some(*pb);
                                prev = Some((bound, hemis, faces, sig));
                                bound *= 2;
                                continue;
                            }
                            Some(w1) => {
                                // second witness: stable at bound/2 and bound
                                let (b_final, hemis, faces, _) = prev.take().unwrap();
                                let used = prune_unused(hemis, faces);
                                return Ok(FloorComplex {
                                    basis,
                                    norm_bound: b_final,
                                    witnesses: (w1, b_final),
                                    hemispheres: used.0,
                                    faces: used.1,
                                    pairings: vec![],
                                    wall_pairings: wall_translations(basis),
                                });
                            }
                        }
                    } else {
                        witness1 = None;
                    }
                }
                prev = Some((bound, hemis, faces, sig));
                bound *= 2;
            }
        }
    }
}

fn signature_of(basis: &RingBasis, hemis: &[Hemisphere], faces: &[Face]) -> Vec<String> {
    let _ = basis;
    let mut sig: Vec<String> = Vec::new();
    for f in faces {
        let h = &hemis[f.carrier];
        let mut pts: Vec<String> = f
            .poly
            .points()
            .map(|p| format!("{:?},{:?}", p.a, p.b))
            .collect();
        pts.sort();
        sig.push(format!(
            "c={:?},{:?} r={:?} [{}]",
            h.center.a,
            h.center.b,
            h.rsq,
            pts.join(";")
        ));
    }
    sig.sort();
    sig
}

/// Keep only hemispheres that carry a face or are referenced as a bisector;
/// reindex faces accordingly.
fn prune_unused(hemis: Vec<Hemisphere>, faces: Vec<Face>) -> (Vec<Hemisphere>, Vec<Face>) {
    let mut used: Vec<bool> = vec![false; hemis.len()];
    for f in &faces {
        used[f.carrier] = true;
        for (_, t) in &f.poly.verts {
            if let EdgeTag::Bis(j) = t {
                used[*j] = true;
            }
        }
    }
    let mut remap: Vec<usize> = vec![usize::MAX; hemis.len()];
    let mut kept = Vec::new();
    for (i, h) in hemis.into_iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(h);
        }
    }
    let faces = faces
        .into_iter()
        .map(|mut f| {
            f.carrier = remap[f.carrier];
            for (_, t) in f.poly.verts.iter_mut() {
                if let EdgeTag::Bis(j) = t {
                    *t = EdgeTag::Bis(remap[*j]);
                }
            }
            f
        })
        .collect();
    (kept, faces)
}

fn wall_translations(basis: RingBasis) -> (MoebiusElt, MoebiusElt) {
    (
        MoebiusElt::translation(RingElem::one(basis)),
        MoebiusElt::translation(RingElem::omega(basis)),
    )
}

/// Affine map of the chart induced by an isometry that preserves heights on
/// the given hemisphere (its bottom row is ±(mu, -lambda)).
pub fn chart_image_on_carrier(
    basis: &RingBasis,
    m: &MoebiusElt,
    h: &Hemisphere,
    p: &Pt,
) -> Pt {
    let z = QuadElem::new(p.a.clone(), p.b.clone(), *basis);
    let rsq = h.height_sq(basis, p); // may be negative off the disc; formula stays affine
    let cz_d = &(&m.c.to_quad() * &z) + &m.d.to_quad();
    debug_assert!({
        let delta = &cz_d.norm() + &(&m.c.to_quad().norm() * &rsq);
        delta == Rat::one()
    });
    let az_b = &(&m.a.to_quad() * &z) + &m.b.to_quad();
    let num = &(&az_b * &cz_d.conj()) + &(&m.a.to_quad() * &m.c.to_quad().conj()).scale(&rsq);
    Pt::new(num.a, num.b)
}

/// The affine chart action of a height-preserving isometry on its carrier.
pub fn chart_affine(basis: &RingBasis, m: &MoebiusElt, h: &Hemisphere) -> crate::geom::AffineMap {
    let o = chart_image_on_carrier(basis, m, h, &Pt::from_ints(0, 0));
    let ex = chart_image_on_carrier(basis, m, h, &Pt::from_ints(1, 0));
    let ey = chart_image_on_carrier(basis, m, h, &Pt::from_ints(0, 1));
    crate::geom::AffineMap::from_unit_images(&o, &ex, &ey)
}

fn hull_vertex_set(pts: &[Pt]) -> std::collections::BTreeSet<Pt> {
    let n = pts.len();
    let mut out = std::collections::BTreeSet::new();
    for i in 0..n {
        let prev = &pts[(i + n - 1) % n];
        let cur = &pts[i];
        let next = &pts[(i + 1) % n];
        let cross = &(&(&cur.a - &prev.a) * &(&next.b - &cur.b))
            - &(&(&cur.b - &prev.b) * &(&next.a - &cur.a));
        if !cross.is_zero() {
            out.insert(cur.clone());
        }
    }
    out
}

fn centroid(pts: &[Pt]) -> Pt {
    let mut sa = Rat::zero();
    let mut sb = Rat::zero();
    for p in pts {
        sa = &sa + &p.a;
        sb = &sb + &p.b;
    }
    let n = Rat::from_int(pts.len() as i64);
    Pt::new(&sa / &n, &sb / &n)
}

/// An integer grid line a=k or b=k strictly separating the vertex set, if any.
fn straddling_grid_line(pts: &[Pt]) -> Option<Line> {
    for (coord, pick) in [(0u8, 0), (1u8, 1)] {
        let vals: Vec<&Rat> = pts
            .iter()
            .map(|p| if pick == 0 { &p.a } else { &p.b })
            .collect();
        let mn = vals.iter().min().unwrap();
        let mx = vals.iter().max().unwrap();
        let mut k: BigInt = mn.floor_int() + 1;
        let mx_val = (*mx).clone();
        while Rat::from_big(k.clone()) < mx_val {
            if Rat::from_big(k.clone()) > **mn {
                return Some(if coord == 0 {
                    Line::new(Rat::one(), Rat::zero(), Rat::from_big(k))
                } else {
                    Line::new(Rat::zero(), Rat::one(), Rat::from_big(k))
                });
            }
            k += 1;
        }
    }
    None
}

fn strictly_crosses(l: &Line, pts: &[Pt]) -> bool {
    let mut neg = false;
    let mut pos = false;
    for p in pts {
        let v = l.eval(p);
        if v.is_negative() {
            neg = true;
        } else if v.is_positive() {
            pos = true;
        }
    }
    neg && pos
}

fn translate_line(l: &Line, ta: &BigInt, tb: &BigInt) -> Line {
    // {p : l(p - t) = 0}
    let shift = &(&l.nx * &Rat::from_big(ta.clone())) + &(&l.ny * &Rat::from_big(tb.clone()));
    Line::new(l.nx.clone(), l.ny.clone(), &l.c + &shift)
}

fn split_face_at(faces: &mut Vec<Face>, fi: usize, l: &Line) -> bool {
    let f = faces[fi].clone();
    let lo = f.poly.clip(l, EdgeTag::Cut);
    let hi = f.poly.clip(&l.flip(), EdgeTag::Cut);
    if lo.has_interior() && hi.has_interior() {
        faces[fi] = Face {
            carrier: f.carrier,
            poly: lo,
        };
        faces.push(Face {
            carrier: f.carrier,
            poly: hi,
        });
        true
    } else {
        false
    }
}

fn sort_faces(faces: &mut [Face]) {
    faces.sort_by(|x, y| {
        x.carrier.cmp(&y.carrier).then_with(|| {
            let mx = x.poly.points().min().cloned();
            let my = y.poly.points().min().cloned();
            mx.cmp(&my)
        })
    });
}

/// Eliminate T-junctions: every global vertex lying in the interior of a
/// polygon edge is inserted into that polygon. Wall vertices are also matched
/// across the square via the two translations.
pub fn conform_faces(fc: &mut FloorComplex) {
    use std::collections::BTreeSet;
    let mut verts: BTreeSet<Pt> = BTreeSet::new();
    for f in &fc.faces {
        for p in f.poly.points() {
            verts.insert(p.clone());
        }
    }
    let one = Rat::one();
    let zero = Rat::zero();
    let mut extra: Vec<Pt> = Vec::new();
    for v in &verts {
        if v.a == zero {
            extra.push(Pt::new(one.clone(), v.b.clone()));
        }
        if v.a == one {
            extra.push(Pt::new(zero.clone(), v.b.clone()));
        }
        if v.b == zero {
            extra.push(Pt::new(v.a.clone(), one.clone()));
        }
        if v.b == one {
            extra.push(Pt::new(v.a.clone(), zero.clone()));
        }
    }
    verts.extend(extra);
    for f in fc.faces.iter_mut() {
        loop {
            let mut inserted = false;
            for i in 0..f.poly.len() {
                let n = f.poly.len();
                let a = f.poly.verts[i].0.clone();
                let b = f.poly.verts[(i + 1) % n].0.clone();
                let line = Line::through(&a, &b);
                let mut best: Option<(Rat, Pt)> = None;
                for v in verts.range(..) {
                    if v == &a || v == &b {
                        continue;
                    }
                    if line.contains(v) && crate::geom::between(&a, &b, v) {
                        let t = crate::geom::segment_param(&a, &b, v);
                        match &best {
                            Some((bt, _)) if *bt <= t => {}
                            _ => best = Some((t, v.clone())),
                        }
                    }
                }
                if let Some((_, v)) = best {
                    f.poly.insert_on_edge(i, v);
                    inserted = true;
                    break;
                }
            }
            if !inserted {
                break;
            }
        }
    }
}

/// Compute the side pairing of every face, splitting faces where an image
/// does not land exactly on a single face (exactness repair). Afterwards
/// every face F has a unique mate F' and an element with elt(F) = F'.
pub fn side_pairings(fc: &mut FloorComplex) -> Result<(), BianchiError> {
    let basis = fc.basis;
    let mut completions: BTreeMap<usize, MoebiusElt> = BTreeMap::new();
    for (i, h) in fc.hemispheres.iter().enumerate() {
        completions.insert(i, completion(&h.mu, &h.lambda)?);
    }
    let lookup: BTreeMap<(Pt, Rat), usize> = fc
        .hemispheres
        .iter()
        .enumerate()
        .map(|(i, h)| ((h.center.clone(), h.rsq.clone()), i))
        .collect();

    let mut rounds = 0usize;
    'outer: loop {
        rounds += 1;
        if rounds > 10_000 {
            return Err(BianchiError::structure(
                "swan",
                "side pairing exactness loop did not converge",
            ));
        }
        sort_faces(&mut fc.faces);
        for fi in 0..fc.faces.len() {
            let face = fc.faces[fi].clone();
            let h = fc.hemispheres[face.carrier].clone();
            let m0 = completions[&face.carrier].clone();
            let amap = chart_affine(&basis, &m0, &h);
            let img: Vec<Pt> = face.poly.points().map(|p| amap.apply(p)).collect();
            if let Some(grid) = straddling_grid_line(&img) {
                let pre = amap.pullback_line(&grid);
                if split_face_at(&mut fc.faces, fi, &pre) {
                    continue 'outer;
                }
                return Err(BianchiError::structure(
                    "swan",
                    "grid line reported but split degenerate",
                ));
            }
            let c = centroid(&img);
            let ta = c.a.floor_int();
            let tb = c.b.floor_int();
            let img_red: Vec<Pt> = img
                .iter()
                .map(|p| {
                    Pt::new(
                        &p.a - &Rat::from_big(ta.clone()),
                        &p.b - &Rat::from_big(tb.clone()),
                    )
                })
                .collect();
            // image hemisphere: same radius, center alpha/mu, then translated
            let target_center_full = {
                let q = &m0.a.to_quad() / &m0.c.to_quad();
                Pt::new(q.a, q.b)
            };
            let target_center = Pt::new(
                &target_center_full.a - &Rat::from_big(ta.clone()),
                &target_center_full.b - &Rat::from_big(tb.clone()),
            );
            let target = match lookup.get(&(target_center.clone(), h.rsq.clone())) {
                Some(t) => *t,
                None => {
                    return Err(BianchiError::structure(
                        "swan",
                        "image hemisphere missing from the enumerated set",
                    ));
                }
            };
            let want = hull_vertex_set(&img_red);
            let mut matched = false;
            for g in fc.faces.iter() {
                if g.carrier != target {
                    continue;
                }
                let pts: Vec<Pt> = g.poly.points().cloned().collect();
                if hull_vertex_set(&pts) == want {
                    matched = true;
                    break;
                }
            }
            if matched {
                continue;
            }
            // mismatch: split overlapping target faces along image edges,
            // or split the source along pullbacks of target edges
            let img_hull: Vec<Pt> = {
                let mut v: Vec<Pt> = want.iter().cloned().collect();
                sort_ccw(&mut v);
                v
            };
            for gi in 0..fc.faces.len() {
                if fc.faces[gi].carrier != target {
                    continue;
                }
                let gpts: Vec<Pt> = fc.faces[gi].poly.points().cloned().collect();
                if !polys_overlap(&basis, &img_hull, &gpts) {
                    continue;
                }
                for k in 0..img_hull.len() {
                    let l = Line::through(&img_hull[k], &img_hull[(k + 1) % img_hull.len()]);
                    if strictly_crosses(&l, &gpts) && split_face_at(&mut fc.faces, gi, &l) {
                        continue 'outer;
                    }
                }
                for k in 0..gpts.len() {
                    let l = Line::through(&gpts[k], &gpts[(k + 1) % gpts.len()]);
                    if strictly_crosses(&l, &img_hull) {
                        let lf = translate_line(&l, &ta, &tb);
                        let pre = amap.pullback_line(&lf);
                        if split_face_at(&mut fc.faces, fi, &pre) {
                            continue 'outer;
                        }
                    }
                }
            }
            return Err(BianchiError::structure(
                "swan",
                format!("no pairing found for face {fi} and no repair split applies"),
            ));
        }
        break;
    }

    conform_faces(fc);
    sort_faces(&mut fc.faces);

    // final pass: record the pairings
    let mut pairings = Vec::new();
    for fi in 0..fc.faces.len() {
        let face = &fc.faces[fi];
        let h = &fc.hemispheres[face.carrier];
        let m0 = &completions[&face.carrier];
        let amap = chart_affine(&basis, m0, h);
        let img: Vec<Pt> = face.poly.points().map(|p| amap.apply(p)).collect();
        let c = centroid(&img);
        let ta = c.a.floor_int();
        let tb = c.b.floor_int();
        let img_red: Vec<Pt> = img
            .iter()
            .map(|p| {
                Pt::new(
                    &p.a - &Rat::from_big(ta.clone()),
                    &p.b - &Rat::from_big(tb.clone()),
                )
            })
            .collect();
        let want = hull_vertex_set(&img_red);
        let mut mate: Option<usize> = None;
        for (gi, g) in fc.faces.iter().enumerate() {
            let pts: Vec<Pt> = g.poly.points().cloned().collect();
            if hull_vertex_set(&pts) == want {
                mate = Some(gi);
                break;
            }
        }
        let mate = mate.ok_or_else(|| {
            BianchiError::structure("swan", format!("face {fi} lost its mate after conformity"))
        })?;
        let tr = MoebiusElt::translation(RingElem::from_big(-&ta, -&tb, basis));
        let elt = tr.mul(m0);
        if elt.is_identity() {
            return Err(BianchiError::structure(
                "swan",
                "identity appeared as a side pairing",
            ));
        }
        pairings.push(Pairing {
            face: fi,
            mate,
            elt,
        });
    }
    // mutuality audit
    for p in &pairings {
        let q = &pairings[p.mate];
        if q.mate != p.face {
            return Err(BianchiError::structure(
                "swan",
                format!("pairing not mutual: {} -> {} -> {}", p.face, p.mate, q.mate),
            ));
        }
    }
    fc.pairings = pairings;
    Ok(())
}

fn sort_ccw(pts: &mut Vec<Pt>) {
    if pts.len() < 3 {
        return;
    }
    let c = centroid(pts);
    // convex position: sort by angle around the centroid using cross products
    let up: Vec<Pt> = pts.to_vec();
    let mut with_key: Vec<Pt> = up;
    with_key.sort_by(|p, q| {
        let hp = half(&c, p);
        let hq = half(&c, q);
        hp.cmp(&hq).then_with(|| {
            let cross = &(&(&p.a - &c.a) * &(&q.b - &c.b)) - &(&(&p.b - &c.b) * &(&q.a - &c.a));
            if cross.is_positive() {
                std::cmp::Ordering::Less
            } else if cross.is_negative() {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    });
    *pts = with_key;
}

fn half(c: &Pt, p: &Pt) -> u8 {
    let da = &p.a - &c.a;
    let db = &p.b - &c.b;
    if db.is_positive() || (db.is_zero() && da.is_positive()) {
        0
    } else {
        1
    }
}

fn polys_overlap(basis: &RingBasis, a: &[Pt], b: &[Pt]) -> bool {
    let _ = basis;
    // clip b by a's half-planes; overlap iff a 2-dimensional region remains
    let mut poly: ConvexPoly<u8> = ConvexPoly::new(b.iter().map(|p| (p.clone(), 0u8)).collect());
    if !poly.has_interior() {
        return false;
    }
    let n = a.len();
    for i in 0..n {
        let l = Line::through(&a[i], &a[(i + 1) % n]);
        // interior of a CCW polygon: eval <= 0 for edge line oriented p->q?
        // Line::through gives normal (db, -da); for CCW interior is eval <= 0.
        poly = poly.clip(&l, 1u8);
        if !poly.has_interior() {
            return false;
        }
    }
    true
}

/// Complete the bottom row (mu, -lambda) to an SL2(O) matrix. Deterministic
/// small search over the top row; must succeed for unimodular pairs.
pub fn completion(mu: &RingElem, lambda: &RingElem) -> Result<MoebiusElt, BianchiError> {
    let basis = mu.basis;
    for k in 0i64..=64 {
        for x in -k..=k {
            for y in -k..=k {
                if x.abs() != k && y.abs() != k {
                    continue; // only the new shell
                }
                let alpha = RingElem::new(x, y, basis);
                // det = alpha*(-lambda) - beta*mu = 1  =>  beta = (-alpha*lambda - 1)/mu
                let num = alpha.mul(lambda).neg().sub(&RingElem::one(basis));
                if let Some(beta) = num.divide_exact(mu) {
                    return MoebiusElt::new(alpha, beta, mu.clone(), lambda.neg());
                }
            }
        }
    }
    Err(BianchiError::structure(
        "swan",
        format!("no completion found for ({:?}, {:?})", mu, lambda),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ring_basis;

    #[test]
    fn enumerate_m2_bound1() {
        let b = ring_basis(2).unwrap();
        let hs = enumerate_hemispheres(b, 1);
        // unit hemisphere at 0 and at omega
        assert!(hs
            .iter()
            .any(|h| h.center == Pt::from_ints(0, 0) && h.rsq == Rat::one()));
        assert!(hs
            .iter()
            .any(|h| h.center == Pt::from_ints(0, 1) && h.rsq == Rat::one()));
        assert!(enumerate_hemispheres(b, 0).is_empty());
    }

    #[test]
    fn m2_floor_cells() {
        let b = ring_basis(2).unwrap();
        let fc = compute_floor(b, 10_000).unwrap();
        // four quadrant pieces of unit hemispheres
        assert_eq!(fc.faces.len(), 4);
        for f in &fc.faces {
            assert_eq!(fc.hemispheres[f.carrier].rsq, Rat::one());
            assert_eq!(f.poly.area2(), Rat::new(1, 2));
        }
        let verts = fc.vertices_mod_lattice();
        let find = |a: Rat, b_: Rat| -> Option<Rat> {
            verts
                .iter()
                .find(|(p, _)| p.a == a && p.b == b_)
                .map(|(_, h)| h.clone())
        };
        assert_eq!(find(Rat::zero(), Rat::zero()), Some(Rat::one()));
        assert_eq!(find(Rat::zero(), Rat::new(1, 2)), Some(Rat::new(1, 2)));
        assert_eq!(find(Rat::new(1, 2), Rat::zero()), Some(Rat::new(3, 4)));
        assert_eq!(
            find(Rat::new(1, 2), Rat::new(1, 2)),
            Some(Rat::new(1, 4))
        );
        assert!(fc.cusps().is_empty());
    }

    #[test]
    fn m11_floor_vertices() {
        let b = ring_basis(11).unwrap();
        let fc = compute_floor(b, 10_000).unwrap();
        let verts = fc.vertices_mod_lattice();
        let has = |a: Rat, b_: Rat, h: Rat| {
            verts
                .iter()
                .any(|(p, hh)| p.a == a && p.b == b_ && *hh == h)
        };
        // j, and 3/11 + 3/11 w at height sqrt(2/11)
        assert!(has(Rat::zero(), Rat::zero(), Rat::one()));
        assert!(has(Rat::new(3, 11), Rat::new(3, 11), Rat::new(2, 11)));
        assert!(has(Rat::new(1, 2), Rat::zero(), Rat::new(3, 4)));
        assert!(has(Rat::new(8, 11), Rat::new(5, 11), Rat::new(2, 11)));
    }

    #[test]
    fn completion_exists() {
        let b = ring_basis(2).unwrap();
        let mu = RingElem::new(0, 1, b); // omega, norm 2
        let lam = RingElem::new(1, 0, b);
        let m = completion(&mu, &lam).unwrap();
        // bottom row is ±(mu, -lambda)
        assert!(
            (m.c == mu && m.d == lam.neg()) || (m.c == mu.neg() && m.d == lam),
            "unexpected bottom row {:?} {:?}",
            m.c,
            m.d
        );
    }
}
