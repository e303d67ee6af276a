//! Exact planar geometry in the omega-coordinate chart.
//!
//! Points are (a, b) in Q^2, standing for the horizontal coordinate
//! a + b*omega of upper half-space. Lines have rational coefficients and
//! convex polygons are clipped with exact predicates, so the cell structure
//! of the floor is combinatorially unambiguous.

use crate::exact::Rat;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Pt {
    pub a: Rat,
    pub b: Rat,
}

impl Pt {
    pub fn new(a: Rat, b: Rat) -> Self {
        Pt { a, b }
    }
    pub fn from_ints(a: i64, b: i64) -> Self {
        Pt::new(Rat::from_int(a), Rat::from_int(b))
    }
    pub fn sub(&self, o: &Pt) -> Pt {
        Pt::new(&self.a - &o.a, &self.b - &o.b)
    }
    pub fn add(&self, o: &Pt) -> Pt {
        Pt::new(&self.a + &o.a, &self.b + &o.b)
    }
    pub fn midpoint(&self, o: &Pt) -> Pt {
        let half = Rat::new(1, 2);
        Pt::new(&(&self.a + &o.a) * &half, &(&self.b + &o.b) * &half)
    }
    /// Affine combination self + t*(o - self).
    pub fn lerp(&self, o: &Pt, t: &Rat) -> Pt {
        Pt::new(
            &self.a + &(t * &(&o.a - &self.a)),
            &self.b + &(t * &(&o.b - &self.b)),
        )
    }
}

/// Oriented line {p : nx*a + ny*b = c}; the "inside" of the associated
/// half-plane is nx*a + ny*b <= c.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Line {
    pub nx: Rat,
    pub ny: Rat,
    pub c: Rat,
}

impl Line {
    pub fn new(nx: Rat, ny: Rat, c: Rat) -> Self {
        debug_assert!(!(nx.is_zero() && ny.is_zero()));
        Line { nx, ny, c }
    }
    pub fn eval(&self, p: &Pt) -> Rat {
        &(&(&self.nx * &p.a) + &(&self.ny * &p.b)) - &self.c
    }
    /// Ordering::Less means strictly inside the half-plane.
    pub fn side(&self, p: &Pt) -> Ordering {
        self.eval(p).0.cmp(&num_rational::BigRational::default())
    }
    pub fn contains(&self, p: &Pt) -> bool {
        self.eval(p).is_zero()
    }
    pub fn flip(&self) -> Line {
        Line {
            nx: -&self.nx,
            ny: -&self.ny,
            c: -&self.c,
        }
    }
    /// Line through two distinct points.
    pub fn through(p: &Pt, q: &Pt) -> Line {
        let d = q.sub(p);
        // normal (db, -da)
        let nx = d.b.clone();
        let ny = -&d.a;
        let c = &(&nx * &p.a) + &(&ny * &p.b);
        Line { nx, ny, c }
    }
    /// Intersection point of two non-parallel lines.
    pub fn intersect(&self, o: &Line) -> Option<Pt> {
        let det = &(&self.nx * &o.ny) - &(&self.ny * &o.nx);
        if det.is_zero() {
            return None;
        }
        let a = &(&(&self.c * &o.ny) - &(&self.ny * &o.c)) / &det;
        let b = &(&(&self.nx * &o.c) - &(&self.c * &o.nx)) / &det;
        Some(Pt::new(a, b))
    }
    /// Canonical form with primitive integer coefficients, positive leading
    /// coefficient. Two lines are equal as sets iff canonical forms agree.
    pub fn canonical(&self) -> (num_bigint::BigInt, num_bigint::BigInt, num_bigint::BigInt) {
        use num_bigint::BigInt;
        use num_integer::Integer;
        use num_traits::{Signed, Zero};
        // scale by lcm of denominators
        let d1 = self.nx.denom().clone();
        let d2 = self.ny.denom().clone();
        let d3 = self.c.denom().clone();
        let l = d1.lcm(&d2).lcm(&d3);
        let mut nx = self.nx.numer() * (&l / self.nx.denom());
        let mut ny = self.ny.numer() * (&l / self.ny.denom());
        let mut c = self.c.numer() * (&l / self.c.denom());
        let g = nx.gcd(&ny).gcd(&c);
        if !g.is_zero() {
            nx = &nx / &g;
            ny = &ny / &g;
            c = &c / &g;
        }
        let flip = if nx.is_zero() {
            ny.is_negative()
        } else {
            nx.is_negative()
        };
        if flip {
            nx = -nx;
            ny = -ny;
            c = -c as BigInt;
        }
        (nx, ny, c)
    }
}

/// Convex polygon with tagged edges. Vertex i carries the tag of the edge
/// from vertex i to vertex i+1 (cyclically). Orientation is counter-clockwise
/// in (a, b).
#[derive(Clone, Debug)]
pub struct ConvexPoly<T: Clone> {
    pub verts: Vec<(Pt, T)>,
}

impl<T: Clone + PartialEq> ConvexPoly<T> {
    pub fn new(verts: Vec<(Pt, T)>) -> Self {
        ConvexPoly { verts }
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }
    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }
    pub fn points(&self) -> impl Iterator<Item = &Pt> {
        self.verts.iter().map(|(p, _)| p)
    }

    /// Twice the signed area; positive for counter-clockwise.
    pub fn area2(&self) -> Rat {
        let mut s = Rat::zero();
        let n = self.verts.len();
        for i in 0..n {
            let p = &self.verts[i].0;
            let q = &self.verts[(i + 1) % n].0;
            s = &s + &(&(&p.a * &q.b) - &(&q.a * &p.b));
        }
        s
    }

    pub fn has_interior(&self) -> bool {
        self.verts.len() >= 3 && self.area2().is_positive()
    }

    /// Clip by the half-plane {l <= 0}; `cut` tags the new boundary edge.
    pub fn clip(&self, l: &Line, cut: T) -> ConvexPoly<T> {
        let n = self.verts.len();
        if n == 0 {
            return ConvexPoly::new(vec![]);
        }
        let sides: Vec<Ordering> = self.points().map(|p| l.side(p)).collect();
        if sides.iter().all(|s| *s != Ordering::Greater) {
            return self.clone(); // fully inside
        }
        let mut out: Vec<(Pt, T)> = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let (p, tag) = &self.verts[i];
            let (q, _) = &self.verts[j];
            let sp = sides[i];
            let sq = sides[j];
            match (sp, sq) {
                (Ordering::Greater, Ordering::Greater) => {}
                (Ordering::Greater, _) => {
                    if sq == Ordering::Less {
                        // entering: crossing point, boundary continues on the old edge
                        let edge = Line::through(p, q);
                        if let Some(x) = l.intersect(&edge) {
                            out.push((x, tag.clone()));
                        }
                    }
                    // sq == Equal: q emitted on its own turn
                }
                (_, Ordering::Greater) => {
                    // leaving: keep p; boundary then runs along the cut
                    if sp == Ordering::Less {
                        out.push((p.clone(), tag.clone()));
                        let edge = Line::through(p, q);
                        if let Some(x) = l.intersect(&edge) {
                            out.push((x, cut.clone()));
                        }
                    } else {
                        // p exactly on the cut line
                        out.push((p.clone(), cut.clone()));
                    }
                }
                _ => {
                    out.push((p.clone(), tag.clone()));
                }
            }
        }
        let mut poly = ConvexPoly::new(out);
        poly.dedup();
        if !poly.has_interior() {
            return ConvexPoly::new(vec![]);
        }
        poly
    }

    /// Remove zero-length edges.
    pub fn dedup(&mut self) {
        let mut cleaned: Vec<(Pt, T)> = Vec::new();
        for (p, t) in self.verts.drain(..) {
            if let Some((lp, _)) = cleaned.last() {
                if *lp == p {
                    continue;
                }
            }
            cleaned.push((p, t));
        }
        while cleaned.len() >= 2 && cleaned.first().unwrap().0 == cleaned.last().unwrap().0 {
            cleaned.pop();
        }
        self.verts = cleaned;
    }

    /// True when p lies inside or on the boundary.
    pub fn contains(&self, p: &Pt) -> bool {
        let n = self.verts.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = &self.verts[i].0;
            let b = &self.verts[(i + 1) % n].0;
            let cross = &(&(&b.a - &a.a) * &(&p.b - &a.b)) - &(&(&b.b - &a.b) * &(&p.a - &a.a));
            if cross.is_negative() {
                return false;
            }
        }
        true
    }

    pub fn contains_strict(&self, p: &Pt) -> bool {
        let n = self.verts.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = &self.verts[i].0;
            let b = &self.verts[(i + 1) % n].0;
            let cross = &(&(&b.a - &a.a) * &(&p.b - &a.b)) - &(&(&b.b - &a.b) * &(&p.a - &a.a));
            if !cross.is_positive() {
                return false;
            }
        }
        true
    }

    /// Insert a point on the open edge starting at index i (no-op when p is
    /// an endpoint); leaves both sub-edges with the original tag.
    pub fn insert_on_edge(&mut self, i: usize, p: Pt) {
        let n = self.verts.len();
        let (a, t) = self.verts[i].clone();
        let b = self.verts[(i + 1) % n].0.clone();
        if p == a || p == b {
            return;
        }
        self.verts.insert(i + 1, (p, t));
    }

    /// True when the open segment (a,b) of edge i contains p.
    pub fn edge_contains_interior(&self, i: usize, p: &Pt) -> bool {
        let n = self.verts.len();
        let a = &self.verts[i].0;
        let b = &self.verts[(i + 1) % n].0;
        if p == a || p == b {
            return false;
        }
        let l = Line::through(a, b);
        if !l.contains(p) {
            return false;
        }
        between(a, b, p)
    }
}

/// Affine map p -> M p + t of the chart plane.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub m: [[Rat; 2]; 2],
    pub t: [Rat; 2],
}

impl AffineMap {
    /// Recover the map from the images of (0,0), (1,0), (0,1).
    pub fn from_unit_images(o: &Pt, ex: &Pt, ey: &Pt) -> Self {
        AffineMap {
            m: [
                [&ex.a - &o.a, &ey.a - &o.a],
                [&ex.b - &o.b, &ey.b - &o.b],
            ],
            t: [o.a.clone(), o.b.clone()],
        }
    }

    pub fn apply(&self, p: &Pt) -> Pt {
        Pt::new(
            &(&(&self.m[0][0] * &p.a) + &(&self.m[0][1] * &p.b)) + &self.t[0],
            &(&(&self.m[1][0] * &p.a) + &(&self.m[1][1] * &p.b)) + &self.t[1],
        )
    }

    pub fn det(&self) -> Rat {
        &(&self.m[0][0] * &self.m[1][1]) - &(&self.m[0][1] * &self.m[1][0])
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        let m = [
            [&self.m[1][1] / &d, -&(&self.m[0][1] / &d)],
            [-&(&self.m[1][0] / &d), &self.m[0][0] / &d],
        ];
        let t = [
            -&(&(&m[0][0] * &self.t[0]) + &(&m[0][1] * &self.t[1])),
            -&(&(&m[1][0] * &self.t[0]) + &(&m[1][1] * &self.t[1])),
        ];
        Some(AffineMap { m, t })
    }

    /// Pullback: the line {q : l(q) = 0} becomes {p : l(self(p)) = 0}.
    pub fn pullback_line(&self, l: &Line) -> Line {
        let nx = &(&l.nx * &self.m[0][0]) + &(&l.ny * &self.m[1][0]);
        let ny = &(&l.nx * &self.m[0][1]) + &(&l.ny * &self.m[1][1]);
        let c = &l.c - &(&(&l.nx * &self.t[0]) + &(&l.ny * &self.t[1]));
        Line::new(nx, ny, c)
    }
}

/// p strictly between a and b on their common line (assumes collinear).
pub fn between(a: &Pt, b: &Pt, p: &Pt) -> bool {
    let d = b.sub(a);
    // project on the dominant axis
    let (lo, hi, x) = if !d.a.is_zero() {
        (&a.a, &b.a, &p.a)
    } else {
        (&a.b, &b.b, &p.b)
    };
    if lo < hi {
        lo < x && x < hi
    } else {
        hi < x && x < lo
    }
}

/// Parameter t with p = a + t*(b - a), for p on line(a, b).
pub fn segment_param(a: &Pt, b: &Pt, p: &Pt) -> Rat {
    let d = b.sub(a);
    if !d.a.is_zero() {
        &(&p.a - &a.a) / &d.a
    } else {
        &(&p.b - &a.b) / &d.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexPoly<u32> {
        ConvexPoly::new(vec![
            (Pt::from_ints(0, 0), 0),
            (Pt::from_ints(2, 0), 1),
            (Pt::from_ints(2, 2), 2),
            (Pt::from_ints(0, 2), 3),
        ])
    }

    #[test]
    fn clip_half() {
        // a <= 1
        let l = Line::new(Rat::one(), Rat::zero(), Rat::one());
        let c = square().clip(&l, 9);
        assert_eq!(c.len(), 4);
        assert_eq!(c.area2(), Rat::from_int(4));
        // the new edge is tagged 9
        assert!(c.verts.iter().any(|(_, t)| *t == 9));
    }

    #[test]
    fn clip_away() {
        let l = Line::new(Rat::one(), Rat::zero(), Rat::from_int(-1));
        let c = square().clip(&l, 9);
        assert!(c.is_empty());
    }

    #[test]
    fn clip_through_vertex() {
        // a + b <= 2 passes through (2,0) and (0,2)
        let l = Line::new(Rat::one(), Rat::one(), Rat::from_int(2));
        let c = square().clip(&l, 9);
        assert_eq!(c.area2(), Rat::from_int(4)); // triangle area 2 -> area2 4
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn line_intersection_exact() {
        let l1 = Line::through(&Pt::from_ints(0, 0), &Pt::from_ints(2, 2));
        let l2 = Line::through(&Pt::from_ints(0, 2), &Pt::from_ints(2, 0));
        let p = l1.intersect(&l2).unwrap();
        assert_eq!(p, Pt::from_ints(1, 1));
        assert!(l1.intersect(&l1).is_none());
    }

    #[test]
    fn containment() {
        let s = square();
        assert!(s.contains(&Pt::from_ints(1, 1)));
        assert!(s.contains(&Pt::from_ints(0, 0)));
        assert!(!s.contains_strict(&Pt::from_ints(0, 0)));
        assert!(!s.contains(&Pt::from_ints(3, 1)));
    }
}
