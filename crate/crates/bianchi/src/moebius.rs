//! Elements of PSL2(O_{-m}), their exact action on upper half-space, torsion
//! detection, and the classification of finite subgroups.
//!
//! Matrices are stored as canonical representatives of {M, -M}: the first
//! nonzero basis coordinate of (a, b, c, d) is made positive, so equality and
//! hashing see projective classes.

use crate::exact::{QuadElem, Rat, RingBasis, RingElem, UhsPoint};
use crate::BianchiError;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MoebiusElt {
    pub a: RingElem,
    pub b: RingElem,
    pub c: RingElem,
    pub d: RingElem,
}

impl fmt::Debug for MoebiusElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:?} {:?}; {:?} {:?}]",
            self.a, self.b, self.c, self.d
        )
    }
}

/// Order of a group element, bounded by 3 for torsion in these groups.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ElementOrder {
    One,
    Two,
    Three,
    Infinite,
}

/// Isomorphism types of finite subgroups of a Bianchi group with units {±1}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum FiniteGroupType {
    C1,
    C2,
    C3,
    D2,
    D3,
    A4,
}

impl FiniteGroupType {
    pub fn order(self) -> usize {
        match self {
            FiniteGroupType::C1 => 1,
            FiniteGroupType::C2 => 2,
            FiniteGroupType::C3 => 3,
            FiniteGroupType::D2 => 4,
            FiniteGroupType::D3 => 6,
            FiniteGroupType::A4 => 12,
        }
    }
    pub fn has_order_2(self) -> bool {
        !matches!(self, FiniteGroupType::C1 | FiniteGroupType::C3)
    }
    pub fn has_order_3(self) -> bool {
        matches!(
            self,
            FiniteGroupType::C3 | FiniteGroupType::D3 | FiniteGroupType::A4
        )
    }
    pub fn has_order(self, ell: u32) -> bool {
        match ell {
            2 => self.has_order_2(),
            3 => self.has_order_3(),
            _ => false,
        }
    }
}

impl fmt::Display for FiniteGroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FiniteGroupType::C1 => "C1",
            FiniteGroupType::C2 => "Z/2",
            FiniteGroupType::C3 => "Z/3",
            FiniteGroupType::D2 => "D2",
            FiniteGroupType::D3 => "D3",
            FiniteGroupType::A4 => "A4",
        };
        f.write_str(s)
    }
}

/// A finite subgroup given by its full element set and type tag.
#[derive(Clone, Debug)]
pub struct FiniteSubgroup {
    pub elements: Vec<MoebiusElt>,
    pub group_type: FiniteGroupType,
}

impl MoebiusElt {
    /// Build from entries, normalising the projective sign. Determinant must
    /// be 1.
    pub fn new(
        a: RingElem,
        b: RingElem,
        c: RingElem,
        d: RingElem,
    ) -> Result<Self, BianchiError> {
        let det = a.mul(&d).sub(&b.mul(&c));
        if !det.is_one() {
            return Err(BianchiError::Structure {
                module: "moebius".into(),
                detail: format!("determinant {:?} != 1", det),
            });
        }
        let mut m = MoebiusElt { a, b, c, d };
        m.normalise_sign();
        Ok(m)
    }

    pub fn from_ints(basis: RingBasis, rows: [[(i64, i64); 2]; 2]) -> Result<Self, BianchiError> {
        MoebiusElt::new(
            RingElem::new(rows[0][0].0, rows[0][0].1, basis),
            RingElem::new(rows[0][1].0, rows[0][1].1, basis),
            RingElem::new(rows[1][0].0, rows[1][0].1, basis),
            RingElem::new(rows[1][1].0, rows[1][1].1, basis),
        )
    }

    pub fn identity(basis: RingBasis) -> Self {
        MoebiusElt::new(
            RingElem::one(basis),
            RingElem::zero(basis),
            RingElem::zero(basis),
            RingElem::one(basis),
        )
        .unwrap()
    }

    /// Translation z -> z + t.
    pub fn translation(t: RingElem) -> Self {
        let basis = t.basis;
        MoebiusElt::new(
            RingElem::one(basis),
            t,
            RingElem::zero(basis),
            RingElem::one(basis),
        )
        .unwrap()
    }

    pub fn basis(&self) -> RingBasis {
        self.a.basis
    }

    fn normalise_sign(&mut self) {
        let mut flip = false;
        {
            let coords = [
                &self.a.x, &self.a.y, &self.b.x, &self.b.y, &self.c.x, &self.c.y, &self.d.x,
                &self.d.y,
            ];
            for v in coords {
                if v.is_positive() {
                    break;
                }
                if v.is_negative() {
                    flip = true;
                    break;
                }
            }
        }
        if flip {
            self.a = self.a.neg();
            self.b = self.b.neg();
            self.c = self.c.neg();
            self.d = self.d.neg();
        }
    }

    pub fn is_identity(&self) -> bool {
        self.b.is_zero() && self.c.is_zero() && (self.a.is_one() || self.a.neg().is_one())
    }

    pub fn mul(&self, rhs: &MoebiusElt) -> MoebiusElt {
        let a = self.a.mul(&rhs.a).add(&self.b.mul(&rhs.c));
        let b = self.a.mul(&rhs.b).add(&self.b.mul(&rhs.d));
        let c = self.c.mul(&rhs.a).add(&self.d.mul(&rhs.c));
        let d = self.c.mul(&rhs.b).add(&self.d.mul(&rhs.d));
        MoebiusElt::new(a, b, c, d).expect("product of unimodular matrices")
    }

    pub fn inv(&self) -> MoebiusElt {
        MoebiusElt::new(
            self.d.clone(),
            self.b.neg(),
            self.c.neg(),
            self.a.clone(),
        )
        .expect("inverse of unimodular matrix")
    }

    pub fn conjugate_by(&self, g: &MoebiusElt) -> MoebiusElt {
        g.mul(self).mul(&g.inv())
    }

    /// Trace up to sign (a projective invariant only up to ±).
    pub fn trace(&self) -> RingElem {
        self.a.add(&self.d)
    }

    /// The height multiplier delta = |c z + d|^2 + |c|^2 rsq at a point.
    pub fn delta(&self, z: &QuadElem, rsq: &Rat) -> Rat {
        let cz_d = &(&self.c.to_quad() * z) + &self.d.to_quad();
        &cz_d.norm() + &(&self.c.to_quad().norm() * rsq)
    }

    /// Exact isometric action on upper half-space.
    ///
    /// Height transforms as r' = r / delta; boundary points (rsq = 0) follow
    /// the fractional linear action and must not map to infinity here.
    pub fn apply(&self, p: &UhsPoint) -> Result<UhsPoint, BianchiError> {
        let z = &p.z;
        let rsq = &p.rsq;
        let delta = self.delta(z, rsq);
        if delta.is_zero() {
            return Err(BianchiError::structure(
                "moebius",
                "boundary point maps to infinity",
            ));
        }
        let az_b = &(&self.a.to_quad() * z) + &self.b.to_quad();
        let cz_d = &(&self.c.to_quad() * z) + &self.d.to_quad();
        let num = &(&az_b * &cz_d.conj())
            + &self.a.to_quad().mul_rat_conj(&self.c.to_quad(), rsq);
        let zi = num.scale(&delta.recip());
        let rsqi = &(rsq / &delta) / &delta;
        UhsPoint::new(zi, rsqi)
    }

    /// Fractional linear action on the boundary P^1(Q(sqrt(-m))).
    pub fn apply_boundary(&self, p: &BoundaryPoint) -> BoundaryPoint {
        match p {
            BoundaryPoint::Infinity => {
                if self.c.is_zero() {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(&self.a.to_quad() / &self.c.to_quad())
                }
            }
            BoundaryPoint::Finite(z) => {
                let den = &(&self.c.to_quad() * z) + &self.d.to_quad();
                if den.is_zero() {
                    BoundaryPoint::Infinity
                } else {
                    let num = &(&self.a.to_quad() * z) + &self.b.to_quad();
                    BoundaryPoint::Finite(&num / &den)
                }
            }
        }
    }

    /// Order classification via the trace: ±Id -> 1, tr = 0 -> 2,
    /// tr = ±1 -> 3, anything else has infinite order.
    pub fn element_order(&self) -> ElementOrder {
        if self.is_identity() {
            return ElementOrder::One;
        }
        let t = self.trace();
        if t.is_zero() {
            ElementOrder::Two
        } else if t.y.is_zero() && t.x.abs() == BigInt::from(1) {
            ElementOrder::Three
        } else {
            ElementOrder::Infinite
        }
    }

    pub fn is_torsion(&self) -> bool {
        matches!(
            self.element_order(),
            ElementOrder::Two | ElementOrder::Three
        )
    }

    /// Order by explicit powering up to the cutoff; used to audit the trace
    /// criterion.
    pub fn order_by_powering(&self, cutoff: u32) -> Option<u32> {
        let mut acc = self.clone();
        for k in 1..=cutoff {
            if acc.is_identity() {
                return Some(k);
            }
            acc = acc.mul(self);
        }
        None
    }
}

impl QuadElem {
    /// a * conj(c) * rsq, a helper for the action formula.
    fn mul_rat_conj(&self, c: &QuadElem, rsq: &Rat) -> QuadElem {
        (self * &c.conj()).scale(rsq)
    }
}

/// Boundary point of upper half-space: an element of Q(sqrt(-m)) or infinity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BoundaryPoint {
    Infinity,
    Finite(QuadElem),
}

const CLOSURE_CUTOFF: usize = 12;

/// Close a generating set under multiplication, failing beyond the largest
/// stabiliser order (12, for A4).
pub fn close_subgroup(gens: &[MoebiusElt]) -> Result<Vec<MoebiusElt>, BianchiError> {
    let basis = match gens.first() {
        Some(g) => g.basis(),
        None => {
            return Err(BianchiError::BadSubgroup("empty generating set".into()));
        }
    };
    let mut seen: HashSet<MoebiusElt> = HashSet::new();
    let mut list: Vec<MoebiusElt> = vec![MoebiusElt::identity(basis)];
    seen.insert(list[0].clone());
    let mut frontier = list.clone();
    while let Some(x) = frontier.pop() {
        for g in gens {
            for prod in [x.mul(g), g.mul(&x)] {
                if seen.insert(prod.clone()) {
                    if seen.len() > CLOSURE_CUTOFF {
                        return Err(BianchiError::NotFiniteStabiliser(CLOSURE_CUTOFF));
                    }
                    list.push(prod.clone());
                    frontier.push(prod);
                }
            }
        }
    }
    list.sort_by_key(element_sort_key);
    Ok(list)
}

fn element_sort_key(m: &MoebiusElt) -> Vec<BigInt> {
    vec![
        m.a.x.clone(),
        m.a.y.clone(),
        m.b.x.clone(),
        m.b.y.clone(),
        m.c.x.clone(),
        m.c.y.clone(),
        m.d.x.clone(),
        m.d.y.clone(),
    ]
}

/// Classify the group generated by `gens` as one of Klein's six types.
pub fn classify_subgroup(gens: &[MoebiusElt]) -> Result<FiniteSubgroup, BianchiError> {
    let elements = close_subgroup(gens)?;
    let group_type = classify_elements(&elements)?;
    Ok(FiniteSubgroup {
        elements,
        group_type,
    })
}

/// Type from the order profile; the profile is faithful on Klein's list.
pub fn classify_elements(elements: &[MoebiusElt]) -> Result<FiniteGroupType, BianchiError> {
    let n = elements.len();
    let n2 = elements
        .iter()
        .filter(|e| e.element_order() == ElementOrder::Two)
        .count();
    let n3 = elements
        .iter()
        .filter(|e| e.element_order() == ElementOrder::Three)
        .count();
    if elements
        .iter()
        .any(|e| e.element_order() == ElementOrder::Infinite)
    {
        return Err(BianchiError::BadSubgroup(
            "infinite-order element in closure".into(),
        ));
    }
    match (n, n2, n3) {
        (1, 0, 0) => Ok(FiniteGroupType::C1),
        (2, 1, 0) => Ok(FiniteGroupType::C2),
        (3, 0, 2) => Ok(FiniteGroupType::C3),
        (4, 3, 0) => Ok(FiniteGroupType::D2),
        (6, 3, 2) => Ok(FiniteGroupType::D3),
        (12, 3, 8) => Ok(FiniteGroupType::A4),
        _ => Err(BianchiError::BadSubgroup(format!(
            "order profile (|G|, #ord2, #ord3) = ({n}, {n2}, {n3}) not in Klein's list"
        ))),
    }
}

impl FiniteSubgroup {
    pub fn trivial(basis: RingBasis) -> Self {
        FiniteSubgroup {
            elements: vec![MoebiusElt::identity(basis)],
            group_type: FiniteGroupType::C1,
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &MoebiusElt) -> bool {
        self.elements.contains(g)
    }

    /// Subgroup test on element sets.
    pub fn contains_subgroup(&self, h: &FiniteSubgroup) -> bool {
        h.elements.iter().all(|g| self.contains(g))
    }

    pub fn elements_of_order(&self, ell: u32) -> Vec<&MoebiusElt> {
        let want = match ell {
            1 => ElementOrder::One,
            2 => ElementOrder::Two,
            3 => ElementOrder::Three,
            _ => return vec![],
        };
        self.elements
            .iter()
            .filter(|e| e.element_order() == want)
            .collect()
    }
}

/// Normaliser N_G(H) of a cyclic subgroup H of order 2 or 3 inside finite G,
/// classified. Matches the closed-form table for Klein's six types.
pub fn normaliser_type(
    g: &FiniteSubgroup,
    h: &FiniteSubgroup,
) -> Result<FiniteGroupType, BianchiError> {
    if !matches!(h.group_type, FiniteGroupType::C2 | FiniteGroupType::C3) {
        return Err(BianchiError::BadSubgroup(format!(
            "normaliser table wants H cyclic of prime order, got {}",
            h.group_type
        )));
    }
    if !g.contains_subgroup(h) {
        return Err(BianchiError::BadSubgroup("H is not a subgroup of G".into()));
    }
    let hset: HashSet<&MoebiusElt> = h.elements.iter().collect();
    let norm: Vec<MoebiusElt> = g
        .elements
        .iter()
        .filter(|x| {
            h.elements
                .iter()
                .all(|y| hset.contains(&y.conjugate_by(x)))
        })
        .cloned()
        .collect();
    classify_elements(&norm)
}

/// Partition of the elements of G into conjugacy classes (within G).
pub fn conjugacy_in_finite(g: &FiniteSubgroup) -> Vec<Vec<MoebiusElt>> {
    let mut classes: Vec<Vec<MoebiusElt>> = Vec::new();
    let mut assigned: HashSet<MoebiusElt> = HashSet::new();
    for x in &g.elements {
        if assigned.contains(x) {
            continue;
        }
        let mut class: Vec<MoebiusElt> = Vec::new();
        for t in &g.elements {
            let y = x.conjugate_by(t);
            if assigned.insert(y.clone()) {
                class.push(y);
            }
        }
        class.sort_by_key(element_sort_key);
        classes.push(class);
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ring_basis;

    fn b2() -> RingBasis {
        ring_basis(2).unwrap()
    }

    fn gamma(basis: RingBasis) -> MoebiusElt {
        MoebiusElt::from_ints(basis, [[(0, 0), (1, 0)], [(-1, 0), (0, 0)]]).unwrap()
    }
    fn beta(basis: RingBasis) -> MoebiusElt {
        MoebiusElt::from_ints(basis, [[(0, 0), (-1, 0)], [(1, 0), (1, 0)]]).unwrap()
    }
    fn alpha2(basis: RingBasis) -> MoebiusElt {
        // order-2 element with axis through (w/2, rsq 1/2) for m = 2
        MoebiusElt::from_ints(basis, [[(-1, 0), (0, 1)], [(0, 1), (1, 0)]]).unwrap()
    }

    #[test]
    fn orders() {
        let b = b2();
        assert_eq!(gamma(b).element_order(), ElementOrder::Two);
        assert_eq!(beta(b).element_order(), ElementOrder::Three);
        let t = MoebiusElt::from_ints(b, [[(1, 0), (1, 0)], [(0, 0), (1, 0)]]).unwrap();
        assert_eq!(t.element_order(), ElementOrder::Infinite);
        assert_eq!(MoebiusElt::identity(b).element_order(), ElementOrder::One);
    }

    #[test]
    fn order_by_powering_agrees() {
        let b = b2();
        for (m, ord) in [(gamma(b), 2u32), (beta(b), 3), (alpha2(b), 2)] {
            assert_eq!(m.order_by_powering(4), Some(ord));
            let trace_ord = match m.element_order() {
                ElementOrder::Two => 2,
                ElementOrder::Three => 3,
                _ => 0,
            };
            assert_eq!(trace_ord, ord);
        }
    }

    #[test]
    fn translation_action() {
        let b = b2();
        let g = MoebiusElt::from_ints(b, [[(1, 0), (0, -1)], [(0, 0), (1, 0)]]).unwrap();
        let p = UhsPoint::new(QuadElem::omega(b), Rat::one()).unwrap();
        let q = g.apply(&p).unwrap();
        assert!(q.z.is_zero());
        assert_eq!(q.rsq, Rat::one());
    }

    #[test]
    fn inversion_fixes_unit_apex() {
        let b = b2();
        let p = UhsPoint::new(QuadElem::zero(b), Rat::one()).unwrap();
        let q = gamma(b).apply(&p).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn action_is_homomorphism() {
        let b = b2();
        let m = gamma(b).mul(&beta(b));
        let p = UhsPoint::new(
            QuadElem::new(Rat::new(1, 3), Rat::new(-2, 5), b),
            Rat::new(7, 2),
        )
        .unwrap();
        let lhs = m.apply(&p).unwrap();
        let rhs = gamma(b).apply(&beta(b).apply(&p).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn classify_small_groups() {
        let b = b2();
        let c1 = classify_subgroup(&[MoebiusElt::identity(b)]).unwrap();
        assert_eq!(c1.group_type, FiniteGroupType::C1);
        let c3 = classify_subgroup(&[beta(b)]).unwrap();
        assert_eq!(c3.group_type, FiniteGroupType::C3);
        let c2 = classify_subgroup(&[gamma(b)]).unwrap();
        assert_eq!(c2.group_type, FiniteGroupType::C2);
        // gamma and the order-2 rotation around the (w/2)-apex axis generate D2
        let d2 = classify_subgroup(&[gamma(b), alpha2(b)]).unwrap();
        assert_eq!(d2.group_type, FiniteGroupType::D2);
        // infinite group rejected
        let t = MoebiusElt::from_ints(b, [[(1, 0), (1, 0)], [(0, 0), (1, 0)]]).unwrap();
        assert!(classify_subgroup(&[t]).is_err());
    }

    #[test]
    fn normaliser_table() {
        let b = b2();
        let d2 = classify_subgroup(&[gamma(b), alpha2(b)]).unwrap();
        let c2 = classify_subgroup(&[gamma(b)]).unwrap();
        // N_{D2}(Z/2) = D2
        assert_eq!(normaliser_type(&d2, &c2).unwrap(), FiniteGroupType::D2);
        // N_{C2}(C2) = C2
        assert_eq!(normaliser_type(&c2, &c2).unwrap(), FiniteGroupType::C2);
        // H must be cyclic of prime order
        assert!(normaliser_type(&d2, &d2).is_err());
    }

    #[test]
    fn conjugacy_classes_abelian() {
        let b = b2();
        let d2 = classify_subgroup(&[gamma(b), alpha2(b)]).unwrap();
        let classes = conjugacy_in_finite(&d2);
        assert_eq!(classes.len(), 4); // abelian: singletons
        let c3 = classify_subgroup(&[beta(b)]).unwrap();
        let classes = conjugacy_in_finite(&c3);
        assert_eq!(classes.len(), 3);
    }

    #[test]
    fn canonical_sign() {
        let b = b2();
        let m = MoebiusElt::from_ints(b, [[(0, 0), (1, 0)], [(-1, 0), (0, 0)]]).unwrap();
        let n = MoebiusElt::from_ints(b, [[(0, 0), (-1, 0)], [(1, 0), (0, 0)]]).unwrap();
        assert_eq!(m, n);
        let mm = m.mul(&m); // = -Id = Id in PSL2
        assert!(mm.is_identity());
    }
}
