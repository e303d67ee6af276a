//! Exact arithmetic in Q, Q(sqrt(-m)) and the ring of integers O_{-m}.
//!
//! Every quantity in the geometric pipeline is either a rational number or an
//! element of an imaginary quadratic field written in the integral basis
//! (1, omega), where
//!
//! - omega = sqrt(-m)          for m = 1, 2 mod 4  (`Plain`),
//! - omega = (-1+sqrt(-m))/2   for m = 3 mod 4     (`HalfTrace`).
//!
//! No floating point appears anywhere; comparisons and incidence tests are
//! exact rational predicates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use crate::BianchiError;

/// Arbitrary-precision rational, always reduced, denominator positive.
///
/// Serialized as the string `"num/den"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(pub BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }
    pub fn one() -> Self {
        Rat(BigRational::one())
    }
    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }
    pub fn from_big(n: BigInt) -> Self {
        Rat(BigRational::from_integer(n))
    }
    pub fn new(num: i64, den: i64) -> Self {
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }
    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }
    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }
    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }
    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }
    /// Largest integer <= self.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }
    pub fn recip(&self) -> Rat {
        Rat(self.0.clone().recip())
    }
    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }
    /// Exact square root if self is a square of a rational, else None.
    pub fn sqrt_exact(&self) -> Option<Rat> {
        if self.is_negative() {
            return None;
        }
        let n = self.0.numer().sqrt();
        let d = self.0.denom().sqrt();
        if &(&n * &n) == self.0.numer() && &(&d * &d) == self.0.denom() {
            Some(Rat(BigRational::new(n, d)))
        } else {
            None
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rat {
    type Err = BianchiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BianchiError::Parse(format!("invalid rational: {s:?}"));
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        // Reject forms BigInt::from_str would accept but we do not emit.
        if num.is_empty() || den.is_empty() || num.contains(|c: char| c.is_whitespace()) {
            return Err(bad());
        }
        let n = BigInt::from_str(num).map_err(|_| bad())?;
        let d = BigInt::from_str(den).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(BianchiError::Parse(format!("zero denominator: {s:?}")));
        }
        Ok(Rat(BigRational::new(n, d)))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Rat::from_str(&s).map_err(serde::de::Error::custom)
    }
}

macro_rules! rat_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
    };
}
rat_binop!(Add, add);
rat_binop!(Sub, sub);
rat_binop!(Mul, mul);
rat_binop!(Div, div);

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0.clone())
    }
}
impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

/// Which integral basis the ring of integers uses.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaCase {
    /// omega = sqrt(-m), for m = 1, 2 mod 4.
    Plain,
    /// omega = (-1+sqrt(-m))/2, for m = 3 mod 4.
    HalfTrace,
}

/// The ring of integers O_{-m} of Q(sqrt(-m)), with units {±1}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct RingBasis {
    pub m: u64,
    pub case: OmegaCase,
}

/// Construct the ring basis for square-free m > 0, m not in {1, 3}.
///
/// m = 1 and m = 3 are rejected: those rings have units beyond {±1} and the
/// whole pipeline assumes the two-element unit group.
pub fn ring_basis(m: u64) -> Result<RingBasis, BianchiError> {
    if m == 0 {
        return Err(BianchiError::BadField("m must be positive".into()));
    }
    if m == 1 || m == 3 {
        return Err(BianchiError::BadField(format!(
            "m = {m} excluded: the ring of integers has units beyond {{±1}}"
        )));
    }
    if !is_square_free(m) {
        return Err(BianchiError::BadField(format!("m = {m} is not square-free")));
    }
    let case = if m % 4 == 3 {
        OmegaCase::HalfTrace
    } else {
        OmegaCase::Plain
    };
    Ok(RingBasis { m, case })
}

fn is_square_free(m: u64) -> bool {
    let mut m = m;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

impl RingBasis {
    /// Trace of omega: 0 (Plain) or -1 (HalfTrace).
    pub fn omega_trace(&self) -> Rat {
        match self.case {
            OmegaCase::Plain => Rat::zero(),
            OmegaCase::HalfTrace => Rat::from_int(-1),
        }
    }
    /// Norm of omega: m (Plain) or (1+m)/4 (HalfTrace).
    pub fn omega_norm(&self) -> Rat {
        match self.case {
            OmegaCase::Plain => Rat::from_int(self.m as i64),
            OmegaCase::HalfTrace => Rat::new(1 + self.m as i64, 4),
        }
    }
    /// The positive-definite norm form Q(a, b) = N(a + b omega).
    pub fn qform(&self, a: &Rat, b: &Rat) -> Rat {
        // a^2 + tr(w) a b ... careful: N(a + bw) = a^2 + ab*Tr(w)*(-1)? Expand:
        // N(a+bw) = (a+bw)(a+b conj(w)) = a^2 + ab Tr(w) + b^2 N(w).
        let t = self.omega_trace();
        let n = self.omega_norm();
        &(&(a * a) + &(&(a * b) * &t)) + &(&(b * b) * &n)
    }
}

/// Element a + b*omega of Q(sqrt(-m)).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadElem {
    pub a: Rat,
    pub b: Rat,
    pub basis: RingBasis,
}

impl fmt::Debug for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {} w)", self.a, self.b)
    }
}

impl QuadElem {
    pub fn new(a: Rat, b: Rat, basis: RingBasis) -> Self {
        QuadElem { a, b, basis }
    }
    pub fn zero(basis: RingBasis) -> Self {
        QuadElem::new(Rat::zero(), Rat::zero(), basis)
    }
    pub fn one(basis: RingBasis) -> Self {
        QuadElem::new(Rat::one(), Rat::zero(), basis)
    }
    pub fn omega(basis: RingBasis) -> Self {
        QuadElem::new(Rat::zero(), Rat::one(), basis)
    }
    pub fn from_int(n: i64, basis: RingBasis) -> Self {
        QuadElem::new(Rat::from_int(n), Rat::zero(), basis)
    }
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
    pub fn conj(&self) -> QuadElem {
        match self.basis.case {
            OmegaCase::Plain => QuadElem::new(self.a.clone(), -&self.b, self.basis),
            // conj(w) = -1 - w
            OmegaCase::HalfTrace => {
                QuadElem::new(&self.a - &self.b, -&self.b, self.basis)
            }
        }
    }
    /// Field norm x * conj(x), a non-negative rational.
    pub fn norm(&self) -> Rat {
        self.basis.qform(&self.a, &self.b)
    }
    pub fn trace(&self) -> Rat {
        &(&self.a + &self.a) + &(&self.b * &self.basis.omega_trace())
    }
    pub fn inv(&self) -> Result<QuadElem, BianchiError> {
        if self.is_zero() {
            return Err(BianchiError::DivisionByZero);
        }
        let n = self.norm();
        let c = self.conj();
        Ok(QuadElem::new(&c.a / &n, &c.b / &n, self.basis))
    }
    pub fn scale(&self, r: &Rat) -> QuadElem {
        QuadElem::new(&self.a * r, &self.b * r, self.basis)
    }
    /// True when both coordinates are integers, i.e. the element lies in O_{-m}.
    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }
    pub fn to_ring(&self) -> Option<RingElem> {
        if self.is_integral() {
            Some(RingElem {
                x: self.a.numer().clone(),
                y: self.b.numer().clone(),
                basis: self.basis,
            })
        } else {
            None
        }
    }
}

impl Add for &QuadElem {
    type Output = QuadElem;
    fn add(self, rhs: &QuadElem) -> QuadElem {
        debug_assert_eq!(self.basis, rhs.basis);
        QuadElem::new(&self.a + &rhs.a, &self.b + &rhs.b, self.basis)
    }
}
impl Sub for &QuadElem {
    type Output = QuadElem;
    fn sub(self, rhs: &QuadElem) -> QuadElem {
        debug_assert_eq!(self.basis, rhs.basis);
        QuadElem::new(&self.a - &rhs.a, &self.b - &rhs.b, self.basis)
    }
}
impl Neg for &QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        QuadElem::new(-&self.a, -&self.b, self.basis)
    }
}
impl Mul for &QuadElem {
    type Output = QuadElem;
    fn mul(self, rhs: &QuadElem) -> QuadElem {
        debug_assert_eq!(self.basis, rhs.basis);
        let aa = &self.a * &rhs.a;
        let bb = &self.b * &rhs.b;
        let cross = &(&self.a * &rhs.b) + &(&self.b * &rhs.a);
        match self.basis.case {
            // w^2 = -m
            OmegaCase::Plain => {
                let m = Rat::from_int(self.basis.m as i64);
                QuadElem::new(&aa - &(&bb * &m), cross, self.basis)
            }
            // w^2 = -w - (1+m)/4
            OmegaCase::HalfTrace => {
                let k = Rat::new(1 + self.basis.m as i64, 4);
                QuadElem::new(&aa - &(&bb * &k), &cross - &bb, self.basis)
            }
        }
    }
}
impl Div for &QuadElem {
    type Output = QuadElem;
    fn div(self, rhs: &QuadElem) -> QuadElem {
        let inv = rhs.inv().expect("division by zero QuadElem");
        self * &inv
    }
}

/// Element of the ring of integers O_{-m}: integer coordinates over (1, omega).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingElem {
    pub x: BigInt,
    pub y: BigInt,
    pub basis: RingBasis,
}

impl fmt::Debug for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+{}w)", self.x, self.y)
    }
}

impl RingElem {
    pub fn new(x: i64, y: i64, basis: RingBasis) -> Self {
        RingElem {
            x: BigInt::from(x),
            y: BigInt::from(y),
            basis,
        }
    }
    pub fn from_big(x: BigInt, y: BigInt, basis: RingBasis) -> Self {
        RingElem { x, y, basis }
    }
    pub fn zero(basis: RingBasis) -> Self {
        RingElem::new(0, 0, basis)
    }
    pub fn one(basis: RingBasis) -> Self {
        RingElem::new(1, 0, basis)
    }
    pub fn omega(basis: RingBasis) -> Self {
        RingElem::new(0, 1, basis)
    }
    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
    pub fn is_one(&self) -> bool {
        self.x.is_one() && self.y.is_zero()
    }
    pub fn to_quad(&self) -> QuadElem {
        QuadElem::new(
            Rat::from_big(self.x.clone()),
            Rat::from_big(self.y.clone()),
            self.basis,
        )
    }
    pub fn conj(&self) -> RingElem {
        self.to_quad().conj().to_ring().unwrap()
    }
    /// Field norm; a non-negative integer for ring elements.
    pub fn norm(&self) -> BigInt {
        let n = self.to_quad().norm();
        debug_assert!(n.is_integer());
        n.numer().clone()
    }
    pub fn mul(&self, rhs: &RingElem) -> RingElem {
        (&self.to_quad() * &rhs.to_quad()).to_ring().unwrap()
    }
    pub fn add(&self, rhs: &RingElem) -> RingElem {
        RingElem::from_big(&self.x + &rhs.x, &self.y + &rhs.y, self.basis)
    }
    pub fn sub(&self, rhs: &RingElem) -> RingElem {
        RingElem::from_big(&self.x - &rhs.x, &self.y - &rhs.y, self.basis)
    }
    pub fn neg(&self) -> RingElem {
        RingElem::from_big(-&self.x, -&self.y, self.basis)
    }
    /// Exact divisibility test in O; returns the quotient if rhs divides self.
    pub fn divide_exact(&self, rhs: &RingElem) -> Option<RingElem> {
        if rhs.is_zero() {
            return None;
        }
        let q = &self.to_quad() / &rhs.to_quad();
        q.to_ring()
    }
}

/// Point of upper half-space: horizontal coordinate z in Q(sqrt(-m)) and
/// squared height rsq. rsq = 0 marks a boundary (cusp) point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UhsPoint {
    pub z: QuadElem,
    pub rsq: Rat,
}

impl UhsPoint {
    pub fn new(z: QuadElem, rsq: Rat) -> Result<Self, BianchiError> {
        if rsq.is_negative() {
            return Err(BianchiError::BadField(format!(
                "negative squared height {rsq}"
            )));
        }
        Ok(UhsPoint { z, rsq })
    }
    pub fn is_cusp(&self) -> bool {
        self.rsq.is_zero()
    }
}

/// Exact comparison of the squared heights of two points.
pub fn cmp_heights(p: &UhsPoint, q: &UhsPoint) -> Ordering {
    p.rsq.cmp(&q.rsq)
}

/// Index [O : L] of the sublattice L of O generated (as an O-module) by a and b,
/// i.e. the norm of the ideal (a, b). Zero when a = b = 0.
///
/// Computed as the gcd of the 2x2 minors of the 4x2 integer matrix whose rows
/// are the basis coordinates of a, a*omega, b, b*omega.
pub fn ideal_norm(a: &RingElem, b: &RingElem) -> BigInt {
    let w = RingElem::omega(a.basis);
    let rows = [
        a.clone(),
        a.mul(&w),
        b.clone(),
        b.mul(&w),
    ];
    let mut g = BigInt::zero();
    for i in 0..4 {
        for j in (i + 1)..4 {
            let minor = &rows[i].x * &rows[j].y - &rows[i].y * &rows[j].x;
            g = num_integer::Integer::gcd(&g, &minor);
        }
    }
    g
}

/// True when the pair (a, b) generates the unit ideal of O.
pub fn is_unimodular_pair(a: &RingElem, b: &RingElem) -> bool {
    ideal_norm(a, b).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b2() -> RingBasis {
        ring_basis(2).unwrap()
    }
    fn b11() -> RingBasis {
        ring_basis(11).unwrap()
    }

    #[test]
    fn basis_cases() {
        assert_eq!(b2().case, OmegaCase::Plain);
        assert_eq!(b11().case, OmegaCase::HalfTrace);
        assert_eq!(ring_basis(191).unwrap().case, OmegaCase::HalfTrace);
        assert!(ring_basis(1).is_err());
        assert!(ring_basis(3).is_err());
        assert!(ring_basis(4).is_err());
        assert!(ring_basis(12).is_err());
        assert!(ring_basis(0).is_err());
    }

    #[test]
    fn norm_examples() {
        // zero
        assert_eq!(QuadElem::zero(b2()).norm(), Rat::zero());
        // m=2: N(1 + w) = 1 + 2 = 3
        let x = QuadElem::new(Rat::one(), Rat::one(), b2());
        assert_eq!(x.norm(), Rat::from_int(3));
        // m=11 half-trace: N(w) = (1+11)/4 = 3
        assert_eq!(QuadElem::omega(b11()).norm(), Rat::from_int(3));
    }

    #[test]
    fn conj_and_trace() {
        let w = QuadElem::omega(b11());
        let c = w.conj();
        // w + conj(w) = -1
        let t = &w + &c;
        assert_eq!(t.a, Rat::from_int(-1));
        assert!(t.b.is_zero());
        // w * conj(w) = 3
        let n = &w * &c;
        assert_eq!(n.a, Rat::from_int(3));
        assert!(n.b.is_zero());
    }

    #[test]
    fn height_comparison() {
        let p = UhsPoint::new(QuadElem::zero(b2()), Rat::one()).unwrap();
        let q = UhsPoint::new(QuadElem::zero(b2()), Rat::new(1, 2)).unwrap();
        assert_eq!(cmp_heights(&p, &q), Ordering::Greater);
        assert_eq!(cmp_heights(&p, &p), Ordering::Equal);
        let r = UhsPoint::new(QuadElem::zero(b2()), Rat::new(3, 4)).unwrap();
        let s = UhsPoint::new(QuadElem::zero(b2()), Rat::new(2, 11)).unwrap();
        assert_eq!(cmp_heights(&r, &s), Ordering::Greater);
    }

    #[test]
    fn rational_parse_roundtrip() {
        for s in ["3/4", "-7/2", "0/1", "5"] {
            let r: Rat = s.parse().unwrap();
            let back: Rat = r.to_string().parse().unwrap();
            assert_eq!(r, back);
        }
        assert!("1/0".parse::<Rat>().is_err());
        assert!("".parse::<Rat>().is_err());
        assert!("a/b".parse::<Rat>().is_err());
        assert!(" 1/2".parse::<Rat>().is_err());
    }

    #[test]
    fn unimodularity() {
        let b = b2();
        // (1, anything) is unimodular
        assert!(is_unimodular_pair(
            &RingElem::one(b),
            &RingElem::new(5, 3, b)
        ));
        // (w, 2): both in the ramified prime above 2, not unimodular
        assert!(!is_unimodular_pair(
            &RingElem::omega(b),
            &RingElem::new(2, 0, b)
        ));
        // ideal (w) has norm 2, so (w, w) has gcd-of-minors 2
        assert_eq!(
            ideal_norm(&RingElem::omega(b), &RingElem::omega(b)),
            BigInt::from(2)
        );
        // m=5-like check in half-trace ring: (2, 1+w) over m=11 is unimodular
        let b = b11();
        assert!(is_unimodular_pair(
            &RingElem::new(2, 0, b),
            &RingElem::new(1, 1, b)
        ));
    }

    #[test]
    fn field_inverse() {
        let x = QuadElem::new(Rat::new(3, 2), Rat::new(-1, 3), b11());
        let i = x.inv().unwrap();
        let p = &x * &i;
        assert_eq!(p, QuadElem::one(b11()));
        assert!(QuadElem::zero(b2()).inv().is_err());
    }
}
