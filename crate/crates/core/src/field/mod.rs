//! Prime-field arithmetic over GF(p) for moduli below 2^63.
//!
//! Every element carries its modulus so that mixing elements of different
//! fields is detected. The `checked_*` methods report a mismatch as an
//! error; the arithmetic operators panic on it, which keeps protocol code
//! readable where all values provably come from one field.

mod poly;
mod rng;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use poly::{interpolate, UniPoly, MAX_INTERPOLATION_POINTS};
pub use rng::Rng;

/// The Mersenne prime 2^31 - 1.
pub const DEFAULT_MODULUS: u64 = (1 << 31) - 1;

/// Smallest modulus for which the probability slack terms of the selector
/// pipeline stay below 10^-3 at desk scale.
pub const MIN_PROTOCOL_MODULUS: u64 = 1 << 20;

/// GF(p) for a prime p < 2^63.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// Builds GF(p), verifying primality deterministically.
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 63 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Self { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Whether the field is large enough for the default failure budget.
    pub fn is_protocol_grade(&self) -> bool {
        self.p >= MIN_PROTOCOL_MODULUS
    }

    /// The element with canonical representative `v mod p`.
    pub fn elem(&self, v: u64) -> Fe {
        Fe { value: v % self.p, p: self.p }
    }

    pub fn elem_i64(&self, v: i64) -> Fe {
        let r = v.rem_euclid(self.p as i64) as u64;
        Fe { value: r, p: self.p }
    }

    pub fn zero(&self) -> Fe {
        Fe { value: 0, p: self.p }
    }

    pub fn one(&self) -> Fe {
        Fe { value: 1 % self.p, p: self.p }
    }

    /// The canonical embedding {0, 1} into the field.
    pub fn from_bool(&self, b: bool) -> Fe {
        if b {
            self.one()
        } else {
            self.zero()
        }
    }
}

impl Default for PrimeField {
    fn default() -> Self {
        Self { p: DEFAULT_MODULUS }
    }
}

impl TryFrom<u64> for PrimeField {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.p
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.p)
    }
}

/// An element of GF(p), always kept in canonical form `0 <= value < p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fe {
    value: u64,
    p: u64,
}

/// Arithmetic operation selector for [`field_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Inv,
    Neg,
}

/// Applies `op`; the unary operations ignore `b`.
pub fn field_arith(a: Fe, b: Fe, op: FieldOp) -> Result<Fe> {
    match op {
        FieldOp::Add => a.checked_add(b),
        FieldOp::Sub => a.checked_sub(b),
        FieldOp::Mul => a.checked_mul(b),
        FieldOp::Inv => a.inv(),
        FieldOp::Neg => Ok(-a),
    }
}

impl Fe {
    /// Canonical representative in `[0, p)`; this is the order used when
    /// field values are compared.
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { p: self.p }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn is_one(&self) -> bool {
        self.value == 1
    }

    /// `Some(bit)` when the element is the image of a Boolean.
    pub fn as_bool(&self) -> Option<bool> {
        match self.value {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        }
    }

    fn same_field(&self, other: &Fe) -> Result<()> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(Error::FieldMismatch(self.p, other.p))
        }
    }

    pub fn checked_add(self, rhs: Fe) -> Result<Fe> {
        self.same_field(&rhs)?;
        Ok(self.add_unchecked(rhs))
    }

    pub fn checked_sub(self, rhs: Fe) -> Result<Fe> {
        self.same_field(&rhs)?;
        Ok(self.add_unchecked(-rhs))
    }

    pub fn checked_mul(self, rhs: Fe) -> Result<Fe> {
        self.same_field(&rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn add_unchecked(self, rhs: Fe) -> Fe {
        // p < 2^63, so the sum cannot overflow.
        let s = self.value + rhs.value;
        let value = if s >= self.p { s - self.p } else { s };
        Fe { value, p: self.p }
    }

    fn mul_unchecked(self, rhs: Fe) -> Fe {
        let v = (self.value as u128 * rhs.value as u128) % self.p as u128;
        Fe { value: v as u64, p: self.p }
    }

    pub fn pow(self, mut e: u64) -> Fe {
        let mut base = self;
        let mut acc = self.field().one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(base);
            }
            base = base.mul_unchecked(base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<Fe> {
        if self.value == 0 {
            return Err(Error::DivisionByZero(self.p));
        }
        Ok(self.pow(self.p - 2))
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for Fe {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.value)
    }
}

fn expect_same(a: &Fe, b: &Fe) {
    assert_eq!(a.p, b.p, "field mismatch: GF({}) vs GF({})", a.p, b.p);
}

impl Add for Fe {
    type Output = Fe;

    fn add(self, rhs: Fe) -> Fe {
        expect_same(&self, &rhs);
        self.add_unchecked(rhs)
    }
}

impl Sub for Fe {
    type Output = Fe;

    fn sub(self, rhs: Fe) -> Fe {
        expect_same(&self, &rhs);
        self.add_unchecked(-rhs)
    }
}

impl Mul for Fe {
    type Output = Fe;

    fn mul(self, rhs: Fe) -> Fe {
        expect_same(&self, &rhs);
        self.mul_unchecked(rhs)
    }
}

impl Neg for Fe {
    type Output = Fe;

    fn neg(self) -> Fe {
        let value = if self.value == 0 { 0 } else { self.p - self.value };
        Fe { value, p: self.p }
    }
}

impl AddAssign for Fe {
    fn add_assign(&mut self, rhs: Fe) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fe {
    fn sub_assign(&mut self, rhs: Fe) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fe {
    fn mul_assign(&mut self, rhs: Fe) {
        *self = *self * rhs;
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve primes as bases are exact
/// for every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &q in &BASES {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Rng;

    fn gf(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn small_examples() {
        let f5 = gf(5);
        assert_eq!((f5.elem(3) + f5.elem(4)).value(), 2);
        let f7 = gf(7);
        assert_eq!(f7.elem(2).inv().unwrap().value(), 4);
        let f = PrimeField::default();
        assert_eq!((-f.zero()).value(), 0);
    }

    #[test]
    fn field_arith_dispatch_and_errors() {
        let f7 = gf(7);
        let f11 = gf(11);
        assert_eq!(field_arith(f7.elem(3), f7.elem(5), FieldOp::Mul).unwrap().value(), 1);
        assert_eq!(field_arith(f7.elem(3), f7.elem(5), FieldOp::Sub).unwrap().value(), 5);
        assert_eq!(field_arith(f7.elem(3), f7.zero(), FieldOp::Neg).unwrap().value(), 4);
        assert_eq!(
            field_arith(f7.zero(), f7.zero(), FieldOp::Inv),
            Err(Error::DivisionByZero(7))
        );
        assert_eq!(
            field_arith(f7.elem(1), f11.elem(1), FieldOp::Add),
            Err(Error::FieldMismatch(7, 11))
        );
    }

    #[test]
    #[should_panic(expected = "field mismatch")]
    fn operator_panics_on_mixed_fields() {
        let _ = gf(7).one() + gf(11).one();
    }

    #[test]
    fn primality() {
        assert!(is_prime(DEFAULT_MODULUS));
        assert!(is_prime(101));
        assert!(!is_prime(1));
        assert!(!is_prime(561));
        assert!(!is_prime((1 << 31) + 1));
        assert!(PrimeField::new(100).is_err());
        assert!(PrimeField::new(0).is_err());
        // Largest prime below 2^63.
        assert!(PrimeField::new(9_223_372_036_854_775_783).is_ok());
        assert!(PrimeField::default().is_protocol_grade());
        assert!(!gf(101).is_protocol_grade());
    }

    #[test]
    fn primality_matches_trial_division() {
        for n in 0..5000u64 {
            let trial = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), trial, "n = {n}");
        }
    }

    #[test]
    fn negative_embedding() {
        let f = gf(7);
        assert_eq!(f.elem_i64(-2).value(), 5);
        assert_eq!(f.from_bool(true), f.one());
        assert_eq!(f.elem(9).as_bool(), None);
    }

    #[test]
    fn field_axioms_randomized() {
        let f = PrimeField::default();
        let mut rng = Rng::new(7);
        for _ in 0..10_000 {
            let (a, b, c) = (rng.elem(f), rng.elem(f), rng.elem(f));
            assert_eq!((a + b) + c, a + (b + c));
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!(a - a, f.zero());
            if !a.is_zero() {
                assert_eq!(a * a.inv().unwrap(), f.one());
            }
        }
    }

    proptest! {
        #[test]
        fn mul_matches_u128(a in 0u64..DEFAULT_MODULUS, b in 0u64..DEFAULT_MODULUS) {
            let f = PrimeField::default();
            let expect = (a as u128 * b as u128 % DEFAULT_MODULUS as u128) as u64;
            prop_assert_eq!((f.elem(a) * f.elem(b)).value(), expect);
        }

        #[test]
        fn sub_inverts_add(a in any::<u64>(), b in any::<u64>()) {
            let f = gf(101);
            prop_assert_eq!(f.elem(a) + f.elem(b) - f.elem(b), f.elem(a));
        }
    }
}
