//! Arithmetic in GF(2^n) for n in {2, 3} and the generalized Pauli operators
//! X_u |i> = |i + u>, Z_v |i> = (-1)^Tr(v i) |i>.
//!
//! Field elements map to computational-basis indices through their bit
//! pattern: the coefficient of x^k is bit k.

use std::fmt;

use crate::error::{Error, Result};
use crate::qmath::{c, Operator};

/// x^2 + x + 1
pub const GF4_POLY: u32 = 0b111;
/// x^3 + x + 1
pub const GF8_POLY: u32 = 0b1011;

/// A characteristic-2 extension field GF(2^n) with a fixed reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    n: u32,
    poly: u32,
}

impl FieldSpec {
    pub fn new(n: u32) -> Result<Self> {
        let poly = match n {
            2 => GF4_POLY,
            3 => GF8_POLY,
            _ => return Err(Error::Unsupported(format!("GF(2^{n}) (only n = 2, 3)"))),
        };
        debug_assert!(is_irreducible(poly));
        Ok(Self { n, poly })
    }

    /// The field whose order equals the Hilbert-space dimension `d`.
    pub fn for_dim(d: usize) -> Result<Self> {
        match d {
            4 => Self::new(2),
            8 => Self::new(3),
            _ => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn gf4() -> Self {
        Self { n: 2, poly: GF4_POLY }
    }

    pub fn gf8() -> Self {
        Self { n: 3, poly: GF8_POLY }
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    /// Field order d = 2^n.
    pub fn order(&self) -> usize {
        1 << self.n
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    pub fn elem(&self, value: usize) -> Result<FieldElem> {
        if value >= self.order() {
            return Err(Error::IndexOutOfRange(format!(
                "{value} is not an element of GF({})",
                self.order()
            )));
        }
        Ok(FieldElem {
            value: value as u8,
            spec: *self,
        })
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem { value: 0, spec: *self }
    }

    pub fn one(&self) -> FieldElem {
        FieldElem { value: 1, spec: *self }
    }

    /// All elements in increasing bit-pattern order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        (0..self.order()).map(move |v| FieldElem {
            value: v as u8,
            spec: *self,
        })
    }

    fn reduce(&self, mut r: u32) -> u32 {
        for bit in (self.n..(2 * self.n - 1)).rev() {
            if r >> bit & 1 == 1 {
                r ^= self.poly << (bit - self.n);
            }
        }
        r
    }
}

/// Degree of a GF(2) polynomial stored as a bitmask.
fn degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

/// Exhaustive factor check: no polynomial of degree 1..=deg/2 divides `poly`.
pub fn is_irreducible(poly: u32) -> bool {
    let n = degree(poly);
    if n < 1 {
        return false;
    }
    for k in 1..=(n / 2) {
        for cand in (1u32 << k)..(1u32 << (k + 1)) {
            if poly_mod(poly, cand) == 0 {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElem {
    value: u8,
    spec: FieldSpec,
}

impl FieldElem {
    pub fn value(&self) -> usize {
        self.value as usize
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    fn check(&self, other: &FieldElem) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::FieldMismatch(self.spec.order(), other.spec.order()));
        }
        Ok(())
    }

    /// Field addition (bitwise XOR).
    pub fn add(&self, other: &FieldElem) -> Result<FieldElem> {
        self.check(other)?;
        Ok(FieldElem {
            value: self.value ^ other.value,
            spec: self.spec,
        })
    }

    /// Polynomial product reduced modulo the field polynomial.
    pub fn mul(&self, other: &FieldElem) -> Result<FieldElem> {
        self.check(other)?;
        let (a, b) = (self.value as u32, other.value as u32);
        let mut r = 0u32;
        for k in 0..self.spec.n {
            if b >> k & 1 == 1 {
                r ^= a << k;
            }
        }
        Ok(FieldElem {
            value: self.spec.reduce(r) as u8,
            spec: self.spec,
        })
    }

    pub fn square(&self) -> FieldElem {
        self.mul(self).expect("same field")
    }

    pub fn pow(&self, mut e: u32) -> FieldElem {
        let mut base = *self;
        let mut acc = self.spec.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same field");
            }
            base = base.square();
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inverse(&self) -> Option<FieldElem> {
        if self.value == 0 {
            return None;
        }
        // a^(d-2) = a^-1 in a field of order d
        Some(self.pow(self.spec.order() as u32 - 2))
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Absolute trace Tr(a) = a + a^2 + a^4 + ... + a^(d/2), always 0 or 1.
pub fn field_trace(a: &FieldElem) -> u8 {
    let mut acc = a.spec.zero();
    let mut term = *a;
    for _ in 0..a.spec.n {
        acc = acc.add(&term).expect("same field");
        term = term.square();
    }
    debug_assert!(acc.value <= 1);
    acc.value
}

/// X_u: permutation |i> -> |i + u>.
pub fn op_x(u: &FieldElem) -> Operator {
    let d = u.spec.order();
    let shift = u.value();
    Operator::from_fn(d, |row, col| {
        if row == col ^ shift {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Z_v: diagonal with entry (-1)^Tr(v i) at index i.
pub fn op_z(v: &FieldElem) -> Operator {
    let spec = v.spec;
    let d = spec.order();
    let signs: Vec<f64> = spec
        .elements()
        .map(|i| {
            let t = field_trace(&v.mul(&i).expect("same field"));
            if t == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Operator::from_fn(d, |row, col| {
        if row == col {
            c(signs[row], 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// X_u Z_v
pub fn op_xz(u: &FieldElem, v: &FieldElem) -> Result<Operator> {
    u.check(v)?;
    Ok(&op_x(u) * &op_z(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields() -> [FieldSpec; 2] {
        [FieldSpec::gf4(), FieldSpec::gf8()]
    }

    #[test]
    fn polynomials_are_irreducible() {
        assert!(is_irreducible(GF4_POLY));
        assert!(is_irreducible(GF8_POLY));
        // x^2 + 1 = (x + 1)^2
        assert!(!is_irreducible(0b101));
        // x^3 + x^2 + x + 1 = (x + 1)^3
        assert!(!is_irreducible(0b1111));
    }

    #[test]
    fn add_examples() {
        let f4 = FieldSpec::gf4();
        let f8 = FieldSpec::gf8();
        assert_eq!(f4.elem(2).unwrap().add(&f4.elem(3).unwrap()).unwrap().value(), 1);
        for a in f4.elements() {
            assert_eq!(a.add(&a).unwrap().value(), 0);
        }
        assert_eq!(f8.elem(5).unwrap().add(&f8.elem(3).unwrap()).unwrap().value(), 6);
        assert!(matches!(
            f4.one().add(&f8.one()),
            Err(Error::FieldMismatch(4, 8))
        ));
    }

    #[test]
    fn mul_examples() {
        let f4 = FieldSpec::gf4();
        let f8 = FieldSpec::gf8();
        assert_eq!(f4.elem(2).unwrap().mul(&f4.elem(2).unwrap()).unwrap().value(), 3);
        assert_eq!(f8.elem(2).unwrap().mul(&f8.elem(4).unwrap()).unwrap().value(), 3);
        for f in fields() {
            for a in f.elements() {
                assert_eq!(a.mul(&f.one()).unwrap(), a);
            }
        }
        assert!(f4.one().mul(&f8.one()).is_err());
    }

    #[test]
    fn trace_examples() {
        let f4 = FieldSpec::gf4();
        let f8 = FieldSpec::gf8();
        assert_eq!(field_trace(&f4.zero()), 0);
        assert_eq!(field_trace(&f4.one()), 0);
        assert_eq!(field_trace(&f4.elem(2).unwrap()), 1);
        assert_eq!(field_trace(&f8.one()), 1);
    }

    #[test]
    fn distributive_law_exhaustive() {
        for f in fields() {
            for a in f.elements() {
                for b in f.elements() {
                    for x in f.elements() {
                        let lhs = a.mul(&b.add(&x).unwrap()).unwrap();
                        let rhs = a.mul(&b).unwrap().add(&a.mul(&x).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn nonzero_elements_invertible() {
        for f in fields() {
            assert!(f.zero().inverse().is_none());
            for a in f.elements().skip(1) {
                let inv = a.inverse().unwrap();
                assert_eq!(a.mul(&inv).unwrap(), f.one());
                // brute-force agreement
                let count = f.elements().filter(|b| a.mul(b).unwrap() == f.one()).count();
                assert_eq!(count, 1);
            }
        }
    }

    #[test]
    fn trace_is_linear_and_balanced() {
        for f in fields() {
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(field_trace(&a.add(&b).unwrap()), field_trace(&a) ^ field_trace(&b));
                }
            }
            let zeros = f.elements().filter(|a| field_trace(a) == 0).count();
            assert_eq!(zeros, f.order() / 2);
        }
        let gf4_zero: Vec<usize> = FieldSpec::gf4()
            .elements()
            .filter(|a| field_trace(a) == 0)
            .map(|a| a.value())
            .collect();
        assert_eq!(gf4_zero, vec![0, 1]);
    }

    #[test]
    fn op_x_examples() {
        for f in fields() {
            assert_eq!(op_x(&f.zero()), Operator::identity(f.order()));
            for u in f.elements() {
                let x = op_x(&u);
                assert_eq!(&x * &x, Operator::identity(f.order()));
            }
        }
        let f4 = FieldSpec::gf4();
        let out = op_x(&f4.one()).apply(&crate::qmath::StateVector::basis(4, 2).unwrap()).unwrap();
        assert_eq!(out, crate::qmath::StateVector::basis(4, 3).unwrap());
    }

    #[test]
    fn op_z_examples() {
        let f4 = FieldSpec::gf4();
        let z1 = op_z(&f4.one());
        let diag: Vec<f64> = (0..4).map(|i| z1.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        for f in fields() {
            assert_eq!(op_z(&f.zero()), Operator::identity(f.order()));
            for v in f.elements() {
                let z = op_z(&v);
                assert_eq!(&z * &z, Operator::identity(f.order()));
            }
        }
    }

    #[test]
    fn weyl_commutation_exhaustive() {
        for f in fields() {
            for u in f.elements() {
                for v in f.elements() {
                    let zx = &op_z(&v) * &op_x(&u);
                    let xz = &op_x(&u) * &op_z(&v);
                    let sign = if field_trace(&u.mul(&v).unwrap()) == 0 { 1.0 } else { -1.0 };
                    assert!(zx.max_abs_diff(&xz.scale(c(sign, 0.0))) < 1e-12);
                }
            }
        }
    }
}
