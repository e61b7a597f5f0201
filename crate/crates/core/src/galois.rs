//! Arithmetic in GF(2^m), m ∈ {4, 8}, and dense polynomials over it.
//!
//! Elements are bitmasks (bit i is the coefficient of x^i), so addition is
//! XOR. Multiplication goes through log/antilog tables built from a
//! primitive polynomial with α = 0x02 as the generator of the multiplicative
//! group.

use std::fmt;
use std::ops::{Add, AddAssign};

use crate::error::{CcnError, Result};

/// x⁴ + x + 1
pub const POLY_GF16: u32 = 0x13;
/// x⁸ + x⁴ + x³ + x² + 1
pub const POLY_GF256: u32 = 0x11D;

/// One element of GF(2^m). The value is always `< q` for the field it came from.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct FieldElement(u8);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub const fn new(value: u8) -> Self {
        FieldElement(value)
    }

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for FieldElement {
    fn from(v: u8) -> Self {
        FieldElement(v)
    }
}

// Addition in characteristic 2 is XOR.
impl Add for FieldElement {
    type Output = FieldElement;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElement {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: FieldElement) {
        self.0 ^= rhs.0;
    }
}

/// GF(2^m) with its log/antilog tables. Immutable after construction.
#[derive(Clone, PartialEq, Eq)]
pub struct GfField {
    m: u32,
    q: usize,
    primitive_poly: u32,
    // log[0] is unused.
    log: Vec<u16>,
    // Doubled to 2(q-1) entries so products of logs never need a modulo.
    antilog: Vec<u8>,
}

impl fmt::Debug for GfField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GfField")
            .field("m", &self.m)
            .field("q", &self.q)
            .field("primitive_poly", &format_args!("{:#x}", self.primitive_poly))
            .finish()
    }
}

impl GfField {
    /// GF(16) under x⁴ + x + 1.
    pub fn gf16() -> Self {
        Self::new(4, POLY_GF16).expect("x^4+x+1 is primitive")
    }

    /// GF(256) under x⁸ + x⁴ + x³ + x² + 1.
    pub fn gf256() -> Self {
        Self::new(8, POLY_GF256).expect("0x11d is primitive")
    }

    /// Conventional field for a bit width (4 or 8).
    pub fn with_bits(m: u32) -> Result<Self> {
        match m {
            4 => Ok(Self::gf16()),
            8 => Ok(Self::gf256()),
            _ => Err(CcnError::InvalidInput(format!(
                "unsupported field width m = {m}, expected 4 or 8"
            ))),
        }
    }

    /// Builds the tables, rejecting polynomials for which α = x is not primitive.
    pub fn new(m: u32, primitive_poly: u32) -> Result<Self> {
        if !(1..=8).contains(&m) {
            return Err(CcnError::InvalidInput(format!("field width m = {m} out of range")));
        }
        if primitive_poly >> m != 1 {
            return Err(CcnError::InvalidInput(format!(
                "polynomial {primitive_poly:#x} does not have degree {m}"
            )));
        }
        let q = 1usize << m;
        let order = q - 1;
        let mut log = vec![0u16; q];
        let mut antilog = vec![0u8; 2 * order];
        let mut seen = vec![false; q];
        let mut x: u32 = 1;
        for i in 0..order {
            if seen[x as usize] {
                return Err(CcnError::InvalidInput(format!(
                    "polynomial {primitive_poly:#x} is not primitive"
                )));
            }
            seen[x as usize] = true;
            antilog[i] = x as u8;
            antilog[i + order] = x as u8;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= primitive_poly;
            }
        }
        if x != 1 {
            return Err(CcnError::InvalidInput(format!(
                "polynomial {primitive_poly:#x} is not primitive"
            )));
        }
        Ok(GfField { m, q, primitive_poly, log, antilog })
    }

    /// Bits per symbol.
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Field size 2^m.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }

    /// Order of the multiplicative group, q − 1.
    #[inline]
    pub fn order(&self) -> usize {
        self.q - 1
    }

    /// Exponent table: `log_table()[a] = i` with α^i = a, for a ≠ 0.
    pub fn log_table(&self) -> &[u16] {
        &self.log
    }

    /// Antilog table, α^i for i in [0, q−1).
    pub fn antilog_table(&self) -> &[u8] {
        &self.antilog[..self.order()]
    }

    /// Checks that a raw value lies in the field.
    pub fn element(&self, value: u8) -> Result<FieldElement> {
        if (value as usize) < self.q {
            Ok(FieldElement(value))
        } else {
            Err(CcnError::InvalidInput(format!(
                "symbol {value} outside GF({})",
                self.q
            )))
        }
    }

    /// α^i for any integer exponent (reduced mod q − 1).
    #[inline]
    pub fn exp(&self, i: i64) -> FieldElement {
        let order = self.order() as i64;
        FieldElement(self.antilog[i.rem_euclid(order) as usize])
    }

    /// Discrete log base α. `None` for zero.
    #[inline]
    pub fn log(&self, a: FieldElement) -> Option<usize> {
        if a.is_zero() {
            None
        } else {
            Some(self.log[a.0 as usize] as usize)
        }
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let i = self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize;
        FieldElement(self.antilog[i])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(CcnError::DivisionByZero);
        }
        let l = self.log[a.0 as usize] as usize;
        Ok(FieldElement(self.antilog[(self.order() - l) % self.order()]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        let inv = self.inv(b)?;
        Ok(self.mul(a, inv))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        match self.log(a) {
            None => FieldElement::ZERO,
            Some(l) => {
                let order = self.order() as u64;
                FieldElement(self.antilog[((l as u64 * (e % order)) % order) as usize])
            }
        }
    }
}

/// Dense polynomial over GF(2^m), lowest degree first.
///
/// Canonical form has no trailing zero coefficients; the zero polynomial is
/// the empty list.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct GfPoly {
    coeffs: Vec<FieldElement>,
}

impl fmt::Debug for GfPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GfPoly{:?}", self.coeffs)
    }
}

impl GfPoly {
    pub fn zero() -> Self {
        GfPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        GfPoly { coeffs: vec![FieldElement::ONE] }
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The monomial c·x^degree.
    pub fn monomial(c: FieldElement, degree: usize) -> Self {
        let mut coeffs = vec![FieldElement::ZERO; degree + 1];
        coeffs[degree] = c;
        Self::from_coeffs(coeffs)
    }

    pub fn from_coeffs(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        GfPoly { coeffs }
    }

    pub fn from_values(values: &[u8]) -> Self {
        Self::from_coeffs(values.iter().map(|&v| FieldElement(v)).collect())
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Coefficient of x^i (zero past the end).
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: FieldElement, f: &GfField) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| f.mul(acc, x) + c)
    }

    pub fn add(&self, other: &GfPoly) -> GfPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::from_coeffs((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn scale(&self, c: FieldElement, f: &GfField) -> GfPoly {
        Self::from_coeffs(self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn mul(&self, other: &GfPoly, f: &GfField) -> GfPoly {
        if self.is_zero() || other.is_zero() {
            return GfPoly::zero();
        }
        let mut out = vec![FieldElement::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += f.mul(a, b);
            }
        }
        Self::from_coeffs(out)
    }

    /// Quotient and remainder with `deg(r) < deg(divisor)`.
    pub fn divmod(&self, divisor: &GfPoly, f: &GfField) -> Result<(GfPoly, GfPoly)> {
        let dd = divisor.degree().ok_or(CcnError::DivisionByZero)?;
        let lead_inv = f.inv(divisor.coeffs[dd])?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((GfPoly::zero(), self.clone()));
        }
        let mut quot = vec![FieldElement::ZERO; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i];
            if c.is_zero() {
                continue;
            }
            let factor = f.mul(c, lead_inv);
            quot[i - dd] = factor;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[i - dd + j] += f.mul(factor, d);
            }
        }
        rem.truncate(dd);
        Ok((Self::from_coeffs(quot), Self::from_coeffs(rem)))
    }

    /// Formal derivative. In characteristic 2 only odd-degree terms survive.
    pub fn derivative(&self) -> GfPoly {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| if i % 2 == 1 { c } else { FieldElement::ZERO })
                .collect(),
        )
    }

    /// Drops every term of degree ≥ `n`.
    pub fn truncate(&self, n: usize) -> GfPoly {
        Self::from_coeffs(self.coeffs.iter().take(n).copied().collect())
    }
}
