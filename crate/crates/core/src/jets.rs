//! Truncated bivariate power series.
//!
//! A [`Jet2`] of cap `d` stores the coefficients of every monomial
//! `Y1^(j-i) * Y2^i` with `0 <= i <= j <= d` in a dense triangular array,
//! ordered by total degree `j` and, inside one degree, by the `Y2` exponent
//! `i`. Everything the tangency machinery does with the restricted maps
//! `(y1, y2) -> (ybar1, ybar2)` goes through this type.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Position of the monomial of total degree `j` and `Y2`-exponent `i`.
#[inline]
pub const fn tri_index(j: usize, i: usize) -> usize {
    j * (j + 1) / 2 + i
}

/// Number of monomials of total degree at most `cap`.
#[inline]
pub const fn tri_len(cap: usize) -> usize {
    (cap + 1) * (cap + 2) / 2
}

/// Iterates `(j, i)` over all monomials of degree at most `cap`, in storage order.
pub fn monomials(cap: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=cap).flat_map(|j| (0..=j).map(move |i| (j, i)))
}

/// Whether [`Jet2::compose`] may substitute an inner jet with a non-zero constant term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantTerm {
    /// Inner constant terms must vanish.
    Reject,
    /// The outer series is treated as an exact polynomial, so substitution is exact.
    Substitute,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Jet2 {
    cap: usize,
    coeffs: Vec<f64>,
}

impl Jet2 {
    pub fn zero(cap: usize) -> Self {
        Self {
            cap,
            coeffs: vec![0.0; tri_len(cap)],
        }
    }

    pub fn constant(cap: usize, value: f64) -> Self {
        let mut jet = Self::zero(cap);
        jet.coeffs[0] = value;
        jet
    }

    pub fn one(cap: usize) -> Self {
        Self::constant(cap, 1.0)
    }

    /// The coordinate function `Y1`. Requires `cap >= 1`.
    pub fn y1(cap: usize) -> Self {
        Self::monomial(cap, 1, 0, 1.0)
    }

    /// The coordinate function `Y2`. Requires `cap >= 1`.
    pub fn y2(cap: usize) -> Self {
        Self::monomial(cap, 1, 1, 1.0)
    }

    /// `value * Y1^(j-i) * Y2^i`; panics if `j > cap` or `i > j`.
    pub fn monomial(cap: usize, j: usize, i: usize, value: f64) -> Self {
        assert!(i <= j && j <= cap, "monomial ({j},{i}) outside cap {cap}");
        let mut jet = Self::zero(cap);
        jet.coeffs[tri_index(j, i)] = value;
        jet
    }

    pub fn from_coeffs(cap: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != tri_len(cap) {
            return Err(Error::contract(
                "jet_from_coeffs",
                alloc::format!(
                    "cap {cap} needs {} coefficients, got {}",
                    tri_len(cap),
                    coeffs.len()
                ),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("jet_from_coeffs"));
        }
        Ok(Self { cap, coeffs })
    }

    pub fn from_fn(cap: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let coeffs = monomials(cap).map(|(j, i)| f(j, i)).collect();
        Self { cap, coeffs }
    }

    #[inline]
    pub fn cap(&self) -> usize {
        self.cap
    }

    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `Y1^(j-i) Y2^i`; zero beyond the cap.
    #[inline]
    pub fn coeff(&self, j: usize, i: usize) -> f64 {
        debug_assert!(i <= j);
        if j > self.cap {
            0.0
        } else {
            self.coeffs[tri_index(j, i)]
        }
    }

    #[inline]
    pub fn set_coeff(&mut self, j: usize, i: usize, value: f64) {
        self.coeffs[tri_index(j, i)] = value;
    }

    /// Coefficients of total degree `j`, indexed by the `Y2` exponent.
    pub fn degree_block(&self, j: usize) -> &[f64] {
        &self.coeffs[tri_index(j, 0)..=tri_index(j, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Re-expresses the jet at another cap, dropping or zero-filling degrees.
    pub fn with_cap(&self, cap: usize) -> Self {
        Self::from_fn(cap, |j, i| self.coeff(j, i))
    }

    fn check_cap(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.cap != other.cap {
            Err(Error::CapMismatch {
                op,
                left: self.cap,
                right: other.cap,
            })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_cap(other, "jet_add")?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_cap(other, "jet_sub")?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            cap: self.cap,
            coeffs,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            cap: self.cap,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor * other`, in place.
    pub fn axpy(&mut self, factor: f64, other: &Self) -> Result<()> {
        self.check_cap(other, "jet_axpy")?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Cauchy product truncated at the common cap.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_cap(other, "jet_mul")?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let cap = self.cap;
        let mut out = Self::zero(cap);
        for ja in 0..=cap {
            let block_a = self.degree_block(ja);
            if block_a.iter().all(|&c| c == 0.0) {
                continue;
            }
            for jb in 0..=cap - ja {
                let block_b = other.degree_block(jb);
                let base = tri_index(ja + jb, 0);
                for (ia, &ca) in block_a.iter().enumerate() {
                    if ca == 0.0 {
                        continue;
                    }
                    for (ib, &cb) in block_b.iter().enumerate() {
                        out.coeffs[base + ia + ib] += ca * cb;
                    }
                }
            }
        }
        out
    }

    /// Truncated `self^power`.
    pub fn powi(&self, power: usize) -> Self {
        let mut acc = Self::one(self.cap);
        for _ in 0..power {
            acc = acc.mul_unchecked(self);
        }
        acc
    }

    /// `self(inner.y1, inner.y2)`, truncated at the common cap.
    pub fn compose(&self, inner: &JetPair, constants: ConstantTerm) -> Result<Self> {
        self.check_cap(&inner.y1, "jet_compose")?;
        if constants == ConstantTerm::Reject {
            let c1 = inner.y1.coeff(0, 0);
            let c2 = inner.y2.coeff(0, 0);
            if c1 != 0.0 || c2 != 0.0 {
                return Err(Error::Domain {
                    op: "jet_compose",
                    detail: alloc::format!(
                        "inner constant terms ({c1:e}, {c2:e}) are non-zero; truncation would be invalid"
                    ),
                });
            }
        }
        let cap = self.cap;
        let pow1 = power_table(&inner.y1, cap);
        let pow2 = power_table(&inner.y2, cap);
        let mut out = Self::zero(cap);
        for (j, i) in monomials(cap) {
            let c = self.coeffs[tri_index(j, i)];
            if c == 0.0 {
                continue;
            }
            let term = pow1[j - i].mul_unchecked(&pow2[i]);
            for (o, t) in out.coeffs.iter_mut().zip(&term.coeffs) {
                *o += c * t;
            }
        }
        Ok(out)
    }

    /// Mixed partial `d^(i+j) / dY1^i dY2^j` at the origin.
    pub fn partial(&self, i: usize, j: usize) -> Result<f64> {
        let degree = i + j;
        if degree > self.cap {
            return Err(Error::OutOfRange {
                op: "jet_partial",
                detail: alloc::format!("order {degree} exceeds cap {}", self.cap),
            });
        }
        Ok(factorial(i) * factorial(j) * self.coeffs[tri_index(degree, j)])
    }

    /// Evaluates the truncated polynomial at `(y1, y2)`.
    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        let mut p1 = vec![1.0; self.cap + 1];
        let mut p2 = vec![1.0; self.cap + 1];
        for k in 1..=self.cap {
            p1[k] = p1[k - 1] * y1;
            p2[k] = p2[k - 1] * y2;
        }
        monomials(self.cap)
            .zip(&self.coeffs)
            .map(|((j, i), &c)| c * p1[j - i] * p2[i])
            .sum()
    }
}

fn power_table(jet: &Jet2, max_power: usize) -> Vec<Jet2> {
    let mut table = Vec::with_capacity(max_power + 1);
    table.push(Jet2::one(jet.cap));
    for p in 1..=max_power {
        let next = table[p - 1].mul_unchecked(jet);
        table.push(next);
    }
    table
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl Index<(usize, usize)> for Jet2 {
    type Output = f64;
    fn index(&self, (j, i): (usize, usize)) -> &f64 {
        &self.coeffs[tri_index(j, i)]
    }
}

impl IndexMut<(usize, usize)> for Jet2 {
    fn index_mut(&mut self, (j, i): (usize, usize)) -> &mut f64 {
        &mut self.coeffs[tri_index(j, i)]
    }
}

/// The two `ybar` components of a restricted map, sharing one cap.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JetPair {
    pub y1: Jet2,
    pub y2: Jet2,
}

impl JetPair {
    pub fn new(y1: Jet2, y2: Jet2) -> Result<Self> {
        y1.check_cap(&y2, "jet_pair")?;
        Ok(Self { y1, y2 })
    }

    pub fn zero(cap: usize) -> Self {
        Self {
            y1: Jet2::zero(cap),
            y2: Jet2::zero(cap),
        }
    }

    /// `(Y1, Y2)`.
    pub fn identity(cap: usize) -> Self {
        Self {
            y1: Jet2::y1(cap),
            y2: Jet2::y2(cap),
        }
    }

    #[inline]
    pub fn cap(&self) -> usize {
        self.y1.cap
    }

    pub fn component(&self, c: usize) -> &Jet2 {
        match c {
            0 => &self.y1,
            _ => &self.y2,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.y1.max_abs().max(self.y2.max_abs())
    }

    pub fn with_cap(&self, cap: usize) -> Self {
        Self {
            y1: self.y1.with_cap(cap),
            y2: self.y2.with_cap(cap),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            y1: self.y1.scale(factor),
            y2: self.y2.scale(factor),
        }
    }

    /// Applies the 2x2 matrix `m` to the pair, componentwise in the monomials.
    pub fn transform(&self, m: [[f64; 2]; 2]) -> Self {
        let y1 = Jet2::from_fn(self.cap(), |j, i| {
            m[0][0] * self.y1.coeff(j, i) + m[0][1] * self.y2.coeff(j, i)
        });
        let y2 = Jet2::from_fn(self.cap(), |j, i| {
            m[1][0] * self.y1.coeff(j, i) + m[1][1] * self.y2.coeff(j, i)
        });
        Self { y1, y2 }
    }

    pub fn compose(&self, inner: &JetPair, constants: ConstantTerm) -> Result<Self> {
        Ok(Self {
            y1: self.y1.compose(inner, constants)?,
            y2: self.y2.compose(inner, constants)?,
        })
    }

    pub fn eval(&self, y1: f64, y2: f64) -> (f64, f64) {
        (self.y1.eval(y1, y2), self.y2.eval(y1, y2))
    }
}
