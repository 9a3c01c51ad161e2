//! Integer-coefficient Laurent polynomials on the d-torus.
//!
//! A point of the torus is given in additive coordinates `t` in
//! `[0,1)^d`; the multiplicative coordinates are `z_c = exp(2*pi*i*t_c)`
//! and a term `c * z^f` evaluates to `c * exp(2*pi*i*<f,t>)`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPolynomial {
    dim: usize,
    // exponent vector -> coefficient; zero coefficients are never stored
    terms: BTreeMap<Vec<i64>, i64>,
}

impl LaurentPolynomial {
    pub fn zero(dim: usize) -> Self {
        LaurentPolynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: i64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(&vec![0; dim], c);
        p
    }

    pub fn monomial(exponents: &[i64], c: i64) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// Sum of `z^f` over a set of lattice points, all coefficients 1.
    pub fn from_support(dim: usize, points: &[Vec<i64>]) -> Self {
        let mut p = Self::zero(dim);
        for f in points {
            assert_eq!(f.len(), dim);
            p.add_term(f, 1);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, exponents: &[i64], c: i64) {
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(exponents.to_vec()).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.remove(exponents);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i64], i64)> {
        self.terms.iter().map(|(f, &c)| (f.as_slice(), c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn coefficient(&self, exponents: &[i64]) -> i64 {
        self.terms.get(exponents).copied().unwrap_or(0)
    }

    pub fn sub(&self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (f, c) in rhs.terms() {
            out.add_term(f, -c);
        }
        out
    }

    pub fn add(&self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (f, c) in rhs.terms() {
            out.add_term(f, c);
        }
        out
    }

    pub fn mul(&self, rhs: &LaurentPolynomial) -> LaurentPolynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = Self::zero(self.dim);
        let mut buf = vec![0i64; self.dim];
        for (f, a) in self.terms() {
            for (g, b) in rhs.terms() {
                for c in 0..self.dim {
                    buf[c] = f[c] + g[c];
                }
                out.add_term(&buf, a * b);
            }
        }
        out
    }

    /// Multiplies by the monomial `z^shift`.
    pub fn shifted(&self, shift: &[i64]) -> LaurentPolynomial {
        assert_eq!(shift.len(), self.dim);
        let mut out = Self::zero(self.dim);
        for (f, c) in self.terms() {
            let g: Vec<i64> = f.iter().zip(shift).map(|(a, b)| a + b).collect();
            out.add_term(&g, c);
        }
        out
    }

    /// Evaluates at `z = exp(2 pi i t)` componentwise.
    pub fn eval_torus(&self, t: &[f64]) -> Complex64 {
        assert_eq!(t.len(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for (f, c) in self.terms() {
            let phase: f64 = f.iter().zip(t).map(|(&fc, &tc)| fc as f64 * tc).sum();
            acc += (c as f64) * Complex64::from_polar(1.0, TAU * phase);
        }
        acc
    }

    /// Univariate view: `(lowest exponent, dense coefficients)` so that
    /// `p(z) = z^low * sum_k coeffs[k] z^k` with `coeffs[0] != 0`.
    pub fn univariate_coefficients(&self) -> Result<(i64, Vec<i64>)> {
        if self.dim != 1 {
            return Err(Error::BadParameter(format!(
                "univariate view requires dim 1, got {}",
                self.dim
            )));
        }
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let low = *self.terms.keys().next().unwrap().first().unwrap();
        let high = *self.terms.keys().next_back().unwrap().first().unwrap();
        let mut coeffs = vec![0i64; (high - low) as usize + 1];
        for (f, c) in self.terms() {
            coeffs[(f[0] - low) as usize] = c;
        }
        Ok((low, coeffs))
    }

    /// Largest absolute exponent appearing on any axis.
    pub fn support_radius(&self) -> i64 {
        self.terms
            .keys()
            .flat_map(|f| f.iter().map(|e| e.abs()))
            .max()
            .unwrap_or(0)
    }
}
