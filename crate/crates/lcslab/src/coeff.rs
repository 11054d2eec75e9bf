//! The polynomial-exponential coefficient algebra: finite sums of terms
//! `c * prod_i x_i^{a_i} * e^{<k, x>}` with exact coefficients.
//!
//! The ring is closed under addition, multiplication, partial derivatives,
//! affine substitution and definite integration over the unit box, which is
//! everything the symbolic layer needs. Coefficients live in [`ExpScalar`]
//! so that affine shifts of exponentials (which produce constants like `e`)
//! stay inside the algebra.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Zero};

use crate::scalar::{integrate_power_exp, rat_to_f64, ExpScalar, Rational};
use crate::{Error, Result};

/// Monomial key: exponent vector of the polynomial part and the linear slope
/// of the exponential part. Generators `x^a e^{<k,x>}` are linearly
/// independent, so syntactic equality on canonical form is sound.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct MonomialKey {
    pub powers: Vec<u32>,
    pub kvec: Vec<Rational>,
}

/// Exact function `sum c * x^a e^{<k,x>}` on `R^n`, canonically sorted with
/// no zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoeffFn {
    dim: usize,
    terms: BTreeMap<MonomialKey, ExpScalar>,
}

impl CoeffFn {
    pub fn zero(dim: usize) -> Self {
        CoeffFn { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: ExpScalar) -> Self {
        let mut f = CoeffFn::zero(dim);
        f.add_term(vec![0; dim], vec![Rational::zero(); dim], c);
        f
    }

    pub fn one(dim: usize) -> Self {
        CoeffFn::constant(dim, ExpScalar::one())
    }

    pub fn rational(dim: usize, q: Rational) -> Self {
        CoeffFn::constant(dim, ExpScalar::from_rational(q))
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(dim: usize, axis: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::AxisOutOfRange(axis, dim));
        }
        let mut powers = vec![0; dim];
        powers[axis] = 1;
        let mut f = CoeffFn::zero(dim);
        f.add_term(powers, vec![Rational::zero(); dim], ExpScalar::one());
        Ok(f)
    }

    /// `e^{<k, x>}`.
    pub fn exp_linear(dim: usize, kvec: Vec<Rational>) -> Result<Self> {
        if kvec.len() != dim {
            return Err(Error::DimensionMismatch(kvec.len(), dim));
        }
        let mut f = CoeffFn::zero(dim);
        f.add_term(vec![0; dim], kvec, ExpScalar::one());
        Ok(f)
    }

    pub fn monomial(dim: usize, coeff: ExpScalar, powers: Vec<u32>, kvec: Vec<Rational>) -> Result<Self> {
        if powers.len() != dim || kvec.len() != dim {
            return Err(Error::DimensionMismatch(powers.len().max(kvec.len()), dim));
        }
        let mut f = CoeffFn::zero(dim);
        f.add_term(powers, kvec, coeff);
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, &ExpScalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, powers: Vec<u32>, kvec: Vec<Rational>, c: ExpScalar) {
        if c.is_zero() {
            return;
        }
        let key = MonomialKey { powers, kvec };
        let entry = self.terms.entry(key.clone()).or_insert_with(ExpScalar::zero);
        *entry = entry.add(&c);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn check_dim(&self, other: &CoeffFn) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn add(&self, other: &CoeffFn) -> Result<CoeffFn> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (key, c) in &other.terms {
            out.add_term(key.powers.clone(), key.kvec.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> CoeffFn {
        CoeffFn {
            dim: self.dim,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &CoeffFn) -> Result<CoeffFn> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CoeffFn) -> Result<CoeffFn> {
        self.check_dim(other)?;
        let mut out = CoeffFn::zero(self.dim);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let powers = k1.powers.iter().zip(&k2.powers).map(|(a, b)| a + b).collect();
                let kvec = k1.kvec.iter().zip(&k2.kvec).map(|(a, b)| a + b).collect();
                out.add_term(powers, kvec, c1.mul(c2));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &ExpScalar) -> CoeffFn {
        let mut out = CoeffFn::zero(self.dim);
        for (k, c0) in &self.terms {
            out.add_term(k.powers.clone(), k.kvec.clone(), c0.mul(c));
        }
        out
    }

    pub fn scale_rat(&self, q: &Rational) -> CoeffFn {
        self.scale(&ExpScalar::from_rational(q.clone()))
    }

    /// Exact partial derivative along `axis`.
    pub fn derive(&self, axis: usize) -> Result<CoeffFn> {
        if axis >= self.dim {
            return Err(Error::AxisOutOfRange(axis, self.dim));
        }
        let mut out = CoeffFn::zero(self.dim);
        for (key, c) in &self.terms {
            let a = key.powers[axis];
            if a > 0 {
                let mut powers = key.powers.clone();
                powers[axis] = a - 1;
                out.add_term(powers, key.kvec.clone(), c.scale(&Rational::from_integer(a.into())));
            }
            let k = &key.kvec[axis];
            if !k.is_zero() {
                out.add_term(key.powers.clone(), key.kvec.clone(), c.scale(k));
            }
        }
        Ok(out)
    }

    /// Exact integral over the unit box `[0,1]^n`; the result is an element
    /// of `Q[e^Q]`.
    pub fn integrate_box(&self) -> ExpScalar {
        let mut total = ExpScalar::zero();
        for (key, c) in &self.terms {
            let mut factor = c.clone();
            for axis in 0..self.dim {
                factor = factor.mul(&integrate_power_exp(key.powers[axis], &key.kvec[axis]));
            }
            total = total.add(&factor);
        }
        total
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut total = 0.0;
        for (key, c) in &self.terms {
            let mut v = c.eval();
            for axis in 0..self.dim {
                v *= point[axis].powi(key.powers[axis] as i32);
                v *= (rat_to_f64(&key.kvec[axis]) * point[axis]).exp();
            }
            total += v;
        }
        total
    }

    /// Substitute `x -> Ax + b` with rational `A`, `b`; requires `A`
    /// invertible (checked by the caller via [`crate::linalg`]).
    pub fn pullback_affine(&self, a: &[Vec<Rational>], b: &[Rational]) -> Result<CoeffFn> {
        let n = self.dim;
        if a.len() != n || b.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(a.len(), n));
        }
        // Precompute the substituted coordinates (Ax + b)_i as CoeffFns.
        let mut subst = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = CoeffFn::rational(n, b[i].clone());
            for (j, coeff) in a[i].iter().enumerate() {
                if !coeff.is_zero() {
                    s = s.add(&CoeffFn::coordinate(n, j)?.scale_rat(coeff))?;
                }
            }
            subst.push(s);
        }
        let mut out = CoeffFn::zero(n);
        for (key, c) in &self.terms {
            // e^{<k, Ax + b>} = e^{<k, b>} e^{<A^T k, x>}
            let shift: Rational = (0..n).map(|i| &key.kvec[i] * &b[i]).sum();
            let mut slope = vec![Rational::zero(); n];
            for (j, s) in slope.iter_mut().enumerate() {
                *s = (0..n).map(|i| &key.kvec[i] * &a[i][j]).sum();
            }
            let mut term = CoeffFn::monomial(n, c.mul(&ExpScalar::term(Rational::one(), shift)), vec![0; n], slope)?;
            for (axis, &p) in key.powers.iter().enumerate() {
                for _ in 0..p {
                    term = term.mul(&subst[axis])?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Is this a unit of the algebra, i.e. a single term `c * e^{<k,x>}`
    /// with unit `c` and no polynomial part?
    pub fn as_unit_term(&self) -> Option<(ExpScalar, Vec<Rational>)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (key, c) = self.terms.iter().next().unwrap();
        if key.powers.iter().any(|&p| p != 0) {
            return None;
        }
        c.as_single_term()?;
        Some((c.clone(), key.kvec.clone()))
    }

    /// Exact division by a unit term `c * e^{<k,x>}`.
    pub fn div_unit(&self, unit: &CoeffFn) -> Result<CoeffFn> {
        self.check_dim(unit)?;
        let (c, kvec) = unit.as_unit_term().ok_or(Error::NonUnitDivisor)?;
        let inv = c.inverse_unit()?;
        let mut out = CoeffFn::zero(self.dim);
        for (key, coeff) in &self.terms {
            let new_k = key.kvec.iter().zip(&kvec).map(|(a, b)| a - b).collect();
            out.add_term(key.powers.clone(), new_k, coeff.mul(&inv));
        }
        Ok(out)
    }

    /// Extract a constant `ExpScalar` if the function has no coordinate
    /// dependence.
    pub fn as_constant(&self) -> Option<ExpScalar> {
        match self.terms.len() {
            0 => Some(ExpScalar::zero()),
            1 => {
                let (key, c) = self.terms.iter().next().unwrap();
                if key.powers.iter().all(|&p| p == 0) && key.kvec.iter().all(|k| k.is_zero()) {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// If the function is affine-linear with zero exponential part, return
    /// `(constant, slope)`. Used by conformal rescaling, where `e^h` must be
    /// representable in the algebra.
    pub fn as_affine_linear(&self) -> Option<(Rational, Vec<Rational>)> {
        let mut c0 = Rational::zero();
        let mut slope = vec![Rational::zero(); self.dim];
        for (key, c) in &self.terms {
            if key.kvec.iter().any(|k| !k.is_zero()) {
                return None;
            }
            let q = c.as_rational()?;
            let degree: u32 = key.powers.iter().sum();
            match degree {
                0 => c0 = q,
                1 => {
                    let axis = key.powers.iter().position(|&p| p == 1).unwrap();
                    slope[axis] = q;
                }
                _ => return None,
            }
        }
        Some((c0, slope))
    }
}

impl fmt::Display for CoeffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (key, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (axis, &p) in key.powers.iter().enumerate() {
                if p > 0 {
                    write!(f, "*x{axis}^{p}")?;
                }
            }
            for (axis, k) in key.kvec.iter().enumerate() {
                if !k.is_zero() {
                    write!(f, "*e^({}x{axis})", crate::scalar::rational_to_string(k))?;
                }
            }
        }
        Ok(())
    }
}
