//! Exact scalars: arbitrary-precision rationals and the ring of finite sums
//! `sum q_j * e^{r_j}` with rational `q_j`, `r_j`.
//!
//! Box integrals of the coefficient algebra land in this ring, so values like
//! `e - 1` are represented exactly as `{(-1, 0), (1, 1)}`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::fmt;

use crate::{Error, Result};

/// Exact rational number. `num` keeps the denominator positive and the
/// fraction reduced, which matches the canonical-form contract.
pub type Rational = BigRational;

pub fn rat_i64(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(q: &Rational) -> f64 {
    // BigRational::to_f64 can overflow for huge numerators; split the division.
    let n = q.numer();
    let d = q.denom();
    num::ToPrimitive::to_f64(n).unwrap_or(f64::INFINITY) / num::ToPrimitive::to_f64(d).unwrap_or(1.0)
}

/// Parse a rational from a decimal string: `"-3"`, `"2/7"` or `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad(s))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad(s))?;
        if d.is_zero() {
            return Err(bad(s));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad(s))?
        };
        let digits: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().map_err(|_| bad(s))? };
        if digits.is_negative() {
            return Err(bad(s));
        }
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = Rational::new(digits, den) * Rational::from_integer(BigInt::from(sign));
        return Ok(Rational::from_integer(int) + frac_part);
    }
    let n: BigInt = s.parse().map_err(|_| bad(s))?;
    Ok(Rational::from_integer(n))
}

fn bad(s: &str) -> Error {
    Error::Parse(format!("invalid rational literal: {s:?}"))
}

/// Render a rational as a decimal string, `"p"` or `"p/q"`.
pub fn rational_to_string(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Exact element of the ring `Q[e^Q]`: a finite sum of terms `q * e^r`.
///
/// Canonical form keeps terms sorted by strictly increasing exponent with no
/// zero coefficients; equality is term-list equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpScalar {
    terms: Vec<(Rational, Rational)>,
}

impl ExpScalar {
    pub fn zero() -> Self {
        ExpScalar { terms: Vec::new() }
    }

    pub fn one() -> Self {
        ExpScalar::from_rational(Rational::one())
    }

    pub fn from_rational(q: Rational) -> Self {
        ExpScalar::term(q, Rational::zero())
    }

    pub fn from_i64(n: i64) -> Self {
        ExpScalar::from_rational(rat_i64(n))
    }

    /// The single term `q * e^r`.
    pub fn term(q: Rational, r: Rational) -> Self {
        if q.is_zero() {
            ExpScalar::zero()
        } else {
            ExpScalar { terms: vec![(q, r)] }
        }
    }

    pub fn from_terms(terms: Vec<(Rational, Rational)>) -> Self {
        let mut out = ExpScalar::zero();
        for (q, r) in terms {
            out = out.add(&ExpScalar::term(q, r));
        }
        out
    }

    pub fn terms(&self) -> &[(Rational, Rational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &ExpScalar) -> ExpScalar {
        // Merge two sorted term lists.
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            if j >= other.terms.len() || (i < self.terms.len() && self.terms[i].1 < other.terms[j].1) {
                out.push(self.terms[i].clone());
                i += 1;
            } else if i >= self.terms.len() || other.terms[j].1 < self.terms[i].1 {
                out.push(other.terms[j].clone());
                j += 1;
            } else {
                let q = &self.terms[i].0 + &other.terms[j].0;
                if !q.is_zero() {
                    out.push((q, self.terms[i].1.clone()));
                }
                i += 1;
                j += 1;
            }
        }
        ExpScalar { terms: out }
    }

    pub fn neg(&self) -> ExpScalar {
        ExpScalar { terms: self.terms.iter().map(|(q, r)| (-q, r.clone())).collect() }
    }

    pub fn sub(&self, other: &ExpScalar) -> ExpScalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ExpScalar) -> ExpScalar {
        let mut out = ExpScalar::zero();
        for (q1, r1) in &self.terms {
            let part = ExpScalar {
                terms: other.terms.iter().map(|(q2, r2)| (q1 * q2, r1 + r2)).collect(),
            };
            // Exponents stay sorted under a constant shift, so `part` is canonical.
            out = out.add(&part);
        }
        out
    }

    pub fn scale(&self, q: &Rational) -> ExpScalar {
        if q.is_zero() {
            return ExpScalar::zero();
        }
        ExpScalar { terms: self.terms.iter().map(|(c, r)| (c * q, r.clone())).collect() }
    }

    /// Multiplicative inverse, defined only for single-term elements
    /// (the units `q * e^r` of the ring).
    pub fn inverse_unit(&self) -> Result<ExpScalar> {
        match self.terms.as_slice() {
            [(q, r)] => Ok(ExpScalar::term(q.recip(), -r)),
            _ => Err(Error::NonUnitDivisor),
        }
    }

    pub fn as_single_term(&self) -> Option<(&Rational, &Rational)> {
        match self.terms.as_slice() {
            [(q, r)] => Some((q, r)),
            _ => None,
        }
    }

    /// Extract a plain rational if the value has no exponential part.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(q, r)] if r.is_zero() => Some(q.clone()),
            _ => None,
        }
    }

    pub fn eval(&self) -> f64 {
        self.terms.iter().map(|(q, r)| rat_to_f64(q) * rat_to_f64(r).exp()).sum()
    }
}

impl fmt::Debug for ExpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (q, r)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            if r.is_zero() {
                write!(f, "{}", rational_to_string(q))?;
            } else {
                write!(f, "{}*e^{}", rational_to_string(q), rational_to_string(r))?;
            }
        }
        Ok(())
    }
}

/// Exact value of `int_0^1 x^m e^{kx} dx`.
///
/// For `k = 0` this is `1/(m+1)`; otherwise `I_0 = (e^k - 1)/k` and
/// `I_m = e^k/k - (m/k) I_{m-1}`.
pub fn integrate_power_exp(m: u32, k: &Rational) -> ExpScalar {
    if k.is_zero() {
        return ExpScalar::from_rational(Rational::new(BigInt::one(), BigInt::from(m + 1)));
    }
    let inv_k = k.recip();
    let mut acc = ExpScalar::term(inv_k.clone(), k.clone()).add(&ExpScalar::from_rational(-inv_k.clone()));
    for j in 1..=m {
        let lead = ExpScalar::term(inv_k.clone(), k.clone());
        acc = lead.sub(&acc.scale(&(rat_i64(j as i64) * &inv_k)));
    }
    acc
}
