//! Exterior algebra over the polynomial-exponential coefficient ring:
//! wedge products, the exterior and Lichnerowicz differentials, interior
//! products, twisted Lie derivatives and affine pullbacks.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Zero};

use crate::coeff::CoeffFn;
use crate::linalg;
use crate::scalar::{ExpScalar, Rational};
use crate::{Error, Result};

/// Sparse exterior form: coefficients keyed by strictly increasing index
/// tuples, zero coefficients never stored. Sign bookkeeping happens at
/// insertion via permutation parity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, CoeffFn>,
}

/// Vector field with one coefficient function per coordinate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VectorField {
    dim: usize,
    components: Vec<CoeffFn>,
}

/// Invertible affine map `x -> Ax + b` with rational data; the symbolic
/// layer's model of deck transformations and coordinate changes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineMap {
    matrix: Vec<Vec<Rational>>,
    offset: Vec<Rational>,
}

/// Merge two strictly increasing tuples, returning the merged tuple and the
/// parity sign of the interleaving; `None` if they share an index.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut sign = 1;
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i >= a.len() || b[j] < a[i] {
            // b[j] jumps over the remaining a-entries.
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        } else {
            return None;
        }
    }
    Some((out, sign))
}

/// Insert one index into a strictly increasing tuple; sign is `(-1)^pos`.
fn insert_index(tuple: &[usize], idx: usize) -> Option<(Vec<usize>, i32)> {
    merge_indices(&[idx], tuple)
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Form { dim, degree, coeffs: BTreeMap::new() }
    }

    /// A 0-form from a coefficient function.
    pub fn from_function(f: CoeffFn) -> Self {
        let mut form = Form::zero(f.dim(), 0);
        form.add_term(&[], f).expect("0-form term");
        form
    }

    /// Basis monomial `c * dx_{i1} ^ ... ^ dx_{ip}`; indices may be unsorted
    /// and are normalized with sign.
    pub fn monomial(dim: usize, indices: &[usize], coeff: CoeffFn) -> Result<Self> {
        if coeff.dim() != dim {
            return Err(Error::DimensionMismatch(coeff.dim(), dim));
        }
        let mut form = Form::zero(dim, indices.len());
        form.add_term(indices, coeff)?;
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &CoeffFn)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, indices: &[usize]) -> CoeffFn {
        self.coeffs.get(indices).cloned().unwrap_or_else(|| CoeffFn::zero(self.dim))
    }

    /// Add `coeff * dx_I`, normalizing index order with sign. Repeated
    /// indices annihilate the term.
    pub fn add_term(&mut self, indices: &[usize], coeff: CoeffFn) -> Result<()> {
        if indices.len() != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, got: indices.len() });
        }
        if indices.iter().any(|&i| i >= self.dim) {
            return Err(Error::AxisOutOfRange(*indices.iter().max().unwrap(), self.dim));
        }
        if coeff.is_zero() {
            return Ok(());
        }
        // Sort by insertion, tracking parity.
        let mut sorted: Vec<usize> = Vec::with_capacity(indices.len());
        let mut sign = 1i32;
        for &idx in indices {
            if sorted.contains(&idx) {
                return Ok(()); // dx_i ^ dx_i = 0
            }
            // Appending dx_idx walks it past every larger index already placed.
            let larger = sorted.iter().filter(|&&s| s > idx).count();
            if larger % 2 == 1 {
                sign = -sign;
            }
            let pos = sorted.len() - larger;
            sorted.insert(pos, idx);
        }
        let signed = if sign < 0 { coeff.neg() } else { coeff };
        let entry = self.coeffs.entry(sorted.clone()).or_insert_with(|| CoeffFn::zero(self.dim));
        *entry = entry.add(&signed)?;
        if entry.is_zero() {
            self.coeffs.remove(&sorted);
        }
        Ok(())
    }

    fn check_compat(&self, other: &Form) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.check_compat(other)?;
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(Error::DegreeMismatch { expected: self.degree, got: other.degree });
        }
        let mut out = self.clone();
        for (key, c) in &other.coeffs {
            out.add_term(key, c.clone())?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> Form {
        Form {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.add(&other.neg())
    }

    pub fn scale_fn(&self, f: &CoeffFn) -> Result<Form> {
        let mut out = Form::zero(self.dim, self.degree);
        for (key, c) in &self.coeffs {
            out.add_term(key, c.mul(f)?)?;
        }
        Ok(out)
    }

    pub fn scale_rat(&self, q: &Rational) -> Form {
        let mut out = Form::zero(self.dim, self.degree);
        for (key, c) in &self.coeffs {
            out.add_term(key, c.scale_rat(q)).expect("same degree");
        }
        out
    }

    pub fn scale_exp(&self, c: &ExpScalar) -> Form {
        let mut out = Form::zero(self.dim, self.degree);
        for (key, f) in &self.coeffs {
            out.add_term(key, f.scale(c)).expect("same degree");
        }
        out
    }

    /// Graded-commutative wedge product.
    pub fn wedge(&self, other: &Form) -> Result<Form> {
        self.check_compat(other)?;
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Ok(Form::zero(self.dim, self.dim.min(degree)));
        }
        let mut out = Form::zero(self.dim, degree);
        for (ka, ca) in &self.coeffs {
            for (kb, cb) in &other.coeffs {
                if let Some((merged, sign)) = merge_indices(ka, kb) {
                    let mut c = ca.mul(cb)?;
                    if sign < 0 {
                        c = c.neg();
                    }
                    out.add_term(&merged, c)?;
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative; `d o d = 0` exactly.
    pub fn ext_d(&self) -> Result<Form> {
        let mut out = Form::zero(self.dim, (self.degree + 1).min(self.dim));
        if self.degree >= self.dim {
            return Ok(out);
        }
        for (key, c) in &self.coeffs {
            for axis in 0..self.dim {
                if key.contains(&axis) {
                    continue;
                }
                let dc = c.derive(axis)?;
                if dc.is_zero() {
                    continue;
                }
                let (merged, sign) = insert_index(key, axis).expect("axis not in key");
                out.add_term(&merged, if sign < 0 { dc.neg() } else { dc })?;
            }
        }
        Ok(out)
    }

    /// Interior product `i_X`; antiderivation of degree -1.
    pub fn interior(&self, x: &VectorField) -> Result<Form> {
        if x.dim != self.dim {
            return Err(Error::DimensionMismatch(x.dim, self.dim));
        }
        if self.degree == 0 {
            return Ok(Form::zero(self.dim, 0));
        }
        let mut out = Form::zero(self.dim, self.degree - 1);
        for (key, c) in &self.coeffs {
            for (pos, &axis) in key.iter().enumerate() {
                let comp = &x.components[axis];
                if comp.is_zero() {
                    continue;
                }
                let mut rest = key.clone();
                rest.remove(pos);
                let mut term = c.mul(comp)?;
                if pos % 2 == 1 {
                    term = term.neg();
                }
                out.add_term(&rest, term)?;
            }
        }
        Ok(out)
    }

    /// The Lichnerowicz differential `d + lee ^ .`; requires `d(lee) = 0`
    /// so that the operator squares to zero.
    pub fn twisted_d(&self, lee: &Form) -> Result<Form> {
        check_lee(lee, self.dim)?;
        self.ext_d()?.add(&lee.wedge(self)?)
    }

    /// Twisted Lie derivative, defined by the Cartan formula with the
    /// twisted differential. Equals `L_X + lee(X)` as an identity.
    pub fn lie_twisted(&self, x: &VectorField, lee: &Form) -> Result<Form> {
        check_lee(lee, self.dim)?;
        let a = self.interior(x)?.twisted_d(lee)?;
        let b = self.twisted_d(lee)?.interior(x)?;
        a.add(&b)
    }

    /// Plain Lie derivative (the untwisted case of the Cartan formula).
    pub fn lie(&self, x: &VectorField) -> Result<Form> {
        self.lie_twisted(x, &Form::zero(self.dim, 1))
    }

    /// Pullback along an affine map: coefficients substitute through the map
    /// and each `dx_i` becomes the constant 1-form given by row `i` of `A`.
    pub fn pullback(&self, map: &AffineMap) -> Result<Form> {
        if map.dim() != self.dim {
            return Err(Error::DimensionMismatch(map.dim(), self.dim));
        }
        let mut out = Form::zero(self.dim, self.degree);
        for (key, c) in &self.coeffs {
            let pulled_c = c.pullback_affine(&map.matrix, &map.offset)?;
            let mut term = Form::from_function(pulled_c);
            for &axis in key {
                let mut row = Form::zero(self.dim, 1);
                for (j, a) in map.matrix[axis].iter().enumerate() {
                    if !a.is_zero() {
                        row.add_term(&[j], CoeffFn::rational(self.dim, a.clone()))?;
                    }
                }
                term = term.wedge(&row)?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// `p`-th wedge power.
    pub fn power(&self, p: usize) -> Result<Form> {
        let mut out = Form::from_function(CoeffFn::one(self.dim));
        for _ in 0..p {
            out = out.wedge(self)?;
        }
        Ok(out)
    }
}

fn check_lee(lee: &Form, dim: usize) -> Result<()> {
    if lee.dim != dim {
        return Err(Error::DimensionMismatch(lee.dim, dim));
    }
    if !lee.is_zero() && lee.degree != 1 {
        return Err(Error::DegreeMismatch { expected: 1, got: lee.degree });
    }
    if !lee.ext_d()?.is_zero() {
        return Err(Error::LeeNotClosed);
    }
    Ok(())
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (idx, (key, c)) in self.coeffs.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{c}]")?;
            for &i in key {
                write!(f, " dx{i}")?;
            }
        }
        Ok(())
    }
}

impl VectorField {
    pub fn zero(dim: usize) -> Self {
        VectorField { dim, components: vec![CoeffFn::zero(dim); dim] }
    }

    pub fn new(components: Vec<CoeffFn>) -> Result<Self> {
        let dim = components.len();
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch(c.dim(), dim));
            }
        }
        Ok(VectorField { dim, components })
    }

    /// The coordinate field `d/dx_axis`.
    pub fn basis(dim: usize, axis: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::AxisOutOfRange(axis, dim));
        }
        let mut v = VectorField::zero(dim);
        v.components[axis] = CoeffFn::one(dim);
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[CoeffFn] {
        &self.components
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(comps)
    }

    pub fn neg(&self) -> VectorField {
        VectorField { dim: self.dim, components: self.components.iter().map(|c| c.neg()).collect() }
    }

    pub fn scale_rat(&self, q: &Rational) -> VectorField {
        VectorField { dim: self.dim, components: self.components.iter().map(|c| c.scale_rat(q)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<Rational>>, offset: Vec<Rational>) -> Result<Self> {
        let n = matrix.len();
        if offset.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(offset.len(), n));
        }
        if !linalg::is_invertible(&matrix) {
            return Err(Error::SingularMap);
        }
        Ok(AffineMap { matrix, offset })
    }

    pub fn identity(dim: usize) -> Self {
        let matrix = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        AffineMap { matrix, offset: vec![Rational::zero(); dim] }
    }

    /// Pure translation.
    pub fn translation(offset: Vec<Rational>) -> Self {
        let mut map = AffineMap::identity(offset.len());
        map.offset = offset;
        map
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.matrix
    }

    pub fn offset(&self) -> &[Rational] {
        &self.offset
    }

    /// Composition `self` after `other`: `x -> self(other(x))`.
    pub fn compose(&self, other: &AffineMap) -> Result<AffineMap> {
        let n = self.dim();
        if other.dim() != n {
            return Err(Error::DimensionMismatch(other.dim(), n));
        }
        let mut matrix = vec![vec![Rational::zero(); n]; n];
        let mut offset = self.offset.clone();
        for i in 0..n {
            for j in 0..n {
                matrix[i][j] = (0..n).map(|k| &self.matrix[i][k] * &other.matrix[k][j]).sum();
            }
            let shift: Rational = (0..n).map(|k| &self.matrix[i][k] * &other.offset[k]).sum();
            offset[i] = &offset[i] + &shift;
        }
        Ok(AffineMap { matrix, offset })
    }
}
