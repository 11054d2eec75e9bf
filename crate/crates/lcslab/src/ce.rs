//! Exact twisted Chevalley-Eilenberg complex: Lichnerowicz cohomology of
//! nilmanifolds from Lie-algebra structure constants and an invariant Lee
//! form, over exact rationals.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::linalg;
use crate::scalar::Rational;
use crate::{Error, Result};

/// Finite-dimensional Lie algebra given by structure constants
/// `[X_i, X_j] = sum_k c^k_{ij} X_k` for `i < j`. The Jacobi identity is
/// checked exactly at construction.
#[derive(Clone, Debug)]
pub struct LieAlgebraSpec {
    dim: usize,
    /// `brackets[(i, j)] = vec of (k, c)` for `i < j`.
    brackets: BTreeMap<(usize, usize), Vec<(usize, Rational)>>,
}

impl LieAlgebraSpec {
    pub fn new(dim: usize, brackets: Vec<(usize, usize, usize, Rational)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), Vec<(usize, Rational)>> = BTreeMap::new();
        for (i, j, k, c) in brackets {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::AxisOutOfRange(i.max(j).max(k), dim));
            }
            if i == j {
                return Err(Error::Precondition("bracket indices must differ".into()));
            }
            // Normalize to i < j using antisymmetry.
            let (i, j, c) = if i < j { (i, j, c) } else { (j, i, -c) };
            if c.is_zero() {
                continue;
            }
            map.entry((i, j)).or_default().push((k, c));
        }
        let spec = LieAlgebraSpec { dim, brackets: map };
        spec.check_jacobi()?;
        Ok(spec)
    }

    /// The abelian algebra (torus case).
    pub fn abelian(dim: usize) -> Self {
        LieAlgebraSpec { dim, brackets: BTreeMap::new() }
    }

    /// Kodaira-Thurston nilpotent algebra: invariant coframe with
    /// `de^1 = e^2 ^ e^4`, all others closed, i.e. `[X_2, X_4] = -X_1`.
    pub fn kodaira_thurston() -> Self {
        LieAlgebraSpec::new(4, vec![(1, 3, 0, -Rational::one())]).expect("KT algebra")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c^k_{ij}` for arbitrary index order.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> Rational {
        if i == j {
            return Rational::zero();
        }
        let (a, b, sign) = if i < j { (i, j, 1) } else { (j, i, -1) };
        let c = self
            .brackets
            .get(&(a, b))
            .and_then(|v| v.iter().find(|(t, _)| *t == k))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero);
        if sign < 0 {
            -c
        } else {
            c
        }
    }

    fn check_jacobi(&self) -> Result<()> {
        let m = self.dim;
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    for t in 0..m {
                        let mut sum = Rational::zero();
                        for l in 0..m {
                            sum += self.constant(j, k, l) * self.constant(i, l, t);
                            sum += self.constant(k, i, l) * self.constant(j, l, t);
                            sum += self.constant(i, j, l) * self.constant(k, l, t);
                        }
                        if !sum.is_zero() {
                            return Err(Error::JacobiViolation { i, j, k });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Basis of `Lambda^p`: strictly increasing index tuples in degree order.
fn basis_tuples(dim: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(p);
    fn rec(dim: usize, p: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == p {
            out.push(current.clone());
            return;
        }
        for i in start..dim {
            current.push(i);
            rec(dim, p, i + 1, current, out);
            current.pop();
        }
    }
    rec(dim, p, 0, &mut current, &mut out);
    out
}

/// Cochain on the invariant complex: rational coefficients over the sorted
/// tuple basis of one degree.
pub type InvariantCochain = Vec<Rational>;

/// The matrices of `d^omega : Lambda^p -> Lambda^{p+1}` for all degrees,
/// with consecutive compositions verified to vanish exactly.
#[derive(Clone, Debug)]
pub struct CeComplex {
    dim: usize,
    bases: Vec<Vec<Vec<usize>>>,
    /// `matrices[p]` has `dim Lambda^{p+1}` rows and `dim Lambda^p` columns.
    matrices: Vec<Vec<Vec<Rational>>>,
}

/// Verdict of an exact class-membership decision.
#[derive(Clone, Debug)]
pub enum ClassDecision {
    /// The cocycle is a coboundary; a primitive is attached.
    ZeroClass { primitive: InvariantCochain },
    NonzeroClass,
}

/// Assemble the twisted complex for an invariant Lee covector
/// `omega = sum_i w_i e^i`.
pub fn build(spec: &LieAlgebraSpec, lee: &[Rational]) -> Result<CeComplex> {
    let m = spec.dim();
    if lee.len() != m {
        return Err(Error::DimensionMismatch(lee.len(), m));
    }
    let bases: Vec<Vec<Vec<usize>>> = (0..=m).map(|p| basis_tuples(m, p)).collect();
    // Index lookup per degree.
    let index: Vec<BTreeMap<Vec<usize>, usize>> = bases
        .iter()
        .map(|b| b.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect())
        .collect();

    // d e^k = -sum_{i<j} c^k_{ij} e^i ^ e^j, extended as an antiderivation;
    // then d^omega = d + omega ^ .
    let mut matrices = Vec::with_capacity(m);
    for p in 0..m {
        let rows = bases[p + 1].len();
        let cols = bases[p].len();
        let mut mat = vec![vec![Rational::zero(); cols]; rows];
        for (col, tuple) in bases[p].iter().enumerate() {
            // Derivation part: replace slot t by the image of e^{k_t}.
            for (slot, &k) in tuple.iter().enumerate() {
                for i in 0..m {
                    for j in i + 1..m {
                        let c = spec.constant(i, j, k);
                        if c.is_zero() {
                            continue;
                        }
                        // e^{k} -> -c e^i ^ e^j at position `slot`; the
                        // degree-2 block commutes past the earlier factors,
                        // so only the antiderivation sign (-1)^slot remains.
                        let coeff = if slot % 2 == 0 { -c } else { c };
                        let mut rest: Vec<usize> = tuple.clone();
                        rest.remove(slot);
                        if let Some((target, s)) = wedge_insert_pair(&rest, i, j) {
                            let row = index[p + 1][&target];
                            let v = &mat[row][col] + coeff * Rational::from_integer(s.into());
                            mat[row][col] = v;
                        }
                    }
                }
            }
            // Lee wedge part: omega ^ e^tuple.
            for (i, w) in lee.iter().enumerate() {
                if w.is_zero() || tuple.contains(&i) {
                    continue;
                }
                let pos = tuple.iter().filter(|&&t| t < i).count();
                let sign = if pos % 2 == 1 { -Rational::one() } else { Rational::one() };
                let mut target = tuple.clone();
                target.insert(pos, i);
                let row = index[p + 1][&target];
                let v = &mat[row][col] + w * sign;
                mat[row][col] = v;
            }
        }
        matrices.push(mat);
    }

    let complex = CeComplex { dim: m, bases, matrices };
    // The Lee covector must be closed in the complex.
    if !complex.apply(1, lee)?.iter().all(|v| v.is_zero()) {
        return Err(Error::LeeNotClosed);
    }
    // Exact check that consecutive matrices compose to zero.
    for p in 0..m - 1 {
        for col in 0..complex.dim_p(p) {
            let mut e = vec![Rational::zero(); complex.dim_p(p)];
            e[col] = Rational::one();
            let once = complex.apply(p, &e)?;
            let twice = complex.apply(p + 1, &once)?;
            if !twice.iter().all(|v| v.is_zero()) {
                return Err(Error::Precondition(format!("d^omega squared nonzero in degree {p}")));
            }
        }
    }
    Ok(complex)
}

/// Insert `e^i ^ e^j` (i < j) into the sorted tuple `rest` at the front and
/// normalize; returns the sorted target and parity sign.
fn wedge_insert_pair(rest: &[usize], i: usize, j: usize) -> Option<(Vec<usize>, i32)> {
    if rest.contains(&i) || rest.contains(&j) {
        return None;
    }
    // Parity = inversions of the sequence [i, j, rest...]; the (i, j) pair
    // itself is in order since i < j.
    let inversions = rest.iter().filter(|&&t| t < i).count() + rest.iter().filter(|&&t| t < j).count();
    let mut out = rest.to_vec();
    let pos_i = out.iter().filter(|&&t| t < i).count();
    out.insert(pos_i, i);
    let pos_j = out.iter().filter(|&&t| t < j).count();
    out.insert(pos_j, j);
    Some((out, if inversions % 2 == 1 { -1 } else { 1 }))
}

impl CeComplex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_p(&self, p: usize) -> usize {
        self.bases.get(p).map_or(0, |b| b.len())
    }

    pub fn basis(&self, p: usize) -> &[Vec<usize>] {
        &self.bases[p]
    }

    pub fn matrix(&self, p: usize) -> Option<&Vec<Vec<Rational>>> {
        self.matrices.get(p)
    }

    /// Apply `d^omega` to a degree-`p` cochain.
    pub fn apply(&self, p: usize, cochain: &[Rational]) -> Result<InvariantCochain> {
        if p >= self.dim {
            return Ok(Vec::new());
        }
        if cochain.len() != self.dim_p(p) {
            return Err(Error::DimensionMismatch(cochain.len(), self.dim_p(p)));
        }
        let mat = &self.matrices[p];
        Ok(mat
            .iter()
            .map(|row| row.iter().zip(cochain).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Twisted Betti numbers `b^p` for all degrees, by exact rank
    /// computation: `b^p = dim ker d_p - rank d_{p-1}`.
    pub fn betti(&self) -> Vec<usize> {
        let m = self.dim;
        let ranks: Vec<usize> = (0..m).map(|p| linalg::rank(&self.matrices[p])).collect();
        (0..=m)
            .map(|p| {
                let out_rank = if p < m { ranks[p] } else { 0 };
                let in_rank = if p > 0 { ranks[p - 1] } else { 0 };
                self.dim_p(p) - out_rank - in_rank
            })
            .collect()
    }

    /// Decide whether a cocycle bounds, returning an exact primitive when
    /// it does.
    pub fn class_decide(&self, p: usize, cocycle: &[Rational]) -> Result<ClassDecision> {
        let image = self.apply(p, cocycle)?;
        if !image.iter().all(|v| v.is_zero()) {
            return Err(Error::NotACocycle);
        }
        if cocycle.iter().all(|v| v.is_zero()) {
            return Ok(ClassDecision::ZeroClass { primitive: vec![Rational::zero(); self.dim_p(p.saturating_sub(1))] });
        }
        if p == 0 {
            return Ok(ClassDecision::NonzeroClass);
        }
        match linalg::solve(&self.matrices[p - 1], cocycle) {
            Some(primitive) => Ok(ClassDecision::ZeroClass { primitive }),
            None => Ok(ClassDecision::NonzeroClass),
        }
    }
}
