//! Discrete twisted Hodge theory on flat periodic grids: sparse twisted
//! coboundaries, their adjoints, the twisted Laplacian, the three-way
//! orthogonal decomposition, and harmonic-space dimensions.
//!
//! The lattice works with a constant Lee covector on the n-torus; the
//! twisted wedge uses face-averaging so that the coboundary still squares
//! to zero and the adjoint is a plain matrix transpose under the uniform
//! cell inner product.

use nalgebra::{DMatrix, DVector};

use crate::form::Form;
use crate::{Error, Result};

/// Uniform periodic grid on `[0,1)^n` with `resolution` cells per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub resolution: usize,
}

impl Grid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Precondition("grid resolution must be at least 2".into()));
        }
        Ok(Grid { dim, resolution })
    }

    pub fn vertex_count(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn cochain_len(&self, degree: usize) -> usize {
        self.vertex_count() * binomial(self.dim, degree)
    }

    fn vertex_index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.resolution + (c % self.resolution))
    }

    fn vertex_coords(&self, mut index: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            coords[axis] = index % self.resolution;
            index /= self.resolution;
        }
        coords
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut out = 1usize;
    for i in 0..k.min(n - k) {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Strictly increasing `p`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(p);
    fn rec(n: usize, p: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, p, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, p, 0, &mut cur, &mut out);
    out
}

/// Discrete `p`-form: one value per (vertex, sorted axis subset) pair,
/// vertex-major layout.
#[derive(Clone, Debug)]
pub struct Cochain {
    pub degree: usize,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(grid: &Grid, degree: usize) -> Self {
        Cochain { degree, values: vec![0.0; grid.cochain_len(degree)] }
    }

    /// Sample a symbolic form at face barycenters: the `(v, S)` value is the
    /// coefficient `alpha_S` evaluated at the midpoint of the face spanned
    /// by `S` at vertex `v`.
    pub fn sample_form(grid: &Grid, form: &Form) -> Result<Self> {
        if form.dim() != grid.dim {
            return Err(Error::DimensionMismatch(form.dim(), grid.dim));
        }
        let p = form.degree();
        let subs = subsets(grid.dim, p);
        let mut values = Vec::with_capacity(grid.cochain_len(p));
        let h = 1.0 / grid.resolution as f64;
        for v in 0..grid.vertex_count() {
            let coords = grid.vertex_coords(v);
            for s in &subs {
                let point: Vec<f64> = (0..grid.dim)
                    .map(|axis| (coords[axis] as f64 + if s.contains(&axis) { 0.5 } else { 0.0 }) * h)
                    .collect();
                values.push(form.coeff(s).eval(&point));
            }
        }
        Ok(Cochain { degree: p, values })
    }

    pub fn norm(&self, ops: &TwistedOperators) -> f64 {
        ops.inner(self, self).sqrt()
    }
}

/// Sparse matrix in row-major adjacency form.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, entries: vec![Vec::new(); rows] }
    }

    fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries[row].push((col, value));
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        self.entries
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, row) in self.entries.iter().enumerate() {
            for &(c, v) in row {
                out[c] += v * x[r];
            }
        }
        out
    }

    pub fn max_abs_entry_of_product_with(&self, other: &SparseMatrix) -> f64 {
        // max |(self * other)[r][c]| without materializing the product.
        let mut max = 0.0f64;
        let mut acc: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        for row in &self.entries {
            acc.clear();
            for &(mid, v) in row {
                for &(c, w) in &other.entries[mid] {
                    *acc.entry(c).or_insert(0.0) += v * w;
                }
            }
            for v in acc.values() {
                max = max.max(v.abs());
            }
        }
        max
    }
}

/// The twisted operator family of one grid and constant Lee covector:
/// coboundaries for every degree; adjoints are transposes under the
/// uniform cell inner product.
#[derive(Clone, Debug)]
pub struct TwistedOperators {
    pub grid: Grid,
    pub lee: Vec<f64>,
    /// `d[p] : C^p -> C^{p+1}` for `p = 0..n-1`.
    d: Vec<SparseMatrix>,
}

/// Outcome of the three-way orthogonal decomposition
/// `alpha = d^w f + delta^w beta + h`.
#[derive(Clone, Debug)]
pub struct HodgeSplit {
    pub potential: Cochain,
    pub copotential: Cochain,
    pub exact: Cochain,
    pub coexact: Cochain,
    pub harmonic: Cochain,
    pub converged: bool,
}

/// Time-integrated split of a path of 1-cochains.
#[derive(Clone, Debug)]
pub struct FluxSplit {
    pub integrated_potential: Cochain,
    pub integrated_harmonic: Cochain,
    pub harmonic_magnitude: f64,
}

/// Assemble the operators. The coboundary is the forward-difference scaled
/// by `N`; the Lee wedge averages the two opposite faces along the inserted
/// axis so the twisted operator still squares to zero.
pub fn build_operators(grid: &Grid, lee: &[f64]) -> Result<TwistedOperators> {
    if lee.len() != grid.dim {
        return Err(Error::DimensionMismatch(lee.len(), grid.dim));
    }
    let n = grid.dim;
    let big_n = grid.resolution as f64;
    let mut d = Vec::with_capacity(n);
    for p in 0..n {
        let subs_lo = subsets(n, p);
        let subs_hi = subsets(n, p + 1);
        let lo_index: std::collections::HashMap<&[usize], usize> =
            subs_lo.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let mut mat = SparseMatrix::zeros(grid.cochain_len(p + 1), grid.cochain_len(p));
        let stride_hi = subs_hi.len();
        let stride_lo = subs_lo.len();
        for v in 0..grid.vertex_count() {
            let coords = grid.vertex_coords(v);
            for (si, s) in subs_hi.iter().enumerate() {
                let row = v * stride_hi + si;
                for (pos, &axis) in s.iter().enumerate() {
                    let mut rest = s.clone();
                    rest.remove(pos);
                    let t_idx = lo_index[rest.as_slice()];
                    let sign = if pos % 2 == 1 { -1.0 } else { 1.0 };
                    let mut shifted = coords.clone();
                    shifted[axis] = (shifted[axis] + 1) % grid.resolution;
                    let v_shift = grid.vertex_index(&shifted);
                    let w = lee[axis];
                    // d part: sign * N * (a(v+e) - a(v));
                    // wedge part: sign * w * (a(v) + a(v+e)) / 2.
                    mat.push(row, v_shift * stride_lo + t_idx, sign * (big_n + 0.5 * w));
                    mat.push(row, v * stride_lo + t_idx, sign * (-big_n + 0.5 * w));
                }
            }
        }
        d.push(mat);
    }
    Ok(TwistedOperators { grid: grid.clone(), lee: lee.to_vec(), d })
}

impl TwistedOperators {
    pub fn coboundary(&self, p: usize) -> Option<&SparseMatrix> {
        self.d.get(p)
    }

    /// Apply `d^w` to a `p`-cochain.
    pub fn apply_d(&self, alpha: &Cochain) -> Cochain {
        let p = alpha.degree;
        if p >= self.grid.dim {
            return Cochain::zeros(&self.grid, self.grid.dim.min(p + 1));
        }
        Cochain { degree: p + 1, values: self.d[p].matvec(&alpha.values) }
    }

    /// Apply the codifferential (adjoint of `d^w`) to a `p`-cochain.
    pub fn apply_delta(&self, alpha: &Cochain) -> Cochain {
        let p = alpha.degree;
        if p == 0 {
            return Cochain::zeros(&self.grid, 0);
        }
        Cochain { degree: p - 1, values: self.d[p - 1].matvec_transpose(&alpha.values) }
    }

    /// Uniform cell inner product with weight `N^{-n}`.
    pub fn inner(&self, a: &Cochain, b: &Cochain) -> f64 {
        let w = (self.grid.resolution as f64).powi(-(self.grid.dim as i32));
        a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() * w
    }

    /// Largest per-entry magnitude of `d^w_{p+1} d^w_p`; the assembly
    /// contract keeps this at rounding level.
    pub fn d_squared_max(&self, p: usize) -> f64 {
        if p + 1 >= self.d.len() {
            return 0.0;
        }
        self.d[p + 1].max_abs_entry_of_product_with(&self.d[p])
    }

    /// Orthogonal decomposition of a `p`-cochain by conjugate-gradient
    /// solves of the normal equations on each factor.
    pub fn hodge_split(&self, alpha: &Cochain) -> Result<HodgeSplit> {
        let p = alpha.degree;
        let n = self.grid.dim;
        let mut converged = true;

        let (potential, exact) = if p == 0 {
            (Cochain::zeros(&self.grid, 0), Cochain::zeros(&self.grid, 0))
        } else {
            let dm = &self.d[p - 1];
            let rhs = dm.matvec_transpose(&alpha.values);
            let (f, ok) = conjugate_gradient(
                |x| dm.matvec_transpose(&dm.matvec(x)),
                &rhs,
                1e-10,
                cg_iteration_cap(rhs.len()),
            );
            converged &= ok;
            let exact = dm.matvec(&f);
            (Cochain { degree: p - 1, values: f }, Cochain { degree: p, values: exact })
        };

        let (copotential, coexact) = if p >= n {
            (Cochain::zeros(&self.grid, p), Cochain::zeros(&self.grid, p))
        } else {
            let dp = &self.d[p];
            let rhs = dp.matvec(&alpha.values);
            let (b, ok) = conjugate_gradient(
                |x| dp.matvec(&dp.matvec_transpose(x)),
                &rhs,
                1e-10,
                cg_iteration_cap(rhs.len()),
            );
            converged &= ok;
            let coexact = dp.matvec_transpose(&b);
            (Cochain { degree: p + 1, values: b }, Cochain { degree: p, values: coexact })
        };

        let harmonic = Cochain {
            degree: p,
            values: alpha
                .values
                .iter()
                .zip(&exact.values)
                .zip(&coexact.values)
                .map(|((a, e), c)| a - e - c)
                .collect(),
        };
        Ok(HodgeSplit { potential, copotential, exact, coexact, harmonic, converged })
    }

    /// Dense twisted Laplacian in degree `p`.
    pub fn laplacian_dense(&self, p: usize) -> DMatrix<f64> {
        let size = self.grid.cochain_len(p);
        let mut delta = DMatrix::zeros(size, size);
        let mut basis = vec![0.0; size];
        for col in 0..size {
            basis[col] = 1.0;
            let mut out = vec![0.0; size];
            if p < self.grid.dim {
                let up = self.d[p].matvec(&basis);
                for (i, v) in self.d[p].matvec_transpose(&up).into_iter().enumerate() {
                    out[i] += v;
                }
            }
            if p > 0 {
                let down = self.d[p - 1].matvec_transpose(&basis);
                for (i, v) in self.d[p - 1].matvec(&down).into_iter().enumerate() {
                    out[i] += v;
                }
            }
            for (row, v) in out.into_iter().enumerate() {
                delta[(row, col)] = v;
            }
            basis[col] = 0.0;
        }
        delta
    }

    /// Dimension of the numerically harmonic space in degree `p`: the count
    /// of Laplacian eigenvalues below `rel_tol * lambda_max`.
    ///
    /// Dense symmetric eigensolve up to `DENSE_CAP` unknowns; shifted
    /// Lanczos with full reorthogonalization beyond that, up to the hard
    /// size cap.
    pub fn harmonic_dim(&self, p: usize, rel_tol: f64) -> Result<usize> {
        const DENSE_CAP: usize = 4096;
        const SIZE_CAP: usize = 20000;
        let size = self.grid.cochain_len(p);
        if size > SIZE_CAP {
            return Err(Error::Precondition(format!("degree-{p} cochain space of size {size} exceeds cap {SIZE_CAP}")));
        }
        if size <= DENSE_CAP {
            let delta = self.laplacian_dense(p);
            let eigen = delta.symmetric_eigen();
            let max = eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
            let tol = rel_tol * max.max(1.0);
            return Ok(eigen.eigenvalues.iter().filter(|&&v| v < tol).count());
        }
        self.harmonic_dim_lanczos(p, rel_tol, size)
    }

    fn harmonic_dim_lanczos(&self, p: usize, rel_tol: f64, size: usize) -> Result<usize> {
        // Shift-and-invert is unavailable without a factorization; instead
        // run Lanczos on sigma*I - Delta so the null space becomes the top
        // of the spectrum.
        let apply = |x: &[f64]| -> Vec<f64> {
            let c = Cochain { degree: p, values: x.to_vec() };
            let mut out = vec![0.0; size];
            if p < self.grid.dim {
                let up = self.apply_d(&c);
                for (i, v) in self.d[p].matvec_transpose(&up.values).into_iter().enumerate() {
                    out[i] += v;
                }
            }
            if p > 0 {
                let down = self.apply_delta(&c);
                for (i, v) in self.d[p - 1].matvec(&down.values).into_iter().enumerate() {
                    out[i] += v;
                }
            }
            out
        };
        // Gershgorin-style bound via a few power iterations.
        let mut v: Vec<f64> = (0..size).map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5).collect();
        let mut lambda_max = 1.0;
        for _ in 0..30 {
            let w = apply(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            lambda_max = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            v = w.iter().map(|x| x / norm).collect();
        }
        let sigma = lambda_max * 1.1 + 1.0;
        let shifted = |x: &[f64]| -> Vec<f64> {
            let ax = apply(x);
            x.iter().zip(ax).map(|(xi, axi)| sigma * xi - axi).collect()
        };
        let steps = 240.min(size);
        let (ritz, _) = lanczos_ritz(shifted, size, steps);
        let tol = rel_tol * lambda_max.max(1.0);
        Ok(ritz.iter().filter(|&&r| sigma - r < tol).count())
    }

    /// Split a sampled path of 1-cochains and integrate in time with the
    /// supplied quadrature weights.
    pub fn flux_split(&self, samples: &[Cochain], weights: &[f64]) -> Result<FluxSplit> {
        if samples.len() != weights.len() {
            return Err(Error::DimensionMismatch(samples.len(), weights.len()));
        }
        let mut pot = Cochain::zeros(&self.grid, 0);
        let mut harm = Cochain::zeros(&self.grid, 1);
        for (alpha, &w) in samples.iter().zip(weights) {
            if alpha.degree != 1 {
                return Err(Error::DegreeMismatch { expected: 1, got: alpha.degree });
            }
            let split = self.hodge_split(alpha)?;
            for (acc, v) in pot.values.iter_mut().zip(&split.potential.values) {
                *acc += w * v;
            }
            for (acc, v) in harm.values.iter_mut().zip(&split.harmonic.values) {
                *acc += w * v;
            }
        }
        let magnitude = harm.norm(self);
        Ok(FluxSplit { integrated_potential: pot, integrated_harmonic: harm, harmonic_magnitude: magnitude })
    }
}

fn cg_iteration_cap(size: usize) -> usize {
    10 * size + 1000
}

/// Conjugate gradient for a symmetric positive semi-definite operator with
/// RHS in its range; returns the iterate and a convergence flag.
fn conjugate_gradient<F>(apply: F, rhs: &[f64], rel_tol: f64, max_iter: usize) -> (Vec<f64>, bool)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let rhs_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rhs_norm == 0.0 {
        return (x, true);
    }
    let mut p = r.clone();
    let mut rs_old: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..max_iter {
        let ap = apply(&p);
        let p_ap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if p_ap.abs() < 1e-300 {
            break;
        }
        let alpha = rs_old / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        if rs_new.sqrt() <= rel_tol * rhs_norm {
            return (x, true);
        }
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    let converged = rs_old.sqrt() <= rel_tol * rhs_norm;
    (x, converged)
}

/// Lanczos with full reorthogonalization; returns the Ritz values of the
/// tridiagonal matrix and the number of steps taken.
fn lanczos_ritz<F>(apply: F, size: usize, steps: usize) -> (Vec<f64>, usize)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let v0 = DVector::from_fn(size, |i, _| (((i * 2654435761) % 10007) as f64 / 10007.0) - 0.5);
    let mut q_cur = v0.normalize();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut taken = 0;
    for step in 0..steps {
        let mut w = DVector::from_vec(apply(q_cur.as_slice()));
        let a = q_cur.dot(&w);
        alpha.push(a);
        w -= &q_cur * a;
        if let Some(prev_b) = beta.last() {
            let prev: &DVector<f64> = &q[step - 1];
            w -= prev * *prev_b;
        }
        // Full reorthogonalization keeps the Ritz multiplicities honest.
        for prev in &q {
            let proj = prev.dot(&w);
            w -= prev * proj;
        }
        q.push(q_cur.clone());
        taken = step + 1;
        let b = w.norm();
        if b < 1e-10 {
            // Krylov breakdown: restart with a fresh direction orthogonal to
            // everything seen so far (zero coupling keeps the tridiagonal
            // structure valid) to pick up remaining multiplicities.
            if taken >= size {
                break;
            }
            let mut fresh = DVector::from_fn(size, |i, _| {
                (((i.wrapping_mul(97) + step * 131 + 17) % 9973) as f64 / 9973.0) - 0.5
            });
            for prev in &q {
                let proj = prev.dot(&fresh);
                fresh -= prev * proj;
            }
            let norm = fresh.norm();
            if norm < 1e-10 {
                break;
            }
            beta.push(0.0);
            q_cur = fresh / norm;
            continue;
        }
        beta.push(b);
        q_cur = w / b;
    }
    // Ritz values of the symmetric tridiagonal matrix.
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    (t.symmetric_eigen().eigenvalues.iter().cloned().collect(), taken)
}
