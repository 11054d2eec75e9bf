//! The LCS structure layer: exact validation of the structure equation,
//! volume forms, the musical isomorphism induced by the 2-form, Hamiltonian
//! and strictly-LCS vector fields, conformal rescaling, and descent
//! diagnostics under lattice generators.

use num::Zero;

use crate::coeff::CoeffFn;
use crate::form::{AffineMap, Form, VectorField};
use crate::scalar::{rat_i64, ExpScalar, Rational};
use crate::{Error, Result};

/// Validated LCS structure `(Omega, lee)` on `R^{2m}` restricted to the
/// fundamental box. The optional potential `h` records the exact part of the
/// Lee form when the caller knows it (the harmonic part has no symbolic
/// meaning without a metric).
#[derive(Clone, Debug)]
pub struct LcsStructure {
    dim: usize,
    half_dim: usize,
    omega: Form,
    lee: Form,
    potential: Option<CoeffFn>,
}

/// Exact residuals of the two defining equations plus the volume form.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub lee_residual: Form,
    pub structure_residual: Form,
    pub volume: Option<Form>,
    pub pass: bool,
}

/// Result of the musical isomorphism: symbolic when the Pfaffian is a unit
/// of the coefficient algebra, otherwise pointwise numeric samples.
#[derive(Clone, Debug)]
pub enum SharpResult {
    Symbolic(VectorField),
    /// Pointwise solves at sample points; flagged, never silent.
    Numeric(Vec<NumericSample>),
}

#[derive(Clone, Debug)]
pub struct NumericSample {
    pub point: Vec<f64>,
    pub value: Vec<f64>,
}

/// Per-generator descent classification of a form.
#[derive(Clone, Debug)]
pub enum DescentVerdict {
    Invariant,
    /// Pullback equals a constant multiple of the form.
    Conformal(ExpScalar),
    /// Residual of `pullback - form`.
    Fails(Form),
}

/// Conformal rescaling output: the symplectic form `e^h Omega` together
/// with the multiplier used.
#[derive(Clone, Debug)]
pub struct Rescaled {
    pub omega_h: Form,
    pub exp_h: CoeffFn,
}

/// Exact check of `d(lee) = 0` and `d(Omega) + lee ^ Omega = 0`; residuals
/// are returned verbatim, never rounded.
pub fn validate(omega: &Form, lee: &Form) -> Result<ValidationReport> {
    let n = omega.dim();
    if lee.dim() != n {
        return Err(Error::DimensionMismatch(lee.dim(), n));
    }
    if omega.degree() != 2 && !omega.is_zero() {
        return Err(Error::DegreeMismatch { expected: 2, got: omega.degree() });
    }
    if lee.degree() != 1 && !lee.is_zero() {
        return Err(Error::DegreeMismatch { expected: 1, got: lee.degree() });
    }
    if n % 2 != 0 {
        return Err(Error::Precondition(format!("odd dimension {n}")));
    }
    let lee_residual = lee.ext_d()?;
    let structure_residual = omega.ext_d()?.add(&lee.wedge(omega)?)?;
    let top = omega.power(n / 2)?;
    let volume = if top.is_zero() { None } else { Some(top.scale_rat(&inv_factorial(n / 2))) };
    let pass = lee_residual.is_zero() && structure_residual.is_zero() && volume.is_some();
    Ok(ValidationReport { lee_residual, structure_residual, volume, pass })
}

fn inv_factorial(m: usize) -> Rational {
    let mut f = rat_i64(1);
    for k in 2..=m as i64 {
        f = f * rat_i64(k);
    }
    f.recip()
}

impl LcsStructure {
    /// Build and validate; fails unless both residuals vanish exactly and
    /// the top power of `Omega` certifies nondegeneracy.
    pub fn new(omega: Form, lee: Form, potential: Option<CoeffFn>) -> Result<Self> {
        let report = validate(&omega, &lee)?;
        if !report.pass {
            return Err(Error::Precondition("structure equation fails; see validate() for residuals".into()));
        }
        let dim = omega.dim();
        let s = LcsStructure { dim, half_dim: dim / 2, omega, lee, potential };
        s.certify_nondegenerate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> &Form {
        &self.omega
    }

    pub fn lee(&self) -> &Form {
        &self.lee
    }

    pub fn potential(&self) -> Option<&CoeffFn> {
        self.potential.as_ref()
    }

    /// `Omega^m / m!`, exact.
    pub fn volume_form(&self) -> Result<Form> {
        let top = self.omega.power(self.half_dim)?;
        if top.is_zero() {
            return Err(Error::Degenerate);
        }
        Ok(top.scale_rat(&inv_factorial(self.half_dim)))
    }

    /// Coefficient matrix `B[i][j]` of `Omega = sum_{i<j} B_ij dx_i ^ dx_j`,
    /// filled antisymmetrically.
    fn coefficient_matrix(&self) -> Vec<Vec<CoeffFn>> {
        let n = self.dim;
        let mut b = vec![vec![CoeffFn::zero(n); n]; n];
        for (key, c) in self.omega.terms() {
            let (i, j) = (key[0], key[1]);
            b[i][j] = c.clone();
            b[j][i] = c.neg();
        }
        b
    }

    /// Pfaffian of the coefficient matrix by recursive expansion.
    pub fn pfaffian(&self) -> Result<CoeffFn> {
        let b = self.coefficient_matrix();
        pfaffian_of(&b)
    }

    /// Nondegeneracy certificate: nonzero top power plus either a unit
    /// Pfaffian or `|Pf| > 1e-9` at 16 Halton sample points.
    fn certify_nondegenerate(&self) -> Result<()> {
        let top = self.omega.power(self.half_dim)?;
        if top.is_zero() {
            return Err(Error::Degenerate);
        }
        let pf = self.pfaffian()?;
        if pf.as_unit_term().is_some() {
            return Ok(());
        }
        for point in halton_points(self.dim, 16) {
            if pf.eval(&point).abs() <= 1e-9 {
                return Err(Error::Degenerate);
            }
        }
        Ok(())
    }

    /// Solve `i_X Omega = alpha` for `X`. Symbolic via the adjugate when the
    /// Pfaffian is a unit term; otherwise pointwise numeric solves, flagged.
    pub fn sharp(&self, alpha: &Form) -> Result<SharpResult> {
        let n = self.dim;
        if alpha.dim() != n {
            return Err(Error::DimensionMismatch(alpha.dim(), n));
        }
        if alpha.degree() != 1 && !alpha.is_zero() {
            return Err(Error::DegreeMismatch { expected: 1, got: alpha.degree() });
        }
        let b = self.coefficient_matrix();
        // (i_X Omega)_j = sum_i X_i B[i][j]; solve M X = alpha with M = B^T.
        let m: Vec<Vec<CoeffFn>> = (0..n).map(|j| (0..n).map(|i| b[i][j].clone()).collect()).collect();
        let det = det_of(&m)?;
        if det.as_unit_term().is_some() {
            let rhs: Vec<CoeffFn> = (0..n).map(|j| alpha.coeff(&[j])).collect();
            let mut comps = Vec::with_capacity(n);
            for i in 0..n {
                let mut acc = CoeffFn::zero(n);
                for (j, r) in rhs.iter().enumerate() {
                    if r.is_zero() {
                        continue;
                    }
                    acc = acc.add(&cofactor(&m, j, i)?.mul(r)?)?;
                }
                comps.push(acc.div_unit(&det)?);
            }
            return Ok(SharpResult::Symbolic(VectorField::new(comps)?));
        }
        // Numeric fallback at Halton points.
        let mut samples = Vec::new();
        for point in halton_points(n, 16) {
            let mat = nalgebra::DMatrix::from_fn(n, n, |r, c| m[r][c].eval(&point));
            let rhs = nalgebra::DVector::from_fn(n, |j, _| alpha.coeff(&[j]).eval(&point));
            let lu = mat.lu();
            let sol = lu.solve(&rhs).ok_or(Error::Degenerate)?;
            samples.push(NumericSample { point, value: sol.iter().copied().collect() });
        }
        Ok(SharpResult::Numeric(samples))
    }

    /// Symbolic sharp or an error; convenience for callers that need the
    /// exact field.
    pub fn sharp_symbolic(&self, alpha: &Form) -> Result<VectorField> {
        match self.sharp(alpha)? {
            SharpResult::Symbolic(v) => Ok(v),
            SharpResult::Numeric(_) => Err(Error::NonUnitPfaffian),
        }
    }

    /// Hamiltonian field of `H`: the solution of `i_X Omega = d^lee H`.
    pub fn hamiltonian_field(&self, hamiltonian: &CoeffFn) -> Result<VectorField> {
        let dh = Form::from_function(hamiltonian.clone()).twisted_d(&self.lee)?;
        self.sharp_symbolic(&dh)
    }

    /// Strict-LCS membership: `L^lee_X Omega = 0`. The residual form is the
    /// witness either way.
    pub fn is_strict_lcs(&self, x: &VectorField) -> Result<(bool, Form)> {
        let residual = self.omega.lie_twisted(x, &self.lee)?;
        Ok((residual.is_zero(), residual))
    }

    /// Infinitesimal conformality factor: `f` with `L_X Omega = -f Omega`
    /// and `L_X lee = df`, or `None` when `X` is not an LCS field.
    pub fn conformal_factor(&self, x: &VectorField) -> Result<Option<CoeffFn>> {
        let lx_omega = self.omega.lie(x)?;
        let factor = if lx_omega.is_zero() {
            CoeffFn::zero(self.dim)
        } else {
            // Candidate from a unit coefficient of Omega.
            let Some((key, unit)) = self.omega.terms().find(|(_, c)| c.as_unit_term().is_some()) else {
                return Ok(None);
            };
            let f = lx_omega.coeff(key).div_unit(unit)?.neg();
            if !lx_omega.add(&self.omega.scale_fn(&f)?)?.is_zero() {
                return Ok(None);
            }
            f
        };
        let df = Form::from_function(factor.clone()).ext_d()?;
        if self.lee.lie(x)?.sub(&df)?.is_zero() {
            Ok(Some(factor))
        } else {
            Ok(None)
        }
    }

    /// Conformal rescaling `Omega_h = e^h Omega` for exact Lee form
    /// `lee = dh`, `h` affine-linear so `e^h` stays in the algebra.
    pub fn rescale(&self, h: &CoeffFn) -> Result<Rescaled> {
        let dh = Form::from_function(h.clone()).ext_d()?;
        if !dh.sub(&self.lee)?.is_zero() {
            return Err(Error::Precondition("dh != lee form".into()));
        }
        let exp_h = exp_of_linear(h)?;
        let omega_h = self.omega.scale_fn(&exp_h)?;
        if !omega_h.ext_d()?.is_zero() {
            // dh = lee forces closedness; reaching this means a bug upstream.
            return Err(Error::Precondition("rescaled form not closed".into()));
        }
        Ok(Rescaled { omega_h, exp_h })
    }
}

/// `e^h` for affine-linear `h = c0 + <c, x>`, as the unit term
/// `e^{c0} e^{<c, x>}`.
pub fn exp_of_linear(h: &CoeffFn) -> Result<CoeffFn> {
    let (c0, slope) = h
        .as_affine_linear()
        .ok_or_else(|| Error::Precondition("potential must be affine-linear in the coordinates".into()))?;
    CoeffFn::monomial(h.dim(), ExpScalar::term(rat_i64(1), c0), vec![0; h.dim()], slope)
}

/// Classify `g^* form` against `c * form` for each generator.
pub fn descent_check(form: &Form, generators: &[AffineMap]) -> Result<Vec<DescentVerdict>> {
    let mut out = Vec::with_capacity(generators.len());
    for g in generators {
        let pulled = form.pullback(g)?;
        if pulled.sub(form)?.is_zero() {
            out.push(DescentVerdict::Invariant);
            continue;
        }
        // Try a constant conformal factor read off a matching coefficient.
        let candidate = form.terms().find_map(|(key, c)| {
            let (unit, kvec) = c.as_unit_term()?;
            let ratio = pulled.coeff(key).div_unit(&CoeffFn::monomial(form.dim(), unit, vec![0; form.dim()], kvec).ok()?).ok()?;
            ratio.as_constant()
        });
        match candidate {
            Some(c) if !c.is_zero() && pulled.sub(&form.scale_exp(&c))?.is_zero() => {
                out.push(DescentVerdict::Conformal(c));
            }
            _ => out.push(DescentVerdict::Fails(pulled.sub(form)?)),
        }
    }
    Ok(out)
}

/// Pfaffian of an antisymmetric CoeffFn matrix by minor expansion.
fn pfaffian_of(b: &[Vec<CoeffFn>]) -> Result<CoeffFn> {
    let n = b.len();
    if n == 0 {
        return Ok(CoeffFn::one(0));
    }
    let dim = b[0][0].dim();
    if n % 2 != 0 {
        return Ok(CoeffFn::zero(dim));
    }
    if n == 2 {
        return Ok(b[0][1].clone());
    }
    let mut acc = CoeffFn::zero(dim);
    for j in 1..n {
        if b[0][j].is_zero() {
            continue;
        }
        let rest: Vec<usize> = (1..n).filter(|&r| r != j).collect();
        let minor: Vec<Vec<CoeffFn>> = rest.iter().map(|&r| rest.iter().map(|&c| b[r][c].clone()).collect()).collect();
        let mut term = b[0][j].mul(&pfaffian_of(&minor)?)?;
        if j % 2 == 0 {
            term = term.neg();
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Determinant of a CoeffFn matrix by Laplace expansion (matrices here are
/// at most the manifold dimension, so this stays small).
fn det_of(m: &[Vec<CoeffFn>]) -> Result<CoeffFn> {
    let n = m.len();
    let dim = if n > 0 { m[0][0].dim() } else { 0 };
    if n == 0 {
        return Ok(CoeffFn::one(dim));
    }
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let mut acc = CoeffFn::zero(dim);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<CoeffFn>> = (1..n)
            .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c].clone()).collect())
            .collect();
        let mut term = m[0][j].mul(&det_of(&minor)?)?;
        if j % 2 == 1 {
            term = term.neg();
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Cofactor `C_{rc} = (-1)^{r+c} det(minor)`; `adj(M)[i][j] = C_{ji}` is used
/// by `sharp` via `cofactor(m, j, i)`.
fn cofactor(m: &[Vec<CoeffFn>], r: usize, c: usize) -> Result<CoeffFn> {
    let n = m.len();
    let minor: Vec<Vec<CoeffFn>> = (0..n)
        .filter(|&i| i != r)
        .map(|i| (0..n).filter(|&j| j != c).map(|j| m[i][j].clone()).collect())
        .collect();
    let d = det_of(&minor)?;
    Ok(if (r + c) % 2 == 1 { d.neg() } else { d })
}

/// Deterministic low-discrepancy sample points in the unit box.
pub fn halton_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    (1..=count)
        .map(|i| (0..dim).map(|axis| radical_inverse(i as u32, PRIMES[axis % PRIMES.len()])).collect())
        .collect()
}

fn radical_inverse(mut i: u32, base: u32) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut value = 0.0;
    while i > 0 {
        value += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    value
}

// ---------------------------------------------------------------------------
// Bundled reference structures
// ---------------------------------------------------------------------------

fn ez(dim: usize, slope: i64) -> CoeffFn {
    let mut k = vec![Rational::zero(); dim];
    k[2] = rat_i64(slope);
    CoeffFn::exp_linear(dim, k).expect("slope vector")
}

/// Kodaira-Thurston structure on the fundamental box, with the Lee form
/// `-dz` so that the structure equation holds exactly.
pub fn kodaira_thurston() -> LcsStructure {
    let (omega, lee) = kodaira_thurston_forms();
    LcsStructure::new(omega, lee, None).expect("reference structure")
}

/// The forms `Omega = e^z dx^dy + dw^dz` and `lee = -dz`.
pub fn kodaira_thurston_forms() -> (Form, Form) {
    let mut omega = Form::zero(4, 2);
    omega.add_term(&[0, 1], ez(4, 1)).unwrap();
    omega.add_term(&[3, 2], CoeffFn::one(4)).unwrap();
    let mut lee = Form::zero(4, 1);
    lee.add_term(&[2], CoeffFn::rational(4, rat_i64(-1))).unwrap();
    (omega, lee)
}

/// The literal pair with `lee = +dz`; fails the structure equation (the
/// residual is `2 e^z dz^dx^dy`) and is bundled for the audit jobs.
pub fn kodaira_thurston_paper_literal_forms() -> (Form, Form) {
    let (omega, lee) = kodaira_thurston_forms();
    (omega, lee.neg())
}

/// Alternate structure `Omega = e^{-z} dx^dy + dw^dz`, `lee = +dz`.
pub fn kodaira_thurston_alternate() -> LcsStructure {
    let mut omega = Form::zero(4, 2);
    omega.add_term(&[0, 1], ez(4, -1)).unwrap();
    omega.add_term(&[3, 2], CoeffFn::one(4)).unwrap();
    let mut lee = Form::zero(4, 1);
    lee.add_term(&[2], CoeffFn::rational(4, rat_i64(1))).unwrap();
    LcsStructure::new(omega, lee, None).expect("alternate structure")
}

/// The four deck transformations of the Kodaira-Thurston lattice.
pub fn kodaira_thurston_generators() -> Vec<AffineMap> {
    let mut gens = Vec::new();
    for axis in 0..3 {
        let mut b = vec![Rational::zero(); 4];
        b[axis] = rat_i64(1);
        gens.push(AffineMap::translation(b));
    }
    let mut g4 = AffineMap::identity(4);
    let mut matrix = g4.matrix().to_vec();
    matrix[0][1] = rat_i64(1);
    let mut offset = vec![Rational::zero(); 4];
    offset[3] = rat_i64(1);
    g4 = AffineMap::new(matrix, offset).unwrap();
    gens.push(g4);
    gens
}

/// Standard symplectic structure on `R^4` (`lee = 0`).
pub fn standard_symplectic_r4() -> LcsStructure {
    let mut omega = Form::zero(4, 2);
    omega.add_term(&[0, 1], CoeffFn::one(4)).unwrap();
    omega.add_term(&[3, 2], CoeffFn::one(4)).unwrap();
    LcsStructure::new(omega, Form::zero(4, 1), Some(CoeffFn::zero(4))).expect("symplectic R^4")
}

/// Exact-case box model `Omega = e^{-z}(dx^dy + dw^dz)`, `lee = dz = dh`
/// with `h = z`.
pub fn exact_box_model() -> LcsStructure {
    let mut omega = Form::zero(4, 2);
    omega.add_term(&[0, 1], ez(4, -1)).unwrap();
    omega.add_term(&[3, 2], ez(4, -1)).unwrap();
    let mut lee = Form::zero(4, 1);
    lee.add_term(&[2], CoeffFn::one(4)).unwrap();
    let h = CoeffFn::coordinate(4, 2).unwrap();
    LcsStructure::new(omega, lee, Some(h)).expect("box model")
}
