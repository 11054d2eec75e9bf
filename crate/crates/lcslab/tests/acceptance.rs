//! End-to-end acceptance checks. Each test covers one numbered criterion
//! and prints a single pass/fail line (visible with --nocapture).

use std::time::Instant;

use num::Zero;

use lcslab::ce::{self, LieAlgebraSpec};
use lcslab::coeff::CoeffFn;
use lcslab::dynamics::{
    calabi, energy_capacity_check, flow, flux, primitive_search, HamiltonianPath, Isotopy,
    SearchBounds,
};
use lcslab::form::{Form, VectorField};
use lcslab::lattice::{build_operators, Cochain, Grid};
use lcslab::lcs::{self, validate};
use lcslab::scalar::{rat, rat_i64, ExpScalar, Rational};

fn criterion(n: usize, name: &str, check: impl FnOnce() -> Result<(), String>) {
    match check() {
        Ok(()) => println!("criterion {n} ({name}): pass"),
        Err(msg) => {
            println!("criterion {n} ({name}): FAIL - {msg}");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

fn ez(slope: i64) -> CoeffFn {
    let mut k = vec![Rational::zero(); 4];
    k[2] = rat_i64(slope);
    CoeffFn::exp_linear(4, k).unwrap()
}

#[test]
fn criterion_01_structure_audit() {
    criterion(1, "structure audit", || {
        let start = Instant::now();
        let (omega, lee) = lcs::kodaira_thurston_forms();
        let report = validate(&omega, &lee).map_err(|e| e.to_string())?;
        if !report.pass || !report.lee_residual.is_zero() || !report.structure_residual.is_zero() {
            return Err("corrected structure must validate with zero residuals".into());
        }
        if start.elapsed().as_secs_f64() >= 1.0 {
            return Err("corrected audit exceeded 1 s".into());
        }

        let start = Instant::now();
        let (omega, lee) = lcs::kodaira_thurston_paper_literal_forms();
        let report = validate(&omega, &lee).map_err(|e| e.to_string())?;
        if report.pass {
            return Err("literal structure must fail validation".into());
        }
        let mut expected = Form::zero(4, 3);
        expected.add_term(&[2, 0, 1], ez(1).scale_rat(&rat_i64(2))).unwrap();
        if !report.structure_residual.sub(&expected).unwrap().is_zero() {
            return Err("literal residual must be exactly 2 e^z dz^dx^dy".into());
        }
        if start.elapsed().as_secs_f64() >= 1.0 {
            return Err("literal audit exceeded 1 s".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_02_volume_form() {
    criterion(2, "volume form", || {
        let kt = lcs::kodaira_thurston();
        let volume = kt.volume_form().map_err(|e| e.to_string())?;
        let mut expected = Form::zero(4, 4);
        expected.add_term(&[0, 1, 3, 2], ez(1)).unwrap();
        if !volume.sub(&expected).unwrap().is_zero() {
            return Err("volume must equal e^z dx^dy^dw^dz exactly".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_03_contraction_and_strictness() {
    criterion(3, "x-contraction and strictness", || {
        let kt = lcs::kodaira_thurston();
        let dx = VectorField::basis(4, 0).unwrap();
        let contraction = kt.omega().interior(&dx).map_err(|e| e.to_string())?;
        let mut expected = Form::zero(4, 1);
        expected.add_term(&[1], ez(1)).unwrap();
        if !contraction.sub(&expected).unwrap().is_zero() {
            return Err("interior product with the x-field must be e^z dy".into());
        }
        if !contraction.twisted_d(kt.lee()).unwrap().is_zero() {
            return Err("e^z dy must be twisted-closed".into());
        }
        let (strict, _) = kt.is_strict_lcs(&dx).map_err(|e| e.to_string())?;
        if !strict {
            return Err("the x-field must be strictly LCS".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_04_hamiltonian_field_and_calabi() {
    criterion(4, "Hamiltonian field and Calabi", || {
        let kt = lcs::kodaira_thurston();
        let field = kt.hamiltonian_field(&CoeffFn::one(4)).map_err(|e| e.to_string())?;
        let expected = VectorField::basis(4, 3).unwrap().neg();
        for (got, want) in field.components().iter().zip(expected.components()) {
            if !got.sub(want).unwrap().is_zero() {
                return Err("hamiltonian field of H = 1 must be minus the w-field".into());
            }
        }
        let value = calabi(&kt, &HamiltonianPath::constant(CoeffFn::one(4))).map_err(|e| e.to_string())?;
        let reference = ExpScalar::from_terms(vec![(rat_i64(-1), rat_i64(0)), (rat_i64(1), rat_i64(1))]);
        if value != reference {
            return Err("Calabi term list must be {(-1,0),(1,1)}".into());
        }
        if (value.eval() - 1.718281828459045).abs() > 1e-12 {
            return Err("Calabi float rendering out of tolerance".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_05_flux_and_bounded_search() {
    criterion(5, "flux and bounded primitive search", || {
        let kt = lcs::kodaira_thurston();
        let loop_x = Isotopy::constant(VectorField::basis(4, 0).unwrap());
        let result = flux(&kt, &loop_x).map_err(|e| e.to_string())?;
        let mut expected = Form::zero(4, 1);
        expected.add_term(&[1], ez(1)).unwrap();
        if !result.form.sub(&expected).unwrap().is_zero() {
            return Err("flux of the unit x-translation loop must be e^z dy".into());
        }
        let bounds = SearchBounds::standard().with_generators(lcs::kodaira_thurston_generators());
        let start = Instant::now();
        let found = primitive_search(&kt, &result.form, &bounds).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed().as_secs_f64();
        if found.is_some() {
            return Err("no primitive may exist within the (3, {-1,0,1}) bounds".into());
        }
        if elapsed >= 5.0 {
            return Err(format!("search took {elapsed:.2} s, budget is 5 s"));
        }
        Ok(())
    });
}

#[test]
fn criterion_06_invariant_cohomology() {
    criterion(6, "invariant cohomology", || {
        let start = Instant::now();
        let spec = LieAlgebraSpec::kodaira_thurston();
        let complex = ce::build(&spec, &vec![Rational::zero(); 4]).map_err(|e| e.to_string())?;
        let betti = complex.betti();
        if betti != vec![1, 3, 4, 3, 1] {
            return Err(format!("untwisted betti numbers {betti:?}, expected (1,3,4,3,1)"));
        }
        for p in 0..betti.len() {
            if betti[p] != betti[betti.len() - 1 - p] {
                return Err("untwisted betti numbers must be symmetric".into());
            }
        }
        let euler =
            |b: &[usize]| b.iter().enumerate().map(|(p, &v)| if p % 2 == 0 { v as i64 } else { -(v as i64) }).sum::<i64>();
        if euler(&betti) != 0 {
            return Err("untwisted Euler characteristic must vanish".into());
        }
        for sign in [1i64, -1] {
            let mut lee = vec![Rational::zero(); 4];
            lee[2] = rat_i64(sign);
            let complex = ce::build(&spec, &lee).map_err(|e| e.to_string())?;
            let betti = complex.betti();
            if betti[0] != 0 {
                return Err("twisted b0 must vanish".into());
            }
            if euler(&betti) != 0 {
                return Err("twisted Euler characteristic must vanish".into());
            }
            // Labeled comparison, not a gate: the invariant-complex b1 next
            // to the claimed manifold value 2.
            println!("  b1 comparison (sign {sign}): computed {} vs claimed 2", betti[1]);
        }
        if start.elapsed().as_secs_f64() >= 1.0 {
            return Err("cohomology runtime exceeded 1 s".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_07_lattice_hodge() {
    criterion(7, "lattice Hodge theory", || {
        let start = Instant::now();
        let t2 = build_operators(&Grid::new(2, 8).unwrap(), &[0.0, 0.0]).map_err(|e| e.to_string())?;
        if t2.harmonic_dim(1, 1e-8).unwrap() != 2 {
            return Err("2-torus N=8 untwisted harmonic 1-form dimension must be 2".into());
        }
        let t4 = build_operators(&Grid::new(4, 4).unwrap(), &[0.0; 4]).map_err(|e| e.to_string())?;
        if t4.harmonic_dim(2, 1e-8).unwrap() != 6 {
            return Err("4-torus N=4 untwisted harmonic 2-form dimension must be 6".into());
        }
        let twisted = build_operators(&Grid::new(2, 4).unwrap(), &[0.0, 1.0]).map_err(|e| e.to_string())?;
        for p in [0usize, 1] {
            if twisted.harmonic_dim(p, 1e-8).unwrap() != 0 {
                return Err(format!("twisted 2-torus harmonic dimension at p={p} must be 0"));
            }
        }

        // Split quality on 20 pseudo-random 1-cochains.
        let grid = Grid::new(2, 8).unwrap();
        let ops = build_operators(&grid, &[0.0, 1.0]).map_err(|e| e.to_string())?;
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for trial in 0..20 {
            let mut alpha = Cochain::zeros(&grid, 1);
            for v in alpha.values.iter_mut() {
                *v = next();
            }
            let split = ops.hodge_split(&alpha).map_err(|e| e.to_string())?;
            let scale = alpha.norm(&ops).max(1e-12);
            let mut recon = alpha.clone();
            for ((r, e), (c, h)) in recon
                .values
                .iter_mut()
                .zip(&split.exact.values)
                .zip(split.coexact.values.iter().zip(&split.harmonic.values))
            {
                *r -= e + c + h;
            }
            if recon.norm(&ops) > 1e-8 * scale {
                return Err(format!("trial {trial}: reconstruction residual too large"));
            }
            let pairs = [
                ops.inner(&split.exact, &split.coexact),
                ops.inner(&split.exact, &split.harmonic),
                ops.inner(&split.coexact, &split.harmonic),
            ];
            if pairs.iter().any(|v| v.abs() > 1e-8 * scale * scale) {
                return Err(format!("trial {trial}: components not orthogonal"));
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed >= 30.0 {
            return Err(format!("lattice budget exceeded: {elapsed:.1} s"));
        }
        Ok(())
    });
}

/// Small deterministic generator for the seeded acceptance sweeps.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn rat(&mut self) -> Rational {
        rat((self.next() % 9) as i64 - 4, (self.next() % 3) as i64 + 1)
    }

    fn coeff(&mut self, dim: usize) -> CoeffFn {
        let powers: Vec<u32> = (0..dim).map(|_| (self.next() % 3) as u32).collect();
        let kvec: Vec<Rational> = (0..dim).map(|_| rat_i64((self.next() % 3) as i64 - 1)).collect();
        let level = rat_i64((self.next() % 3) as i64 - 1);
        CoeffFn::monomial(dim, ExpScalar::term(self.rat(), level), powers, kvec).unwrap()
    }

    fn one_form(&mut self, dim: usize) -> Form {
        let mut form = Form::zero(dim, 1);
        for _ in 0..2 {
            let axis = (self.next() as usize) % dim;
            form.add_term(&[axis], self.coeff(dim)).unwrap();
        }
        form
    }

    fn lee(&mut self, dim: usize) -> Form {
        let mut lee = Form::zero(dim, 1);
        for axis in 0..dim {
            let c = self.rat();
            lee.add_term(&[axis], CoeffFn::rational(dim, c)).unwrap();
        }
        lee
    }
}

#[test]
fn criterion_08_property_suites() {
    criterion(8, "exact randomized identities", || {
        // Seeded 100-case sweep over the six calculus identities,
        // independent of the main property harness.
        let mut rng = Rng(0x9E3779B97F4A7C15);
        let dim = 3usize;
        let kt = lcs::kodaira_thurston();
        for case in 0..100 {
            let alpha = rng.one_form(dim);
            let beta = rng.one_form(dim);
            let lee = rng.lee(dim);

            if !alpha.twisted_d(&lee).unwrap().twisted_d(&lee).unwrap().is_zero() {
                return Err(format!("case {case}: twisted differential does not square to zero"));
            }
            let lhs = alpha.wedge(&beta).unwrap().twisted_d(&lee).unwrap();
            let rhs = alpha
                .twisted_d(&lee).unwrap().wedge(&beta).unwrap()
                .sub(&alpha.wedge(&beta.ext_d().unwrap()).unwrap()).unwrap();
            if !lhs.sub(&rhs).unwrap().is_zero() {
                return Err(format!("case {case}: Leibniz rule fails"));
            }
            let shift: Vec<Rational> = (0..dim).map(|_| rng.rat()).collect();
            let map = lcslab::form::AffineMap::translation(shift);
            let nat_lhs = alpha.twisted_d(&lee).unwrap().pullback(&map).unwrap();
            let nat_rhs = alpha.pullback(&map).unwrap().twisted_d(&lee.pullback(&map).unwrap()).unwrap();
            if !nat_lhs.sub(&nat_rhs).unwrap().is_zero() {
                return Err(format!("case {case}: pullback naturality fails"));
            }
            let field = VectorField::new((0..dim).map(|_| rng.coeff(dim)).collect()).unwrap();
            let cartan = alpha.lie_twisted(&field, &lee).unwrap();
            let direct = alpha
                .lie(&field).unwrap()
                .add(&alpha.scale_fn(&lee.interior(&field).unwrap().coeff(&[])).unwrap())
                .unwrap();
            if !cartan.sub(&direct).unwrap().is_zero() {
                return Err(format!("case {case}: Cartan identity fails"));
            }
            // Sharp/interior round-trip on the reference 4-manifold.
            let mut alpha4 = Form::zero(4, 1);
            for axis in 0..4 {
                alpha4.add_term(&[axis], CoeffFn::rational(4, rng.rat())).unwrap();
            }
            let x = kt.sharp_symbolic(&alpha4).unwrap();
            if !kt.omega().interior(&x).unwrap().sub(&alpha4).unwrap().is_zero() {
                return Err(format!("case {case}: sharp/interior round trip fails"));
            }
            // Rescaling identity for a random linear potential.
            let mut h = CoeffFn::zero(dim);
            let mut dh = Form::zero(dim, 1);
            for axis in 0..dim {
                let c = rng.rat();
                h = h.add(&CoeffFn::coordinate(dim, axis).unwrap().scale_rat(&c)).unwrap();
                dh.add_term(&[axis], CoeffFn::rational(dim, c)).unwrap();
            }
            let exp_h = lcs::exp_of_linear(&h).unwrap();
            let res_lhs = alpha.scale_fn(&exp_h).unwrap().ext_d().unwrap();
            let res_rhs = alpha.twisted_d(&dh).unwrap().scale_fn(&exp_h).unwrap();
            if !res_lhs.sub(&res_rhs).unwrap().is_zero() {
                return Err(format!("case {case}: rescaling identity fails"));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_09_rk4_convergence() {
    criterion(9, "RK4 convergence", || {
        let linear = Isotopy::constant(VectorField::new(vec![CoeffFn::coordinate(1, 0).unwrap()]).unwrap());
        let err = |steps: usize| {
            let res = flow(&linear, &[vec![1.0]], steps, false).unwrap();
            (res.endpoints[0][0] - std::f64::consts::E).abs()
        };
        let order = (err(32) / err(64)).log2();
        if order < 3.9 {
            return Err(format!("observed convergence order {order:.3} < 3.9"));
        }
        let constant = Isotopy::constant(VectorField::basis(3, 1).unwrap());
        let res = flow(&constant, &[vec![0.0, 0.25, 0.5]], 8, false).unwrap();
        if res.endpoints[0] != vec![0.0, 1.25, 0.5] {
            return Err("constant-field flow must be exact".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_10_energy_capacity() {
    criterion(10, "energy-capacity inequality", || {
        let boxm = lcs::exact_box_model();
        let k = HamiltonianPath::constant(CoeffFn::coordinate(4, 0).unwrap());
        let report = energy_capacity_check(&boxm, &k, 6).map_err(|e| e.to_string())?;
        if (report.calabi_abs - 0.5).abs() > 1e-6 || (report.bound - 1.0).abs() > 1e-6 || !report.holds {
            return Err(format!(
                "reference case: |Cal| {:.6}, bound {:.6}",
                report.calabi_abs, report.bound
            ));
        }
        // Five pseudo-random polynomial Hamiltonians of total degree <= 2.
        let mut state = 0xD1B54A32D192ED03u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for trial in 0..5 {
            let mut kf = CoeffFn::zero(4);
            for _ in 0..3 {
                let mut powers = vec![0u32; 4];
                let a = (next() % 5) as usize;
                if a < 4 {
                    powers[a] += 1;
                }
                let b = (next() % 5) as usize;
                if b < 4 && powers.iter().sum::<u32>() < 2 {
                    powers[b] += 1;
                }
                let q = rat((next() % 7) as i64 - 3, (next() % 3) as i64 + 1);
                kf = kf.add(&CoeffFn::monomial(4, ExpScalar::from_rational(q), powers, vec![Rational::zero(); 4]).unwrap()).unwrap();
            }
            let result = energy_capacity_check(&boxm, &HamiltonianPath::constant(kf), 6)
                .map_err(|e| e.to_string())?;
            if !result.holds {
                return Err(format!(
                    "trial {trial}: |Cal| {:.8} exceeds bound {:.8}",
                    result.calabi_abs, result.bound
                ));
            }
        }
        Ok(())
    });
}
