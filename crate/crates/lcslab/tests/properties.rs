//! Randomized exact identities of the twisted calculus. Every check is an
//! exact symbolic equality; the generators keep coefficients small so the
//! rational arithmetic stays fast.

use proptest::prelude::*;

use lcslab::coeff::CoeffFn;
use lcslab::form::{AffineMap, Form, VectorField};
use lcslab::lcs;
use lcslab::scalar::{rat, rat_i64, ExpScalar, Rational};

const DIM: usize = 3;

fn combos(dim: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, p: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(dim, p, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, p, 0, &mut Vec::new(), &mut out);
    out
}

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-4i64..=4, 1i64..=3).prop_map(|(n, d)| rat(n, d))
}

fn arb_scalar() -> impl Strategy<Value = ExpScalar> {
    prop::collection::vec((arb_rational(), -1i64..=1), 1..=2).prop_map(|terms| {
        ExpScalar::from_terms(terms.into_iter().map(|(q, r)| (q, rat_i64(r))).collect())
    })
}

fn arb_coeff(dim: usize) -> impl Strategy<Value = CoeffFn> {
    prop::collection::vec(
        (arb_scalar(), prop::collection::vec(0u32..=2u32, dim), prop::collection::vec(-1i64..=1, dim)),
        1..=2,
    )
    .prop_map(move |terms| {
        let mut acc = CoeffFn::zero(dim);
        for (c, powers, kv) in terms {
            let kvec = kv.into_iter().map(rat_i64).collect();
            acc = acc.add(&CoeffFn::monomial(dim, c, powers, kvec).unwrap()).unwrap();
        }
        acc
    })
}

fn arb_form(dim: usize, degree: usize) -> impl Strategy<Value = Form> {
    let subsets = combos(dim, degree);
    let count = subsets.len();
    prop::collection::vec((0..count, arb_coeff(dim)), 1..=2).prop_map(move |terms| {
        let mut form = Form::zero(dim, degree);
        for (idx, coeff) in terms {
            form.add_term(&subsets[idx], coeff).unwrap();
        }
        form
    })
}

/// Constant-coefficient 1-form; closed by construction, as the twisted
/// differential requires.
fn arb_lee(dim: usize) -> impl Strategy<Value = Form> {
    prop::collection::vec(arb_rational(), dim).prop_map(move |cs| {
        let mut form = Form::zero(dim, 1);
        for (axis, c) in cs.into_iter().enumerate() {
            form.add_term(&[axis], CoeffFn::rational(dim, c)).unwrap();
        }
        form
    })
}

fn arb_field(dim: usize) -> impl Strategy<Value = VectorField> {
    prop::collection::vec(arb_coeff(dim), dim).prop_map(|comps| VectorField::new(comps).unwrap())
}

/// Unit upper-triangular matrix plus offset: always invertible.
fn arb_affine(dim: usize) -> impl Strategy<Value = AffineMap> {
    (
        prop::collection::vec(prop::collection::vec(-1i64..=1, dim), dim),
        prop::collection::vec(arb_rational(), dim),
    )
        .prop_map(move |(upper, offset)| {
            let mut matrix = vec![vec![Rational::from_integer(0.into()); dim]; dim];
            for i in 0..dim {
                matrix[i][i] = rat_i64(1);
                for j in i + 1..dim {
                    matrix[i][j] = rat_i64(upper[i][j]);
                }
            }
            AffineMap::new(matrix, offset).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn twisted_differential_squares_to_zero(
        alpha in arb_form(DIM, 1),
        lee in arb_lee(DIM),
    ) {
        let once = alpha.twisted_d(&lee).unwrap();
        let twice = once.twisted_d(&lee).unwrap();
        prop_assert!(twice.is_zero());
    }

    #[test]
    fn graded_leibniz(
        alpha in arb_form(DIM, 1),
        beta in arb_form(DIM, 1),
        lee in arb_lee(DIM),
    ) {
        // Plain exterior derivative: d(a^b) = da^b - a^db in degree 1.
        let lhs = alpha.wedge(&beta).unwrap().ext_d().unwrap();
        let rhs = alpha
            .ext_d().unwrap().wedge(&beta).unwrap()
            .sub(&alpha.wedge(&beta.ext_d().unwrap()).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero());

        // Twisted differential: the Lee term enters once, on the first
        // factor.
        let lhs = alpha.wedge(&beta).unwrap().twisted_d(&lee).unwrap();
        let rhs = alpha
            .twisted_d(&lee).unwrap().wedge(&beta).unwrap()
            .sub(&alpha.wedge(&beta.ext_d().unwrap()).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn pullback_naturality(
        alpha in arb_form(DIM, 1),
        lee in arb_lee(DIM),
        map in arb_affine(DIM),
    ) {
        let lhs = alpha.twisted_d(&lee).unwrap().pullback(&map).unwrap();
        let pulled_lee = lee.pullback(&map).unwrap();
        let rhs = alpha.pullback(&map).unwrap().twisted_d(&pulled_lee).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn twisted_cartan_matches_lie_plus_multiplier(
        alpha in arb_form(DIM, 1),
        lee in arb_lee(DIM),
        field in arb_field(DIM),
    ) {
        let twisted = alpha.lie_twisted(&field, &lee).unwrap();
        let plain = alpha.lie(&field).unwrap();
        let multiplier = lee.interior(&field).unwrap().coeff(&[]);
        let rhs = plain.add(&alpha.scale_fn(&multiplier).unwrap()).unwrap();
        prop_assert!(twisted.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn sharp_interior_round_trip(alpha in arb_form(4, 1)) {
        let kt = lcs::kodaira_thurston();
        let field = kt.sharp_symbolic(&alpha).unwrap();
        let back = kt.omega().interior(&field).unwrap();
        prop_assert!(back.sub(&alpha).unwrap().is_zero());
    }

    #[test]
    fn rescaling_identity(
        alpha in arb_form(DIM, 1),
        slopes in prop::collection::vec(-2i64..=2, DIM),
    ) {
        // h linear with dh = lee: d(e^h a) = e^h d^lee a exactly.
        let mut h = CoeffFn::zero(DIM);
        let mut lee = Form::zero(DIM, 1);
        for (axis, &c) in slopes.iter().enumerate() {
            h = h.add(&CoeffFn::coordinate(DIM, axis).unwrap().scale_rat(&rat_i64(c))).unwrap();
            lee.add_term(&[axis], CoeffFn::rational(DIM, rat_i64(c))).unwrap();
        }
        let exp_h = lcs::exp_of_linear(&h).unwrap();
        let lhs = alpha.scale_fn(&exp_h).unwrap().ext_d().unwrap();
        let rhs = alpha.twisted_d(&lee).unwrap().scale_fn(&exp_h).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero());
    }
}
