//! Manifest schema: a JSON description of one LCS problem (structure,
//! optional discrete/algebraic data, and a job list) plus the conversion
//! into engine types. Rationals travel as decimal strings so nothing is
//! lost to float round-tripping.

use std::collections::BTreeMap;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::ce::LieAlgebraSpec;
use crate::coeff::CoeffFn;
use crate::dynamics::{HamiltonianPath, Isotopy, SearchBounds};
use crate::form::{AffineMap, Form, VectorField};
use crate::lattice::Grid;
use crate::scalar::{parse_rational, rat_to_f64, ExpScalar, Rational};
use crate::{Error, Result};

/// One additive term of a coefficient function:
/// `q * e^r * x^powers * e^<kvec, x>`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoeffTerm {
    pub q: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kvec: Option<Vec<String>>,
}

pub type CoeffLiteral = Vec<CoeffTerm>;

/// One wedge term of a form literal; indices may arrive unsorted and are
/// normalized with the correct sign.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FormTerm {
    pub indices: Vec<usize>,
    pub coeff: CoeffLiteral,
}

pub type FormLiteral = Vec<FormTerm>;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AffineMapLiteral {
    pub matrix: Vec<Vec<String>>,
    pub offset: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BracketLiteral {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LieAlgebraLiteral {
    pub dim: usize,
    pub brackets: Vec<BracketLiteral>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridLiteral {
    pub dim: usize,
    pub resolution: usize,
    /// Constant Lee covector on the grid, one rational string per axis.
    pub lee: Vec<String>,
}

/// `(t-power, coefficient)` pairs; a polynomial in `t`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TPolyTerm {
    pub t_power: usize,
    pub coeff: CoeffLiteral,
}

pub type TPoly = Vec<TPolyTerm>;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "job", rename_all = "kebab-case")]
pub enum Job {
    Validate,
    Volume,
    Descent,
    CohomologyCe {
        /// Lee coefficients on the invariant complex, per generator.
        lee: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        paper_claim_b1: Option<usize>,
    },
    Hodge {
        p: usize,
    },
    Flux {
        /// Generating field components, each a polynomial in `t`.
        isotopy: Vec<TPoly>,
    },
    Calabi {
        hamiltonian: TPoly,
    },
    Hofer {
        hamiltonian: TPoly,
        mode: String,
        resolution: usize,
    },
    EnergyCapacity {
        hamiltonian: TPoly,
        resolution: usize,
    },
    Flow {
        isotopy: Vec<TPoly>,
        steps: usize,
        #[serde(default)]
        wrap: bool,
        points: Vec<Vec<f64>>,
    },
    FluxVanishing {
        isotopy: Vec<TPoly>,
        /// Any of "ce", "primitive-search", "lattice"; each draws its data
        /// from the manifest-level sections.
        backends: Vec<String>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub dimension: usize,
    pub coordinates: Vec<String>,
    #[serde(rename = "Omega")]
    pub omega: FormLiteral,
    pub lee: FormLiteral,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<CoeffLiteral>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<AffineMapLiteral>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie_algebra: Option<LieAlgebraLiteral>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridLiteral>,
    pub jobs: Vec<Job>,
}

impl Manifest {
    pub fn from_str(text: &str) -> Result<Manifest> {
        let manifest: Manifest =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest schema: {e}")))?;
        manifest.validate_schema()?;
        Ok(manifest)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Manifest::from_str(&text)
    }

    fn validate_schema(&self) -> Result<()> {
        if self.coordinates.len() != self.dimension {
            return Err(Error::Parse(format!(
                "coordinates: expected {} names, found {}",
                self.dimension,
                self.coordinates.len()
            )));
        }
        if self.omega.is_empty() {
            return Err(Error::Parse("Omega: form literal must not be empty".into()));
        }
        for (field, literal) in [("Omega", &self.omega), ("lee", &self.lee)] {
            for (i, term) in literal.iter().enumerate() {
                if term.indices.iter().any(|&idx| idx >= self.dimension) {
                    return Err(Error::Parse(format!("{field}[{i}].indices: axis out of range")));
                }
            }
        }
        if let Some(grid) = &self.grid {
            if grid.lee.len() != grid.dim {
                return Err(Error::Parse("grid.lee: length must match grid.dim".into()));
            }
        }
        Ok(())
    }

    pub fn coeff(&self, literal: &CoeffLiteral) -> Result<CoeffFn> {
        coeff_from_literal(self.dimension, literal)
    }

    pub fn form(&self, literal: &FormLiteral, degree: usize) -> Result<Form> {
        let mut form = Form::zero(self.dimension, degree);
        for term in literal {
            if term.indices.len() != degree {
                return Err(Error::DegreeMismatch { expected: degree, got: term.indices.len() });
            }
            form.add_term(&term.indices, self.coeff(&term.coeff)?)?;
        }
        Ok(form)
    }

    pub fn structure(&self) -> Result<(Form, Form, Option<CoeffFn>)> {
        let omega = self.form(&self.omega, 2)?;
        let lee = self.form(&self.lee, 1)?;
        let h = self.h.as_ref().map(|l| self.coeff(l)).transpose()?;
        Ok((omega, lee, h))
    }

    pub fn generator_maps(&self) -> Result<Vec<AffineMap>> {
        let Some(literals) = &self.generators else {
            return Ok(Vec::new());
        };
        literals
            .iter()
            .map(|lit| {
                let matrix = lit
                    .matrix
                    .iter()
                    .map(|row| row.iter().map(|s| parse_rational(s)).collect())
                    .collect::<Result<Vec<Vec<Rational>>>>()?;
                let offset = lit.offset.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
                AffineMap::new(matrix, offset)
            })
            .collect()
    }

    pub fn lie_algebra_spec(&self) -> Result<Option<LieAlgebraSpec>> {
        let Some(lit) = &self.lie_algebra else {
            return Ok(None);
        };
        let brackets = lit
            .brackets
            .iter()
            .map(|b| Ok((b.i, b.j, b.k, parse_rational(&b.c)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(LieAlgebraSpec::new(lit.dim, brackets)?))
    }

    pub fn grid_setup(&self) -> Result<Option<(Grid, Vec<f64>)>> {
        let Some(lit) = &self.grid else {
            return Ok(None);
        };
        let grid = Grid::new(lit.dim, lit.resolution)?;
        let lee = lit
            .lee
            .iter()
            .map(|s| Ok(rat_to_f64(&parse_rational(s)?)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Some((grid, lee)))
    }

    pub fn isotopy(&self, components: &[TPoly]) -> Result<Isotopy> {
        if components.len() != self.dimension {
            return Err(Error::DimensionMismatch(components.len(), self.dimension));
        }
        let max_power = components
            .iter()
            .flat_map(|c| c.iter().map(|t| t.t_power))
            .max()
            .unwrap_or(0);
        let mut coeffs = Vec::with_capacity(max_power + 1);
        for power in 0..=max_power {
            let comps = components
                .iter()
                .map(|c| {
                    let mut acc = CoeffFn::zero(self.dimension);
                    for term in c.iter().filter(|t| t.t_power == power) {
                        acc = acc.add(&self.coeff(&term.coeff)?)?;
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?;
            coeffs.push(VectorField::new(comps)?);
        }
        Isotopy::from_coeffs(coeffs)
    }

    pub fn hamiltonian_path(&self, poly: &TPoly) -> Result<HamiltonianPath> {
        let max_power = poly.iter().map(|t| t.t_power).max().unwrap_or(0);
        let mut coeffs = Vec::with_capacity(max_power + 1);
        for power in 0..=max_power {
            let mut acc = CoeffFn::zero(self.dimension);
            for term in poly.iter().filter(|t| t.t_power == power) {
                acc = acc.add(&self.coeff(&term.coeff)?)?;
            }
            coeffs.push(acc);
        }
        HamiltonianPath::from_coeffs(coeffs)
    }

    /// Standard search bounds plus this manifest's deck transformations.
    pub fn search_bounds(&self) -> Result<SearchBounds> {
        Ok(SearchBounds::standard().with_generators(self.generator_maps()?))
    }
}

pub fn coeff_from_literal(dim: usize, literal: &CoeffLiteral) -> Result<CoeffFn> {
    let mut acc = CoeffFn::zero(dim);
    for term in literal {
        let q = parse_rational(&term.q)?;
        let r = term.r.as_deref().map(parse_rational).transpose()?.unwrap_or_else(Rational::zero);
        let powers = term.powers.clone().unwrap_or_else(|| vec![0; dim]);
        if powers.len() != dim {
            return Err(Error::Parse("coeff term: powers length must match dimension".into()));
        }
        let kvec = match &term.kvec {
            Some(k) => {
                if k.len() != dim {
                    return Err(Error::Parse("coeff term: kvec length must match dimension".into()));
                }
                k.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?
            }
            None => vec![Rational::zero(); dim],
        };
        let piece = CoeffFn::monomial(dim, ExpScalar::term(q, r), powers, kvec)?;
        acc = acc.add(&piece)?;
    }
    Ok(acc)
}

/// Serialize a coefficient function back into its literal.
pub fn coeff_to_literal(f: &CoeffFn) -> CoeffLiteral {
    let mut out = Vec::new();
    for (key, scalar) in f.terms() {
        for (q, r) in scalar.terms() {
            let powers = if key.powers.iter().all(|&p| p == 0) { None } else { Some(key.powers.clone()) };
            let kvec = if key.kvec.iter().all(|k| k == &Rational::zero()) {
                None
            } else {
                Some(key.kvec.iter().map(crate::scalar::rational_to_string).collect())
            };
            out.push(CoeffTerm {
                q: crate::scalar::rational_to_string(q),
                r: if r == &Rational::zero() { None } else { Some(crate::scalar::rational_to_string(r)) },
                powers,
                kvec,
            });
        }
    }
    out
}

/// Serialize a form back into its literal (sorted indices).
pub fn form_to_literal(form: &Form) -> FormLiteral {
    form.terms()
        .map(|(indices, coeff)| FormTerm { indices: indices.clone(), coeff: coeff_to_literal(coeff) })
        .collect()
}

/// Bundled reference manifests, embedded in the binary.
pub fn bundled_fixtures() -> BTreeMap<&'static str, &'static str> {
    let mut out = BTreeMap::new();
    out.insert("kodaira_thurston", include_str!("../fixtures/kodaira_thurston.json"));
    out.insert(
        "kodaira_thurston_paper_literal",
        include_str!("../fixtures/kodaira_thurston_paper_literal.json"),
    );
    out.insert("kodaira_thurston_alternate", include_str!("../fixtures/kodaira_thurston_alternate.json"));
    out.insert("torus_hodge", include_str!("../fixtures/torus_hodge.json"));
    out.insert("box_model", include_str!("../fixtures/box_model.json"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcs;

    #[test]
    fn bundled_kodaira_thurston_parses_to_reference_forms() {
        let text = bundled_fixtures()["kodaira_thurston"];
        let manifest = Manifest::from_str(text).unwrap();
        assert_eq!(manifest.dimension, 4);
        assert_eq!(manifest.coordinates, vec!["x", "y", "z", "w"]);
        let (omega, lee, _) = manifest.structure().unwrap();
        let (ref_omega, ref_lee) = lcs::kodaira_thurston_forms();
        assert!(omega.sub(&ref_omega).unwrap().is_zero());
        assert!(lee.sub(&ref_lee).unwrap().is_zero());
    }

    #[test]
    fn missing_lee_is_a_schema_error() {
        let text = r#"{"dimension":2,"coordinates":["x","y"],"Omega":[{"indices":[0,1],"coeff":[{"q":"1"}]}],"jobs":[]}"#;
        let err = Manifest::from_str(text).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("lee"));
    }

    #[test]
    fn empty_job_list_is_valid() {
        let text = r#"{"dimension":2,"coordinates":["x","y"],
            "Omega":[{"indices":[0,1],"coeff":[{"q":"1"}]}],
            "lee":[],"jobs":[]}"#;
        let manifest = Manifest::from_str(text).unwrap();
        assert!(manifest.jobs.is_empty());
    }

    #[test]
    fn unsorted_indices_normalize_with_sign() {
        let text = r#"{"dimension":2,"coordinates":["x","y"],
            "Omega":[{"indices":[1,0],"coeff":[{"q":"1"}]}],
            "lee":[],"jobs":[]}"#;
        let manifest = Manifest::from_str(text).unwrap();
        let (omega, _, _) = manifest.structure().unwrap();
        let c = omega.coeff(&[0, 1]);
        assert_eq!(c.as_constant().unwrap(), ExpScalar::from_i64(-1));
    }

    #[test]
    fn literal_round_trip() {
        let text = bundled_fixtures()["kodaira_thurston"];
        let manifest = Manifest::from_str(text).unwrap();
        let (omega, _, _) = manifest.structure().unwrap();
        let relit = form_to_literal(&omega);
        let back = manifest.form(&relit, 2).unwrap();
        assert!(back.sub(&omega).unwrap().is_zero());
    }

    #[test]
    fn all_bundled_fixtures_parse() {
        for (name, text) in bundled_fixtures() {
            let manifest = Manifest::from_str(text);
            assert!(manifest.is_ok(), "fixture {name}: {:?}", manifest.err());
        }
    }
}
