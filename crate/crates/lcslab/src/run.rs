//! Job execution: dispatch a parsed manifest to the engines, one isolated
//! job at a time, and collect a deterministic report.

use serde_json::{json, Value};

use crate::ce;
use crate::dynamics::{
    self, Backend, BackendConfig, ClassVerdict, FluxVerdict, HamiltonianPath, HoferMode, Isotopy,
};
use crate::lattice;
use crate::lcs::{self, DescentVerdict, LcsStructure};
use crate::manifest::{Job, Manifest, TPoly};
use crate::report::{coeff_json, exp_scalar_json, form_json, JobReport, Report, Verdict};
use crate::scalar::parse_rational;
use crate::{Error, Result};

/// Run every job in order; failures are captured per job and never abort
/// the batch.
pub fn execute(manifest: &Manifest) -> Report {
    let mut report = Report::default();
    for job in &manifest.jobs {
        let name = job_name(job);
        let result = run_job(manifest, job);
        report.jobs.push(match result {
            Ok(job_report) => job_report,
            Err(e) => JobReport::error(&name, e.to_string()),
        });
    }
    report
}

fn job_name(job: &Job) -> String {
    match job {
        Job::Validate => "validate",
        Job::Volume => "volume",
        Job::Descent => "descent",
        Job::CohomologyCe { .. } => "cohomology-ce",
        Job::Hodge { .. } => "hodge",
        Job::Flux { .. } => "flux",
        Job::Calabi { .. } => "calabi",
        Job::Hofer { .. } => "hofer",
        Job::EnergyCapacity { .. } => "energy-capacity",
        Job::Flow { .. } => "flow",
        Job::FluxVanishing { .. } => "flux-vanishing",
    }
    .to_string()
}

fn structure_of(manifest: &Manifest) -> Result<LcsStructure> {
    let (omega, lee, h) = manifest.structure()?;
    LcsStructure::new(omega, lee, h)
}

fn isotopy_of(manifest: &Manifest, components: &[TPoly]) -> Result<Isotopy> {
    manifest.isotopy(components)
}

fn path_of(manifest: &Manifest, poly: &TPoly) -> Result<HamiltonianPath> {
    manifest.hamiltonian_path(poly)
}

fn run_job(manifest: &Manifest, job: &Job) -> Result<JobReport> {
    match job {
        Job::Validate => run_validate(manifest),
        Job::Volume => run_volume(manifest),
        Job::Descent => run_descent(manifest),
        Job::CohomologyCe { lee, paper_claim_b1 } => run_cohomology_ce(manifest, lee, *paper_claim_b1),
        Job::Hodge { p } => run_hodge(manifest, *p),
        Job::Flux { isotopy } => run_flux(manifest, isotopy),
        Job::Calabi { hamiltonian } => run_calabi(manifest, hamiltonian),
        Job::Hofer { hamiltonian, mode, resolution } => run_hofer(manifest, hamiltonian, mode, *resolution),
        Job::EnergyCapacity { hamiltonian, resolution } => {
            run_energy_capacity(manifest, hamiltonian, *resolution)
        }
        Job::Flow { isotopy, steps, wrap, points } => run_flow(manifest, isotopy, *steps, *wrap, points),
        Job::FluxVanishing { isotopy, backends } => run_flux_vanishing(manifest, isotopy, backends),
    }
}

fn run_validate(manifest: &Manifest) -> Result<JobReport> {
    let (omega, lee, _) = manifest.structure()?;
    let result = lcs::validate(&omega, &lee)?;
    let mut report = JobReport::new("validate")
        .with("lee_residual", form_json(&result.lee_residual))
        .with("structure_residual", form_json(&result.structure_residual));
    if let Some(volume) = &result.volume {
        report = report.with("volume", form_json(volume));
    }
    if !result.pass {
        report = report.fail().with("residual", form_json(&result.structure_residual));
    }
    Ok(report)
}

fn run_volume(manifest: &Manifest) -> Result<JobReport> {
    let structure = structure_of(manifest)?;
    let volume = structure.volume_form()?;
    Ok(JobReport::new("volume").with("volume", form_json(&volume)))
}

fn run_descent(manifest: &Manifest) -> Result<JobReport> {
    let (omega, lee, _) = manifest.structure()?;
    let generators = manifest.generator_maps()?;
    if generators.is_empty() {
        return Err(Error::Precondition("descent job needs manifest generators".into()));
    }
    let mut data = Vec::new();
    for (label, form) in [("Omega", &omega), ("lee", &lee)] {
        let verdicts = lcs::descent_check(form, &generators)?;
        let rendered: Vec<Value> = verdicts
            .iter()
            .map(|v| match v {
                DescentVerdict::Invariant => json!({ "verdict": "invariant" }),
                DescentVerdict::Conformal(c) => {
                    json!({ "verdict": "conformal", "factor": exp_scalar_json(c) })
                }
                DescentVerdict::Fails(residual) => {
                    json!({ "verdict": "fails", "residual": form_json(residual) })
                }
            })
            .collect();
        data.push((label, rendered));
    }
    let mut report = JobReport::new("descent");
    for (label, rendered) in data {
        report = report.with(label, Value::Array(rendered));
    }
    Ok(report)
}

fn run_cohomology_ce(
    manifest: &Manifest,
    lee: &[String],
    paper_claim_b1: Option<usize>,
) -> Result<JobReport> {
    let Some(spec) = manifest.lie_algebra_spec()? else {
        return Err(Error::Precondition("cohomology-ce job needs a lie_algebra section".into()));
    };
    let lee_vec = lee.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
    let complex = ce::build(&spec, &lee_vec)?;
    let betti = complex.betti();
    let euler: i64 = betti
        .iter()
        .enumerate()
        .map(|(p, &b)| if p % 2 == 0 { b as i64 } else { -(b as i64) })
        .sum();
    let mut report = JobReport::new("cohomology-ce")
        .with("betti", json!(betti))
        .with("euler_characteristic", json!(euler));
    if let Some(claim) = paper_claim_b1 {
        report = report.with(
            "b1_comparison",
            json!({ "computed": betti.get(1).cloned().unwrap_or(0), "paper_claim": claim,
                    "note": "labeled comparison; pass means the computation is self-consistent" }),
        );
    }
    Ok(report)
}

fn run_hodge(manifest: &Manifest, p: usize) -> Result<JobReport> {
    let Some((grid, lee)) = manifest.grid_setup()? else {
        return Err(Error::Precondition("hodge job needs a grid section".into()));
    };
    let ops = lattice::build_operators(&grid, &lee)?;
    let dim = ops.harmonic_dim(p, 1e-8)?;
    Ok(JobReport::new("hodge")
        .with("p", json!(p))
        .with("resolution", json!(grid.resolution))
        .with("harmonic_dim", json!(dim)))
}

fn run_flux(manifest: &Manifest, components: &[TPoly]) -> Result<JobReport> {
    let structure = structure_of(manifest)?;
    let iso = isotopy_of(manifest, components)?;
    let result = dynamics::flux(&structure, &iso)?;
    let mut report = JobReport::new("flux")
        .with("flux_form", form_json(&result.form))
        .with("closed", json!(result.closed))
        .with("strict_path", json!(result.strict_path));
    if !result.strict_path {
        report = report.with("warning", json!("flux of a path that is not strictly LCS at all sampled times"));
    }
    Ok(report)
}

fn run_calabi(manifest: &Manifest, poly: &TPoly) -> Result<JobReport> {
    let structure = structure_of(manifest)?;
    let path = path_of(manifest, poly)?;
    let value = dynamics::calabi(&structure, &path)?;
    Ok(JobReport::new("calabi").with("calabi", exp_scalar_json(&value)))
}

fn run_hofer(manifest: &Manifest, poly: &TPoly, mode: &str, resolution: usize) -> Result<JobReport> {
    let structure = structure_of(manifest)?;
    let path = path_of(manifest, poly)?;
    let mode = match mode {
        "nonexact" => HoferMode::Nonexact,
        "exact" => {
            let Some(h) = structure.potential() else {
                return Err(Error::Precondition("exact mode needs an h field in the manifest".into()));
            };
            HoferMode::Exact(h.clone())
        }
        other => return Err(Error::Parse(format!("hofer mode must be exact or nonexact, got {other}"))),
    };
    let energy = dynamics::hofer_energy(&structure, &path, &mode, resolution)?;
    Ok(JobReport::new("hofer")
        .with("energy", json!(energy.value))
        .with("resolution", json!(energy.resolution))
        .with("bound_kind", json!("lower")))
}

fn run_energy_capacity(manifest: &Manifest, poly: &TPoly, resolution: usize) -> Result<JobReport> {
    let structure = structure_of(manifest)?;
    let path = path_of(manifest, poly)?;
    let result = dynamics::energy_capacity_check(&structure, &path, resolution)?;
    let report = JobReport::new("energy-capacity")
        .with("calabi_abs", json!(result.calabi_abs))
        .with("volume", json!(result.volume))
        .with("energy", json!(result.energy))
        .with("bound", json!(result.bound))
        .with("holds", json!(result.holds));
    Ok(if result.holds { report } else { report.fail() })
}

fn run_flow(
    manifest: &Manifest,
    components: &[TPoly],
    steps: usize,
    wrap: bool,
    points: &[Vec<f64>],
) -> Result<JobReport> {
    let iso = isotopy_of(manifest, components)?;
    let result = dynamics::flow(&iso, points, steps, wrap)?;
    let report = JobReport::new("flow")
        .with("endpoints", json!(result.endpoints))
        .with("steps", json!(steps))
        .with("blow_up", json!(result.blow_up));
    Ok(if result.blow_up { report.fail() } else { report })
}

fn run_flux_vanishing(manifest: &Manifest, components: &[TPoly], backends: &[String]) -> Result<JobReport> {
    let structure = structure_of(manifest)?;
    let iso = isotopy_of(manifest, components)?;
    let mut config = BackendConfig::default();
    for backend in backends {
        match backend.as_str() {
            "ce" => {
                config.ce = manifest.lie_algebra_spec()?;
                if config.ce.is_none() {
                    return Err(Error::Precondition("ce backend needs a lie_algebra section".into()));
                }
            }
            "primitive-search" => config.primitive = Some(manifest.search_bounds()?),
            "lattice" => {
                let Some((grid, _)) = manifest.grid_setup()? else {
                    return Err(Error::Precondition("lattice backend needs a grid section".into()));
                };
                config.lattice = Some(grid);
            }
            other => return Err(Error::Parse(format!("unknown backend {other}"))),
        }
    }
    let (verdict, result) = dynamics::flux_vanishing_test(&structure, &iso, &config)?;
    let verdicts: Vec<Value> = result
        .verdicts
        .iter()
        .map(|v| {
            let backend = match v.backend {
                Backend::CeInvariant => "ce",
                Backend::PrimitiveSearch => "primitive-search",
                Backend::Lattice => "lattice",
            };
            let (kind, witness) = match &v.verdict {
                ClassVerdict::ZeroClass { primitive } => ("zero-class", Some(coeff_json(primitive))),
                ClassVerdict::Obstructed => ("obstructed", None),
                ClassVerdict::Inconclusive => ("inconclusive", None),
            };
            let mut obj = json!({ "backend": backend, "verdict": kind, "detail": v.detail });
            if let Some(w) = witness {
                obj.as_object_mut().expect("object").insert("witness".into(), w);
            }
            obj
        })
        .collect();
    Ok(JobReport::new("flux-vanishing")
        .with("flux_form", form_json(&result.form))
        .with(
            "verdict",
            json!(match verdict {
                FluxVerdict::Vanishes => "vanishes",
                FluxVerdict::Obstructed => "obstructed up to search bounds",
            }),
        )
        .with("backends", Value::Array(verdicts)))
}

/// Did any job fail validation (as opposed to erroring out)?
pub fn has_failures(report: &Report) -> bool {
    report.jobs.iter().any(|j| j.verdict != Verdict::Pass)
}
