//! The `field`, `nodal`, `flow`, `spectra`, `media` and `scatter`
//! subcommands: one configuration file in, one run report out.

use std::path::Path;

use nonscatter::fields::grid_to_csv;
use nonscatter::flow::{assemble_neumann_domain, find_stationary_points, neumann_flux_check, trace_full_orbit, trace_orbit};
use nonscatter::geometry::{curves_to_svg, round_sig, Point};
use nonscatter::media::{build_explicit_example, check_pulled_field, check_structural_identities, pull_field, ExplicitParams, MediumSpec, Region};
use nonscatter::nodal::{certify_signs, corner_angle_check, find_critical_points, seed_on_segment, trace_nodal, CellLabel};
use nonscatter::scatter::{assemble_and_solve, refinement_study, Verdict};
use nonscatter::spectra::{sector_spectrum, verify_cavity_eigenpair, verify_itep, BoundaryCondition, CavityDomain, CavityProblem, SampleOptions};

use crate::config::{self, load};
use crate::error::CliError;
use crate::report::{Halt, Run, RunReport};

/// Subcommands taking a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    FieldEval,
    FieldGrid,
    NodalCertify,
    NodalTrace,
    NodalCritical,
    FlowStationary,
    FlowTrace,
    FlowDomain,
    SpectraCavity,
    SpectraItep,
    SpectraSector,
    MediaBuild,
    MediaCheck,
    ScatterSolve,
    ScatterStudy,
}

impl Command {
    /// Run name (`group-action`) and schema definition name.
    pub fn names(self) -> (&'static str, &'static str) {
        match self {
            Command::FieldEval => ("field-eval", "fieldEval"),
            Command::FieldGrid => ("field-grid", "fieldGrid"),
            Command::NodalCertify => ("nodal-certify", "nodalCertify"),
            Command::NodalTrace => ("nodal-trace", "nodalTrace"),
            Command::NodalCritical => ("nodal-critical", "fieldWindow"),
            Command::FlowStationary => ("flow-stationary", "fieldWindow"),
            Command::FlowTrace => ("flow-trace", "flowTrace"),
            Command::FlowDomain => ("flow-domain", "flowDomain"),
            Command::SpectraCavity => ("spectra-cavity", "spectraCavity"),
            Command::SpectraItep => ("spectra-itep", "spectraItep"),
            Command::SpectraSector => ("spectra-sector", "spectraSector"),
            Command::MediaBuild => ("media-build", "mediaBuild"),
            Command::MediaCheck => ("media-check", "mediaCheck"),
            Command::ScatterSolve => ("scatter-solve", "scatterSolve"),
            Command::ScatterStudy => ("scatter-study", "scatterStudy"),
        }
    }
}

/// Load the configuration (errors here are configuration errors) and run.
pub fn run_command(cmd: Command, config_path: &Path, out: &Path) -> Result<RunReport, CliError> {
    let (name, def) = cmd.names();
    let anchor = format!("configuration {}", config_path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
    let mut run = Run::new(name, &anchor, out);
    // The halt marker is already recorded in the report.
    let _ = match cmd {
        Command::FieldEval => field_eval(&mut run, load(config_path, def)?),
        Command::FieldGrid => field_grid(&mut run, load(config_path, def)?),
        Command::NodalCertify => nodal_certify(&mut run, load(config_path, def)?),
        Command::NodalTrace => nodal_trace(&mut run, load(config_path, def)?),
        Command::NodalCritical => nodal_critical(&mut run, load(config_path, def)?),
        Command::FlowStationary => flow_stationary(&mut run, load(config_path, def)?),
        Command::FlowTrace => flow_trace(&mut run, load(config_path, def)?),
        Command::FlowDomain => flow_domain(&mut run, load(config_path, def)?),
        Command::SpectraCavity => spectra_cavity(&mut run, load(config_path, def)?),
        Command::SpectraItep => spectra_itep(&mut run, load(config_path, def)?),
        Command::SpectraSector => spectra_sector(&mut run, load(config_path, def)?),
        Command::MediaBuild => media_build(&mut run, load(config_path, def)?),
        Command::MediaCheck => media_check(&mut run, load(config_path, def)?),
        Command::ScatterSolve => scatter_solve(&mut run, load(config_path, def)?),
        Command::ScatterStudy => scatter_study(&mut run, load(config_path, def)?),
    };
    Ok(run.finish())
}

fn field_eval(run: &mut Run, c: config::FieldEval) -> Result<(), Halt> {
    run.step("evaluate", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let mut rows = Vec::with_capacity(c.points.len());
        let mut worst = 0.0f64;
        for p in &c.points {
            let j = f.jet(&Point::new(p[0], p[1]))?;
            let res = j.laplacian() + f.k() * f.k() * j.value;
            worst = worst.max(res.abs());
            rows.push(serde_json::json!({
                "x": p[0],
                "y": p[1],
                "value": j.value,
                "grad": [j.grad.x, j.grad.y],
                "hess": [j.hess[(0, 0)], j.hess[(0, 1)], j.hess[(1, 1)]],
                "helmholtzResidual": res,
            }));
        }
        s.value("k", f.k());
        s.value("entire", f.is_entire());
        s.value("points", rows);
        s.below("helmholtz residual", worst, 1e-8 * f.amplitude_scale().max(1.0) * f.k().max(1.0).powi(2));
        Ok(())
    })
}

fn field_grid(run: &mut Run, c: config::FieldGrid) -> Result<(), Halt> {
    run.step("grid", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let samples = f.grid(&c.window, c.n);
        s.value("samples", samples.len());
        s.value("cuts", f.sigma().len());
        s.write("grid.csv", &grid_to_csv(&samples))
    })
}

fn nodal_certify(run: &mut Run, c: config::NodalCertify) -> Result<(), Halt> {
    run.step("certify", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let cert = certify_signs(&f, &c.window, c.h)?;
        for (key, l) in [
            ("positive", CellLabel::Positive),
            ("negative", CellLabel::Negative),
            ("undetermined", CellLabel::Undetermined),
            ("nearCut", CellLabel::NearCut),
        ] {
            s.value(key, cert.count(l));
        }
        s.value("cells", [cert.nx, cert.ny]);
        s.write("signs.csv", &cert.to_csv())
    })
}

fn nodal_trace(run: &mut Run, c: config::NodalTrace) -> Result<(), Halt> {
    run.step("trace", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let seed = match (c.seed_point(), c.segment()) {
            (Some(p), _) => p,
            (None, Some((a, b, n))) => seed_on_segment(&f, a, b, n)
                .ok_or_else(|| nonscatter::error::Error::InvalidParameter("no sign change on the seed segment".into()))?,
            _ => unreachable!("validated"),
        };
        let opts = c.trace_options();
        let t = trace_nodal(&f, seed, &opts)?;
        s.value("seed", [seed.x, seed.y]);
        s.value("vertices", t.curve.len());
        s.value("closed", t.curve.closed);
        s.value("startEnd", t.start_end);
        s.value("finishEnd", t.finish_end);
        s.value("closureGap", t.closure_gap);
        s.value("sigmaDistance", t.sigma_distance);
        s.value("arcLength", t.curve.arc_length());
        s.below("max |v| on curve", t.max_abs_value, 1e-10);
        if let Some(g) = t.closure_gap {
            s.below("closure gap below step/2", g, 0.5 * opts.step);
        }
        s.write("curve.jsonl", &t.curve.to_jsonl())?;
        s.write("curve.svg", &curves_to_svg(&[t.curve.clone()], &[seed], None))
    })
}

fn nodal_critical(run: &mut Run, c: config::FieldWindow) -> Result<(), Halt> {
    run.step("critical points", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let cps = find_critical_points(&f, &c.window)?;
        let mut rows = Vec::new();
        for cp in &cps {
            let angles = match cp.order {
                Some(n) if n >= 2 => {
                    let r = corner_angle_check(cp)?;
                    s.below(&format!("corner lattice at ({:.6}, {:.6})", cp.point.x, cp.point.y), r.lattice_deviation, 1e-6);
                    Some(r)
                }
                _ => None,
            };
            rows.push(serde_json::json!({ "point": [cp.point.x, cp.point.y], "order": cp.order, "value": cp.value, "angles": angles }));
        }
        s.value("count", cps.len());
        s.value("points", rows);
        Ok(())
    })
}

fn flow_stationary(run: &mut Run, c: config::FieldWindow) -> Result<(), Halt> {
    run.step("stationary points", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let sp = find_stationary_points(&f, &c.window)?;
        s.value("count", sp.len());
        s.value("points", &sp);
        Ok(())
    })
}

fn flow_trace(run: &mut Run, c: config::FlowTrace) -> Result<(), Halt> {
    run.step("orbit", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let opts = c.options.clone().unwrap_or_default();
        let o = match c.direction {
            Some(d) => trace_orbit(&f, c.start_point(), d, &opts)?,
            None => trace_full_orbit(&f, c.start_point(), &opts)?,
        };
        s.value("vertices", o.curve.len());
        s.value("head", o.head);
        s.value("tail", o.tail);
        if o.curve.len() >= 3 {
            let flux = neumann_flux_check(&f, &o.curve)?;
            s.value("flux", flux);
            s.below("normal derivative along orbit", flux.max_flux, 1e-8);
        }
        s.write("orbit.jsonl", &o.to_jsonl())?;
        s.write("orbit.svg", &curves_to_svg(&[o.curve.clone()], &[c.start_point()], None))
    })
}

fn flow_domain(run: &mut Run, c: config::FlowDomain) -> Result<(), Halt> {
    let f = run.step("field", |_| Ok(nonscatter::fields::HelmholtzField::from_spec(&c.field)?))?;
    let d = run.step("domain", |s| {
        let opts = c.options.clone().unwrap_or_default();
        let mut arcs = Vec::new();
        for p in c.start_points() {
            arcs.push(trace_full_orbit(&f, p, &opts)?.curve);
        }
        let d = assemble_neumann_domain(&arcs, c.join_tol)?;
        let flux = neumann_flux_check(&f, &d.boundary)?;
        s.value("area", d.area);
        s.value("apertures", &d.corner_apertures);
        s.value("cusps", d.cusp_tags.len());
        s.below("normal derivative on boundary", flux.max_flux, 1e-8);
        s.write("boundary.jsonl", &d.boundary.to_jsonl())?;
        s.write("domain.svg", &curves_to_svg(&[d.boundary.clone()], &[], None))?;
        Ok(d)
    })?;
    run.step("neumann eigenpair", |s| {
        let p = CavityProblem { domain: CavityDomain::Curve { curve: d.boundary }, bc: BoundaryCondition::Neumann, k: f.k() };
        let rep = verify_cavity_eigenpair(&p, &f, &SampleOptions::default())?;
        s.value("report", &rep);
        s.holds("cavity verdict", rep.verdict);
        Ok(())
    })
}

fn spectra_cavity(run: &mut Run, c: config::SpectraCavity) -> Result<(), Halt> {
    run.step("cavity", |s| {
        let f = nonscatter::fields::HelmholtzField::from_spec(&c.field)?;
        let rep = verify_cavity_eigenpair(&c.problem, &f, &c.samples)?;
        s.value("report", &rep);
        s.holds("cavity verdict", rep.verdict);
        Ok(())
    })
}

fn spectra_itep(run: &mut Run, c: config::SpectraItep) -> Result<(), Halt> {
    run.step("transmission pair", |s| {
        let u = nonscatter::fields::HelmholtzField::from_spec(&c.u)?;
        let v = nonscatter::fields::HelmholtzField::from_spec(&c.v)?;
        let rep = verify_itep(&c.medium, &c.domain, c.k, &u, &v, &c.samples)?;
        s.value("report", &rep);
        s.holds("transmission verdict", rep.verdict);
        Ok(())
    })
}

fn spectra_sector(run: &mut Run, c: config::SpectraSector) -> Result<(), Halt> {
    run.step("sector spectrum", |s| {
        let e = sector_spectrum(c.alpha, c.radius, c.bc, c.count)?;
        s.value("entries", &e);
        s.value("extendable", e.iter().filter(|x| x.extendable).count());
        s.value("piOverN", nonscatter::spectra::pi_over_n(c.alpha));
        Ok(())
    })
}

fn media_build(run: &mut Run, c: config::MediaBuild) -> Result<(), Halt> {
    run.step("explicit example", |s| {
        let ex = build_explicit_example(&c.example)?;
        let e = ex.eigenpair(c.j, c.k)?;
        s.value("medium", &ex.spec);
        s.value("conditionSet", ex.condition_set);
        s.value("k", e.k);
        s.value("field", e.v.spec());
        let rep = verify_itep(&ex.spec, &CavityDomain::Region { region: ex.spec.region() }, e.k, &e.u, &e.v, &c.samples)?;
        s.value("report", &rep);
        s.below("medium residual", rep.pde_residual, 1e-8);
        s.below("boundary residual", rep.bc_residual, 1e-8);
        let bb = ex.spec.region().bbox();
        s.write("coefficients.csv", &ex.spec.sample_csv(&bb, 41, 41)?)
    })
}

fn media_check(run: &mut Run, c: config::MediaCheck) -> Result<(), Halt> {
    run.step("coefficients", |s| {
        s.value("provenance", c.medium.provenance());
        let bb = c.medium.region().bbox().expand(0.1);
        s.write("coefficients.csv", &c.medium.sample_csv(&bb, c.table, c.table)?)
    })?;
    if let MediumSpec::Transform { diffeo } = &c.medium {
        run.step("structural identities", |s| {
            let rep = check_structural_identities(&c.medium)?;
            s.value("report", rep);
            s.below("det law", rep.det_law, 1e-10);
            s.below("boundary normal identity", rep.boundary_nu, 1e-8);
            s.below("corner A nu = nu", rep.corner_a_nu, 1e-8);
            Ok(())
        })?;
        if let Some(spec) = &c.field {
            run.step("pulled field", |s| {
                let v = nonscatter::fields::HelmholtzField::from_spec(spec)?;
                let pf = pull_field(diffeo, &v)?;
                let rep = check_pulled_field(&pf, 2000, 400)?;
                s.value("report", rep);
                s.below("medium equation residual", rep.pde_residual, 1e-6);
                s.below("boundary mismatch", rep.boundary_mismatch, 1e-10);
                s.below("flux mismatch", rep.flux_mismatch, 1e-8);
                Ok(())
            })?;
        }
    }
    Ok(())
}

/// The built-in explicit examples with their verification.
pub fn media_examples(out: &Path) -> RunReport {
    let mut run = Run::new("media-examples", "built-in explicit anisotropic examples", out);
    let _ = examples_steps(&mut run);
    run.finish()
}

pub fn builtin_examples() -> Vec<(&'static str, ExplicitParams, Vec<(u32, Option<f64>)>)> {
    let disk = Region::Disk { cx: 0.3, cy: -0.2, radius: 1.5 };
    let adiag = |a1, a2, q0, m, n| ExplicitParams::AdiagSquare { a1, a2, q0, m, n };
    vec![
        ("adiag set 1", adiag(2.0, 4.0, 3.0, 1, 1), vec![(1, None), (3, None)]),
        ("adiag set 2", adiag(1.0, 3.0, 2.0, 0, 0), vec![(1, None), (2, None)]),
        ("adiag set 3", adiag(0.5, 1.0, 0.75, 0, 0), vec![(2, None)]),
        ("adiag set 3, evanescent", adiag(1.5, 1.0, 3.0, 0, 0), vec![(2, None)]),
        (
            "rank deficient",
            ExplicitParams::RankDeficient { region: disk, angle: 0.7, a1: 5.0, variation: 0.4 },
            vec![(1, Some(1.0)), (1, Some(2.7)), (1, Some(10.0))],
        ),
        (
            "slab",
            ExplicitParams::Slab { b1: 0.0, b2: 1.0, c1: 0.0, c2: 1.0, a0: 2.0, a22: 3.0, variation: 0.5 },
            vec![(1, None), (2, None), (3, None)],
        ),
    ]
}

fn examples_steps(run: &mut Run) -> Result<(), Halt> {
    let quick = SampleOptions { interior: 2000, boundary: 100 };
    for (name, params, instances) in builtin_examples() {
        run.step(name, |s| {
            let ex = build_explicit_example(&params)?;
            s.value("params", &params);
            s.value("conditionSet", ex.condition_set);
            let domain = CavityDomain::Region { region: ex.spec.region() };
            let mut rows = Vec::new();
            for (j, k) in instances {
                let e = ex.eigenpair(j, k)?;
                let rep = verify_itep(&ex.spec, &domain, e.k, &e.u, &e.v, &quick)?;
                s.below(&format!("residuals at k = {}", round_sig(e.k)), rep.pde_residual.max(rep.bc_residual), 1e-8);
                rows.push(serde_json::json!({ "j": j, "k": e.k, "pde": rep.pde_residual, "bc": rep.bc_residual }));
            }
            s.value("instances", rows);
            Ok(())
        })?;
    }
    Ok(())
}

fn scatter_solve(run: &mut Run, c: config::ScatterSolve) -> Result<(), Halt> {
    run.step("solve", |s| {
        let inc = c.incident()?;
        let r = assemble_and_solve(&c.medium, &inc, c.k, &c.solver)?;
        s.value("relScatter", r.rel_scatter);
        s.value("residual", r.residual);
        s.value("unknowns", r.unknowns);
        s.value("contourRadius", r.contour_radius);
        s.below("linear residual", r.residual, c.solver.tol.max(1e-8) * 10.0);
        s.write("scattered.csv", &r.to_csv())
    })
}

fn scatter_study(run: &mut Run, c: config::ScatterStudy) -> Result<(), Halt> {
    run.step("refinement", |s| {
        let inc = c.incident()?;
        let (rep, results) = refinement_study(&c.medium, &inc, c.k, &c.hs, &c.solver)?;
        for l in &rep.levels {
            s.value(&format!("relScatter h={}", round_sig(l.h)), l.rel_scatter);
        }
        s.value("orders", &rep.orders);
        s.value("verdict", rep.verdict);
        s.holds("verdict is conclusive", rep.verdict != Verdict::Inconclusive);
        s.write("study.json", &study_json(&rep))?;
        if let Some(r) = results.first() {
            s.write("scattered_coarsest.csv", &r.to_csv())?;
        }
        Ok(())
    })
}

/// Refinement table without timings, rounded for reproducibility.
pub fn study_json(rep: &nonscatter::scatter::RefinementReport) -> String {
    let mut v = serde_json::to_value(rep).unwrap_or_default();
    if let Some(levels) = v.get_mut("levels").and_then(|l| l.as_array_mut()) {
        for l in levels {
            if let Some(o) = l.as_object_mut() {
                o.remove("seconds");
            }
        }
    }
    let mut s = serde_json::to_string_pretty(&crate::report::canonical(v)).unwrap_or_default();
    s.push('\n');
    s
}
