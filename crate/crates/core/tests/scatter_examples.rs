//! Forward scattering: exact non-scattering pairs converge to zero under
//! refinement, detuned and obstructed configurations scatter.

use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use nonscatter::error::Error;
use nonscatter::fields::{FieldSpec, HelmholtzField, PlaneWave};
use nonscatter::geometry::{Point, Rect};
use nonscatter::media::*;
use nonscatter::scatter::*;
use nonscatter::spectra::{sector_eigenfunction, sector_spectrum, BoundaryCondition};
use proptest::prelude::*;

/// Fine grids factorise with a few hundred MB each; one at a time.
static SOLVER: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SOLVER.lock().unwrap_or_else(|e| e.into_inner())
}

fn plane_waves(k: f64, waves: &[([f64; 2], f64)]) -> Incident {
    let waves = waves.iter().map(|&(dir, a)| PlaneWave { dir, amp: [a, 0.0] }).collect();
    Incident::Field(HelmholtzField::from_spec(&FieldSpec::PlaneWaves { k, waves }).unwrap())
}

/// `4 sin(pi x) sin(pi y)` as four plane waves of wavenumber `k`.
fn four_waves(k: f64) -> Incident {
    let s = 0.5f64.sqrt();
    plane_waves(k, &[([s, s], -1.0), ([-s, -s], -1.0), ([s, -s], 1.0), ([-s, s], 1.0)])
}

fn unit_square(a: f64) -> MediumSpec {
    MediumSpec::ConstantIsotropic { region: Region::rect(Rect::new(0.0, 1.0, 0.0, 1.0)), a, q: a }
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn background_medium_is_silent_at_every_resolution() {
    let _g = lock();
    let k = 3.0;
    let inc = plane_waves(k, &[([0.6, 0.8], 1.0), ([-1.0, 0.0], 0.5)]);
    let (rep, _) = refinement_study(&unit_square(1.0), &inc, k, &[1.0 / 10.0, 1.0 / 20.0, 1.0 / 40.0], &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NonScatteringConsistent);
    assert!(rep.levels.iter().all(|l| l.rel_scatter < 1e-9), "{rep:?}");
}

#[test]
fn square_dirichlet_pair_does_not_scatter() {
    let _g = lock();
    let k = PI * 2f64.sqrt();
    let inc = four_waves(k);
    let medium = unit_square(2.0);
    let hs = [1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0];
    let (rep, results) = refinement_study(&medium, &inc, k, &hs, &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NonScatteringConsistent, "{rep:?}");
    assert!(rep.levels.last().unwrap().rel_scatter < 1e-3);
    assert!(rep.levels.windows(2).all(|w| w[1].h < w[0].h));
    // Inside, the total field is u_i / a (the Dirichlet pairing w, a w).
    for r in &results {
        assert!(r.residual <= 1e-8);
        let mis = interior_mismatch(r, &medium, &inc, &|p| Ok(inc.value(p)? / 2.0)).unwrap();
        assert!(mis < 1e-10, "h = {}: {mis}", r.h);
    }
}

#[test]
fn detuned_square_scatters_and_the_layer_is_not_the_bottleneck() {
    let _g = lock();
    let k = 1.1 * PI * 2f64.sqrt();
    let inc = four_waves(k);
    let medium = unit_square(2.0);
    let (rep, results) = refinement_study(&medium, &inc, k, &[1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0], &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::Scattering, "{rep:?}");
    let last = results.last().unwrap().rel_scatter;
    assert!(last > 1e-2);
    let wide = assemble_and_solve(&medium, &inc, k, &SolverConfig { h: 1.0 / 80.0, layer_wavelengths: 2.0, ..cfg() }).unwrap();
    assert!(((wide.rel_scatter - last) / last).abs() < 0.1, "{} vs {last}", wide.rel_scatter);
}

#[test]
fn shear_medium_does_not_scatter() {
    let _g = lock();
    let k = 3.0;
    let d = Diffeo::SquareShear { alpha: 0.3 };
    let medium = MediumSpec::Transform { diffeo: d.clone() };
    let inc = plane_waves(k, &[([0.6, 0.8], 1.0)]);
    let (rep, results) = refinement_study(&medium, &inc, k, &[1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0], &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NonScatteringConsistent, "{rep:?}");
    assert!(rep.orders.iter().all(|&o| o > 1.9), "{rep:?}");
    for r in &results {
        let mis = interior_mismatch(r, &medium, &inc, &|p| inc.value(&d.inverse(p)?)).unwrap();
        assert!(mis < 10.0 * r.rel_scatter, "h = {}: {mis} vs {}", r.h, r.rel_scatter);
    }
}

#[test]
fn disk_twist_does_not_scatter() {
    let _g = lock();
    let k = 2f64.sqrt();
    let medium = MediumSpec::Transform { diffeo: Diffeo::DiskTwist { amplitude: 1.0, power: 2 } };
    let inc = plane_waves(k, &[([1.0, 0.0], 1.0), ([0.0, 1.0], -0.3)]);
    let (rep, _) = refinement_study(&medium, &inc, k, &[1.0 / 10.0, 1.0 / 20.0, 1.0 / 40.0], &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NonScatteringConsistent, "{rep:?}");
}

#[test]
fn slab_mode_does_not_scatter() {
    let _g = lock();
    let ex = build_explicit_example(&ExplicitParams::Slab { b1: 0.0, b2: 1.0, c1: 0.0, c2: 1.0, a0: 2.0, a22: 3.0, variation: 0.5 }).unwrap();
    let e = ex.eigenpair(1, None).unwrap();
    let inc = Incident::Field(e.v.clone());
    let (rep, results) = refinement_study(&ex.spec, &inc, e.k, &[1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0], &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::NonScatteringConsistent, "{rep:?}");
    for r in &results {
        let mis = interior_mismatch(r, &ex.spec, &inc, &|p| Ok(Complex64::from(e.u.value(p)?))).unwrap();
        assert!(mis < 10.0 * r.rel_scatter, "{mis}");
    }
}

#[test]
fn irrational_sector_scatters() {
    let _g = lock();
    let alpha = 1.0;
    let entry = sector_spectrum(alpha, 1.0, BoundaryCondition::Dirichlet, 1).unwrap()[0].clone();
    assert!(!entry.extendable);
    let medium = MediumSpec::ConstantIsotropic { region: Region::Sector { radius: 1.0, angle: alpha }, a: 2.0, q: 2.0 };
    // The eigenfunction itself is not an admissible incident field: its
    // cut runs into the sector.
    let w = sector_eigenfunction(alpha, BoundaryCondition::Dirichlet, &entry).unwrap();
    assert!(matches!(assemble_and_solve(&medium, &Incident::Field(w), entry.k, &cfg()), Err(Error::InvalidParameter(_))));
    let inc = plane_waves(entry.k, &[([1.0, 0.0], 1.0)]);
    let (rep, _) = refinement_study(&medium, &inc, entry.k, &[1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0], &cfg()).unwrap();
    assert_eq!(rep.verdict, Verdict::Scattering, "{rep:?}");
}

#[test]
fn point_source_is_an_outgoing_solution_away_from_the_source() {
    let near = Region::Disk { cx: 0.0, cy: 0.0, radius: 2.0 };
    let s = point_source_incident(Point::new(5.0, 0.0), 1.0, near.clone()).unwrap();
    let (u, g) = s.value_grad(&Point::zeros()).unwrap();
    assert!(u.norm().is_finite() && u.norm() > 0.0);
    // Laplacian from central differences of the analytic gradient.
    let h = 1e-5;
    let mut lap = Complex64::new(0.0, 0.0);
    for axis in 0..2 {
        let mut e = Point::zeros();
        e[axis] = h;
        let (_, gp) = s.value_grad(&e).unwrap();
        let (_, gm) = s.value_grad(&-e).unwrap();
        lap += (gp[axis] - gm[axis]) / (2.0 * h);
    }
    assert!((lap + u).norm() < 1e-8, "{}", (lap + u).norm());
    assert!(g[0].norm() > 0.0);
    // -(1/4) Y0(5) + (i/4) J0(5) at the origin.
    let oracle = Complex64::new(-0.25 * -0.308_517_625_249_033_6, 0.25 * -0.177_596_771_314_338_3);
    assert!((u - oracle).norm() < 1e-12, "{u} vs {oracle}");
    assert!(s.value_grad(&Point::new(4.99, 0.0)).is_err());
    assert!(matches!(point_source_incident(Point::new(1.0, 0.0), 1.0, near), Err(Error::SourceInsideNeighborhood)));
}

#[test]
fn point_source_reciprocity() {
    let _g = lock();
    let k = 4.0;
    let medium = unit_square(2.0);
    let near = Region::Disk { cx: 0.5, cy: 0.5, radius: 1.0 };
    let (x0, xr) = (Point::new(2.5, 0.7), Point::new(-1.2, -0.9));
    // Both points sit in the graded zone; bilinear interpolation there is
    // what "matched resolution" has to cover.
    let config = SolverConfig { h: 1.0 / 40.0, coarse_ppw: 32.0, ..cfg() };
    let solve = |src: Point| {
        let s = point_source_incident(src, k, near.clone()).unwrap();
        assemble_and_solve(&medium, &Incident::PointSource(s), k, &config).unwrap()
    };
    let a = solve(x0).scattered_at(&xr);
    let b = solve(xr).scattered_at(&x0);
    assert!(a.norm() > 1e-3);
    assert!((a - b).norm() < 0.01 * a.norm(), "{a} vs {b}");
}

#[test]
fn solver_preconditions_are_enforced() {
    let k = 10.0;
    let inc = plane_waves(k, &[([1.0, 0.0], 1.0)]);
    let medium = unit_square(2.0);
    let coarse = SolverConfig { h: 0.1, ..cfg() };
    assert!(matches!(assemble_and_solve(&medium, &inc, k, &coarse), Err(Error::WavelengthUnderResolved(_))));
    let tiny = SolverConfig { h: 0.05, max_unknowns: 100, ..cfg() };
    assert!(matches!(assemble_and_solve(&medium, &inc, k, &tiny), Err(Error::TooLarge(_))));
    assert!(matches!(assemble_and_solve(&medium, &inc, 9.0, &tiny), Err(Error::WavenumberMismatch(..))));
    assert!(refinement_study(&medium, &inc, k, &[0.05, 0.025], &cfg()).is_err());
    assert!(refinement_study(&medium, &inc, k, &[0.05, 0.03, 0.015], &cfg()).is_err());
}

#[test]
fn scattered_field_csv_and_report_json() {
    let _g = lock();
    let k = 2.0;
    let inc = plane_waves(k, &[([1.0, 0.0], 1.0)]);
    let r = assemble_and_solve(&unit_square(2.0), &inc, k, &SolverConfig { h: 0.1, ..cfg() }).unwrap();
    let csv = r.to_csv();
    assert!(csv.starts_with("x,y,re,im\n"));
    assert_eq!(csv.lines().count(), r.unknowns + 1);
    let rep = RefinementReport { k, levels: vec![], orders: vec![], verdict: Verdict::Inconclusive };
    let json = serde_json::to_string(&rep).unwrap();
    assert_eq!(json, r#"{"k":2.0,"levels":[],"orders":[],"verdict":"Inconclusive"}"#);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn halving_by_two_to_below_a_thousandth_is_non_scattering(start in 1e-3f64..1.0, r1 in 2.0f64..8.0, r2 in 2.0f64..8.0, r3 in 2.0f64..8.0) {
        let v = [start, start / r1, start / r1 / r2, start / r1 / r2 / r3];
        let verdict = classify_refinement(&v);
        if v[3] < 1e-3 {
            prop_assert_eq!(verdict, Verdict::NonScatteringConsistent);
        } else {
            prop_assert_eq!(verdict, Verdict::Inconclusive);
        }
    }

    #[test]
    fn stable_large_values_scatter(v in 1.5e-2f64..1.0, drift in -0.3f64..0.3) {
        prop_assert_eq!(classify_refinement(&[v, v * (1.0 + drift), v * (1.0 + drift / 2.0)]), Verdict::Scattering);
    }
}
