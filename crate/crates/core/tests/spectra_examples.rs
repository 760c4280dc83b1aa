use std::f64::consts::PI;

use nonscatter::bessel::bessel_j;
use nonscatter::error::Error;
use nonscatter::fields::{FieldSpec, HelmholtzField, TrigFactor, TrigFn, TrigTerm};
use nonscatter::flow::examples::{cos_x_plus_cos_y, cosxy_corner_domain};
use nonscatter::flow::OrbitOptions;
use nonscatter::geometry::{Point, Rect};
use nonscatter::media::{build_explicit_example, pull_field, Diffeo, ExplicitParams, MediumSpec, Region};
use nonscatter::spectra::*;
use proptest::prelude::*;

fn trig(k: f64, fx: TrigFn, wx: f64, fy: TrigFn, wy: f64) -> HelmholtzField {
    let t = TrigTerm {
        weight: 1.0,
        x: TrigFactor { func: fx, freq: wx, phase: 0.0 },
        y: TrigFactor { func: fy, freq: wy, phase: 0.0 },
    };
    HelmholtzField::from_spec(&FieldSpec::Trig { k, terms: vec![t] }).unwrap()
}

/// `sin(m pi x) sin(n pi y)` or `cos(m pi x) cos(n pi y)` on the unit square.
fn square_mode(bc: BoundaryCondition, m: u32, n: u32) -> (f64, HelmholtzField) {
    let (wx, wy) = (m as f64 * PI, n as f64 * PI);
    let k = (wx * wx + wy * wy).sqrt();
    let f = match bc {
        BoundaryCondition::Dirichlet => TrigFn::Sin,
        BoundaryCondition::Neumann => TrigFn::Cos,
    };
    (k, trig(k, f, wx, f, wy))
}

fn unit_square() -> CavityDomain {
    CavityDomain::rect(Rect::new(0.0, 1.0, 0.0, 1.0))
}

fn quick() -> SampleOptions {
    SampleOptions { interior: 2000, boundary: 100 }
}

#[test]
fn unit_square_dirichlet_mode() {
    let (k, w) = square_mode(BoundaryCondition::Dirichlet, 1, 1);
    assert!((k - PI * 2f64.sqrt()).abs() < 1e-15);
    let p = CavityProblem { domain: unit_square(), bc: BoundaryCondition::Dirichlet, k };
    let rep = verify_cavity_eigenpair(&p, &w, &SampleOptions::default()).unwrap();
    assert!(rep.verdict && rep.samples >= 10_000, "{rep:?}");
    assert!(rep.pde_residual < 1e-12 && rep.bc_residual < 1e-14);

    let (_, wrong) = square_mode(BoundaryCondition::Neumann, 1, 1);
    let rep = verify_cavity_eigenpair(&p, &wrong, &quick()).unwrap();
    assert!(!rep.verdict && rep.bc_residual > 0.99, "{rep:?}");
}

#[test]
fn cosxy_lens_is_a_neumann_domain() {
    let w = cos_x_plus_cos_y();
    for (d1, d2) in [(0.5, 2.0), (0.2, 1.0)] {
        let (dom, _) = cosxy_corner_domain(d1, 1, d2, 1, &OrbitOptions::default()).unwrap();
        let domain = CavityDomain::Curve { curve: dom.boundary };
        let p = CavityProblem { domain: domain.clone(), bc: BoundaryCondition::Neumann, k: 1.0 };
        let rep = verify_cavity_eigenpair(&p, &w, &SampleOptions::default()).unwrap();
        assert!(rep.verdict && rep.bc_residual < 1e-8 && rep.samples == 10_000, "{rep:?}");
        // Delta v + 2 v = v is not zero: sqrt(2) is not an eigenvalue of this field.
        let p2 = CavityProblem { domain, bc: BoundaryCondition::Neumann, k: 2f64.sqrt() };
        let rep2 = verify_cavity_eigenpair(&p2, &w, &quick()).unwrap();
        assert!(!rep2.verdict && rep2.pde_residual > 0.5, "{rep2:?}");
    }
}

#[test]
fn open_curve_is_not_a_domain() {
    let curve = nonscatter::geometry::PlanarCurve::open(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0)]);
    let p = CavityProblem { domain: CavityDomain::Curve { curve }, bc: BoundaryCondition::Dirichlet, k: 1.0 };
    let (_, w) = square_mode(BoundaryCondition::Dirichlet, 1, 1);
    assert!(matches!(verify_cavity_eigenpair(&p, &w, &quick()), Err(Error::DomainNotClosed { .. })));
}

#[test]
fn dirichlet_and_neumann_modes_give_transmission_pairs() {
    let region = Region::Rect { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 };
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let (k, w) = square_mode(bc, 1, 1);
        for a in [0.3, 2.0, 7.0] {
            let pair = itep_from_cavity(&w, bc, a).unwrap();
            let rep = verify_itep(&pair.medium(region.clone()), &unit_square(), k, &pair.u, &pair.v, &quick()).unwrap();
            assert!(rep.verdict && rep.pde_residual < 1e-8 && rep.bc_residual < 1e-8, "{bc:?} {a}: {rep:?}");
        }
    }
    let (_, w) = square_mode(BoundaryCondition::Dirichlet, 1, 1);
    assert!(itep_from_cavity(&w, BoundaryCondition::Dirichlet, 1.0).is_err());
}

#[test]
fn flipped_pairing_fails_the_flux_line() {
    // (u, v) = (a w, w) matches on the boundary but not in flux.
    let (k, w) = square_mode(BoundaryCondition::Dirichlet, 1, 1);
    let a = 2.0;
    let u = HelmholtzField::combine(&[(a, w.clone())]).unwrap();
    let medium = MediumSpec::ConstantIsotropic { region: Region::unit_disk(), a, q: a };
    let rep = verify_itep(&medium, &unit_square(), k, &u, &w, &quick()).unwrap();
    assert!(rep.bc_residuals["difference"] < 1e-14);
    assert!(rep.bc_residuals["flux"] > 1.0 && !rep.verdict, "{rep:?}");
}

#[test]
fn neumann_lens_gives_a_transmission_pair() {
    let w = cos_x_plus_cos_y();
    let (dom, _) = cosxy_corner_domain(0.5, 1, 2.0, 1, &OrbitOptions::default()).unwrap();
    let pair = itep_from_cavity(&w, BoundaryCondition::Neumann, 3.0).unwrap();
    let domain = CavityDomain::Curve { curve: dom.boundary };
    let rep = verify_itep(&pair.medium(Region::unit_disk()), &domain, 1.0, &pair.u, &pair.v, &quick()).unwrap();
    assert!(rep.verdict && rep.bc_residuals["flux"] < 1e-8, "{rep:?}");
}

#[test]
fn explicit_examples_are_transmission_eigenpairs() {
    let square = CavityDomain::Region { region: Region::Rect { xmin: 0.0, xmax: PI, ymin: 0.0, ymax: PI } };
    let cases = [
        (ExplicitParams::AdiagSquare { a1: 2.0, a2: 4.0, q0: 3.0, m: 1, n: 1 }, 1u32),
        (ExplicitParams::AdiagSquare { a1: 2.0, a2: 4.0, q0: 3.0, m: 1, n: 1 }, 3),
        (ExplicitParams::AdiagSquare { a1: 1.0, a2: 3.0, q0: 2.0, m: 0, n: 0 }, 1),
        (ExplicitParams::AdiagSquare { a1: 1.0, a2: 3.0, q0: 2.0, m: 0, n: 0 }, 2),
        (ExplicitParams::AdiagSquare { a1: 0.5, a2: 1.0, q0: 0.75, m: 0, n: 0 }, 2),
        // Imaginary b: k^2 = m^2 / 4 < m^2.
        (ExplicitParams::AdiagSquare { a1: 1.5, a2: 1.0, q0: 3.0, m: 0, n: 0 }, 2),
    ];
    for (params, j) in cases {
        let ex = build_explicit_example(&params).unwrap();
        let e = ex.eigenpair(j, None).unwrap();
        let rep = verify_itep(&ex.spec, &square, e.k, &e.u, &e.v, &quick()).unwrap();
        assert!(rep.pde_residual < 1e-8 && rep.bc_residual < 1e-8, "{params:?} j={j}: {rep:?}");
    }
}

#[test]
fn rank_deficient_medium_at_any_frequency() {
    let region = Region::Disk { cx: 0.3, cy: -0.2, radius: 1.5 };
    for (angle, variation) in [(0.0, 0.0), (0.7, 0.4)] {
        let ex = build_explicit_example(&ExplicitParams::RankDeficient { region: region.clone(), angle, a1: 5.0, variation }).unwrap();
        for k in [1.0, 2.7, 7.3, 10.0] {
            let e = ex.eigenpair(1, Some(k)).unwrap();
            let rep = verify_itep(&ex.spec, &CavityDomain::Region { region: region.clone() }, k, &e.u, &e.v, &quick()).unwrap();
            assert!(rep.pde_residual < 1e-8 && rep.bc_residual < 1e-8, "{angle} k={k}: {rep:?}");
        }
    }
}

#[test]
fn slab_medium_modes() {
    for variation in [0.0, 0.5] {
        let params = ExplicitParams::Slab { b1: 0.0, b2: 1.0, c1: -0.5, c2: 0.5, a0: 2.0, a22: 3.0, variation };
        let ex = build_explicit_example(&params).unwrap();
        for m in 1..=3 {
            let e = ex.eigenpair(m, None).unwrap();
            assert!((e.k - m as f64 * PI).abs() < 1e-14);
            let rep = verify_itep(&ex.spec, &CavityDomain::Region { region: ex.spec.region() }, e.k, &e.u, &e.v, &quick()).unwrap();
            assert!(rep.pde_residual < 1e-8 && rep.bc_residual < 1e-8, "m={m}: {rep:?}");
        }
    }
}

#[test]
fn transformation_medium_pair_through_finite_differences() {
    let d = Diffeo::DiskTwist { amplitude: 1.0, power: 2 };
    let v = trig(2f64.sqrt(), TrigFn::Sin, 1.0, TrigFn::Cos, 1.0);
    let u = pull_field(&d, &v).unwrap();
    let medium = MediumSpec::Transform { diffeo: d.clone() };
    let rep = verify_itep(&medium, &CavityDomain::Region { region: d.region() }, 2f64.sqrt(), &u, &v, &quick()).unwrap();
    assert!(rep.verdict && rep.pde_residual < 1e-6, "{rep:?}");
}

#[test]
fn sector_dichotomy() {
    let s = sector_spectrum(PI / 2.0, 1.0, BoundaryCondition::Dirichlet, 6).unwrap();
    // j_{2,1} to 17 digits.
    assert!((s[0].k - 5.135_622_301_840_683).abs() < 1e-10);
    let third = sector_spectrum(PI / 3.0, 1.0, BoundaryCondition::Dirichlet, 12).unwrap();
    assert!(third.iter().all(|e| e.extendable));
    let irr = sector_spectrum(1.0, 1.0, BoundaryCondition::Dirichlet, 12).unwrap();
    assert!(irr.iter().all(|e| !e.extendable));
    // 2 pi / 3 is a rational multiple of pi: only even m give integer orders.
    let rat = sector_spectrum(2.0 * PI / 3.0, 1.0, BoundaryCondition::Dirichlet, 12).unwrap();
    assert!(rat.iter().all(|e| e.extendable == (e.m % 2 == 0)));
    assert!(rat.iter().any(|e| e.extendable) && rat.iter().any(|e| !e.extendable));
    for e in irr.iter().chain(&third) {
        assert!(bessel_j(e.order, e.k).abs() < 1e-10);
    }
}

#[test]
fn sector_eigenfunctions_pass_the_cavity_check() {
    for alpha in [1.0, PI / 3.0, 4.0] {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            for e in sector_spectrum(alpha, 1.0, bc, 4).unwrap() {
                let w = sector_eigenfunction(alpha, bc, &e).unwrap();
                assert_eq!(w.is_entire(), e.extendable);
                let p = CavityProblem { domain: CavityDomain::Sector { radius: 1.0, angle: alpha }, bc, k: e.k };
                let rep = verify_cavity_eigenpair(&p, &w, &quick()).unwrap();
                assert!(rep.verdict, "alpha={alpha} {bc:?} {e:?}: {rep:?}");
            }
        }
    }
}

#[test]
fn reflections_across_the_x_axis() {
    let (k, s) = square_mode(BoundaryCondition::Dirichlet, 1, 1);
    let ext = reflect_extend(s.clone(), 0.0, (0.0, 1.0), BoundaryCondition::Dirichlet, true).unwrap();
    let (_, c) = square_mode(BoundaryCondition::Neumann, 1, 1);
    let even = reflect_extend(c.clone(), 0.0, (0.0, 1.0), BoundaryCondition::Neumann, true).unwrap();
    let lower = Region::Rect { xmin: 0.0, xmax: 1.0, ymin: -1.0, ymax: 0.0 };
    for p in lower.interior_samples(200, 0.0) {
        assert!((ext.jet(&p).unwrap().value - s.jet(&p).unwrap().value).abs() < 1e-14);
        assert!((even.jet(&p).unwrap().value - c.jet(&p).unwrap().value).abs() < 1e-14);
    }
    assert!(ext.axis_residual(k, (0.0, 1.0), 1e-3).unwrap() < 1e-4);
    assert!(matches!(
        reflect_extend(s.clone(), 0.0, (0.0, 1.0), BoundaryCondition::Neumann, true),
        Err(Error::BcNotSatisfiedOnAxis(r)) if r > 1.0
    ));
    // An even extension of a field with nonzero normal derivative has a kink.
    let kinked = ReflectedField { inner: s, axis_y: 0.0, data_above: true, bc: BoundaryCondition::Neumann };
    assert!(kinked.axis_residual(k, (0.0, 1.0), 1e-3).unwrap() > 100.0);
}

use nonscatter::fields::FieldLike;

fn random_pair() -> impl Strategy<Value = (u32, u32, usize, bool)> {
    (1u32..5, 1u32..5, 0usize..3, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn lemma_round_trip((m, n, ai, dirichlet) in random_pair()) {
        let a = [0.3, 2.0, 7.0][ai];
        let bc = if dirichlet { BoundaryCondition::Dirichlet } else { BoundaryCondition::Neumann };
        let (k, w) = square_mode(bc, m, n);
        let cavity = verify_cavity_eigenpair(&CavityProblem { domain: unit_square(), bc, k }, &w, &quick()).unwrap();
        prop_assert!(cavity.verdict);
        let pair = itep_from_cavity(&w, bc, a).unwrap();
        let region = Region::Rect { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 };
        let rep = verify_itep(&pair.medium(region), &unit_square(), k, &pair.u, &pair.v, &quick()).unwrap();
        prop_assert!(rep.verdict, "{:?}", rep);
        let (wd, wn) = decompose_itep(&pair.u, &pair.v, a).unwrap();
        let d = verify_cavity_eigenpair(&CavityProblem { domain: unit_square(), bc: BoundaryCondition::Dirichlet, k }, &wd, &quick()).unwrap();
        let nn = verify_cavity_eigenpair(&CavityProblem { domain: unit_square(), bc: BoundaryCondition::Neumann, k }, &wn, &quick()).unwrap();
        prop_assert!(d.verdict && nn.verdict);
        let sd = sup_norm(&unit_square(), &wd, 500).unwrap();
        let sn = sup_norm(&unit_square(), &wn, 500).unwrap();
        prop_assert!(sd > 1e-3 || sn > 1e-3);
        // The nontrivial part carries the original boundary condition.
        if dirichlet { prop_assert!(sd > 1e-3) } else { prop_assert!(sn > 1e-3) }
    }
}
