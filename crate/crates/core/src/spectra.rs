//! Cavity eigenpair verification, the Dirichlet/Neumann to interior
//! transmission eigenpair correspondence, sector spectra and reflection
//! extensions across straight boundary pieces.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j_zeros, bessel_jp_zeros};
use crate::error::{Error, Result};
use crate::fields::{FieldJet, FieldLike, FieldSpec, HelmholtzField, WaveTerm};
use crate::geometry::{halton_points, PlanarCurve, Point, Rect};
use crate::media::{flux_divergence, BoundarySample, MediumSpec, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// The closed domain of a cavity or transmission problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CavityDomain {
    Region { region: Region },
    /// `{ r < radius, 0 < theta < angle }`.
    Sector { radius: f64, angle: f64 },
    /// A traced boundary; vertices are the boundary samples.
    Curve { curve: PlanarCurve },
}

impl CavityDomain {
    pub fn rect(r: Rect) -> Self {
        CavityDomain::Region { region: Region::rect(r) }
    }

    fn is_traced(&self) -> bool {
        matches!(self, CavityDomain::Curve { .. })
    }

    fn check(&self) -> Result<()> {
        match self {
            CavityDomain::Region { region } => region.validate(),
            CavityDomain::Sector { radius, angle } => {
                if *radius > 0.0 && *angle > 0.0 && *angle < 2.0 * PI {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("sector needs radius > 0 and angle in (0, 2 pi)".into()))
                }
            }
            CavityDomain::Curve { curve } => {
                if curve.len() < 3 {
                    return Err(Error::DegenerateCurve("domain boundary needs at least 3 vertices".into()));
                }
                let gap = (curve.vertices[curve.len() - 1] - curve.vertices[0]).norm();
                if !curve.closed && gap > 1e-9 {
                    return Err(Error::DomainNotClosed { gap });
                }
                Ok(())
            }
        }
    }

    fn bbox(&self) -> Rect {
        match self {
            CavityDomain::Region { region } => region.bbox(),
            CavityDomain::Sector { radius, angle } => Region::Sector { radius: *radius, angle: *angle }.bbox(),
            CavityDomain::Curve { curve } => Rect::bounding(&curve.vertices),
        }
    }

    /// Membership in the open domain.
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            CavityDomain::Region { region } => region.depth(p) > 0.0,
            CavityDomain::Sector { radius, angle } => {
                let th = p.y.atan2(p.x).rem_euclid(2.0 * PI);
                p.norm() < *radius && th > 0.0 && th < *angle
            }
            CavityDomain::Curve { curve } => curve.winding_number(p) != 0,
        }
    }

    /// Quasi-random interior points.
    pub fn interior_samples(&self, n: usize) -> Vec<Point> {
        if let CavityDomain::Region { region } = self {
            return region.interior_samples(n, 0.0);
        }
        let bb = self.bbox();
        let mut out = Vec::with_capacity(n);
        let mut m = n;
        while out.len() < n && m <= 1024 * n.max(1) {
            out = halton_points(&bb, m).into_iter().filter(|p| self.contains(p)).take(n).collect();
            m *= 2;
        }
        out
    }

    /// Boundary points with outward normals (two at corners). Analytic
    /// boundaries use `per_piece` points per smooth piece; traced curves use
    /// their vertices.
    pub fn boundary_samples(&self, per_piece: usize) -> Vec<BoundarySample> {
        match self {
            CavityDomain::Region { region } => region.boundary_samples(per_piece),
            CavityDomain::Sector { radius, angle } => Region::Sector { radius: *radius, angle: *angle }.boundary_samples(per_piece),
            CavityDomain::Curve { curve } => {
                let sign = if curve.signed_area() >= 0.0 { 1.0 } else { -1.0 };
                (0..curve.len())
                    .map(|i| BoundarySample {
                        point: curve.vertices[i],
                        normals: curve.tangents_at(i).iter().map(|t| sign * Point::new(t.y, -t.x)).collect(),
                    })
                    .collect()
            }
        }
    }
}

/// Sampling density for the residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleOptions {
    pub interior: usize,
    /// Points per smooth boundary piece of analytic domains.
    pub boundary: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { interior: 10_000, boundary: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub pde: f64,
    pub bc: f64,
}

/// Sup-norm residuals of an eigenpair claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EigenpairReport {
    /// Largest interior residual.
    pub pde_residual: f64,
    /// Largest boundary residual.
    pub bc_residual: f64,
    pub pde_residuals: BTreeMap<String, f64>,
    pub bc_residuals: BTreeMap<String, f64>,
    pub verdict: bool,
    pub samples: usize,
    pub boundary_samples: usize,
    /// Samples dropped because they lie on a branch cut.
    pub skipped: usize,
    pub tolerances: Tolerances,
}

impl EigenpairReport {
    fn new(pde: BTreeMap<String, f64>, bc: BTreeMap<String, f64>, tol: Tolerances, counts: (usize, usize, usize)) -> Self {
        let pde_residual = pde.values().copied().fold(0.0, f64::max);
        let bc_residual = bc.values().copied().fold(0.0, f64::max);
        EigenpairReport {
            pde_residual,
            bc_residual,
            pde_residuals: pde,
            bc_residuals: bc,
            verdict: pde_residual < tol.pde && bc_residual < tol.bc,
            samples: counts.0,
            boundary_samples: counts.1,
            skipped: counts.2,
            tolerances: tol,
        }
    }
}

/// A jet, or `None` for a point on a branch cut.
fn try_jet(f: &dyn FieldLike, p: &Point) -> Result<Option<FieldJet>> {
    match f.jet(p) {
        Ok(j) => Ok(Some(j)),
        Err(Error::BranchCutHit { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn tolerances(domain: &CavityDomain) -> Tolerances {
    Tolerances { pde: 1e-6, bc: if domain.is_traced() { 1e-4 } else { 1e-6 } }
}

/// A Dirichlet or Neumann eigenvalue claim `Delta w + k^2 w = 0` in the
/// domain with `w = 0` or `d_nu w = 0` on its boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityProblem {
    pub domain: CavityDomain,
    pub bc: BoundaryCondition,
    pub k: f64,
}

/// Sup of the Helmholtz residual inside and of `|w|` or `|d_nu w|` on the
/// boundary. Tolerances are `1e-6`, relaxed to `1e-4` on the boundary of
/// traced curves.
pub fn verify_cavity_eigenpair(problem: &CavityProblem, w: &dyn FieldLike, opts: &SampleOptions) -> Result<EigenpairReport> {
    problem.domain.check()?;
    if !(problem.k > 0.0) {
        return Err(Error::InvalidParameter(format!("k = {} must be positive", problem.k)));
    }
    let k2 = problem.k * problem.k;
    let (mut pde, mut bc, mut n_in, mut n_bd, mut skipped) = (0.0f64, 0.0f64, 0, 0, 0);
    for p in problem.domain.interior_samples(opts.interior) {
        match try_jet(w, &p)? {
            Some(j) => {
                pde = pde.max((j.laplacian() + k2 * j.value).abs());
                n_in += 1;
            }
            None => skipped += 1,
        }
    }
    for s in problem.domain.boundary_samples(opts.boundary) {
        match try_jet(w, &s.point)? {
            Some(j) => {
                let r = match problem.bc {
                    BoundaryCondition::Dirichlet => j.value.abs(),
                    BoundaryCondition::Neumann => s.normals.iter().map(|n| n.dot(&j.grad).abs()).fold(0.0, f64::max),
                };
                bc = bc.max(r);
                n_bd += 1;
            }
            None => skipped += 1,
        }
    }
    let name = match problem.bc {
        BoundaryCondition::Dirichlet => "dirichlet",
        BoundaryCondition::Neumann => "neumann",
    };
    Ok(EigenpairReport::new(
        BTreeMap::from([("helmholtz".to_string(), pde)]),
        BTreeMap::from([(name.to_string(), bc)]),
        tolerances(&problem.domain),
        (n_in, n_bd, skipped),
    ))
}

/// An interior transmission eigenpair for `A = a Id`, `q = a`.
#[derive(Debug, Clone)]
pub struct ItepPair {
    pub a: f64,
    pub u: HelmholtzField,
    pub v: HelmholtzField,
}

impl ItepPair {
    /// The constant isotropic medium `(a Id, a)` on `region`.
    pub fn medium(&self, region: Region) -> MediumSpec {
        MediumSpec::ConstantIsotropic { region, a: self.a, q: self.a }
    }
}

/// A cavity eigenfunction `w` gives the transmission eigenpair
/// `(u, v) = (w, a w)` (Dirichlet) or `(w, w)` (Neumann) for `A = a Id`,
/// `q = a`, `a != 1`.
pub fn itep_from_cavity(w: &HelmholtzField, bc: BoundaryCondition, a: f64) -> Result<ItepPair> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a = {a} must be positive")));
    }
    if a == 1.0 {
        return Err(Error::InvalidParameter("a = 1 gives the vacuum; the correspondence needs a != 1".into()));
    }
    let v = match bc {
        BoundaryCondition::Dirichlet => HelmholtzField::combine(&[(a, w.clone())])?,
        BoundaryCondition::Neumann => w.clone(),
    };
    Ok(ItepPair { a, u: w.clone(), v })
}

/// Split a transmission eigenpair for `(a Id, a)` into `w_D = u - v`
/// (a Dirichlet eigenfunction) and `w_N = a u - v` (a Neumann one).
pub fn decompose_itep(u: &HelmholtzField, v: &HelmholtzField, a: f64) -> Result<(HelmholtzField, HelmholtzField)> {
    let wd = HelmholtzField::combine(&[(1.0, u.clone()), (-1.0, v.clone())])?;
    let wn = HelmholtzField::combine(&[(a, u.clone()), (-1.0, v.clone())])?;
    Ok((wd, wn))
}

/// Sup of `|f|` over interior samples (branch-cut points skipped).
pub fn sup_norm(domain: &CavityDomain, f: &dyn FieldLike, n: usize) -> Result<f64> {
    let mut m = 0.0f64;
    for p in domain.interior_samples(n) {
        if let Some(j) = try_jet(f, &p)? {
            m = m.max(j.value.abs());
        }
    }
    Ok(m)
}

/// The four residuals of the interior transmission problem
/// `div(A grad u) + k^2 q u = 0`, `Delta v + k^2 v = 0` in the domain and
/// `u = v`, `nu . A grad u = nu . grad v` on its boundary. The medium's
/// interior formula is used throughout the domain.
pub fn verify_itep(
    medium: &MediumSpec,
    domain: &CavityDomain,
    k: f64,
    u: &dyn FieldLike,
    v: &dyn FieldLike,
    opts: &SampleOptions,
) -> Result<EigenpairReport> {
    domain.check()?;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("k = {k} must be positive")));
    }
    let k2 = k * k;
    let (mut ru, mut rv, mut rd, mut rf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut n_in, mut n_bd, mut skipped) = (0, 0, 0);
    // Transformation media are differenced; keep their stencils inside.
    let margin = if matches!(medium, MediumSpec::Transform { .. }) { 1e-4 } else { 0.0 };
    let interior: Vec<Point> = match domain {
        CavityDomain::Region { region } => region.interior_samples(opts.interior, margin),
        _ => domain.interior_samples(opts.interior),
    };
    for p in interior {
        let (ju, jv) = match (try_jet(u, &p)?, try_jet(v, &p)?) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let c = medium.interior_coeffs(&p)?;
        ru = ru.max((flux_divergence(medium, u, &p)? + k2 * c.q * ju.value).abs());
        rv = rv.max((jv.laplacian() + k2 * jv.value).abs());
        n_in += 1;
    }
    for s in domain.boundary_samples(opts.boundary) {
        let (ju, jv) = match (try_jet(u, &s.point)?, try_jet(v, &s.point)?) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let a = medium.interior_coeffs(&s.point)?.a;
        rd = rd.max((ju.value - jv.value).abs());
        for n in &s.normals {
            rf = rf.max((n.dot(&(a * ju.grad)) - n.dot(&jv.grad)).abs());
        }
        n_bd += 1;
    }
    Ok(EigenpairReport::new(
        BTreeMap::from([("medium".to_string(), ru), ("vacuum".to_string(), rv)]),
        BTreeMap::from([("difference".to_string(), rd), ("flux".to_string(), rf)]),
        tolerances(domain),
        (n_in, n_bd, skipped),
    ))
}

/// One eigenvalue of a circular sector of angle `alpha` and radius `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SectorSpectrumEntry {
    pub m: u32,
    /// `m pi / alpha`.
    pub order: f64,
    pub zero_index: u32,
    pub k: f64,
    /// The eigenfunction `J_order(k r) sin(order theta)` (or `cos`) is entire,
    /// which holds exactly when the order is an integer.
    pub extendable: bool,
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-12 * x.abs().max(1.0)
}

/// `n` if `alpha = pi / n` for a positive integer `n`.
pub fn pi_over_n(alpha: f64) -> Option<u32> {
    let n = PI / alpha;
    (is_integer(n) && n.round() >= 1.0).then(|| n.round() as u32)
}

/// The first `count` eigenvalues of the sector, in increasing order.
/// Dirichlet modes are `J_nu(k r) sin(nu theta)` with `m >= 1`, Neumann
/// modes `J_nu(k r) cos(nu theta)` with `m >= 0`, `nu = m pi / alpha`.
pub fn sector_spectrum(alpha: f64, l: f64, bc: BoundaryCondition, count: usize) -> Result<Vec<SectorSpectrumEntry>> {
    CavityDomain::Sector { radius: l, angle: alpha }.check()?;
    let mut entries: Vec<SectorSpectrumEntry> = Vec::new();
    let mut m: u32 = if bc == BoundaryCondition::Dirichlet { 1 } else { 0 };
    loop {
        let order = m as f64 * PI / alpha;
        // Zeros of J_nu and J_nu' of positive order exceed nu.
        if entries.len() >= count && order >= entries[count - 1].k * l {
            break;
        }
        let zeros = match bc {
            BoundaryCondition::Dirichlet => bessel_j_zeros(order, count.max(1))?,
            BoundaryCondition::Neumann => bessel_jp_zeros(order, count.max(1))?,
        };
        for (s, z) in zeros.iter().enumerate() {
            entries.push(SectorSpectrumEntry { m, order, zero_index: s as u32 + 1, k: z / l, extendable: is_integer(order) });
        }
        entries.sort_by(|a, b| a.k.total_cmp(&b.k));
        entries.truncate(count);
        if count == 0 {
            break;
        }
        m += 1;
    }
    Ok(entries)
}

/// The sector eigenfunction of `entry` as a Bessel field whose branch cut
/// (for fractional orders) leaves the apex away from the sector.
pub fn sector_eigenfunction(alpha: f64, bc: BoundaryCondition, entry: &SectorSpectrumEntry) -> Result<HelmholtzField> {
    let mu = entry.order;
    if mu == 0.0 {
        let term = WaveTerm { mu: 0.0, a: 0.0, theta: 0.0, phi: 0.0, b: 1.0 };
        return HelmholtzField::from_spec(&FieldSpec::BesselSum { k: Some(entry.k), terms: vec![term] });
    }
    // Local angle psi = theta - alpha / 2, so the cut psi = pi points along
    // the bisector of the complementary angle.
    let phi = match bc {
        BoundaryCondition::Dirichlet => PI / (2.0 * mu) - alpha / 2.0,
        BoundaryCondition::Neumann => -alpha / 2.0,
    };
    let term = WaveTerm { mu, a: 0.0, theta: -alpha / 2.0, phi, b: 1.0 };
    HelmholtzField::from_spec(&FieldSpec::BesselSum { k: Some(entry.k), terms: vec![term] })
}

/// An odd (Dirichlet) or even (Neumann) extension of a field across the
/// line `y = axis_y`, keeping the field on the data side.
#[derive(Debug, Clone)]
pub struct ReflectedField<F> {
    pub inner: F,
    pub axis_y: f64,
    /// `true` if the field is given on `y >= axis_y`.
    pub data_above: bool,
    pub bc: BoundaryCondition,
}

impl<F: FieldLike> FieldLike for ReflectedField<F> {
    fn jet(&self, p: &Point) -> Result<FieldJet> {
        let mirrored = (p.y < self.axis_y) == self.data_above && p.y != self.axis_y;
        if !mirrored {
            return self.inner.jet(p);
        }
        let q = Point::new(p.x, 2.0 * self.axis_y - p.y);
        let j = self.inner.jet(&q)?;
        let s = if self.bc == BoundaryCondition::Dirichlet { -1.0 } else { 1.0 };
        let flip = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        Ok(FieldJet { value: s * j.value, grad: s * (flip * j.grad), hess: s * (flip * j.hess * flip) })
    }

    fn exact_hessian(&self) -> bool {
        self.inner.exact_hessian()
    }
}

/// Extend `field` across `y = axis_y` after checking the boundary condition
/// on the axis segment `x0 <= x <= x1` (residual below `1e-8` at 201 points).
pub fn reflect_extend<F: FieldLike>(
    field: F,
    axis_y: f64,
    segment: (f64, f64),
    bc: BoundaryCondition,
    data_above: bool,
) -> Result<ReflectedField<F>> {
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let x = segment.0 + (segment.1 - segment.0) * i as f64 / 200.0;
        let j = field.jet(&Point::new(x, axis_y))?;
        let r = match bc {
            BoundaryCondition::Dirichlet => j.value.abs(),
            BoundaryCondition::Neumann => j.grad.y.abs(),
        };
        worst = worst.max(r);
    }
    if !(worst < 1e-8) {
        return Err(Error::BcNotSatisfiedOnAxis(worst));
    }
    Ok(ReflectedField { inner: field, axis_y, data_above, bc })
}

impl<F: FieldLike> ReflectedField<F> {
    /// Sup over the axis segment of the five-point Helmholtz residual with
    /// stencils straddling the axis (step `h`).
    pub fn axis_residual(&self, k: f64, segment: (f64, f64), h: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 1..100 {
            let x = segment.0 + (segment.1 - segment.0) * i as f64 / 100.0;
            let v = |dx: f64, dy: f64| -> Result<f64> { Ok(self.jet(&Point::new(x + dx, self.axis_y + dy))?.value) };
            let c = v(0.0, 0.0)?;
            let lap = (v(h, 0.0)? + v(-h, 0.0)? + v(0.0, h)? + v(0.0, -h)? - 4.0 * c) / (h * h);
            worst = worst.max((lap + k * k * c).abs());
        }
        Ok(worst)
    }
}
