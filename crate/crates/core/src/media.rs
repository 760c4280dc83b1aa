//! Transformation media built from diffeomorphisms that fix the boundary,
//! their structural identities, pulled-back fields, and the explicit
//! anisotropic examples with closed-form eigenpairs.
//!
//! For a diffeomorphism `Psi` with `Psi = Id` on the boundary, the medium is
//! `A = (D Psi D Psi^T / |det D Psi|) o Psi^-1`, `q = (1 / |det D Psi|) o Psi^-1`,
//! and `u = v o Psi^-1` solves `div(A grad u) + k^2 q u = 0` whenever `v`
//! solves the Helmholtz equation.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldJet, FieldLike, FieldSpec, HelmholtzField, TrigFactor, TrigFn, TrigTerm};
use crate::geometry::{halton_points, point_segment_distance, rotation, round_sig, PlanarCurve, Point, Rect};

/// A bounded domain with a simple analytic or polygonal boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Rect { xmin: f64, xmax: f64, ymin: f64, ymax: f64 },
    Disk { cx: f64, cy: f64, radius: f64 },
    /// `{ r <= radius, 0 <= theta <= angle }` with apex at the origin.
    Sector { radius: f64, angle: f64 },
    /// Simple closed polygon (for example a traced nodal curve); the last
    /// vertex joins the first.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// A boundary point with its outward unit normals (two at a corner).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub point: Point,
    pub normals: Vec<Point>,
}

impl Region {
    pub fn rect(r: Rect) -> Self {
        Region::Rect { xmin: r.xmin, xmax: r.xmax, ymin: r.ymin, ymax: r.ymax }
    }

    pub fn unit_disk() -> Self {
        Region::Disk { cx: 0.0, cy: 0.0, radius: 1.0 }
    }

    pub fn polygon(curve: &PlanarCurve) -> Self {
        Region::Polygon { vertices: curve.vertices.iter().map(|p| [p.x, p.y]).collect() }
    }

    fn curve(vertices: &[[f64; 2]]) -> PlanarCurve {
        PlanarCurve::closed(vertices.iter().map(|v| Point::new(v[0], v[1])).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Polygon { ref vertices } => {
                vertices.len() >= 3 && vertices.iter().flatten().all(|v| v.is_finite()) && Self::curve(vertices).self_intersection().is_none()
            }
            Region::Rect { xmin, xmax, ymin, ymax } => xmin < xmax && ymin < ymax,
            Region::Disk { radius, .. } => radius > 0.0,
            Region::Sector { radius, angle } => radius > 0.0 && angle > 0.0 && angle < 2.0 * PI,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("degenerate region {self:?}")))
        }
    }

    /// Membership in the closed region.
    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Region::Rect { xmin, xmax, ymin, ymax } => p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax,
            Region::Disk { cx, cy, radius } => (p - Point::new(cx, cy)).norm() <= radius,
            Region::Sector { radius, angle } => p.norm() <= radius && (p.norm() == 0.0 || polar_angle(p) <= angle),
            Region::Polygon { ref vertices } => {
                let c = Self::curve(vertices);
                c.winding_number(p) != 0 || c.distance_to_point(p) == 0.0
            }
        }
    }

    /// Distance from an interior point to the boundary (negative outside).
    pub fn depth(&self, p: &Point) -> f64 {
        match *self {
            Region::Rect { xmin, xmax, ymin, ymax } => (p.x - xmin).min(xmax - p.x).min(p.y - ymin).min(ymax - p.y),
            Region::Disk { cx, cy, radius } => radius - (p - Point::new(cx, cy)).norm(),
            Region::Sector { radius, angle } => {
                let e0 = Point::new(radius, 0.0);
                let ea = radius * Point::new(angle.cos(), angle.sin());
                let edges = point_segment_distance(p, &Point::zeros(), &e0).min(point_segment_distance(p, &Point::zeros(), &ea));
                let in_wedge = polar_angle(p) <= angle;
                let arc = if in_wedge { (radius - p.norm()).abs() } else { (p - e0).norm().min((p - ea).norm()) };
                let d = edges.min(arc);
                if in_wedge && p.norm() < radius {
                    d
                } else {
                    -d
                }
            }
            Region::Polygon { ref vertices } => {
                let c = Self::curve(vertices);
                let d = c.distance_to_point(p);
                if c.winding_number(p) != 0 {
                    d
                } else {
                    -d
                }
            }
        }
    }

    pub fn bbox(&self) -> Rect {
        match *self {
            Region::Rect { xmin, xmax, ymin, ymax } => Rect::new(xmin, xmax, ymin, ymax),
            Region::Disk { cx, cy, radius } => Rect::new(cx - radius, cx + radius, cy - radius, cy + radius),
            Region::Sector { radius, angle } => {
                let mut pts = vec![Point::zeros(), Point::new(radius, 0.0), radius * Point::new(angle.cos(), angle.sin())];
                for q in 1..4 {
                    let t = q as f64 * PI / 2.0;
                    if t < angle {
                        pts.push(radius * Point::new(t.cos(), t.sin()));
                    }
                }
                Rect::bounding(&pts)
            }
            Region::Polygon { ref vertices } => Rect::bounding(&Self::curve(vertices).vertices),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Rect { xmin, xmax, ymin, ymax } => (xmax - xmin) * (ymax - ymin),
            Region::Disk { radius, .. } => PI * radius * radius,
            Region::Sector { radius, angle } => 0.5 * angle * radius * radius,
            Region::Polygon { ref vertices } => Self::curve(vertices).signed_area().abs(),
        }
    }

    /// Boundary samples: `n` per edge for rectangles and per smooth piece
    /// for sectors (corners carry both one-sided normals), `n` equally
    /// spaced points for disks.
    pub fn boundary_samples(&self, n: usize) -> Vec<BoundarySample> {
        let n = n.max(1);
        match *self {
            Region::Rect { xmin, xmax, ymin, ymax } => {
                let corners = [Point::new(xmin, ymin), Point::new(xmax, ymin), Point::new(xmax, ymax), Point::new(xmin, ymax)];
                let normals = [Point::new(0.0, -1.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 0.0)];
                let mut out = Vec::with_capacity(4 * n);
                for e in 0..4 {
                    let (a, b) = (corners[e], corners[(e + 1) % 4]);
                    out.push(BoundarySample { point: a, normals: vec![normals[(e + 3) % 4], normals[e]] });
                    for j in 1..n {
                        let t = j as f64 / n as f64;
                        out.push(BoundarySample { point: a + t * (b - a), normals: vec![normals[e]] });
                    }
                }
                out
            }
            Region::Disk { cx, cy, radius } => (0..n)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    let nu = Point::new(t.cos(), t.sin());
                    BoundarySample { point: Point::new(cx, cy) + radius * nu, normals: vec![nu] }
                })
                .collect(),
            Region::Sector { radius: r, angle: a } => {
                let nu0 = Point::new(0.0, -1.0);
                let nua = Point::new(-a.sin(), a.cos());
                let ea = Point::new(a.cos(), a.sin());
                let mut out = vec![BoundarySample { point: Point::zeros(), normals: vec![nu0, nua] }];
                for j in 1..n {
                    let s = r * j as f64 / n as f64;
                    out.push(BoundarySample { point: Point::new(s, 0.0), normals: vec![nu0] });
                    out.push(BoundarySample { point: s * ea, normals: vec![nua] });
                }
                out.push(BoundarySample { point: Point::new(r, 0.0), normals: vec![nu0, Point::new(1.0, 0.0)] });
                out.push(BoundarySample { point: r * ea, normals: vec![nua, ea] });
                for j in 1..n {
                    let t = a * j as f64 / n as f64;
                    let e = Point::new(t.cos(), t.sin());
                    out.push(BoundarySample { point: r * e, normals: vec![e] });
                }
                out
            }
            Region::Polygon { ref vertices } => {
                let c = Self::curve(vertices);
                let sign = if c.signed_area() > 0.0 { 1.0 } else { -1.0 };
                let outward = |a: Point, b: Point| {
                    let t = (b - a).normalize();
                    sign * Point::new(t.y, -t.x)
                };
                let m = c.vertices.len();
                let mut out = Vec::with_capacity(m * n);
                for e in 0..m {
                    let (a, b) = (c.vertices[e], c.vertices[(e + 1) % m]);
                    let prev = c.vertices[(e + m - 1) % m];
                    out.push(BoundarySample { point: a, normals: vec![outward(prev, a), outward(a, b)] });
                    for j in 1..n {
                        out.push(BoundarySample { point: a + (j as f64 / n as f64) * (b - a), normals: vec![outward(a, b)] });
                    }
                }
                out
            }
        }
    }

    /// Quasi-random interior points at depth at least `margin`.
    pub fn interior_samples(&self, n: usize, margin: f64) -> Vec<Point> {
        let bb = self.bbox();
        let mut out = Vec::with_capacity(n);
        let mut batch = n;
        let mut offset = 0;
        while out.len() < n && offset < 64 * n + 64 {
            for p in halton_points(&bb, offset + batch).into_iter().skip(offset) {
                if self.depth(&p) >= margin && out.len() < n {
                    out.push(p);
                }
            }
            offset += batch;
            batch = batch.max(16);
        }
        out
    }
}

/// Polar angle in `[0, 2 pi)`.
fn polar_angle(p: &Point) -> f64 {
    p.y.atan2(p.x).rem_euclid(2.0 * PI)
}

/// Smooth bump `Phi(x) = (1 - |x - c|^2 / R^2)^3 dir` supported in the disk
/// of radius `R` about `c` (twice continuously differentiable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub dir: [f64; 2],
}

impl Bump {
    fn eval(&self, p: &Point) -> (Vector2<f64>, Matrix2<f64>) {
        let c = Point::new(self.center[0], self.center[1]);
        let d = Vector2::new(self.dir[0], self.dir[1]);
        let r2 = self.radius * self.radius;
        let s = (p - c).norm_squared() / r2;
        if s >= 1.0 {
            return (Vector2::zeros(), Matrix2::zeros());
        }
        let b = (1.0 - s).powi(3);
        let grad_b = -6.0 * (1.0 - s).powi(2) * (p - c) / r2;
        (b * d, d * grad_b.transpose())
    }
}

/// A diffeomorphism of a closed region onto itself that is the identity on
/// the boundary (outside the region it is the identity map).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diffeo {
    Identity { region: Region },
    /// `(x + alpha (1 - x^2)(1 - y^2), y)` on `[-1, 1]^2`, `|alpha| < 1/2`.
    SquareShear { alpha: f64 },
    /// `(r, theta + f(r))` on the unit disk with `f(r) = amplitude (1 - r^2)^power`.
    DiskTwist {
        amplitude: f64,
        #[serde(default = "two")]
        power: i32,
    },
    /// `Id + eps Phi` for a bump `Phi`.
    Perturbation { region: Region, bump: Bump, eps: f64 },
}

fn two() -> i32 {
    2
}

impl Diffeo {
    pub fn region(&self) -> Region {
        match *self {
            Diffeo::Identity { ref region } | Diffeo::Perturbation { ref region, .. } => region.clone(),
            Diffeo::SquareShear { .. } => Region::Rect { xmin: -1.0, xmax: 1.0, ymin: -1.0, ymax: 1.0 },
            Diffeo::DiskTwist { .. } => Region::unit_disk(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.region().validate()?;
        match *self {
            Diffeo::SquareShear { alpha } if !(alpha.abs() < 0.5) => {
                Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (-1/2, 1/2)")))
            }
            Diffeo::DiskTwist { amplitude, power } if !amplitude.is_finite() || power < 2 => {
                Err(Error::InvalidParameter("disk twist needs a finite amplitude and power >= 2".into()))
            }
            Diffeo::Perturbation { bump, eps, .. } if !(bump.radius > 0.0) || !eps.is_finite() => {
                Err(Error::InvalidParameter("bump radius must be positive and eps finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// The formula of `Psi`, applied regardless of the region.
    fn formula(&self, p: &Point) -> (Point, Matrix2<f64>) {
        match *self {
            Diffeo::Identity { .. } => (*p, Matrix2::identity()),
            Diffeo::SquareShear { alpha } => {
                let (x, y) = (p.x, p.y);
                let psi = Point::new(x + alpha * (1.0 - x * x) * (1.0 - y * y), y);
                let d = Matrix2::new(1.0 - 2.0 * alpha * x * (1.0 - y * y), -2.0 * alpha * y * (1.0 - x * x), 0.0, 1.0);
                (psi, d)
            }
            Diffeo::DiskTwist { amplitude, power } => {
                let r2 = p.norm_squared();
                if r2 >= 1.0 {
                    return (*p, Matrix2::identity());
                }
                let f = amplitude * (1.0 - r2).powi(power);
                // f'(r) / r, smooth at the origin.
                let fpr = -2.0 * amplitude * power as f64 * (1.0 - r2).powi(power - 1);
                let rot = rotation(f);
                let jx = Vector2::new(-p.y, p.x);
                let m = Matrix2::identity() + fpr * jx * p.transpose();
                (rot * p, rot * m)
            }
            Diffeo::Perturbation { bump, eps, .. } => {
                let (phi, dphi) = bump.eval(p);
                (p + eps * phi, Matrix2::identity() + eps * dphi)
            }
        }
    }

    /// `Psi(p)`.
    pub fn map(&self, p: &Point) -> Point {
        if self.region().contains(p) {
            self.formula(p).0
        } else {
            *p
        }
    }

    /// `D Psi(p)`; the one-sided interior value on the boundary.
    pub fn jacobian(&self, p: &Point) -> Matrix2<f64> {
        if self.region().contains(p) {
            self.formula(p).1
        } else {
            Matrix2::identity()
        }
    }

    /// `Psi^-1(y)`: closed form for the disk twist, Newton from `y` otherwise.
    pub fn inverse(&self, y: &Point) -> Result<Point> {
        if !self.region().contains(y) {
            return Ok(*y);
        }
        match *self {
            Diffeo::Identity { .. } => Ok(*y),
            Diffeo::DiskTwist { amplitude, power } => {
                let f = amplitude * (1.0 - y.norm_squared()).powi(power);
                Ok(rotation(-f) * y)
            }
            _ => {
                let mut x = *y;
                let scale = 1.0 + y.norm();
                let mut best = f64::INFINITY;
                for _ in 0..50 {
                    let (psi, d) = self.formula(&x);
                    let r = psi - y;
                    let rn = r.norm();
                    if rn <= 4.0 * f64::EPSILON * scale || (rn >= best && best <= 1e-13 * scale) {
                        return Ok(x);
                    }
                    best = best.min(rn);
                    let step = d.try_inverse().ok_or(Error::InversionFailure { x: y.x, y: y.y })? * r;
                    x -= step;
                }
                let r = (self.formula(&x).0 - y).norm();
                if r <= 1e-12 * scale {
                    Ok(x)
                } else {
                    Err(Error::InversionFailure { x: y.x, y: y.y })
                }
            }
        }
    }

    /// Sup of `|Psi - Id|` on boundary samples and min of `det D Psi` on a
    /// `grid x grid` sample of the region.
    pub fn hypothesis_residuals(&self, grid: usize) -> (f64, f64) {
        let region = self.region();
        let bnd = region
            .boundary_samples(200)
            .iter()
            .map(|s| (self.formula(&s.point).0 - s.point).norm())
            .fold(0.0, f64::max);
        let bb = region.bbox();
        let mut min_det = f64::INFINITY;
        for i in 0..grid {
            for j in 0..grid {
                let p = Point::new(
                    bb.xmin + bb.width() * (i as f64 + 0.5) / grid as f64,
                    bb.ymin + bb.height() * (j as f64 + 0.5) / grid as f64,
                );
                if region.contains(&p) {
                    min_det = min_det.min(self.formula(&p).1.determinant());
                }
            }
        }
        (bnd, min_det)
    }
}

/// `Id + eps Phi` with `eps` halved until `det D Psi > 1/2` on a 200 x 200
/// sample; returns the diffeomorphism and the accepted `eps`.
pub fn small_perturb_diffeo(region: Region, bump: Bump, eps: f64) -> Result<(Diffeo, f64)> {
    let mut e = eps;
    for _ in 0..=20 {
        let d = Diffeo::Perturbation { region: region.clone(), bump, eps: e };
        d.validate()?;
        if d.hypothesis_residuals(200).1 > 0.5 {
            return Ok((d, e));
        }
        e *= 0.5;
    }
    Err(Error::CannotSatisfyJacobianBound(format!("det D Psi <= 1/2 after 20 halvings of eps = {eps}")))
}

/// Coefficients `(A, q)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: Matrix2<f64>,
    pub q: f64,
}

impl Coefficients {
    pub fn vacuum() -> Self {
        Coefficients { a: Matrix2::identity(), q: 1.0 }
    }
}

/// Where a medium's coefficients come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    DiffeoDerived,
    ExplicitExample,
    ConstantIsotropic,
}

/// A penetrable inhomogeneity: `(A, q)` on a region, `(Id, 1)` outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumSpec {
    /// `A = a Id`, `q` constant.
    ConstantIsotropic { region: Region, a: f64, q: f64 },
    /// Pushforward of the vacuum by a diffeomorphism.
    Transform { diffeo: Diffeo },
    /// `A = diag(a1, a2)`, `q = q0` on `(0, pi)^2`.
    AdiagSquare { a1: f64, a2: f64, q0: f64 },
    /// `A = U diag(1, A1(x)) U^T`, `q = 1`, `U` the rotation by `angle`,
    /// `A1(x) = a1 (1 + variation sin x sin y)`.
    RankDeficient {
        region: Region,
        angle: f64,
        a1: f64,
        #[serde(default)]
        variation: f64,
    },
    /// `A = diag(a0, A22(x))`, `q = a0` on `(b1, b2) x (c1, c2)`,
    /// `A22(x) = a22 (1 + variation sin x sin y)`.
    Slab {
        b1: f64,
        b2: f64,
        c1: f64,
        c2: f64,
        a0: f64,
        a22: f64,
        #[serde(default)]
        variation: f64,
    },
}

fn bump_factor(p: &Point, variation: f64) -> (f64, Vector2<f64>) {
    (1.0 + variation * p.x.sin() * p.y.sin(), variation * Vector2::new(p.x.cos() * p.y.sin(), p.x.sin() * p.y.cos()))
}

impl MediumSpec {
    pub fn region(&self) -> Region {
        match *self {
            MediumSpec::ConstantIsotropic { ref region, .. } | MediumSpec::RankDeficient { ref region, .. } => region.clone(),
            MediumSpec::Transform { ref diffeo } => diffeo.region(),
            MediumSpec::AdiagSquare { .. } => Region::Rect { xmin: 0.0, xmax: PI, ymin: 0.0, ymax: PI },
            MediumSpec::Slab { b1, b2, c1, c2, .. } => Region::Rect { xmin: b1, xmax: b2, ymin: c1, ymax: c2 },
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            MediumSpec::ConstantIsotropic { .. } => Provenance::ConstantIsotropic,
            MediumSpec::Transform { .. } => Provenance::DiffeoDerived,
            _ => Provenance::ExplicitExample,
        }
    }

    /// Check parameters and the coercivity assumptions on a sample.
    pub fn validate(&self) -> Result<()> {
        self.region().validate()?;
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match *self {
            MediumSpec::ConstantIsotropic { a, q, .. } if !(a > 0.0 && q > 0.0) => return bad("a and q must be positive"),
            MediumSpec::Transform { ref diffeo } => diffeo.validate()?,
            MediumSpec::AdiagSquare { a1, a2, q0 } if !(a1 > 0.0 && a2 > 0.0 && q0 > 0.0) => {
                return bad("a1, a2, q0 must be positive")
            }
            MediumSpec::RankDeficient { a1, variation, .. } if !(a1 > 0.0 && variation.abs() < 1.0) => {
                return bad("a1 must be positive and |variation| < 1")
            }
            MediumSpec::Slab { a0, a22, variation, b1, b2, .. } if !(a0 > 0.0 && a22 > 0.0 && variation.abs() < 1.0 && b1 != b2) => {
                return bad("a0, a22 must be positive, |variation| < 1 and b1 != b2")
            }
            _ => {}
        }
        for p in self.region().interior_samples(400, 0.0) {
            let c = self.coeffs(&p)?;
            let lmin = SymmetricEigen::new(c.a).eigenvalues.min();
            if !(lmin > 1e-8) || !(c.q > 0.0) {
                return Err(Error::InvalidParameter(format!("coefficients not coercive at ({}, {})", p.x, p.y)));
            }
        }
        Ok(())
    }

    /// The interior formula for `(A, q)`, applied regardless of the region
    /// (gives one-sided interior values on the boundary).
    pub fn interior_coeffs(&self, p: &Point) -> Result<Coefficients> {
        Ok(match *self {
            MediumSpec::ConstantIsotropic { a, q, .. } => Coefficients { a: a * Matrix2::identity(), q },
            MediumSpec::Transform { ref diffeo } => {
                let x = diffeo.inverse(p)?;
                let d = diffeo.formula(&x).1;
                let det = d.determinant().abs();
                Coefficients { a: d * d.transpose() / det, q: 1.0 / det }
            }
            MediumSpec::AdiagSquare { a1, a2, q0 } => Coefficients { a: Matrix2::new(a1, 0.0, 0.0, a2), q: q0 },
            MediumSpec::RankDeficient { angle, a1, variation, .. } => {
                let u = rotation(angle);
                let (f, _) = bump_factor(p, variation);
                Coefficients { a: u * Matrix2::new(1.0, 0.0, 0.0, a1 * f) * u.transpose(), q: 1.0 }
            }
            MediumSpec::Slab { a0, a22, variation, .. } => {
                let (f, _) = bump_factor(p, variation);
                Coefficients { a: Matrix2::new(a0, 0.0, 0.0, a22 * f), q: a0 }
            }
        })
    }

    /// `(A, q)` at `p`: the medium inside the closed region, vacuum outside.
    pub fn coeffs(&self, p: &Point) -> Result<Coefficients> {
        if self.region().contains(p) {
            self.interior_coeffs(p)
        } else {
            Ok(Coefficients::vacuum())
        }
    }

    /// `[dA/dx, dA/dy]` of the interior formula: analytic for explicit media,
    /// central differences (step `1e-5`) for transformation media.
    pub fn interior_coeff_derivatives(&self, p: &Point) -> Result<[Matrix2<f64>; 2]> {
        Ok(match *self {
            MediumSpec::ConstantIsotropic { .. } | MediumSpec::AdiagSquare { .. } => [Matrix2::zeros(); 2],
            MediumSpec::RankDeficient { angle, a1, variation, .. } => {
                let u = rotation(angle);
                let (_, g) = bump_factor(p, variation);
                let m = |d: f64| u * Matrix2::new(0.0, 0.0, 0.0, a1 * d) * u.transpose();
                [m(g.x), m(g.y)]
            }
            MediumSpec::Slab { a22, variation, .. } => {
                let (_, g) = bump_factor(p, variation);
                [Matrix2::new(0.0, 0.0, 0.0, a22 * g.x), Matrix2::new(0.0, 0.0, 0.0, a22 * g.y)]
            }
            MediumSpec::Transform { .. } => {
                let h = 1e-5;
                let mut out = [Matrix2::zeros(); 2];
                for (i, e) in [Vector2::new(h, 0.0), Vector2::new(0.0, h)].iter().enumerate() {
                    out[i] = (self.interior_coeffs(&(p + e))?.a - self.interior_coeffs(&(p - e))?.a) / (2.0 * h);
                }
                out
            }
        })
    }

    /// Sampled coefficients as CSV `x,y,A11,A12,A22,q` on an `nx x ny` grid
    /// of cell centres of `window`.
    pub fn sample_csv(&self, window: &Rect, nx: usize, ny: usize) -> Result<String> {
        let mut s = String::from("x,y,A11,A12,A22,q\n");
        for j in 0..ny {
            for i in 0..nx {
                let p = Point::new(
                    window.xmin + window.width() * (i as f64 + 0.5) / nx as f64,
                    window.ymin + window.height() * (j as f64 + 0.5) / ny as f64,
                );
                let c = self.coeffs(&p)?;
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    round_sig(p.x),
                    round_sig(p.y),
                    round_sig(c.a[(0, 0)]),
                    round_sig(c.a[(0, 1)]),
                    round_sig(c.a[(1, 1)]),
                    round_sig(c.q)
                ));
            }
        }
        Ok(s)
    }
}

/// `A o Psi` and `q o Psi` of the square shear, as displayed in closed form.
pub fn square_shear_closed_form(alpha: f64, p: &Point) -> Coefficients {
    let (x, y) = (p.x, p.y);
    let d = 1.0 - 2.0 * alpha * x * (1.0 - y * y);
    let off = -2.0 * alpha * y * (1.0 - x * x);
    let a = Matrix2::new(d * d + off * off, off, off, 1.0) / d;
    Coefficients { a, q: 1.0 / d }
}

/// The disk-twist coefficient `A(x)` in closed form (`q = 1`).
pub fn disk_twist_closed_form(amplitude: f64, power: i32, p: &Point) -> Matrix2<f64> {
    let r2 = p.norm_squared();
    if r2 >= 1.0 {
        return Matrix2::identity();
    }
    let fpr = -2.0 * amplitude * power as f64 * (1.0 - r2).powi(power - 1);
    let fp2 = fpr * fpr * r2;
    let (x, y) = (p.x, p.y);
    Matrix2::identity() - fpr * Matrix2::new(2.0 * x * y, y * y - x * x, y * y - x * x, -2.0 * x * y)
        + fp2 * Matrix2::new(y * y, -x * y, -x * y, x * x)
}

/// Residuals of the structural identities of a transformation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    /// `sup |det A - 1|` over interior samples.
    pub det_law: f64,
    /// `sup |(D Psi^T / |det D Psi| - Id) nu|` over boundary samples, both
    /// one-sided normals at corners.
    pub boundary_nu: f64,
    /// `sup |A nu - nu|` over boundary samples.
    pub a_nu: f64,
    /// `sup |A nu - nu|` at corners only.
    pub corner_a_nu: f64,
    /// `sup |Psi - Id|` on the boundary.
    pub boundary_identity: f64,
    /// `min det D Psi` over a grid sample of the region.
    pub min_det: f64,
    /// Largest asymmetry `|A12 - A21|` seen.
    pub asymmetry: f64,
    /// Smallest eigenvalue of `A` seen.
    pub min_eigenvalue: f64,
}

impl StructuralReport {
    pub fn passes(&self) -> bool {
        self.det_law < 1e-10 && self.boundary_nu < 1e-8 && self.corner_a_nu < 1e-8 && self.boundary_identity < 1e-10 && self.min_det > 1e-6
    }
}

/// Check the determinant law and the boundary-normal identity.
pub fn check_structural_identities(spec: &MediumSpec) -> Result<StructuralReport> {
    let diffeo = match spec {
        MediumSpec::Transform { diffeo } => diffeo.clone(),
        _ => return Err(Error::InvalidParameter("structural identities apply to diffeomorphism-derived media".into())),
    };
    let region = diffeo.region();
    let (boundary_identity, min_det) = diffeo.hypothesis_residuals(200);
    let mut rep = StructuralReport {
        det_law: 0.0,
        boundary_nu: 0.0,
        a_nu: 0.0,
        corner_a_nu: 0.0,
        boundary_identity,
        min_det,
        asymmetry: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    for p in region.interior_samples(2000, 1e-6) {
        let c = spec.interior_coeffs(&p)?;
        rep.det_law = rep.det_law.max((c.a.determinant() - 1.0).abs());
        rep.asymmetry = rep.asymmetry.max((c.a[(0, 1)] - c.a[(1, 0)]).abs());
        rep.min_eigenvalue = rep.min_eigenvalue.min(SymmetricEigen::new(c.a).eigenvalues.min());
    }
    for s in region.boundary_samples(400) {
        let d = diffeo.formula(&s.point).1;
        let det = d.determinant().abs();
        let a = d * d.transpose() / det;
        for nu in &s.normals {
            rep.boundary_nu = rep.boundary_nu.max((d.transpose() * nu / det - nu).norm());
            let an = (a * nu - nu).norm();
            rep.a_nu = rep.a_nu.max(an);
            if s.normals.len() > 1 {
                rep.corner_a_nu = rep.corner_a_nu.max(an);
            }
        }
    }
    Ok(rep)
}

/// `u = v o Psi^-1`, with `grad u = D Psi^-T grad v` evaluated at `Psi^-1(x)`.
#[derive(Debug, Clone)]
pub struct PulledField {
    pub diffeo: Diffeo,
    pub v: HelmholtzField,
}

/// Pull an entire (on the region) Helmholtz field back through `psi`.
pub fn pull_field(psi: &Diffeo, v: &HelmholtzField) -> Result<PulledField> {
    psi.validate()?;
    let region = psi.region();
    let bb = region.bbox().expand(1e-6);
    for ray in v.sigma() {
        let corners = [
            Point::new(bb.xmin, bb.ymin),
            Point::new(bb.xmax, bb.ymin),
            Point::new(bb.xmax, bb.ymax),
            Point::new(bb.xmin, bb.ymax),
        ];
        let hits = (0..4).any(|i| ray.distance_to_segment(&corners[i], &corners[(i + 1) % 4]) == 0.0) || bb.contains(&ray.origin);
        if hits {
            return Err(Error::InvalidParameter("the field's branch cut meets the region".into()));
        }
    }
    Ok(PulledField { diffeo: psi.clone(), v: v.clone() })
}

impl PulledField {
    pub fn value_grad(&self, p: &Point) -> Result<(f64, Vector2<f64>)> {
        let y = self.diffeo.inverse(p)?;
        let j = self.v.jet(&y)?;
        let d = self.diffeo.jacobian(&y);
        let g = d.transpose().try_inverse().ok_or(Error::InversionFailure { x: p.x, y: p.y })? * j.grad;
        Ok((j.value, g))
    }
}

impl FieldLike for PulledField {
    /// Value and gradient are exact; the Hessian is a central difference of
    /// the gradient.
    fn jet(&self, p: &Point) -> Result<FieldJet> {
        let (value, grad) = self.value_grad(p)?;
        let h = 1e-6;
        let (_, gx1) = self.value_grad(&(p + Vector2::new(h, 0.0)))?;
        let (_, gx0) = self.value_grad(&(p - Vector2::new(h, 0.0)))?;
        let (_, gy1) = self.value_grad(&(p + Vector2::new(0.0, h)))?;
        let (_, gy0) = self.value_grad(&(p - Vector2::new(0.0, h)))?;
        let cx = (gx1 - gx0) / (2.0 * h);
        let cy = (gy1 - gy0) / (2.0 * h);
        let off = 0.5 * (cx.y + cy.x);
        Ok(FieldJet { value, grad, hess: Matrix2::new(cx.x, off, off, cy.y) })
    }

    fn grad(&self, p: &Point) -> Result<Vector2<f64>> {
        Ok(self.value_grad(p)?.1)
    }

    fn exact_hessian(&self) -> bool {
        false
    }
}

/// `div(A grad u)` at `p`: from exact Hessians and coefficient derivatives
/// when available, else by Richardson-extrapolated central differences
/// (steps `1e-5` and `2e-5`) of the flux.
pub fn flux_divergence(spec: &MediumSpec, u: &dyn FieldLike, p: &Point) -> Result<f64> {
    let analytic_a = !matches!(spec, MediumSpec::Transform { .. });
    if u.exact_hessian() && analytic_a {
        let j = u.jet(p)?;
        let a = spec.interior_coeffs(p)?.a;
        let da = spec.interior_coeff_derivatives(p)?;
        let mut div = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                div += da[i][(i, k)] * j.grad[k] + a[(i, k)] * j.hess[(i, k)];
            }
        }
        return Ok(div);
    }
    let flux = |q: &Point| -> Result<Vector2<f64>> { Ok(spec.interior_coeffs(q)?.a * u.grad(q)?) };
    let central = |h: f64| -> Result<f64> {
        let fx = (flux(&(p + Vector2::new(h, 0.0)))?.x - flux(&(p - Vector2::new(h, 0.0)))?.x) / (2.0 * h);
        let fy = (flux(&(p + Vector2::new(0.0, h)))?.y - flux(&(p - Vector2::new(0.0, h)))?.y) / (2.0 * h);
        Ok(fx + fy)
    };
    // Richardson step on the 1e-5 central difference: strongly sheared
    // media (det D Psi near 0.02) leave an h^2 error of a few 1e-6 otherwise.
    let h = 1e-5;
    Ok((4.0 * central(h)? - central(2.0 * h)?) / 3.0)
}

/// Residuals of a pulled-back field against the transformation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullReport {
    /// `sup |div(A grad u) + k^2 q u|` over interior samples.
    pub pde_residual: f64,
    /// `sup |u - v|` on the boundary.
    pub boundary_mismatch: f64,
    /// `sup |nu . A grad u - nu . grad v|` on the boundary.
    pub flux_mismatch: f64,
    pub samples: usize,
}

/// Verify `div(A grad u) + k^2 q u = 0`, `u = v` and the flux identity.
pub fn check_pulled_field(pf: &PulledField, interior: usize, boundary: usize) -> Result<PullReport> {
    let spec = MediumSpec::Transform { diffeo: pf.diffeo.clone() };
    let region = pf.diffeo.region();
    let k2 = pf.v.k() * pf.v.k();
    let mut rep = PullReport { pde_residual: 0.0, boundary_mismatch: 0.0, flux_mismatch: 0.0, samples: 0 };
    // Stay clear of the boundary, where the coefficients jump.
    for p in region.interior_samples(interior, 1e-4) {
        let div = flux_divergence(&spec, pf, &p)?;
        let c = spec.interior_coeffs(&p)?;
        let (u, _) = pf.value_grad(&p)?;
        rep.pde_residual = rep.pde_residual.max((div + k2 * c.q * u).abs());
        rep.samples += 1;
    }
    for s in region.boundary_samples(boundary) {
        let (u, gu) = pf.value_grad(&s.point)?;
        let jv = pf.v.jet(&s.point)?;
        rep.boundary_mismatch = rep.boundary_mismatch.max((u - jv.value).abs());
        let a = spec.interior_coeffs(&s.point)?.a;
        for nu in &s.normals {
            rep.flux_mismatch = rep.flux_mismatch.max((nu.dot(&(a * gu)) - nu.dot(&jv.grad)).abs());
        }
    }
    Ok(rep)
}

/// Parameters of the explicit anisotropic examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum ExplicitParams {
    /// `A = diag(a1, a2)`, `q = q0` on `(0, pi)^2` with mode indices `(m, n)`.
    AdiagSquare { a1: f64, a2: f64, q0: f64, m: u32, n: u32 },
    RankDeficient {
        region: Region,
        angle: f64,
        a1: f64,
        #[serde(default)]
        variation: f64,
    },
    Slab {
        b1: f64,
        b2: f64,
        c1: f64,
        c2: f64,
        a0: f64,
        a22: f64,
        #[serde(default)]
        variation: f64,
    },
}

/// An explicit medium with its family of closed-form ITEP eigenpairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplicitExample {
    pub spec: MediumSpec,
    pub params: ExplicitParams,
    /// For `AdiagSquare`: which of the three condition sets holds (1 to 3).
    pub condition_set: Option<u8>,
}

/// One member `(k, u, v)` of an explicit eigen-family (`u = v` throughout).
#[derive(Debug, Clone)]
pub struct EigenInstance {
    pub k: f64,
    pub u: HelmholtzField,
    pub v: HelmholtzField,
}

const COND_TOL: f64 = 1e-12;

fn trig_field(k: f64, terms: Vec<TrigTerm>) -> Result<HelmholtzField> {
    HelmholtzField::from_spec(&FieldSpec::Trig { k, terms })
}

fn factor(func: TrigFn, freq: f64) -> TrigFactor {
    TrigFactor { func, freq, phase: 0.0 }
}

/// `c1 cos(b s) + c2 sin(b s)` with `b = sqrt(k^2 - m^2)` real or imaginary,
/// as trig factors (hyperbolic for imaginary `b`).
fn mixed_factors(b2: f64) -> [(f64, TrigFactor); 2] {
    let (c1, c2) = (1.0, 0.5);
    if b2 >= 0.0 {
        let b = b2.sqrt();
        [(c1, factor(TrigFn::Cos, b)), (c2, factor(TrigFn::Sin, b))]
    } else {
        let b = (-b2).sqrt();
        [(c1, factor(TrigFn::Cosh, b)), (c2, factor(TrigFn::Sinh, b))]
    }
}

/// Validate an explicit example and build its medium.
pub fn build_explicit_example(params: &ExplicitParams) -> Result<ExplicitExample> {
    let (spec, condition_set) = match params.clone() {
        ExplicitParams::AdiagSquare { a1, a2, q0, m, n } => {
            let spec = MediumSpec::AdiagSquare { a1, a2, q0 };
            spec.validate()?;
            let one = |a: f64| (a - 1.0).abs() <= COND_TOL;
            let set = if !one(a1) && !one(a2) {
                if (m, n) == (0, 0) {
                    return Err(Error::ConditionSetViolated("set 1 needs (m, n) != (0, 0)".into()));
                }
                let (m2, n2) = ((m * m) as f64, (n * n) as f64);
                let gap = m2 * (q0 - a1) - n2 * (a2 - q0);
                if gap.abs() > COND_TOL * (1.0 + m2 + n2) * (1.0 + q0 + a1 + a2) {
                    return Err(Error::ConditionSetViolated(format!(
                        "set 1: m^2 (q0 - a1) = {} differs from n^2 (a2 - q0) = {}",
                        m2 * (q0 - a1),
                        n2 * (a2 - q0)
                    )));
                }
                1
            } else if one(a1) && !one(a2) {
                if !((q0 - 1.0) * (a2 - 1.0) > 0.0) {
                    return Err(Error::ConditionSetViolated("set 2: (q0 - 1)(a2 - 1) must be positive".into()));
                }
                2
            } else if !one(a1) && one(a2) {
                if !((q0 - 1.0) * (a1 - 1.0) > 0.0) {
                    return Err(Error::ConditionSetViolated("set 3: (q0 - 1)(a1 - 1) must be positive".into()));
                }
                3
            } else {
                return Err(Error::ConditionSetViolated("a1 = a2 = 1 matches none of the condition sets".into()));
            };
            (spec, Some(set))
        }
        ExplicitParams::RankDeficient { region, angle, a1, variation } => {
            (MediumSpec::RankDeficient { region, angle, a1, variation }, None)
        }
        ExplicitParams::Slab { b1, b2, c1, c2, a0, a22, variation } => {
            (MediumSpec::Slab { b1, b2, c1, c2, a0, a22, variation }, None)
        }
    };
    spec.validate()?;
    Ok(ExplicitExample { spec, params: params.clone(), condition_set })
}

impl ExplicitExample {
    /// The eigenpair with index `j >= 1` (the multiplier `kappa` for
    /// condition set 1, the mode `m` otherwise). `RankDeficient` takes any
    /// `k > 0` instead.
    pub fn eigenpair(&self, j: u32, k: Option<f64>) -> Result<EigenInstance> {
        if j == 0 {
            return Err(Error::InvalidParameter("eigen index starts at 1".into()));
        }
        let jf = j as f64;
        let (k, field) = match (&self.params, self.condition_set) {
            (&ExplicitParams::AdiagSquare { m, n, .. }, Some(1)) => {
                let (m, n) = (m as f64, n as f64);
                let k = jf * (m * m + n * n).sqrt();
                let term = TrigTerm { weight: 1.0, x: factor(TrigFn::Cos, jf * m), y: factor(TrigFn::Cos, jf * n) };
                (k, trig_field(k, vec![term])?)
            }
            (&ExplicitParams::AdiagSquare { a1, a2, q0, .. }, Some(set)) => {
                let (aa, m) = if set == 2 { (a2, jf) } else { (a1, jf) };
                let k = m * ((aa - 1.0) / (q0 - 1.0)).sqrt();
                let terms = mixed_factors(k * k - m * m)
                    .iter()
                    .map(|&(c, f)| {
                        let cm = factor(TrigFn::Cos, m);
                        if set == 2 {
                            TrigTerm { weight: c, x: f, y: cm }
                        } else {
                            TrigTerm { weight: c, x: cm, y: f }
                        }
                    })
                    .collect();
                (k, trig_field(k, terms)?)
            }
            (&ExplicitParams::RankDeficient { angle, .. }, _) => {
                let k = k.ok_or_else(|| Error::InvalidParameter("RankDeficient needs k".into()))?;
                if !(k > 0.0) {
                    return Err(Error::InvalidParameter("k must be positive".into()));
                }
                let one = factor(TrigFn::Cos, 0.0);
                let inner = FieldSpec::Trig {
                    k,
                    terms: vec![
                        TrigTerm { weight: 1.0, x: factor(TrigFn::Cos, k), y: one },
                        TrigTerm { weight: 0.5, x: factor(TrigFn::Sin, k), y: one },
                    ],
                };
                // v(x) = v0((U^T x)_1), a pullback by the rotation -angle.
                let spec = FieldSpec::Pullback { rotation: -angle, translation: [0.0, 0.0], inner: Box::new(inner) };
                (k, HelmholtzField::from_spec(&spec)?)
            }
            (&ExplicitParams::Slab { b1, b2, .. }, _) => {
                let k = jf * PI / (b2 - b1).abs();
                let term = TrigTerm { weight: 1.0, x: TrigFactor { func: TrigFn::Cos, freq: k, phase: -k * b1 }, y: factor(TrigFn::Cos, 0.0) };
                (k, trig_field(k, vec![term])?)
            }
            _ => return Err(Error::InvalidParameter("example has no condition set".into())),
        };
        Ok(EigenInstance { k, u: field.clone(), v: field })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_diffeo_gives_vacuum() {
        let spec = MediumSpec::Transform { diffeo: Diffeo::Identity { region: Region::unit_disk() } };
        for p in Region::unit_disk().interior_samples(50, 0.0) {
            let c = spec.coeffs(&p).unwrap();
            assert!((c.a - Matrix2::identity()).norm() < 1e-15 && (c.q - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn square_shear_is_identity_at_the_image_of_the_origin() {
        let d = Diffeo::SquareShear { alpha: 0.3 };
        let y = d.map(&Point::zeros());
        assert!((y - Point::new(0.3, 0.0)).norm() < 1e-15);
        let c = MediumSpec::Transform { diffeo: d }.coeffs(&y).unwrap();
        assert!((c.a - Matrix2::identity()).norm() < 1e-12 && (c.q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_shear_matches_closed_form() {
        for alpha in [-0.45, 0.1, 0.3, 0.49] {
            let d = Diffeo::SquareShear { alpha };
            let spec = MediumSpec::Transform { diffeo: d.clone() };
            for x in d.region().interior_samples(300, 1e-3) {
                let c = spec.coeffs(&d.map(&x)).unwrap();
                let cf = square_shear_closed_form(alpha, &x);
                assert!((c.a - cf.a).norm() < 1e-10 && (c.q - cf.q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn disk_twist_matches_closed_form_and_preserves_area() {
        let d = Diffeo::DiskTwist { amplitude: 1.0, power: 2 };
        let spec = MediumSpec::Transform { diffeo: d.clone() };
        for p in Region::unit_disk().interior_samples(300, 0.0) {
            let c = spec.coeffs(&p).unwrap();
            assert!((c.a - disk_twist_closed_form(1.0, 2, &p)).norm() < 1e-12);
            assert!((c.q - 1.0).abs() < 1e-12);
            assert!((d.map(&d.inverse(&p).unwrap()) - p).norm() < 1e-14);
        }
    }

    #[test]
    fn newton_inverse_round_trips() {
        let d = Diffeo::SquareShear { alpha: 0.49 };
        for p in d.region().interior_samples(500, 0.0) {
            let x = d.inverse(&p).unwrap();
            assert!((d.map(&x) - p).norm() < 1e-14);
        }
    }

    #[test]
    fn perturbation_shrinks_eps() {
        let region = Region::unit_disk();
        let gentle = Bump { center: [0.0, 0.0], radius: 0.5, dir: [1.0, 0.0] };
        let (_, e) = small_perturb_diffeo(region.clone(), gentle, 0.1).unwrap();
        assert_eq!(e, 0.1);
        // |D Phi| about 10: eps = 1 must shrink.
        let steep = Bump { center: [0.0, 0.0], radius: 0.5, dir: [2.9, 0.0] };
        let (d, e) = small_perturb_diffeo(region, steep, 1.0).unwrap();
        assert!(e < 1.0 && d.hypothesis_residuals(200).1 > 0.5);
    }

    #[test]
    fn explicit_condition_sets() {
        let ok = build_explicit_example(&ExplicitParams::AdiagSquare { a1: 2.0, a2: 4.0, q0: 3.0, m: 1, n: 1 }).unwrap();
        assert_eq!(ok.condition_set, Some(1));
        assert!((ok.eigenpair(1, None).unwrap().k - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            build_explicit_example(&ExplicitParams::AdiagSquare { a1: 2.0, a2: 4.0, q0: 3.5, m: 1, n: 1 }),
            Err(Error::ConditionSetViolated(_))
        ));
        assert!(matches!(
            build_explicit_example(&ExplicitParams::AdiagSquare { a1: 1.0, a2: 4.0, q0: 0.5, m: 1, n: 1 }),
            Err(Error::ConditionSetViolated(_))
        ));
        let s2 = build_explicit_example(&ExplicitParams::AdiagSquare { a1: 1.0, a2: 3.0, q0: 2.0, m: 1, n: 1 }).unwrap();
        assert_eq!(s2.condition_set, Some(2));
        let slab = build_explicit_example(&ExplicitParams::Slab { b1: 0.0, b2: 1.0, c1: 0.0, c2: 1.0, a0: 2.0, a22: 3.0, variation: 0.0 }).unwrap();
        assert!((slab.eigenpair(2, None).unwrap().k - 2.0 * PI).abs() < 1e-14);
    }
}
