//! Helmholtz fields `v` with `Delta v + k^2 v = 0`, evaluated with exact jets.
//!
//! Supported families:
//!
//! * finite plane-wave superpositions `Re sum c_j exp(i k d_j . x)`,
//! * sums of separable trigonometric / hyperbolic products,
//! * fractional Bessel sums `sum_l b_l J_mu_l(k rho_l) cos(mu_l (psi_l - phi_l))`
//!   in rotated and shifted polar coordinates, with branch cuts,
//! * rigid-motion pullbacks and linear combinations of the above.
//!
//! Each Bessel term lives in local coordinates `Z = (a, 0) + R_theta x`, with
//! `rho = |Z|` and `psi = atan2(Z_y, Z_x)` in `(-pi, pi]`. For non-integer
//! order the term is discontinuous across `psi = pi`, which in global
//! coordinates is the ray starting at `R_theta^T (-a, 0)` in direction
//! `R_theta^T (-1, 0)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_first_zero, bessel_j_jet};
use crate::error::{Error, Result};
use crate::geometry::{perp, rotation, Point, Ray, Rect};

/// Distance to a branch cut below which evaluation is refused.
pub const BRANCH_CUT_TOL: f64 = 1e-12;

/// Value, gradient and Hessian of a real field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub value: f64,
    pub grad: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

impl FieldJet {
    pub fn zero() -> Self {
        FieldJet { value: 0.0, grad: Vector2::zeros(), hess: Matrix2::zeros() }
    }

    pub fn scaled(&self, w: f64) -> Self {
        FieldJet { value: w * self.value, grad: w * self.grad, hess: w * self.hess }
    }

    pub fn add(&mut self, o: &FieldJet) {
        self.value += o.value;
        self.grad += o.grad;
        self.hess += o.hess;
    }

    /// Jet of `x -> f(R x + c)` given the jet of `f` at `R x + c`.
    pub fn pulled(&self, r: &Matrix2<f64>) -> Self {
        FieldJet { value: self.value, grad: r.transpose() * self.grad, hess: r.transpose() * self.hess * r }
    }

    pub fn laplacian(&self) -> f64 {
        self.hess[(0, 0)] + self.hess[(1, 1)]
    }
}

/// A real field that can be evaluated to second order, such as a
/// [`HelmholtzField`] or a field pulled back through a diffeomorphism.
pub trait FieldLike {
    fn jet(&self, p: &Point) -> Result<FieldJet>;

    fn grad(&self, p: &Point) -> Result<Vector2<f64>> {
        Ok(self.jet(p)?.grad)
    }

    /// Whether `jet` returns an exact (not finite-difference) Hessian.
    fn exact_hessian(&self) -> bool {
        true
    }
}

impl FieldLike for HelmholtzField {
    fn jet(&self, p: &Point) -> Result<FieldJet> {
        HelmholtzField::jet(self, p)
    }
}

/// One plane wave `Re(amp exp(i k dir . x))`; `amp` is `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWave {
    pub dir: [f64; 2],
    pub amp: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigFn {
    Sin,
    Cos,
    Sinh,
    Cosh,
}

/// One factor `func(freq * s + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigFactor {
    pub func: TrigFn,
    pub freq: f64,
    #[serde(default)]
    pub phase: f64,
}

impl TrigFactor {
    /// `(f, f', f'')` at `s`.
    fn jet(&self, s: f64) -> (f64, f64, f64) {
        let t = self.freq * s + self.phase;
        let w = self.freq;
        match self.func {
            TrigFn::Sin => (t.sin(), w * t.cos(), -w * w * t.sin()),
            TrigFn::Cos => (t.cos(), -w * t.sin(), -w * w * t.cos()),
            TrigFn::Sinh => (t.sinh(), w * t.cosh(), w * w * t.sinh()),
            TrigFn::Cosh => (t.cosh(), w * t.sinh(), w * w * t.cosh()),
        }
    }

    /// Contribution to `k^2` (oscillatory factors count positively).
    fn k2_share(&self) -> f64 {
        match self.func {
            TrigFn::Sin | TrigFn::Cos => self.freq * self.freq,
            TrigFn::Sinh | TrigFn::Cosh => -self.freq * self.freq,
        }
    }
}

/// Product term `weight * x_factor(x) * y_factor(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub weight: f64,
    pub x: TrigFactor,
    pub y: TrigFactor,
}

/// One term `b J_mu(k rho) cos(mu (psi - phi))` of a Bessel sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveTerm {
    pub mu: f64,
    /// Shift of the local origin along the local x axis.
    #[serde(default)]
    pub a: f64,
    /// Rotation angle of the local frame.
    #[serde(default)]
    pub theta: f64,
    /// Phase of the angular factor.
    #[serde(default)]
    pub phi: f64,
    /// Amplitude.
    #[serde(default = "one")]
    pub b: f64,
}

fn one() -> f64 {
    1.0
}

/// Weighted summand of a combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weighted {
    pub weight: f64,
    pub field: FieldSpec,
}

/// Serializable description of a Helmholtz field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    PlaneWaves {
        k: f64,
        waves: Vec<PlaneWave>,
    },
    Trig {
        k: f64,
        terms: Vec<TrigTerm>,
    },
    BesselSum {
        /// Required when the orders differ; defaults to the first zero of `J_mu`.
        #[serde(default)]
        k: Option<f64>,
        terms: Vec<WaveTerm>,
    },
    /// Equally rotated copies: `theta_l = 2 pi l / count`, common `a` and `mu`.
    RotatedBesselSum {
        mu: f64,
        count: usize,
        a: f64,
        #[serde(default)]
        k: Option<f64>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        phi: Option<Vec<f64>>,
    },
    /// `x -> inner(R_rotation x - translation)`.
    Pullback {
        rotation: f64,
        translation: [f64; 2],
        inner: Box<FieldSpec>,
    },
    Sum {
        parts: Vec<Weighted>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct BesselTerm {
    term: WaveTerm,
    integer: bool,
    rot: Matrix2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    PlaneWaves(Vec<(Vector2<f64>, Complex64)>),
    Trig(Vec<TrigTerm>),
    Bessel(Vec<BesselTerm>),
    Pullback { rot: Matrix2<f64>, shift: Vector2<f64>, inner: Box<HelmholtzField> },
    Sum(Vec<(f64, HelmholtzField)>),
}

/// A validated Helmholtz field with its branch cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzField {
    k: f64,
    kind: Kind,
    spec: FieldSpec,
    sigma: Vec<Ray>,
    candidates: Vec<Ray>,
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("wavenumber k = {k} must be positive and finite")));
    }
    Ok(())
}

fn same_k(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

impl HelmholtzField {
    /// Validate a spec and build the field.
    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        match spec {
            FieldSpec::PlaneWaves { k, waves } => {
                check_k(*k)?;
                if waves.is_empty() {
                    return Err(Error::InvalidParameter("plane-wave field needs at least one wave".into()));
                }
                let mut out = Vec::new();
                for w in waves {
                    let d = Vector2::new(w.dir[0], w.dir[1]);
                    if !((d.norm() - 1.0).abs() < 1e-12) {
                        return Err(Error::InvalidParameter(format!("plane-wave direction {:?} is not a unit vector", w.dir)));
                    }
                    out.push((d, Complex64::new(w.amp[0], w.amp[1])));
                }
                Ok(Self::assemble(*k, Kind::PlaneWaves(out), spec.clone()))
            }
            FieldSpec::Trig { k, terms } => {
                check_k(*k)?;
                for t in terms {
                    let k2 = t.x.k2_share() + t.y.k2_share();
                    if (k2 - k * k).abs() > 1e-12 * k * k {
                        return Err(Error::WavenumberMismatch(k2.abs().sqrt(), *k));
                    }
                }
                Ok(Self::assemble(*k, Kind::Trig(terms.clone()), spec.clone()))
            }
            FieldSpec::BesselSum { k, terms } => Self::bessel(*k, terms, spec.clone()),
            FieldSpec::RotatedBesselSum { mu, count, a, k, b, phi } => {
                if *count == 0 {
                    return Err(Error::InvalidParameter("count must be at least 1".into()));
                }
                let terms: Vec<WaveTerm> = (0..*count)
                    .map(|l| WaveTerm {
                        mu: *mu,
                        a: *a,
                        theta: 2.0 * PI * l as f64 / *count as f64,
                        phi: phi.as_ref().and_then(|p| p.get(l).copied()).unwrap_or(0.0),
                        b: b.as_ref().and_then(|b| b.get(l).copied()).unwrap_or(1.0),
                    })
                    .collect();
                for (name, v) in [("b", b), ("phi", phi)] {
                    if let Some(v) = v {
                        if v.len() != *count {
                            return Err(Error::InvalidParameter(format!("{name} must have {count} entries")));
                        }
                    }
                }
                Self::bessel(*k, &terms, spec.clone())
            }
            FieldSpec::Pullback { rotation: ang, translation, inner } => {
                let inner = HelmholtzField::from_spec(inner)?;
                let rot = rotation(*ang);
                let shift = Vector2::new(translation[0], translation[1]);
                Ok(Self::assemble(inner.k, Kind::Pullback { rot, shift, inner: Box::new(inner) }, spec.clone()))
            }
            FieldSpec::Sum { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter("sum needs at least one part".into()));
                }
                let fields: Vec<(f64, HelmholtzField)> = parts
                    .iter()
                    .map(|p| HelmholtzField::from_spec(&p.field).map(|f| (p.weight, f)))
                    .collect::<Result<_>>()?;
                let k = fields[0].1.k;
                for (_, f) in &fields {
                    if !same_k(f.k, k) {
                        return Err(Error::WavenumberMismatch(f.k, k));
                    }
                }
                Ok(Self::assemble(k, Kind::Sum(fields), spec.clone()))
            }
        }
    }

    fn bessel(k: Option<f64>, terms: &[WaveTerm], spec: FieldSpec) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("Bessel sum needs at least one term".into()));
        }
        for t in terms {
            if !(t.mu >= 0.0) || !t.mu.is_finite() {
                return Err(Error::InvalidParameter(format!("order mu = {} must be >= 0", t.mu)));
            }
            if !t.a.is_finite() || !t.theta.is_finite() || !t.phi.is_finite() || !t.b.is_finite() {
                return Err(Error::InvalidParameter("non-finite Bessel term parameter".into()));
            }
        }
        let k = match k {
            Some(k) => k,
            None => {
                let mu = terms[0].mu;
                if terms.iter().any(|t| t.mu != mu) {
                    return Err(Error::InvalidParameter("k must be given when the orders differ".into()));
                }
                bessel_first_zero(mu)?
            }
        };
        check_k(k)?;
        let bt = terms
            .iter()
            .map(|t| {
                let integer = (t.mu - t.mu.round()).abs() < 1e-12;
                let mut term = *t;
                if integer {
                    term.mu = t.mu.round();
                }
                BesselTerm { term, integer, rot: rotation(t.theta) }
            })
            .collect();
        Ok(Self::assemble(k, Kind::Bessel(bt), spec))
    }

    fn assemble(k: f64, kind: Kind, spec: FieldSpec) -> Self {
        let (sigma, candidates) = match &kind {
            Kind::Bessel(terms) => {
                let mut sigma = Vec::new();
                let mut cand = Vec::new();
                for t in terms {
                    let rt = t.rot.transpose();
                    let ray = Ray::new(rt * Vector2::new(-t.term.a, 0.0), rt * Vector2::new(-1.0, 0.0));
                    cand.push(ray);
                    if !t.integer && t.term.b != 0.0 {
                        sigma.push(ray);
                    }
                }
                (sigma, cand)
            }
            Kind::Pullback { rot, shift, inner } => {
                let map = |r: &Ray| Ray::new(rot.transpose() * (r.origin + shift), rot.transpose() * r.dir);
                (inner.sigma.iter().map(map).collect(), inner.candidates.iter().map(map).collect())
            }
            Kind::Sum(parts) => {
                let mut sigma = Vec::new();
                let mut cand = Vec::new();
                for (w, f) in parts {
                    if *w != 0.0 {
                        sigma.extend(f.sigma.iter().copied());
                    }
                    cand.extend(f.candidates.iter().copied());
                }
                (sigma, cand)
            }
            _ => (Vec::new(), Vec::new()),
        };
        HelmholtzField { k, kind, spec, sigma, candidates }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// Branch cuts (empty for entire fields).
    pub fn sigma(&self) -> &[Ray] {
        &self.sigma
    }

    /// Rays where a Bessel term would have its cut, whether or not the order is integer.
    pub fn candidate_rays(&self) -> &[Ray] {
        &self.candidates
    }

    pub fn is_entire(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Distance from `p` to the nearest branch cut (infinite if none).
    pub fn distance_to_sigma(&self, p: &Point) -> f64 {
        self.sigma.iter().map(|r| r.distance(p)).fold(f64::INFINITY, f64::min)
    }

    /// Jet at `p`; refuses points within `1e-12` of a branch cut.
    pub fn jet(&self, p: &Point) -> Result<FieldJet> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::InvalidParameter("non-finite evaluation point".into()));
        }
        if self.distance_to_sigma(p) < BRANCH_CUT_TOL {
            return Err(Error::BranchCutHit { x: p.x, y: p.y });
        }
        Ok(self.jet_unchecked(p))
    }

    pub fn value(&self, p: &Point) -> Result<f64> {
        self.jet(p).map(|j| j.value)
    }

    pub fn grad(&self, p: &Point) -> Result<Vector2<f64>> {
        self.jet(p).map(|j| j.grad)
    }

    /// Jet without the branch-cut check (on a cut the `psi = pi` side is used).
    pub fn jet_unchecked(&self, p: &Point) -> FieldJet {
        let mut out = FieldJet::zero();
        self.for_each_term(p, &mut |j| out.add(&j));
        out
    }

    /// Jets of the individual summands (used for term-wise bounds).
    pub fn term_jets(&self, p: &Point) -> Vec<FieldJet> {
        let mut out = Vec::new();
        self.for_each_term(p, &mut |j| out.push(j));
        out
    }

    fn for_each_term(&self, p: &Point, f: &mut dyn FnMut(FieldJet)) {
        match &self.kind {
            Kind::PlaneWaves(waves) => {
                for (d, c) in waves {
                    let e = *c * Complex64::new(0.0, self.k * d.dot(p)).exp();
                    let ik = Complex64::new(0.0, self.k);
                    let g = ik * e;
                    let h = -self.k * self.k * e.re;
                    f(FieldJet {
                        value: e.re,
                        grad: Vector2::new((g * d.x).re, (g * d.y).re),
                        hess: Matrix2::new(h * d.x * d.x, h * d.x * d.y, h * d.x * d.y, h * d.y * d.y),
                    });
                }
            }
            Kind::Trig(terms) => {
                for t in terms {
                    let (fx, fx1, fx2) = t.x.jet(p.x);
                    let (fy, fy1, fy2) = t.y.jet(p.y);
                    let w = t.weight;
                    f(FieldJet {
                        value: w * fx * fy,
                        grad: Vector2::new(w * fx1 * fy, w * fx * fy1),
                        hess: Matrix2::new(w * fx2 * fy, w * fx1 * fy1, w * fx1 * fy1, w * fx * fy2),
                    });
                }
            }
            Kind::Bessel(terms) => {
                for t in terms {
                    let z = Vector2::new(t.term.a, 0.0) + t.rot * p;
                    f(bessel_term_jet(self.k, &t.term, t.integer, &z).pulled(&t.rot));
                }
            }
            Kind::Pullback { rot, shift, inner } => {
                let q = rot * p - shift;
                inner.for_each_term(&q, &mut |j| f(j.pulled(rot)));
            }
            Kind::Sum(parts) => {
                for (w, field) in parts {
                    field.for_each_term(p, &mut |j| f(j.scaled(*w)));
                }
            }
        }
    }

    /// Complex value and gradient. Plane-wave fields keep their complex
    /// amplitude; every other field is real.
    pub fn complex_value_grad(&self, p: &Point) -> (Complex64, [Complex64; 2]) {
        match &self.kind {
            Kind::PlaneWaves(waves) => {
                let mut v = Complex64::new(0.0, 0.0);
                let mut g = [v, v];
                for (d, c) in waves {
                    let e = *c * Complex64::new(0.0, self.k * d.dot(p)).exp();
                    v += e;
                    let ik = Complex64::new(0.0, self.k) * e;
                    g[0] += ik * d.x;
                    g[1] += ik * d.y;
                }
                (v, g)
            }
            _ => {
                let j = self.jet_unchecked(p);
                (Complex64::new(j.value, 0.0), [Complex64::new(j.grad.x, 0.0), Complex64::new(j.grad.y, 0.0)])
            }
        }
    }

    /// Sum of `|weight| * amplitude` over all terms: an upper bound for `|v|`
    /// for Bessel and plane-wave fields, and a scale for tolerances in general.
    pub fn amplitude_scale(&self) -> f64 {
        match &self.kind {
            Kind::PlaneWaves(w) => w.iter().map(|(_, c)| c.norm()).sum(),
            Kind::Trig(t) => t.iter().map(|t| t.weight.abs()).sum(),
            Kind::Bessel(t) => t.iter().map(|t| t.term.b.abs()).sum(),
            Kind::Pullback { inner, .. } => inner.amplitude_scale(),
            Kind::Sum(p) => p.iter().map(|(w, f)| w.abs() * f.amplitude_scale()).sum(),
        }
    }

    /// Linear combination of fields with a common wavenumber.
    pub fn combine(parts: &[(f64, HelmholtzField)]) -> Result<Self> {
        let spec = FieldSpec::Sum {
            parts: parts.iter().map(|(w, f)| Weighted { weight: *w, field: f.spec.clone() }).collect(),
        };
        HelmholtzField::from_spec(&spec)
    }

    /// The field `x -> self(R_angle x - translation)`.
    pub fn affine_pull(&self, angle: f64, translation: Point) -> Result<Self> {
        HelmholtzField::from_spec(&FieldSpec::Pullback {
            rotation: angle,
            translation: [translation.x, translation.y],
            inner: Box::new(self.spec.clone()),
        })
    }

    /// Size of the jump across `ray` (value or angular derivative), measured at
    /// the midpoint of its first unit length with a Richardson-extrapolated
    /// one-sided limit. Zero (to rounding) for integer orders.
    pub fn branch_probe(&self, ray: &Ray) -> f64 {
        let p = ray.origin + 0.5 * ray.dir;
        let n = perp(&ray.dir);
        let radius = 0.5;
        let side = |eps: f64| -> (f64, f64) {
            let a = self.jet_unchecked(&(p + eps * n));
            let b = self.jet_unchecked(&(p - eps * n));
            (a.value - b.value, radius * (a.grad.dot(&n) - b.grad.dot(&n)))
        };
        let eps = 1e-5;
        let (v1, d1) = side(eps);
        let (v2, d2) = side(2.0 * eps);
        let v = 2.0 * v1 - v2;
        let d = 2.0 * d1 - d2;
        v.abs().max(d.abs())
    }

    /// Samples of value and gradient on a uniform `n x n` grid (inclusive).
    pub fn grid(&self, window: &Rect, n: usize) -> Vec<GridSample> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let p = Point::new(
                    window.xmin + window.width() * i as f64 / (n - 1) as f64,
                    window.ymin + window.height() * j as f64 / (n - 1) as f64,
                );
                let jet = self.jet(&p).ok();
                out.push(GridSample { point: p, jet });
            }
        }
        out
    }
}

/// One grid sample; `jet` is `None` on a branch cut.
#[derive(Debug, Clone)]
pub struct GridSample {
    pub point: Point,
    pub jet: Option<FieldJet>,
}

/// CSV rendering of grid samples: `x,y,value,gx,gy` (empty cells on cuts).
pub fn grid_to_csv(samples: &[GridSample]) -> String {
    use crate::geometry::round_sig;
    let mut s = String::from("x,y,value,gx,gy\n");
    for g in samples {
        match g.jet {
            Some(j) => s.push_str(&format!(
                "{},{},{},{},{}\n",
                round_sig(g.point.x),
                round_sig(g.point.y),
                round_sig(j.value),
                round_sig(j.grad.x),
                round_sig(j.grad.y)
            )),
            None => s.push_str(&format!("{},{},,,\n", round_sig(g.point.x), round_sig(g.point.y))),
        }
    }
    s
}

/// Second-order complex jet `(f, f_x, f_y, f_xx, f_xy, f_yy)`.
#[derive(Clone, Copy)]
struct CJet([Complex64; 6]);

impl CJet {
    fn constant(c: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        CJet([c, z, z, z, z, z])
    }

    fn mul(&self, o: &CJet) -> CJet {
        let a = &self.0;
        let b = &o.0;
        CJet([
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + a[0] * b[2],
            a[3] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[3],
            a[4] * b[0] + a[1] * b[2] + a[2] * b[1] + a[0] * b[4],
            a[5] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[5],
        ])
    }

    fn add_scaled(&mut self, o: &CJet, w: f64) {
        for i in 0..6 {
            self.0[i] += w * o.0[i];
        }
    }
}

/// Jet of `b J_mu(k |Z|) cos(mu (arg Z - phi))` in local coordinates `Z`.
fn bessel_term_jet(k: f64, t: &WaveTerm, integer: bool, z: &Vector2<f64>) -> FieldJet {
    let rho = z.norm();
    let mu = t.mu;
    if integer && k * rho < 0.1 {
        return integer_term_series(k, t, z);
    }
    let psi = z.y.atan2(z.x);
    let (j, jp, jpp) = bessel_j_jet(mu, k * rho);
    let (s_ang, c_ang) = (mu * (psi - t.phi)).sin_cos();
    let f = j * c_ang;
    let fr = k * jp * c_ang;
    let fp = -mu * j * s_ang;
    let frr = k * k * jpp * c_ang;
    let frp = -mu * k * jp * s_ang;
    let fpp = -mu * mu * j * c_ang;
    let (s, c) = (z.y / rho, z.x / rho);
    let r = rho;
    let fx = c * fr - s / r * fp;
    let fy = s * fr + c / r * fp;
    let fxx = c * c * frr - 2.0 * c * s / r * frp + s * s / (r * r) * fpp + s * s / r * fr + 2.0 * c * s / (r * r) * fp;
    let fyy = s * s * frr + 2.0 * c * s / r * frp + c * c / (r * r) * fpp + c * c / r * fr - 2.0 * c * s / (r * r) * fp;
    let fxy = c * s * frr + (c * c - s * s) / r * frp - c * s / (r * r) * fpp - c * s / r * fr - (c * c - s * s) / (r * r) * fp;
    let b = t.b;
    FieldJet { value: b * f, grad: b * Vector2::new(fx, fy), hess: b * Matrix2::new(fxx, fxy, fxy, fyy) }
}

/// Integer order `n` near the centre: `J_n(k rho) e^{i n psi} = sum_m c_m |Z|^{2m} (Z_x + i Z_y)^n`.
fn integer_term_series(k: f64, t: &WaveTerm, z: &Vector2<f64>) -> FieldJet {
    let n = t.mu as usize;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let xj = CJet([Complex64::new(z.x, 0.0), one, zero, zero, zero, zero]);
    let yj = CJet([Complex64::new(z.y, 0.0), zero, one, zero, zero, zero]);
    let zc = CJet([
        Complex64::new(z.x, z.y),
        one,
        Complex64::new(0.0, 1.0),
        zero,
        zero,
        zero,
    ]);
    let mut r2 = xj.mul(&xj);
    r2.add_scaled(&yj.mul(&yj), 1.0);
    let mut zn = CJet::constant(one);
    for _ in 0..n {
        zn = zn.mul(&zc);
    }
    // c_m = (-1)^m (k/2)^{n+2m} / (m! (m+n)!)
    let h = 0.5 * k;
    let mut coeff = h.powi(n as i32) / (1..=n).map(|i| i as f64).product::<f64>();
    let mut total = CJet::constant(zero);
    let mut r2m = CJet::constant(one);
    for m in 0..12 {
        let term = r2m.mul(&zn);
        total.add_scaled(&term, coeff);
        let fm = (m + 1) as f64;
        coeff *= -h * h / (fm * (fm + n as f64));
        r2m = r2m.mul(&r2);
    }
    let phase = Complex64::new(0.0, -(n as f64) * t.phi).exp() * t.b;
    let v: Vec<f64> = total.0.iter().map(|c| (phase * c).re).collect();
    FieldJet { value: v[0], grad: Vector2::new(v[1], v[2]), hess: Matrix2::new(v[3], v[4], v[4], v[5]) }
}
