//! Forward scattering by a penetrable inhomogeneity on a truncated domain.
//!
//! The scattered field `u_s` solves `div(A grad u_s) + k^2 q u_s =
//! -div((A - Id) grad u_i) - k^2 (q - 1) u_i` with an absorbing layer in
//! place of the radiation condition. The discretisation is cell-centred
//! finite volumes in flux form on a tensor grid that is uniform (spacing `h`)
//! over the inhomogeneity and graded outside it; the layer is a complex
//! coordinate stretching with a polynomial profile. The right-hand side is
//! the discrete operator difference `-(L_A - L_Id) u_i`, so it lives only on
//! faces and cells where the medium differs from the background.

use std::f64::consts::PI;
use std::time::Instant;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_jy;
use crate::error::{Error, Result};
use crate::fields::HelmholtzField;
use crate::geometry::{round_sig, Point, Rect};
use crate::media::{MediumSpec, Region};

/// Discretisation and layer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Grid spacing over the inhomogeneity.
    pub h: f64,
    /// Distance from the inhomogeneity to the layer, in wavelengths.
    pub margin_wavelengths: f64,
    /// Layer width in wavelengths.
    pub layer_wavelengths: f64,
    /// Degree of the layer's absorption profile.
    pub profile_degree: u32,
    /// Round-trip reflection coefficient of the continuous layer.
    pub reflection: f64,
    /// Growth factor of the cell size away from the inhomogeneity.
    pub growth: f64,
    /// Points per wavelength of the coarsest cells.
    pub coarse_ppw: f64,
    /// Relative residual required of the linear solve.
    pub tol: f64,
    pub max_unknowns: usize,
    /// Quadrature nodes on the measurement circle.
    pub contour_nodes: usize,
    /// Subsamples per cell side when averaging coefficients.
    pub subsamples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            h: 1.0 / 40.0,
            margin_wavelengths: 2.0,
            layer_wavelengths: 1.0,
            profile_degree: 2,
            reflection: 1e-8,
            growth: 1.15,
            coarse_ppw: 16.0,
            tol: 1e-8,
            max_unknowns: 2_000_000,
            contour_nodes: 720,
            subsamples: 4,
        }
    }
}

/// `(i / 4) H_0^(1)(k |x - x0|)`, the outgoing fundamental solution,
/// restricted to a neighbourhood that excludes the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSource {
    pub location: [f64; 2],
    pub k: f64,
    pub neighborhood: Region,
}

/// Build a point source; the location must lie outside the closed neighbourhood.
pub fn point_source_incident(location: Point, k: f64, neighborhood: Region) -> Result<PointSource> {
    if !(k > 0.0) || !location.x.is_finite() || !location.y.is_finite() {
        return Err(Error::InvalidParameter("point source needs k > 0 and a finite location".into()));
    }
    neighborhood.validate()?;
    if neighborhood.contains(&location) {
        return Err(Error::SourceInsideNeighborhood);
    }
    Ok(PointSource { location: [location.x, location.y], k, neighborhood })
}

impl PointSource {
    fn raw(&self, p: &Point) -> (Complex64, [Complex64; 2]) {
        let d = p - Point::new(self.location[0], self.location[1]);
        let r = d.norm();
        let b = bessel_jy(0.0, self.k * r);
        let q = Complex64::new(0.0, 0.25);
        let h = q * Complex64::new(b.j, b.y);
        let hp = q * self.k * Complex64::new(b.jp, b.yp);
        (h, [hp * (d.x / r), hp * (d.y / r)])
    }

    /// Value and gradient on the neighbourhood.
    pub fn value_grad(&self, p: &Point) -> Result<(Complex64, [Complex64; 2])> {
        if !self.neighborhood.contains(p) {
            return Err(Error::InvalidParameter(format!("({}, {}) lies outside the point source's neighbourhood", p.x, p.y)));
        }
        Ok(self.raw(p))
    }
}

/// An incident field: a Helmholtz field (real, or complex plane waves) or a
/// point source.
#[derive(Debug, Clone)]
pub enum Incident {
    Field(HelmholtzField),
    PointSource(PointSource),
}

impl Incident {
    pub fn k(&self) -> f64 {
        match self {
            Incident::Field(f) => f.k(),
            Incident::PointSource(s) => s.k,
        }
    }

    /// Complex value, rejecting points on a branch cut.
    pub fn value(&self, p: &Point) -> Result<Complex64> {
        match self {
            Incident::Field(f) => {
                if f.distance_to_sigma(p) < 1e-12 {
                    return Err(Error::BranchCutHit { x: p.x, y: p.y });
                }
                Ok(f.complex_value_grad(p).0)
            }
            Incident::PointSource(s) => Ok(s.value_grad(p)?.0),
        }
    }

    /// Complex value without neighbourhood checks (one-sided on cuts).
    fn raw_value(&self, p: &Point) -> Complex64 {
        match self {
            Incident::Field(f) => f.complex_value_grad(p).0,
            Incident::PointSource(s) => s.raw(p).0,
        }
    }

    /// Whether the field is smooth on the closed rectangle.
    fn smooth_on(&self, r: &Rect) -> bool {
        match self {
            Incident::Field(f) => {
                let c = [Point::new(r.xmin, r.ymin), Point::new(r.xmax, r.ymin), Point::new(r.xmax, r.ymax), Point::new(r.xmin, r.ymax)];
                f.sigma().iter().all(|ray| !r.contains(&ray.origin) && (0..4).all(|i| ray.distance_to_segment(&c[i], &c[(i + 1) % 4]) > 0.0))
            }
            Incident::PointSource(s) => {
                let bb = s.neighborhood.bbox();
                r.xmin >= bb.xmin && r.xmax <= bb.xmax && r.ymin >= bb.ymin && r.ymax <= bb.ymax && {
                    let corners = [Point::new(r.xmin, r.ymin), Point::new(r.xmax, r.ymin), Point::new(r.xmax, r.ymax), Point::new(r.xmin, r.ymax)];
                    corners.iter().all(|c| s.neighborhood.contains(c))
                }
            }
        }
    }
}

/// Cell-centred tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Face coordinates.
    pub xf: Vec<f64>,
    pub yf: Vec<f64>,
    /// Inner edges of the absorbing layer.
    pub inner: Rect,
    pub layer_width: f64,
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.xf.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.yf.len() - 1
    }

    pub fn xc(&self, i: usize) -> f64 {
        0.5 * (self.xf[i] + self.xf[i + 1])
    }

    pub fn yc(&self, j: usize) -> f64 {
        0.5 * (self.yf[j] + self.yf[j + 1])
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }
}

/// Faces of a uniform core `[a, b]` (spacing at most `h`, aligned with both
/// ends) padded by `pad` uniform cells, graded out to `reach` and followed
/// by `layer` cells of the coarse size.
fn axis_faces(a: f64, b: f64, h: f64, pad: usize, lo_reach: f64, hi_reach: f64, hmax: f64, growth: f64, layer: f64) -> (Vec<f64>, f64, f64, f64) {
    let n = ((b - a) / h).ceil().max(1.0) as usize;
    let hc = (b - a) / n as f64;
    let mut core: Vec<f64> = (0..=n).map(|i| a + hc * i as f64).collect();
    let hmax = hmax.max(hc);
    let grow = |start: f64, dir: f64, reach: f64| -> Vec<f64> {
        let mut out = Vec::new();
        let mut x = start;
        for _ in 0..pad {
            x += dir * hc;
            out.push(x);
        }
        let mut s = hc;
        while (reach - x) * dir > 0.0 {
            s = (s * growth).min(hmax);
            x += dir * s;
            out.push(x);
        }
        out
    };
    let lo = grow(a, -1.0, lo_reach);
    let hi = grow(b, 1.0, hi_reach);
    let inner_lo = *lo.last().unwrap_or(&a);
    let inner_hi = *hi.last().unwrap_or(&b);
    let nl = (layer / hmax).ceil().max(8.0) as usize;
    let lw = nl as f64 * hmax;
    let mut faces: Vec<f64> = (1..=nl).rev().map(|m| inner_lo - m as f64 * hmax).collect();
    faces.extend(lo.iter().rev());
    faces.append(&mut core);
    faces.extend(hi.iter());
    faces.extend((1..=nl).map(|m| inner_hi + m as f64 * hmax));
    (faces, inner_lo, inner_hi, lw)
}

/// Solution of one forward problem.
#[derive(Debug, Clone)]
pub struct ScatterResult {
    pub h: f64,
    pub grid: Grid,
    /// Scattered field at cell centres, row-major in `x`.
    pub u_s: Vec<Complex64>,
    pub rel_scatter: f64,
    /// Relative residual of the linear solve.
    pub residual: f64,
    pub unknowns: usize,
    pub contour_center: Point,
    pub contour_radius: f64,
    pub seconds: f64,
}

impl ScatterResult {
    /// Bilinear interpolation of `u_s` between cell centres.
    pub fn scattered_at(&self, p: &Point) -> Complex64 {
        let g = &self.grid;
        let locate = |faces: &[f64], x: f64| -> (usize, f64) {
            let n = faces.len() - 1;
            let c = |i: usize| 0.5 * (faces[i] + faces[i + 1]);
            let mut lo = 0;
            let mut hi = n - 1;
            if x <= c(0) {
                return (0, 0.0);
            }
            if x >= c(n - 1) {
                return (n - 2, 1.0);
            }
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if c(mid) <= x {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo, (x - c(lo)) / (c(lo + 1) - c(lo)))
        };
        let (i, tx) = locate(&g.xf, p.x);
        let (j, ty) = locate(&g.yf, p.y);
        let u = |a: usize, b: usize| self.u_s[g.idx(a, b)];
        u(i, j) * (1.0 - tx) * (1.0 - ty) + u(i + 1, j) * tx * (1.0 - ty) + u(i, j + 1) * (1.0 - tx) * ty + u(i + 1, j + 1) * tx * ty
    }

    /// Cell-centre samples as CSV `x,y,re,im`.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut s = String::from("x,y,re,im\n");
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let u = self.u_s[g.idx(i, j)];
                s.push_str(&format!("{},{},{},{}\n", round_sig(g.xc(i)), round_sig(g.yc(j)), round_sig(u.re), round_sig(u.im)));
            }
        }
        s
    }
}

/// Cell averages of `q` from `s x s` subsamples, and whether any subsample
/// differs from the background.
fn cell_coefficients(medium: &MediumSpec, g: &Grid, s: usize) -> Result<(Vec<f64>, Vec<bool>)> {
    let n = g.nx() * g.ny();
    let mut q = vec![1.0; n];
    let mut active = vec![false; n];
    let bb = medium.region().bbox();
    for j in 0..g.ny() {
        if g.yf[j + 1] < bb.ymin || g.yf[j] > bb.ymax {
            continue;
        }
        for i in 0..g.nx() {
            if g.xf[i + 1] < bb.xmin || g.xf[i] > bb.xmax {
                continue;
            }
            let mut sq = 0.0;
            for u in 0..s {
                for v in 0..s {
                    let p = Point::new(
                        g.xf[i] + (g.xf[i + 1] - g.xf[i]) * (u as f64 + 0.5) / s as f64,
                        g.yf[j] + (g.yf[j + 1] - g.yf[j]) * (v as f64 + 0.5) / s as f64,
                    );
                    let c = medium.coeffs(&p)?;
                    sq += c.q;
                    if c.q != 1.0 || c.a != Matrix2::identity() {
                        active[g.idx(i, j)] = true;
                    }
                }
            }
            q[g.idx(i, j)] = sq / (s * s) as f64;
        }
    }
    Ok((q, active))
}

/// Integrals of `1 / A_nn` and `A_nt / A_nn` along the axis-parallel
/// segment from `a` to `b`, where `n` is the segment's axis (`0` for x) and
/// `t` the other one. Two-point Gauss rules, bisected until the two halves
/// agree with the whole to a relative `1e-10`: near a degenerate map the
/// integrand varies on scales far below the cell size. `None` when `A = Id`
/// at every sample.
fn normal_segment(medium: &MediumSpec, a: Point, b: Point, axis: usize) -> Result<Option<(f64, f64)>> {
    let bb = medium.region().bbox();
    if a.x.max(b.x) < bb.xmin || a.x.min(b.x) > bb.xmax || a.y.max(b.y) < bb.ymin || a.y.min(b.y) > bb.ymax {
        return Ok(None);
    }
    let touched = std::cell::Cell::new(false);
    let gauss = |a: Point, b: Point| -> Result<(f64, f64)> {
        let len = (b - a).norm();
        let (mut inv, mut ratio) = (0.0, 0.0);
        for s in [-1.0, 1.0] {
            let t = 0.5 + s * 0.5 / 3f64.sqrt();
            let c = medium.coeffs(&(a + t * (b - a)))?.a;
            if c != Matrix2::identity() {
                touched.set(true);
            }
            let ann = c[(axis, axis)];
            inv += 0.5 * len / ann;
            ratio += 0.5 * len * c[(axis, 1 - axis)] / ann;
        }
        Ok((inv, ratio))
    };
    fn refine(gauss: &dyn Fn(Point, Point) -> Result<(f64, f64)>, a: Point, b: Point, whole: (f64, f64), depth: u32) -> Result<(f64, f64)> {
        let m = 0.5 * (a + b);
        let (l, r) = (gauss(a, m)?, gauss(m, b)?);
        let halves = (l.0 + r.0, l.1 + r.1);
        let scale = halves.0.abs() + halves.1.abs();
        if depth == 0 || (halves.0 - whole.0).abs() + (halves.1 - whole.1).abs() <= 1e-10 * scale {
            return Ok(halves);
        }
        let l = refine(gauss, a, m, l, depth - 1)?;
        let r = refine(gauss, m, b, r, depth - 1)?;
        Ok((l.0 + r.0, l.1 + r.1))
    }
    let whole = gauss(a, b)?;
    let r = refine(&gauss, a, b, whole, 16)?;
    Ok(touched.get().then_some(r))
}

/// One face between two cells (`L` below or left of `R`). `il`, `jl` are
/// the integrals of `1 / A_nn` and `A_nt / A_nn` from the centre of `L` to
/// the face, `ir`, `jr` those from the face to the centre of `R`, and `dl`,
/// `dr` the two distances. The conormal flux is `cond * (u_R - u_L) + ratio
/// * tau` with `tau` the tangential derivative, continuous across the face.
/// On the outer boundary only `cond` is used.
#[derive(Clone, Copy)]
struct Face {
    il: f64,
    jl: f64,
    ir: f64,
    jr: f64,
    dl: f64,
    dr: f64,
    cond: f64,
    cond0: f64,
    ratio: f64,
    stretch: Complex64,
}

impl Face {
    fn background(&self) -> bool {
        self.cond == self.cond0 && self.ratio == 0.0
    }
}

/// Four-point Gauss-Legendre nodes on `[-1, 1]` with weights normalised to sum 1.
const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.173_927_422_568_726_9),
    (-0.339_981_043_584_856_3, 0.326_072_577_431_273_1),
    (0.339_981_043_584_856_3, 0.326_072_577_431_273_1),
    (0.861_136_311_594_052_6, 0.173_927_422_568_726_9),
];

type Stencil = Vec<(usize, f64)>;

fn axpy(out: &mut Stencil, a: f64, s: &[(usize, f64)]) {
    out.extend(s.iter().map(|&(c, w)| (c, a * w)));
}

/// Solve the forward problem for one grid.
pub fn assemble_and_solve(medium: &MediumSpec, incident: &Incident, k: f64, cfg: &SolverConfig) -> Result<ScatterResult> {
    let t0 = Instant::now();
    medium.validate()?;
    if !(k > 0.0) || !(cfg.h > 0.0) || cfg.growth < 1.0 || cfg.subsamples == 0 || cfg.contour_nodes < 8 {
        return Err(Error::InvalidParameter("solver needs k > 0, h > 0, growth >= 1, subsamples >= 1, contour nodes >= 8".into()));
    }
    if (incident.k() - k).abs() > 1e-12 * k {
        return Err(Error::WavenumberMismatch(incident.k(), k));
    }
    let lambda = 2.0 * PI / k;
    if cfg.h > lambda / 12.0 {
        return Err(Error::WavelengthUnderResolved(format!("h = {} exceeds lambda / 12 = {}", cfg.h, lambda / 12.0)));
    }
    let bb = medium.region().bbox();
    let c = bb.center();
    let r_omega = 0.5 * (bb.width().powi(2) + bb.height().powi(2)).sqrt();
    let half = r_omega + cfg.margin_wavelengths * lambda;
    let hmax = lambda / cfg.coarse_ppw;
    let layer = cfg.layer_wavelengths * lambda;
    let (xf, xl, xr, lw) = axis_faces(bb.xmin, bb.xmax, cfg.h, 3, c.x - half, c.x + half, hmax, cfg.growth, layer);
    let (yf, yl, yr, _) = axis_faces(bb.ymin, bb.ymax, cfg.h, 3, c.y - half, c.y + half, hmax, cfg.growth, layer);
    let g = Grid { xf, yf, inner: Rect::new(xl, xr, yl, yr), layer_width: lw };
    let (nx, ny) = (g.nx(), g.ny());
    let n = nx * ny;
    if n > cfg.max_unknowns {
        return Err(Error::TooLarge(n));
    }

    let deg = cfg.profile_degree as i32;
    let sigma0 = -((deg + 1) as f64) * cfg.reflection.ln() / (2.0 * lw);
    let stretch = |x: f64, lo: f64, hi: f64| -> Complex64 {
        let d = if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 };
        Complex64::new(1.0, sigma0 * (d / lw).powi(deg) / k)
    };
    let sx = |x: f64| stretch(x, g.inner.xmin, g.inner.xmax);
    let sy = |y: f64| stretch(y, g.inner.ymin, g.inner.ymax);

    let (cq, mut active) = cell_coefficients(medium, &g, cfg.subsamples)?;

    // Face conductances from the one-sided integrals along the segments
    // joining the adjacent cell centres to the face.
    let make_face = |l: Point, f: Point, r: Point, axis: usize, half: f64, stretch: Complex64| -> Result<Face> {
        let (dl, dr) = ((f - l).norm(), (r - f).norm());
        let cond0 = 1.0 / (dl + dr);
        let mut face = Face { il: 0.0, jl: 0.0, ir: 0.0, jr: 0.0, dl, dr, cond: 0.0, cond0, ratio: 0.0, stretch };
        let mut shift = Point::new(0.0, 0.0);
        let mut touched = false;
        for (t, w) in GAUSS4 {
            shift[1 - axis] = t * half;
            let left = normal_segment(medium, l + shift, f + shift, axis)?;
            let right = normal_segment(medium, f + shift, r + shift, axis)?;
            touched |= left.is_some() || right.is_some();
            let (il, jl) = left.unwrap_or((dl, 0.0));
            let (ir, jr) = right.unwrap_or((dr, 0.0));
            face.il += w * il;
            face.jl += w * jl;
            face.ir += w * ir;
            face.jr += w * jr;
            face.cond += w / (il + ir);
            face.ratio += w * (jl + jr) / (il + ir);
        }
        if !touched {
            face = Face { il: dl, jl: 0.0, ir: dr, jr: 0.0, dl, dr, cond: cond0, cond0, ratio: 0.0, stretch };
        }
        Ok(face)
    };
    let boundary_face = |d: f64, stretch: Complex64| Face { il: d, jl: 0.0, ir: 0.0, jr: 0.0, dl: d, dr: 0.0, cond: 1.0 / d, cond0: 1.0 / d, ratio: 0.0, stretch };
    // x faces at i = 0..=nx (left of cell i), y faces likewise.
    let mut x_faces = Vec::with_capacity((nx + 1) * ny);
    for j in 0..ny {
        let y = g.yc(j);
        for i in 0..=nx {
            let stretch = sy(y) / sx(g.xf[i]);
            let face = if i == 0 {
                boundary_face(g.xc(0) - g.xf[0], stretch)
            } else if i == nx {
                boundary_face(g.xf[nx] - g.xc(nx - 1), stretch)
            } else {
                make_face(Point::new(g.xc(i - 1), y), Point::new(g.xf[i], y), Point::new(g.xc(i), y), 0, 0.5 * (g.yf[j + 1] - g.yf[j]), stretch)?
            };
            if !face.background() {
                active[g.idx(i - 1, j)] = true;
                active[g.idx(i, j)] = true;
            }
            x_faces.push(face);
        }
    }
    let mut y_faces = Vec::with_capacity(nx * (ny + 1));
    for j in 0..=ny {
        for i in 0..nx {
            let x = g.xc(i);
            let stretch = sx(x) / sy(g.yf[j]);
            let face = if j == 0 {
                boundary_face(g.yc(0) - g.yf[0], stretch)
            } else if j == ny {
                boundary_face(g.yf[ny] - g.yc(ny - 1), stretch)
            } else {
                make_face(Point::new(x, g.yc(j - 1)), Point::new(x, g.yf[j]), Point::new(x, g.yc(j)), 1, 0.5 * (g.xf[i + 1] - g.xf[i]), stretch)?
            };
            if !face.background() {
                active[g.idx(i, j - 1)] = true;
                active[g.idx(i, j)] = true;
            }
            y_faces.push(face);
        }
    }
    let xface = |i: usize, j: usize| &x_faces[j * (nx + 1) + i];
    let yface = |i: usize, j: usize| &y_faces[j * nx + i];

    // Plain central differences of a cell.
    let dy_plain = |i: usize, j: usize| -> Stencil {
        if j == 0 || j + 1 >= ny {
            return Vec::new();
        }
        let d = g.yc(j + 1) - g.yc(j - 1);
        vec![(g.idx(i, j + 1), 1.0 / d), (g.idx(i, j - 1), -1.0 / d)]
    };
    let dx_plain = |i: usize, j: usize| -> Stencil {
        if i == 0 || i + 1 >= nx {
            return Vec::new();
        }
        let d = g.xc(i + 1) - g.xc(i - 1);
        vec![(g.idx(i + 1, j), 1.0 / d), (g.idx(i - 1, j), -1.0 / d)]
    };
    // One-sided normal derivatives at an interior face, seen from its two
    // cells: the face value is reconstructed from the flux, so a kink of
    // the solution at a coefficient jump stays on the face.
    let one_sided = |f: &Face, l: usize, r: usize, tau: &Stencil| -> (Stencil, Stencil) {
        let mut flux = vec![(r, f.cond), (l, -f.cond)];
        axpy(&mut flux, f.ratio, tau);
        let mut from_l = Vec::new();
        axpy(&mut from_l, f.il / f.dl, &flux);
        axpy(&mut from_l, -f.jl / f.dl, tau);
        let mut from_r = Vec::new();
        axpy(&mut from_r, f.ir / f.dr, &flux);
        axpy(&mut from_r, -f.jr / f.dr, tau);
        (from_l, from_r)
    };
    let x_sides = |i: usize, j: usize| -> (Stencil, Stencil) {
        let mut tau = Vec::new();
        axpy(&mut tau, 0.5, &dy_plain(i - 1, j));
        axpy(&mut tau, 0.5, &dy_plain(i, j));
        one_sided(xface(i, j), g.idx(i - 1, j), g.idx(i, j), &tau)
    };
    let y_sides = |i: usize, j: usize| -> (Stencil, Stencil) {
        let mut tau = Vec::new();
        axpy(&mut tau, 0.5, &dx_plain(i, j - 1));
        axpy(&mut tau, 0.5, &dx_plain(i, j));
        one_sided(yface(i, j), g.idx(i, j - 1), g.idx(i, j), &tau)
    };
    // Interface-aware derivatives of a cell: the mean of the one-sided
    // derivatives at its two faces.
    let dx_cell = |i: usize, j: usize| -> Stencil {
        if i == 0 || i + 1 >= nx {
            return Vec::new();
        }
        let mut out = Vec::new();
        axpy(&mut out, 0.5, &x_sides(i, j).1);
        axpy(&mut out, 0.5, &x_sides(i + 1, j).0);
        out
    };
    let dy_cell = |i: usize, j: usize| -> Stencil {
        if j == 0 || j + 1 >= ny {
            return Vec::new();
        }
        let mut out = Vec::new();
        axpy(&mut out, 0.5, &y_sides(i, j).1);
        axpy(&mut out, 0.5, &y_sides(i, j + 1).0);
        out
    };
    // (cells on the two sides, normal stencil, cross stencil); missing
    // cells beyond the outer boundary carry u_s = 0.
    let x_stencil = |i: usize, j: usize| -> (Option<usize>, Option<usize>, Stencil, Stencil) {
        let l = i.checked_sub(1).map(|a| g.idx(a, j));
        let r = (i < nx).then(|| g.idx(i, j));
        let normal = l.map(|l| (l, -1.0)).into_iter().chain(r.map(|r| (r, 1.0))).collect();
        let mut cross = Vec::new();
        if l.is_some() && r.is_some() && xface(i, j).ratio != 0.0 {
            axpy(&mut cross, 0.5, &dy_cell(i - 1, j));
            axpy(&mut cross, 0.5, &dy_cell(i, j));
        }
        (l, r, normal, cross)
    };
    let y_stencil = |i: usize, j: usize| -> (Option<usize>, Option<usize>, Stencil, Stencil) {
        let l = j.checked_sub(1).map(|b| g.idx(i, b));
        let r = (j < ny).then(|| g.idx(i, j));
        let normal = l.map(|l| (l, -1.0)).into_iter().chain(r.map(|r| (r, 1.0))).collect();
        let mut cross = Vec::new();
        if l.is_some() && r.is_some() && yface(i, j).ratio != 0.0 {
            axpy(&mut cross, 0.5, &dx_cell(i, j - 1));
            axpy(&mut cross, 0.5, &dx_cell(i, j));
        }
        (l, r, normal, cross)
    };

    // Incident field on the cells the right-hand side touches.
    let mut ui: Vec<Option<Complex64>> = vec![None; n];
    let mut needed = vec![false; n];
    let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
    for j in 0..ny {
        for i in 0..nx {
            if active[g.idx(i, j)] {
                for b in j.saturating_sub(3)..(j + 4).min(ny) {
                    for a in i.saturating_sub(3)..(i + 4).min(nx) {
                        needed[g.idx(a, b)] = true;
                    }
                }
                imin = imin.min(i.saturating_sub(3));
                imax = imax.max((i + 3).min(nx - 1));
                jmin = jmin.min(j.saturating_sub(3));
                jmax = jmax.max((j + 3).min(ny - 1));
            }
        }
    }
    if imin != usize::MAX {
        let support = Rect::new(g.xc(imin), g.xc(imax), g.yc(jmin), g.yc(jmax));
        if !incident.smooth_on(&support) {
            return Err(Error::InvalidParameter(
                "the medium's support is not compactly inside the incident field's domain (branch cut or neighbourhood)".into(),
            ));
        }
        for j in 0..ny {
            for i in 0..nx {
                if needed[g.idx(i, j)] {
                    ui[g.idx(i, j)] = Some(incident.value(&Point::new(g.xc(i), g.yc(j)))?);
                }
            }
        }
    }
    let ui_at = |m: usize| ui[m].unwrap_or(Complex64::new(0.0, 0.0));

    let mut trip: Vec<Triplet<usize, usize, Complex64>> = Vec::with_capacity(9 * n);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let mut add_face = |f: &Face, l: Option<usize>, r: Option<usize>, normal: Stencil, cross: Stencil, len: f64| {
        let coef_n = f.stretch * f.cond * len;
        let coef_c = f.ratio * len;
        // Outward flux of the left cell is +flux, of the right cell -flux.
        for (side, sign) in [(l, 1.0), (r, -1.0)] {
            let Some(row) = side else { continue };
            for &(cell, w) in &normal {
                trip.push(Triplet::new(row, cell, coef_n * (sign * w)));
            }
            for &(cell, w) in &cross {
                trip.push(Triplet::new(row, cell, Complex64::new(coef_c * sign * w, 0.0)));
            }
            // Right-hand side: minus the difference from the background operator.
            let dn = f.cond - f.cond0;
            if dn != 0.0 || f.ratio != 0.0 {
                let mut flux = Complex64::new(0.0, 0.0);
                for &(cell, w) in &normal {
                    flux += dn * w * ui_at(cell);
                }
                for &(cell, w) in &cross {
                    flux += f.ratio * w * ui_at(cell);
                }
                rhs[row] -= sign * len * flux;
            }
        }
    };
    for j in 0..ny {
        let len = g.yf[j + 1] - g.yf[j];
        for i in 0..=nx {
            let (l, r, normal, cross) = x_stencil(i, j);
            add_face(xface(i, j), l, r, normal, cross, len);
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            let len = g.xf[i + 1] - g.xf[i];
            let (l, r, normal, cross) = y_stencil(i, j);
            add_face(yface(i, j), l, r, normal, cross, len);
        }
    }
    let k2 = k * k;
    for j in 0..ny {
        for i in 0..nx {
            let m = g.idx(i, j);
            let vol = (g.xf[i + 1] - g.xf[i]) * (g.yf[j + 1] - g.yf[j]);
            trip.push(Triplet::new(m, m, k2 * cq[m] * vol * sx(g.xc(i)) * sy(g.yc(j))));
            if cq[m] != 1.0 {
                rhs[m] -= k2 * (cq[m] - 1.0) * vol * ui_at(m);
            }
        }
    }

    let bnorm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (u_s, residual) = if bnorm == 0.0 {
        (vec![Complex64::new(0.0, 0.0); n], 0.0)
    } else {
        solve(n, &trip, &rhs, cfg.tol)?
    };

    let radius = 0.5 * (r_omega + half);
    let mut res = ScatterResult {
        h: cfg.h,
        grid: g,
        u_s,
        rel_scatter: 0.0,
        residual,
        unknowns: n,
        contour_center: c,
        contour_radius: radius,
        seconds: 0.0,
    };
    let (mut num, mut den) = (0.0, 0.0);
    for m in 0..cfg.contour_nodes {
        let t = 2.0 * PI * m as f64 / cfg.contour_nodes as f64;
        let p = c + radius * Point::new(t.cos(), t.sin());
        num += res.scattered_at(&p).norm_sqr();
        den += incident.raw_value(&p).norm_sqr();
    }
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("incident field vanishes on the measurement circle".into()));
    }
    res.rel_scatter = (num / den).sqrt();
    res.seconds = t0.elapsed().as_secs_f64();
    Ok(res)
}

/// Sparse LU solve with up to three steps of iterative refinement.
fn solve(n: usize, trip: &[Triplet<usize, usize, Complex64>], b: &[Complex64], tol: f64) -> Result<(Vec<Complex64>, f64)> {
    let a = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, trip)
        .map_err(|e| Error::SolverDiverged(format!("matrix assembly: {e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::SolverDiverged(format!("sparse LU: {e:?}")))?;
    let bnorm = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut x = Mat::<Complex64>::from_fn(n, 1, |i, _| b[i]);
    lu.solve_in_place(x.as_mut());
    let residual = |x: &Mat<Complex64>| -> Vec<Complex64> {
        let mut r = b.to_vec();
        for t in trip {
            r[t.row] -= t.val * x[(t.col, 0)];
        }
        r
    };
    let mut rel = f64::INFINITY;
    for _ in 0..4 {
        let r = residual(&x);
        rel = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / bnorm;
        if rel <= tol {
            break;
        }
        let mut d = Mat::<Complex64>::from_fn(n, 1, |i, _| r[i]);
        lu.solve_in_place(d.as_mut());
        for i in 0..n {
            x[(i, 0)] += d[(i, 0)];
        }
    }
    if !(rel <= tol) {
        return Err(Error::SolverDiverged(format!("relative residual {rel:e} above {tol:e}")));
    }
    Ok(((0..n).map(|i| x[(i, 0)]).collect(), rel))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NonScatteringConsistent,
    Scattering,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinementLevel {
    pub h: f64,
    pub rel_scatter: f64,
    pub unknowns: usize,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinementReport {
    pub k: f64,
    pub levels: Vec<RefinementLevel>,
    /// `log2` of successive ratios of `relScatter`.
    pub orders: Vec<f64>,
    pub verdict: Verdict,
}

/// Classify a refinement table (values ordered by decreasing `h`, each a
/// halving). Non-scattering needs every halving to reduce `relScatter` by at
/// least 2 and a final value below `1e-3` (or every value below `1e-9`);
/// scattering needs a final value above `1e-2` that changed by less than
/// half over the last halving.
pub fn classify_refinement(values: &[f64]) -> Verdict {
    if values.iter().all(|&v| v < 1e-9) {
        return Verdict::NonScatteringConsistent;
    }
    let last = *values.last().unwrap_or(&f64::NAN);
    if values.windows(2).all(|w| w[1] <= 0.5 * w[0]) && last < 1e-3 {
        return Verdict::NonScatteringConsistent;
    }
    if values.len() >= 2 {
        let prev = values[values.len() - 2];
        if last > 1e-2 && ((last - prev) / last).abs() < 0.5 {
            return Verdict::Scattering;
        }
    }
    Verdict::Inconclusive
}

/// Solve on every grid of `hs` (at least three, each half the previous),
/// concurrently, and classify the trend.
pub fn refinement_study(medium: &MediumSpec, incident: &Incident, k: f64, hs: &[f64], cfg: &SolverConfig) -> Result<(RefinementReport, Vec<ScatterResult>)> {
    if hs.len() < 3 {
        return Err(Error::InvalidParameter("a refinement study needs at least three grid levels".into()));
    }
    if hs.windows(2).any(|w| (w[1] - 0.5 * w[0]).abs() > 1e-9 * w[0]) {
        return Err(Error::InvalidParameter("each grid level must halve h".into()));
    }
    // One level per available core at a time: a fine level's factorisation
    // dominates memory, so levels beyond the core count would only compete.
    let width = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut results = Vec::with_capacity(hs.len());
    for chunk in hs.chunks(width) {
        let batch: Vec<Result<ScatterResult>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&h| {
                    let cfg = SolverConfig { h, ..*cfg };
                    s.spawn(move || assemble_and_solve(medium, incident, k, &cfg))
                })
                .collect();
            handles.into_iter().map(|t| t.join().expect("solver thread panicked")).collect()
        });
        for r in batch {
            results.push(r?);
        }
    }
    let levels: Vec<RefinementLevel> = results
        .iter()
        .map(|r| RefinementLevel { h: r.h, rel_scatter: r.rel_scatter, unknowns: r.unknowns, residual: r.residual, seconds: r.seconds })
        .collect();
    let values: Vec<f64> = levels.iter().map(|l| l.rel_scatter).collect();
    let orders = values.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok((RefinementReport { k, levels, orders, verdict: classify_refinement(&values) }, results))
}

/// Relative `L^2` distance, over cells whose centres lie in the medium's
/// region, between the computed total field `u_i + u_s` and a predicted
/// interior field.
pub fn interior_mismatch(result: &ScatterResult, medium: &MediumSpec, incident: &Incident, predicted: &dyn Fn(&Point) -> Result<Complex64>) -> Result<f64> {
    let g = &result.grid;
    let region = medium.region();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let p = Point::new(g.xc(i), g.yc(j));
            if region.depth(&p) <= 0.0 {
                continue;
            }
            let vol = (g.xf[i + 1] - g.xf[i]) * (g.yf[j + 1] - g.yf[j]);
            let pred = predicted(&p)?;
            let total = incident.value(&p)? + result.u_s[g.idx(i, j)];
            num += (total - pred).norm_sqr() * vol;
            den += pred.norm_sqr() * vol;
        }
    }
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("predicted interior field vanishes".into()));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(classify_refinement(&[0.0, 0.0, 0.0]), Verdict::NonScatteringConsistent);
        assert_eq!(classify_refinement(&[4e-3, 1e-3, 2.4e-4]), Verdict::NonScatteringConsistent);
        assert_eq!(classify_refinement(&[4e-3, 3e-3, 2.4e-4]), Verdict::Inconclusive);
        assert_eq!(classify_refinement(&[0.2, 0.15, 0.14]), Verdict::Scattering);
        assert_eq!(classify_refinement(&[0.2, 0.1, 0.02]), Verdict::Inconclusive);
    }

    #[test]
    fn graded_axis_is_aligned_and_monotone() {
        let (f, lo, hi, lw) = axis_faces(0.0, 1.0, 0.1, 2, -3.0, 4.0, 0.5, 1.2, 1.0);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        for x in [0.0, 1.0] {
            assert!(f.iter().any(|&y| (y - x).abs() < 1e-15));
        }
        assert!(lo <= -3.0 && hi >= 4.0 && lw >= 1.0);
        assert!(f.windows(2).all(|w| w[1] - w[0] <= 0.5 + 1e-12));
    }
}
