//! Nodal sets of Helmholtz fields: sign certificates, curve tracing, nodal
//! critical points and Dirichlet domain assembly.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldJet, HelmholtzField};
use crate::geometry::{assemble_loop, perp, round_sig, PlanarCurve, Point, Rect};

// ---------------------------------------------------------------------------
// Sign certificates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    Positive,
    Negative,
    Undetermined,
    NearCut,
}

/// Cell-wise sign labels on a uniform grid covering `window`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignCertificate {
    pub window: Rect,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Row-major labels, index `j * nx + i`.
    pub labels: Vec<CellLabel>,
}

impl SignCertificate {
    pub fn label(&self, i: usize, j: usize) -> CellLabel {
        self.labels[j * self.nx + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(self.window.xmin + (i as f64 + 0.5) * self.hx, self.window.ymin + (j as f64 + 0.5) * self.hy)
    }

    /// Label of the cell containing `p`, if inside the window.
    pub fn label_at(&self, p: &Point) -> Option<CellLabel> {
        if !self.window.contains(p) {
            return None;
        }
        let i = (((p.x - self.window.xmin) / self.hx) as usize).min(self.nx - 1);
        let j = (((p.y - self.window.ymin) / self.hy) as usize).min(self.ny - 1);
        Some(self.label(i, j))
    }

    pub fn count(&self, l: CellLabel) -> usize {
        self.labels.iter().filter(|&&x| x == l).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,xc,yc,label\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.cell_center(i, j);
                s.push_str(&format!("{},{},{},{},{:?}\n", i, j, round_sig(c.x), round_sig(c.y), self.label(i, j)));
            }
        }
        s
    }
}

/// Safety factor applied to sampled term-wise derivative bounds.
const CERT_SAFETY: f64 = 1.5;

/// Label each cell of a grid with spacing at most `h` as certified positive,
/// certified negative, undetermined, or too close to a branch cut.
///
/// A cell is certified when the field has one strict sign at its four corners
/// and centre and either the Lipschitz test `min |v| > L d / 2` (`d` the cell
/// diagonal, `L` the sum of term-wise gradient bounds) or the interpolation test
/// `min |v| > (hx^2 M_xx + hy^2 M_yy) / 8` (`M` sums of term-wise second
/// derivative bounds) holds. Term-wise bounds are sampled maxima over the
/// corners and centre, inflated by a safety factor.
pub fn certify_signs(field: &HelmholtzField, window: &Rect, h: f64) -> Result<SignCertificate> {
    if !window.is_valid() {
        return Err(Error::InvalidParameter("window must have positive extent".into()));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("cell size h = {h} must be positive")));
    }
    let nx = (window.width() / h).ceil().max(1.0) as usize;
    let ny = (window.height() / h).ceil().max(1.0) as usize;
    if nx * ny > 25_000_000 {
        return Err(Error::TooLarge(nx * ny));
    }
    let hx = window.width() / nx as f64;
    let hy = window.height() / ny as f64;
    let diag = (hx * hx + hy * hy).sqrt();
    let node = |i: usize, j: usize| Point::new(window.xmin + i as f64 * hx, window.ymin + j as f64 * hy);
    // Term jets at grid nodes, reused by neighbouring cells.
    let mut nodes: Vec<Option<Vec<FieldJet>>> = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let p = node(i, j);
            nodes.push(if field.distance_to_sigma(&p) < diag { None } else { Some(field.term_jets(&p)) });
        }
    }
    let mut labels = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = Point::new(window.xmin + (i as f64 + 0.5) * hx, window.ymin + (j as f64 + 0.5) * hy);
            let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
            if field.distance_to_sigma(&c) < diag || corners.iter().any(|&(a, b)| nodes[b * (nx + 1) + a].is_none()) {
                labels.push(CellLabel::NearCut);
                continue;
            }
            let centre = field.term_jets(&c);
            let mut samples: Vec<&Vec<FieldJet>> = corners.iter().map(|&(a, b)| nodes[b * (nx + 1) + a].as_ref().unwrap()).collect();
            samples.push(&centre);
            let values: Vec<f64> = samples.iter().map(|t| t.iter().map(|j| j.value).sum()).collect();
            let pos = values.iter().all(|&v| v > 0.0);
            let neg = values.iter().all(|&v| v < 0.0);
            if !pos && !neg {
                labels.push(CellLabel::Undetermined);
                continue;
            }
            let vmin = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            let nterms = centre.len();
            let (mut l, mut mxx, mut myy) = (0.0, 0.0, 0.0);
            for t in 0..nterms {
                let (mut g, mut a, mut b) = (0.0f64, 0.0f64, 0.0f64);
                for s in &samples {
                    g = g.max(s[t].grad.norm());
                    a = a.max(s[t].hess[(0, 0)].abs());
                    b = b.max(s[t].hess[(1, 1)].abs());
                }
                l += g;
                mxx += a;
                myy += b;
            }
            let lipschitz = vmin > CERT_SAFETY * l * diag / 2.0;
            let interp = vmin > CERT_SAFETY * (hx * hx * mxx + hy * hy * myy) / 8.0;
            labels.push(if lipschitz || interp {
                if pos {
                    CellLabel::Positive
                } else {
                    CellLabel::Negative
                }
            } else {
                CellLabel::Undetermined
            });
        }
    }
    Ok(SignCertificate { window: *window, nx, ny, hx, hy, labels })
}

// ---------------------------------------------------------------------------
// Curve tracing

/// How one end of a traced nodal arc terminated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TraceEnd {
    /// The curve returned to its start.
    Closed,
    /// The arc ran into a nodal critical point (the point is the last vertex).
    CriticalPoint { x: f64, y: f64 },
    WindowExit,
    BranchCut,
    /// The predictor-corrector could not make progress.
    Stalled,
    MaxVertices,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    pub window: Rect,
    /// Maximum step length.
    pub step: f64,
    pub min_step: f64,
    /// Corrector tolerance on `|v|`, relative to the field amplitude scale.
    pub value_tol: f64,
    pub max_vertices: usize,
    /// Points at which tracing stops (e.g. known critical points).
    #[serde(default)]
    pub stop_points: Vec<Point>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            window: Rect::centered(10.0),
            step: 1e-2,
            min_step: 1e-4,
            value_tol: 1e-12,
            max_vertices: 200_000,
            stop_points: Vec::new(),
        }
    }
}

/// A traced nodal arc or closed nodal curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodalTrace {
    pub curve: PlanarCurve,
    /// Termination at the first vertex (`Closed` for closed curves).
    pub start_end: TraceEnd,
    /// Termination at the last vertex.
    pub finish_end: TraceEnd,
    /// For closed curves: distance from the start vertex to the traced curve
    /// at the point where the trace returns to it.
    pub closure_gap: Option<f64>,
    pub max_abs_value: f64,
    /// Distance from the polyline to the branch cuts (infinite if none).
    pub sigma_distance: f64,
}

fn newton_to_level(field: &HelmholtzField, p: Point, tol: f64, max_move: f64) -> Option<Point> {
    let mut q = p;
    for _ in 0..30 {
        let j = field.jet(&q).ok()?;
        let g2 = j.grad.norm_squared();
        if g2 == 0.0 {
            return None;
        }
        if j.value.abs() <= tol * 1e-2 {
            return Some(q);
        }
        let dq = -j.value * j.grad / g2;
        q += dq;
        if (q - p).norm() > max_move {
            return None;
        }
        if dq.norm() < 1e-15 * (1.0 + q.norm()) {
            break;
        }
    }
    let v = field.jet(&q).ok()?.value;
    if v.abs() <= tol {
        Some(q)
    } else {
        None
    }
}

/// Newton iteration for `grad v = 0` from `p`. Returns the iterate with the
/// smallest gradient and whether the iteration settled.
pub fn newton_critical(field: &HelmholtzField, p: Point, max_move: f64) -> Option<Point> {
    let mut q = p;
    let mut best = (f64::INFINITY, p);
    for _ in 0..200 {
        let j = field.jet(&q).ok()?;
        let gn = j.grad.norm();
        if gn < best.0 {
            best = (gn, q);
        }
        let svd = j.hess.svd(true, true);
        let smax = svd.singular_values.max();
        if smax == 0.0 {
            break;
        }
        let dq = -svd.solve(&j.grad, 1e-14 * smax).ok()?;
        if !dq.x.is_finite() {
            break;
        }
        q += dq;
        if (q - p).norm() > max_move {
            return None;
        }
        if dq.norm() < 1e-16 * (1.0 + q.norm()) {
            break;
        }
    }
    let j = field.jet(&q).ok()?;
    if j.grad.norm() < best.0 {
        best = (j.grad.norm(), q);
    }
    Some(best.1)
}

/// Locate a nodal critical point ahead of `p` within `reach`, if any.
fn critical_ahead(field: &HelmholtzField, p: &Point, jet: &FieldJet, t: &Vector2<f64>, reach: f64) -> Option<Point> {
    let svd = jet.hess.svd(true, true);
    let smax = svd.singular_values.max();
    let guess = if smax > 0.0 { svd.solve(&jet.grad, 1e-12 * smax).ok().map(|d| -d) } else { None };
    let near = guess.map_or(false, |d| d.norm() < 2.0 * reach) || jet.grad.norm() < 1e-8 * field.k() * field.amplitude_scale();
    if !near {
        return None;
    }
    let c = newton_critical(field, *p, 4.0 * reach)?;
    let cj = field.jet(&c).ok()?;
    let amp = field.amplitude_scale().max(1e-300);
    let d = c - p;
    if d.norm() <= reach && cj.value.abs() < 1e-8 * amp && cj.grad.norm() < 1e-7 * amp * field.k() && (d.dot(t) > 0.0 || d.norm() < 1e-9) {
        Some(c)
    } else {
        None
    }
}

fn march(field: &HelmholtzField, start: Point, sign: f64, opts: &TraceOptions, detect_closure: bool) -> (Vec<Point>, TraceEnd, Option<f64>) {
    let amp = field.amplitude_scale().max(1e-300);
    let tol = opts.value_tol * amp;
    let mut pts = vec![start];
    let mut p = start;
    let mut arc = 0.0;
    let mut h = opts.step;
    let mut prev_t: Option<Vector2<f64>> = None;
    loop {
        if pts.len() >= opts.max_vertices {
            return (pts, TraceEnd::MaxVertices, None);
        }
        let jet = match field.jet(&p) {
            Ok(j) => j,
            Err(_) => return (pts, TraceEnd::BranchCut, None),
        };
        let gn = jet.grad.norm();
        let mut t = if gn > 0.0 { sign * perp(&jet.grad) / gn } else { prev_t.unwrap_or(Vector2::new(1.0, 0.0)) };
        if let Some(pt) = prev_t {
            if t.dot(&pt) < 0.0 {
                t = -t;
            }
        }
        for s in &opts.stop_points {
            let d = s - p;
            if d.norm() <= 1.2 * h && (d.dot(&t) > 0.0 || d.norm() < 1e-12) && pts.len() > 1 {
                if d.norm() > 1e-12 {
                    pts.push(*s);
                }
                return (pts, TraceEnd::CriticalPoint { x: s.x, y: s.y }, None);
            }
        }
        if let Some(c) = critical_ahead(field, &p, &jet, &t, 1.2 * h) {
            if (c - p).norm() > 1e-12 {
                pts.push(c);
            }
            return (pts, TraceEnd::CriticalPoint { x: c.x, y: c.y }, None);
        }
        if gn < 1e-10 * amp * field.k() {
            return (pts, TraceEnd::Stalled, None);
        }
        if detect_closure && arc > 4.0 * opts.step {
            let ds = start - p;
            let along = ds.dot(&t);
            if along > 0.0 && ds.norm() <= 1.5 * h {
                // Step to the tangential position of the start point and measure
                // how far the traced curve passes from it.
                let q = newton_to_level(field, p + along * t, tol, along.max(opts.min_step));
                let gap = q.map_or(ds.norm(), |q| (q - start).norm());
                return (pts, TraceEnd::Closed, Some(gap));
            }
        }
        let kappa = (t.transpose() * jet.hess * t)[(0, 0)].abs() / gn;
        h = (0.1 / kappa.max(1e-300)).min(opts.step).min(2.0 * h).max(opts.min_step);
        let mut accepted = None;
        while h >= 0.5 * opts.min_step {
            let pred = p + h * t;
            if let Some(q) = newton_to_level(field, pred, tol, 0.5 * h) {
                let d = q - p;
                if d.norm() < 1.5 * h && d.norm() > 0.25 * h && d.normalize().dot(&t) > 0.9 {
                    accepted = Some(q);
                    break;
                }
            }
            h *= 0.5;
        }
        let q = match accepted {
            Some(q) => q,
            None => {
                if let Some(c) = critical_ahead(field, &p, &jet, &t, 4.0 * opts.min_step.max(h)) {
                    pts.push(c);
                    return (pts, TraceEnd::CriticalPoint { x: c.x, y: c.y }, None);
                }
                return (pts, TraceEnd::Stalled, None);
            }
        };
        if !opts.window.contains(&q) {
            return (pts, TraceEnd::WindowExit, None);
        }
        if field.distance_to_sigma(&q) < 0.5 * h {
            return (pts, TraceEnd::BranchCut, None);
        }
        arc += (q - p).norm();
        prev_t = Some(t);
        pts.push(q);
        p = q;
    }
}

/// Trace the nodal curve through `seed` in both directions.
///
/// Closed curves are returned with `closed = true`. Open arcs report how each
/// end terminated; an arc ending at a nodal critical point has that point as
/// its final vertex.
pub fn trace_nodal(field: &HelmholtzField, seed: Point, opts: &TraceOptions) -> Result<NodalTrace> {
    if !(opts.step > 0.0) || !(opts.min_step > 0.0) || opts.min_step > opts.step {
        return Err(Error::InvalidParameter("need 0 < min_step <= step".into()));
    }
    let j = field.jet(&seed)?;
    let amp = field.amplitude_scale().max(1e-300);
    if j.grad.norm() < 1e-8 * amp * field.k() {
        return Err(Error::SeedNotOnCurve { x: seed.x, y: seed.y });
    }
    let start = newton_to_level(field, seed, opts.value_tol * amp, 10.0 * opts.step)
        .ok_or(Error::SeedNotOnCurve { x: seed.x, y: seed.y })?;
    let (fwd, fend, gap) = march(field, start, 1.0, opts, true);
    let (vertices, start_end, closed) = if fend == TraceEnd::Closed {
        (fwd, TraceEnd::Closed, true)
    } else {
        let (bwd, bend, _) = march(field, start, -1.0, opts, false);
        let mut v: Vec<Point> = bwd.into_iter().skip(1).rev().collect();
        v.extend(fwd);
        (v, bend, false)
    };
    let mut curve = if closed { PlanarCurve::closed(vertices) } else { PlanarCurve::open(vertices) };
    let mut max_abs: f64 = 0.0;
    for p in &curve.vertices {
        let jt = field.jet_unchecked(p);
        max_abs = max_abs.max(jt.value.abs());
        curve.values.push(jt.value);
        curve.grad_norms.push(jt.grad.norm());
    }
    let sigma_distance = field.sigma().iter().map(|r| curve.distance_to_ray(r)).fold(f64::INFINITY, f64::min);
    Ok(NodalTrace { curve, start_end, finish_end: fend, closure_gap: gap, max_abs_value: max_abs, sigma_distance })
}

/// Find a point where `v` changes sign on the segment `[a, b]` (first change
/// among `n` samples, refined by bisection).
pub fn seed_on_segment(field: &HelmholtzField, a: Point, b: Point, n: usize) -> Option<Point> {
    let n = n.max(2);
    let at = |s: f64| a + s * (b - a);
    let f = |s: f64| field.jet(&at(s)).map(|j| j.value).unwrap_or(f64::NAN);
    let mut s0 = 0.0;
    let mut f0 = f(0.0);
    for i in 1..=n {
        let s1 = i as f64 / n as f64;
        let f1 = f(s1);
        if f0.is_finite() && f1.is_finite() && (f0 > 0.0) != (f1 > 0.0) {
            let s = crate::bessel::bisect(f, s0, s1);
            return Some(at(s));
        }
        s0 = s1;
        f0 = f1;
    }
    None
}

// ---------------------------------------------------------------------------
// Critical points

/// A nodal critical point with its vanishing order and branch directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodalCriticalPoint {
    pub point: Point,
    pub value: f64,
    pub grad_norm: f64,
    /// Vanishing order `N` (`None` if no derivative up to order 4 is significant).
    pub order: Option<usize>,
    /// Phase `theta0` with leading term `|C| r^N cos(N theta - theta0)`.
    pub theta0: f64,
    /// Predicted branch directions `(pi/2 + kappa pi + theta0) / N` reduced to `[0, pi)`, sorted.
    pub branch_directions: Vec<f64>,
    /// Leading derivatives `d^N v / dx^(N-j) dy^j`, `j = 0..=N`.
    pub leading: Vec<f64>,
}

fn hess_at(field: &HelmholtzField, p: &Point) -> Matrix2<f64> {
    field.jet_unchecked(p).hess
}

/// Derivatives of order `n` (2, 3 or 4) at `p`: `d^n v / dx^(n-j) dy^j`, `j = 0..=n`.
pub fn derivative_tensor(field: &HelmholtzField, p: &Point, n: usize) -> Vec<f64> {
    let k = field.k();
    let h = 2e-3 / k;
    let ex = Vector2::new(1.0, 0.0);
    let ey = Vector2::new(0.0, 1.0);
    match n {
        2 => {
            let hs = hess_at(field, p);
            vec![hs[(0, 0)], hs[(0, 1)], hs[(1, 1)]]
        }
        3 => {
            let d1 = |e: &Vector2<f64>, s: f64| (hess_at(field, &(p + s * e)) - hess_at(field, &(p - s * e))) / (2.0 * s);
            let rich = |e: &Vector2<f64>| (4.0 * d1(e, h / 2.0) - d1(e, h)) / 3.0;
            let hx = rich(&ex);
            let hy = rich(&ey);
            vec![
                hx[(0, 0)],
                0.5 * (hx[(0, 1)] + hy[(0, 0)]),
                0.5 * (hx[(1, 1)] + hy[(0, 1)]),
                hy[(1, 1)],
            ]
        }
        4 => {
            let h0 = hess_at(field, p);
            let d2 = |e: &Vector2<f64>, s: f64| (hess_at(field, &(p + s * e)) - 2.0 * h0 + hess_at(field, &(p - s * e))) / (s * s);
            let rich = |e: &Vector2<f64>| (4.0 * d2(e, h / 2.0) - d2(e, h)) / 3.0;
            let hxx = rich(&ex);
            let hyy = rich(&ey);
            vec![hxx[(0, 0)], hxx[(0, 1)], 0.5 * (hxx[(1, 1)] + hyy[(0, 0)]), hyy[(0, 1)], hyy[(1, 1)]]
        }
        _ => panic!("derivative_tensor supports orders 2..=4"),
    }
}

fn binom(n: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Leading homogeneous polynomial `p_N(cos t, sin t)`.
pub fn leading_polynomial(leading: &[f64], t: f64) -> f64 {
    let n = leading.len() - 1;
    let (s, c) = t.sin_cos();
    (0..=n).map(|j| binom(n, j) * leading[j] * c.powi((n - j) as i32) * s.powi(j as i32)).sum::<f64>() / factorial(n)
}

/// Classify a critical point: vanishing order, phase and branch directions.
pub fn classify_critical(field: &HelmholtzField, p: Point) -> NodalCriticalPoint {
    let j = field.jet_unchecked(&p);
    let amp = field.amplitude_scale().max(1e-300);
    let k = field.k();
    let mut order = None;
    let mut leading = Vec::new();
    for n in 2..=4 {
        let d = derivative_tensor(field, &p, n);
        let m = d.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if m > 1e-6 * amp * k.powi(n as i32) {
            order = Some(n);
            leading = d;
            break;
        }
    }
    let (theta0, dirs) = match order {
        Some(n) => {
            let f = factorial(n);
            let c = num_complex::Complex64::new(leading[0] / f, -leading[1] / f);
            let theta0 = -c.arg();
            let mut dirs: Vec<f64> = (0..n)
                .map(|kappa| crate::geometry::wrap((PI / 2.0 + kappa as f64 * PI + theta0) / n as f64, PI))
                .collect();
            dirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (theta0, dirs)
        }
        None => (0.0, Vec::new()),
    };
    NodalCriticalPoint { point: p, value: j.value, grad_norm: j.grad.norm(), order, theta0, branch_directions: dirs, leading }
}

/// Nodal critical points (`v = 0`, `grad v = 0`) inside `window`.
///
/// Candidates are local minima of `|v| + |grad v| / k` on a screening grid,
/// refined by Newton's method on `grad v`.
pub fn find_critical_points(field: &HelmholtzField, window: &Rect) -> Result<Vec<NodalCriticalPoint>> {
    if !window.is_valid() {
        return Err(Error::InvalidParameter("window must have positive extent".into()));
    }
    let amp = field.amplitude_scale().max(1e-300);
    let k = field.k();
    let mut out: Vec<NodalCriticalPoint> = Vec::new();
    for p in stationary_candidates(field, window, true) {
        let c = match newton_critical(field, p, 0.5 / k + 0.1) {
            Some(c) => c,
            None => continue,
        };
        if !window.contains(&c) || field.distance_to_sigma(&c) < 1e-8 {
            continue;
        }
        let j = field.jet_unchecked(&c);
        if j.value.abs() > 1e-8 * amp || j.grad.norm() > 1e-7 * amp * k {
            continue;
        }
        if out.iter().any(|o| (o.point - c).norm() < 1e-6) {
            continue;
        }
        out.push(classify_critical(field, c));
    }
    out.sort_by(|a, b| (a.point.x, a.point.y).partial_cmp(&(b.point.x, b.point.y)).unwrap());
    Ok(out)
}

/// Grid local minima of `|grad v|` (plus `|v|` when `nodal`), as Newton seeds.
pub fn stationary_candidates(field: &HelmholtzField, window: &Rect, nodal: bool) -> Vec<Point> {
    let k = field.k();
    let amp = field.amplitude_scale().max(1e-300);
    let target = (0.15 / k).min(window.width().max(window.height()) / 40.0);
    let nx = ((window.width() / target).ceil() as usize).clamp(8, 600);
    let ny = ((window.height() / target).ceil() as usize).clamp(8, 600);
    let at = |i: usize, j: usize| {
        Point::new(window.xmin + window.width() * i as f64 / nx as f64, window.ymin + window.height() * j as f64 / ny as f64)
    };
    let mut s = vec![f64::INFINITY; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            let p = at(i, j);
            if let Ok(jt) = field.jet(&p) {
                let base = jt.grad.norm() / (k * amp);
                s[j * (nx + 1) + i] = if nodal { base + jt.value.abs() / amp } else { base };
            }
        }
    }
    let mut cands = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let v = s[j * (nx + 1) + i];
            if !v.is_finite() || v > 0.5 {
                continue;
            }
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a > nx as i64 || b > ny as i64 {
                        continue;
                    }
                    if s[b as usize * (nx + 1) + a as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                cands.push(at(i, j));
            }
        }
    }
    cands
}

/// Result of comparing measured nodal branch angles with the `pi / N` lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CornerAngleReport {
    pub order: usize,
    /// Zeros of the leading polynomial on `[0, pi)`.
    pub measured: Vec<f64>,
    pub predicted: Vec<f64>,
    /// Maximum distance of a pairwise angle from the nearest multiple of `pi / N`.
    pub lattice_deviation: f64,
    /// Maximum distance between measured and predicted directions (mod `pi`).
    pub prediction_deviation: f64,
    /// Pairwise angles as `(i, j, kappa)` with angle ~ `kappa pi / N`.
    pub pairs: Vec<(usize, usize, i64)>,
}

fn angle_mod_pi_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Zeros on `[0, pi)` of `t -> f(t)` for a function with `f(t + pi) = +-f(t)`.
fn zeros_on_half_circle(f: &dyn Fn(f64) -> f64, samples: usize) -> Vec<f64> {
    let t0 = -0.5 * PI / samples as f64;
    let mut out = Vec::new();
    let mut a = t0;
    let mut fa = f(a);
    for i in 1..=samples {
        let b = t0 + PI * i as f64 / samples as f64;
        let fb = f(b);
        if (fa > 0.0) != (fb > 0.0) {
            out.push(crate::geometry::wrap(crate::bessel::bisect(f, a, b), PI));
        }
        a = b;
        fa = fb;
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

/// Check that the nodal branches at a critical point meet at multiples of `pi / N`.
pub fn corner_angle_check(cp: &NodalCriticalPoint) -> Result<CornerAngleReport> {
    let n = cp.order.ok_or_else(|| Error::AssertionFailure("vanishing order not resolved".into()))?;
    let lead = cp.leading.clone();
    let measured = zeros_on_half_circle(&|t| leading_polynomial(&lead, t), 3600);
    if measured.len() != n {
        return Err(Error::AssertionFailure(format!("found {} nodal directions, expected {}", measured.len(), n)));
    }
    let report = lattice_report(n, measured, cp.branch_directions.clone());
    if report.lattice_deviation > 1e-6 {
        return Err(Error::AssertionFailure(format!("branch angles deviate from the pi/{n} lattice by {}", report.lattice_deviation)));
    }
    Ok(report)
}

fn lattice_report(n: usize, measured: Vec<f64>, predicted: Vec<f64>) -> CornerAngleReport {
    let unit = PI / n as f64;
    let mut dev: f64 = 0.0;
    let mut pairs = Vec::new();
    for i in 0..measured.len() {
        for j in (i + 1)..measured.len() {
            let d = measured[j] - measured[i];
            let kappa = (d / unit).round();
            dev = dev.max((d - kappa * unit).abs());
            pairs.push((i, j, kappa as i64));
        }
    }
    let pred_dev = measured
        .iter()
        .map(|m| predicted.iter().map(|p| angle_mod_pi_distance(*m, *p)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    CornerAngleReport { order: n, measured, predicted, lattice_deviation: dev, prediction_deviation: pred_dev, pairs }
}

/// Nodal directions at `p` measured from zeros of `v` on small circles around
/// `p`, extrapolated to zero radius (Neville on radii `r0 / 2^m`).
pub fn measure_branch_directions(field: &HelmholtzField, p: &Point, order: usize, r0: f64) -> Vec<f64> {
    let levels = 5;
    let radii: Vec<f64> = (0..levels).map(|m| r0 / 2f64.powi(m)).collect();
    let mut per_level: Vec<Vec<f64>> = Vec::new();
    for &r in &radii {
        let f = |t: f64| field.jet_unchecked(&(p + r * Vector2::new(t.cos(), t.sin()))).value;
        // Zeros on the full circle, folded to [0, pi) by pairing t and t + pi.
        let full_a = zeros_on_half_circle(&f, 2000);
        let full_b = zeros_on_half_circle(&|t: f64| f(t + PI), 2000);
        if full_a.len() != order || full_b.len() != order {
            return Vec::new();
        }
        let mut dirs: Vec<f64> = full_a.iter().zip(&full_b).map(|(a, b)| {
            // Average the two opposite branches on a common branch of the angle.
            let mut b = *b;
            if b - a > PI / 2.0 {
                b -= PI;
            } else if a - b > PI / 2.0 {
                b += PI;
            }
            0.5 * (a + b)
        }).collect();
        dirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        per_level.push(dirs);
    }
    // Match directions across levels to the coarsest ordering, then extrapolate.
    let mut out = Vec::new();
    for i in 0..order {
        let mut vals = vec![per_level[0][i]];
        for lvl in per_level.iter().skip(1) {
            let prev = *vals.last().unwrap();
            let best = lvl.iter().copied().min_by(|a, b| {
                angle_mod_pi_distance(*a, prev).partial_cmp(&angle_mod_pi_distance(*b, prev)).unwrap()
            }).unwrap();
            let mut b = best;
            while b - prev > PI / 2.0 {
                b -= PI;
            }
            while prev - b > PI / 2.0 {
                b += PI;
            }
            vals.push(b);
        }
        out.push(crate::geometry::wrap(neville_at_zero(&radii, &vals), PI));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Value at 0 of the polynomial interpolating `(x_i, y_i)`.
pub fn neville_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..(n - m) {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

/// Lattice report for directions measured on small circles.
pub fn circle_angle_check(field: &HelmholtzField, cp: &NodalCriticalPoint, r0: f64) -> Result<CornerAngleReport> {
    let n = cp.order.ok_or_else(|| Error::AssertionFailure("vanishing order not resolved".into()))?;
    let measured = measure_branch_directions(field, &cp.point, n, r0);
    if measured.len() != n {
        return Err(Error::AssertionFailure(format!("found {} nodal directions on small circles, expected {}", measured.len(), n)));
    }
    Ok(lattice_report(n, measured, cp.branch_directions.clone()))
}

// ---------------------------------------------------------------------------
// Domains

/// A Dirichlet (nodal) domain with a counter-clockwise boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletDomain {
    pub boundary: PlanarCurve,
    pub area: f64,
}

/// Chain nodal arcs (or take a single closed curve) into a simple closed
/// counter-clockwise boundary. Junctions with a turn above `1e-3` rad are
/// tagged as corners.
pub fn assemble_dirichlet_domain(arcs: &[PlanarCurve], join_tol: f64) -> Result<DirichletDomain> {
    for a in arcs {
        if a.len() < 2 {
            return Err(Error::DegenerateCurve("arc with fewer than two vertices".into()));
        }
    }
    let mut boundary = assemble_loop(arcs, join_tol, 1e-3).map_err(|e| match e {
        Error::DomainNotClosed { gap } => Error::NotClosed { gap },
        other => other,
    })?;
    if boundary.len() < 3 {
        return Err(Error::DegenerateCurve("boundary has fewer than three vertices".into()));
    }
    if let Some(p) = boundary.self_intersection() {
        return Err(Error::SelfIntersecting { x: p.x, y: p.y });
    }
    if boundary.signed_area() < 0.0 {
        boundary = boundary.reversed();
    }
    let area = boundary.signed_area();
    Ok(DirichletDomain { boundary, area })
}
