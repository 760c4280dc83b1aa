//! Gradient flow `X' = grad v`, its stationary points and orbits, and
//! Neumann domains bounded by orbits.
//!
//! Orbits are integrated in arc length, `dX/ds = +-grad v / |grad v|` with
//! `dt/ds = 1 / |grad v|`, by an adaptive Dormand-Prince 5(4) scheme. This
//! stays regular up to the stationary point where the orbit ends.

use std::f64::consts::PI;

use nalgebra::{SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::HelmholtzField;
use crate::geometry::{assemble_loop, PlanarCurve, Point, Rect};
use crate::nodal::{newton_critical, stationary_candidates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationaryKind {
    /// Local maximum of `v`: attracts the forward flow.
    Sink,
    /// Local minimum of `v`: attracts the backward flow.
    Source,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub point: Point,
    pub kind: StationaryKind,
    /// Hessian eigenvalues, ascending.
    pub eigenvalues: [f64; 2],
    /// Unit eigenvectors matching `eigenvalues`.
    pub eigenvectors: [Point; 2],
    pub value: f64,
}

/// Classify a stationary point from the Hessian at `p`.
pub fn classify_stationary(field: &HelmholtzField, p: Point) -> StationaryPoint {
    let j = field.jet_unchecked(&p);
    let eig = SymmetricEigen::new(j.hess);
    let (i0, i1) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let l = [eig.eigenvalues[i0], eig.eigenvalues[i1]];
    let e = [eig.eigenvectors.column(i0).into_owned(), eig.eigenvectors.column(i1).into_owned()];
    let scale = 1e-9 * field.amplitude_scale() * field.k() * field.k();
    let kind = if l[0].abs() < scale || l[1].abs() < scale {
        StationaryKind::Degenerate
    } else if l[0] > 0.0 {
        StationaryKind::Source
    } else if l[1] < 0.0 {
        StationaryKind::Sink
    } else {
        StationaryKind::Saddle
    };
    StationaryPoint { point: p, kind, eigenvalues: l, eigenvectors: e, value: j.value }
}

/// Stationary points of the gradient flow inside `window`, sorted by position.
pub fn find_stationary_points(field: &HelmholtzField, window: &Rect) -> Result<Vec<StationaryPoint>> {
    if !window.is_valid() {
        return Err(Error::InvalidParameter("window must have positive extent".into()));
    }
    let k = field.k();
    let amp = field.amplitude_scale().max(1e-300);
    let mut out: Vec<StationaryPoint> = Vec::new();
    for c in stationary_candidates(field, window, false) {
        let p = match newton_critical(field, c, 0.5 / k + 0.1) {
            Some(p) => p,
            None => continue,
        };
        if !window.contains(&p) || field.distance_to_sigma(&p) < 1e-8 {
            continue;
        }
        if field.jet_unchecked(&p).grad.norm() > 1e-9 * amp * k {
            continue;
        }
        if out.iter().any(|o| (o.point - p).norm() < 1e-7) {
            continue;
        }
        out.push(classify_stationary(field, p));
    }
    out.sort_by(|a, b| (a.point.x, a.point.y).partial_cmp(&(b.point.x, b.point.y)).unwrap());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    /// `X' = grad v` (increasing `v`).
    Forward,
    /// `X' = -grad v` (decreasing `v`).
    Backward,
}

impl FlowDirection {
    fn sign(self) -> f64 {
        match self {
            FlowDirection::Forward => 1.0,
            FlowDirection::Backward => -1.0,
        }
    }
}

/// How an orbit end terminated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OrbitEnd {
    /// The integration start point.
    Start,
    /// Converged to a stationary point (the point is the end vertex).
    Stationary(StationaryPoint),
    WindowExit,
    BranchCut,
    /// Returned to the start point.
    Periodic,
    MaxTime,
    MaxSteps,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitOptions {
    pub window: Rect,
    /// Maximum arc-length step (and vertex spacing).
    pub ds: f64,
    pub rtol: f64,
    pub max_time: f64,
    pub max_steps: usize,
    /// Gradient norm below which the nearby stationary point is located.
    pub switch_grad: f64,
    /// Distance at which the orbit is snapped onto the stationary point.
    pub snap: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            window: Rect::centered(10.0),
            ds: 2e-3,
            rtol: 1e-12,
            max_time: 1e4,
            max_steps: 400_000,
            switch_grad: 1e-4,
            snap: 1e-6,
        }
    }
}

/// An orbit as a polyline with time stamps and end classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Orbit {
    /// Vertices with field values and gradient norms recorded.
    pub curve: PlanarCurve,
    /// Flow time at each vertex (`Forward` time; negative before the start).
    pub times: Vec<f64>,
    pub direction: FlowDirection,
    /// Termination at the first vertex.
    pub head: OrbitEnd,
    /// Termination at the last vertex.
    pub tail: OrbitEnd,
}

impl Orbit {
    pub fn vertices(&self) -> &[Point] {
        &self.curve.vertices
    }

    /// One JSON object per vertex: `{"t", "x", "y", "grad_norm"}`.
    pub fn to_jsonl(&self) -> String {
        use crate::geometry::round_sig;
        let mut s = String::new();
        for (i, p) in self.curve.vertices.iter().enumerate() {
            let t = self.times[i];
            let t = if t.is_finite() { serde_json::json!(round_sig(t)) } else { serde_json::json!(if t > 0.0 { "inf" } else { "-inf" }) };
            let g = self.curve.grad_norms.get(i).copied().unwrap_or(f64::NAN);
            s.push_str(&serde_json::json!({"t": t, "x": round_sig(p.x), "y": round_sig(p.y), "grad_norm": round_sig(g)}).to_string());
            s.push('\n');
        }
        s
    }

    /// Unit secant from the end vertex to the orbit point at distance `r`
    /// (`at_tail` selects the last vertex, otherwise the first).
    pub fn limit_secant(&self, at_tail: bool, r: f64) -> Option<Point> {
        let n = self.curve.len();
        let (i, fwd) = if at_tail { (n - 1, false) } else { (0, true) };
        let q = self.curve.point_at_radius(i, r, fwd)?;
        Some((q - self.curve.vertices[i]).normalize())
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Right-hand side in arc length: `(dX/ds, dt/ds)`.
fn rhs(field: &HelmholtzField, x: &Point, sign: f64) -> Option<(Vector2<f64>, f64)> {
    let g = field.jet(x).ok()?.grad;
    let n = g.norm();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some((sign * g / n, 1.0 / n))
}

struct Step {
    x: Point,
    t: f64,
    err: f64,
}

fn dp_step(field: &HelmholtzField, x: &Point, t: f64, h: f64, sign: f64, rtol: f64) -> Option<Step> {
    let mut kx = [Vector2::zeros(); 7];
    let mut kt = [0.0; 7];
    for s in 0..7 {
        let mut xs = *x;
        for (j, a) in A[s].iter().enumerate().take(s) {
            xs += h * a * kx[j];
        }
        let (fx, ft) = rhs(field, &xs, sign)?;
        kx[s] = fx;
        kt[s] = ft;
        let _ = C[s];
    }
    let mut xn = *x;
    let mut tn = t;
    let mut ex = Vector2::zeros();
    for s in 0..7 {
        xn += h * B[s] * kx[s];
        tn += h * B[s] * kt[s];
        ex += h * E[s] * kx[s];
    }
    let atol = 1e-13;
    let err = (ex.x.abs() / (atol + rtol * xn.x.abs().max(x.x.abs()))).max(ex.y.abs() / (atol + rtol * xn.y.abs().max(x.y.abs())));
    Some(Step { x: xn, t: tn, err })
}

/// Integrate one orbit from `start` in `direction`.
pub fn trace_orbit(field: &HelmholtzField, start: Point, direction: FlowDirection, opts: &OrbitOptions) -> Result<Orbit> {
    if !(opts.ds > 0.0) || !(opts.rtol > 0.0) {
        return Err(Error::InvalidParameter("ds and rtol must be positive".into()));
    }
    let j0 = field.jet(&start)?;
    let amp = field.amplitude_scale().max(1e-300);
    if j0.grad.norm() < 1e-12 * amp * field.k() {
        return Err(Error::StartIsStationary { x: start.x, y: start.y });
    }
    let sign = direction.sign();
    let mut pts = vec![start];
    let mut times = vec![0.0];
    let mut x = start;
    let mut t = 0.0;
    let mut h = opts.ds;
    let mut arc = 0.0;
    let mut target: Option<Point> = None;
    let mut target_dist = f64::INFINITY;
    let tail;
    loop {
        if pts.len() >= opts.max_steps {
            tail = OrbitEnd::MaxSteps;
            break;
        }
        if let Some(p) = target {
            let d = (x - p).norm();
            if d < opts.snap {
                pts.push(p);
                times.push(f64::INFINITY);
                tail = OrbitEnd::Stationary(classify_stationary(field, p));
                break;
            }
            if d > 1.5 * target_dist + 1e-12 && d > 10.0 * opts.snap {
                // Passing by rather than converging.
                target = None;
            } else {
                target_dist = target_dist.min(d);
                // Never step past the stationary point.
                h = h.min(0.5 * d);
            }
        }
        let step = loop {
            match dp_step(field, &x, t, h, sign, opts.rtol) {
                Some(s) if s.err <= 1.0 => break Some(s),
                Some(s) => {
                    h *= (0.9 * s.err.powf(-0.2)).clamp(0.1, 0.5);
                }
                None => h *= 0.25,
            }
            if h < 1e-14 {
                break None;
            }
        };
        let s = match step {
            Some(s) => s,
            None => {
                tail = if field.distance_to_sigma(&x) < 1e-6 { OrbitEnd::BranchCut } else { OrbitEnd::MaxSteps };
                break;
            }
        };
        let used = h;
        h = (used * (0.9 * s.err.max(1e-30).powf(-0.2)).clamp(0.2, 5.0)).min(opts.ds);
        // Resolve turning: at most 0.05 rad of tangent rotation per step.
        let js = field.jet_unchecked(&s.x);
        let gn = js.grad.norm();
        if gn > 0.0 {
            let tt = js.grad / gn;
            let kappa = (Vector2::new(-tt.y, tt.x).dot(&(js.hess * tt)) / gn).abs();
            if kappa > 0.0 {
                h = h.min(0.05 / kappa);
            }
        }
        if !opts.window.contains(&s.x) {
            tail = OrbitEnd::WindowExit;
            break;
        }
        if field.distance_to_sigma(&s.x) < 1e-9 {
            tail = OrbitEnd::BranchCut;
            break;
        }
        arc += (s.x - x).norm();
        x = s.x;
        t = s.t;
        pts.push(x);
        times.push(sign * t);
        if t > opts.max_time {
            tail = OrbitEnd::MaxTime;
            break;
        }
        if arc > 10.0 * opts.ds && (x - start).norm() < 0.5 * opts.ds {
            tail = OrbitEnd::Periodic;
            break;
        }
        if target.is_none() {
            let g = field.jet_unchecked(&x).grad.norm();
            if g < opts.switch_grad * amp.max(1.0) {
                if let Some(p) = newton_critical(field, x, 0.1) {
                    if field.jet_unchecked(&p).grad.norm() < 1e-10 * amp * field.k() {
                        target = Some(p);
                        target_dist = (x - p).norm();
                    }
                }
            }
        }
    }
    let mut curve = PlanarCurve::open(pts);
    for p in &curve.vertices {
        let j = field.jet_unchecked(p);
        curve.values.push(j.value);
        curve.grad_norms.push(j.grad.norm());
    }
    Ok(Orbit { curve, times, direction, head: OrbitEnd::Start, tail })
}

/// The complete orbit through `start`: backward to its alpha limit, then
/// forward to its omega limit. Times are forward flow times.
pub fn trace_full_orbit(field: &HelmholtzField, start: Point, opts: &OrbitOptions) -> Result<Orbit> {
    let fwd = trace_orbit(field, start, FlowDirection::Forward, opts)?;
    if fwd.tail == OrbitEnd::Periodic {
        let mut o = fwd;
        o.curve.closed = true;
        o.head = OrbitEnd::Periodic;
        return Ok(o);
    }
    let bwd = trace_orbit(field, start, FlowDirection::Backward, opts)?;
    let mut verts: Vec<Point> = bwd.curve.vertices.iter().skip(1).rev().copied().collect();
    let mut times: Vec<f64> = bwd.times.iter().skip(1).rev().copied().collect();
    let mut values: Vec<f64> = bwd.curve.values.iter().skip(1).rev().copied().collect();
    let mut grads: Vec<f64> = bwd.curve.grad_norms.iter().skip(1).rev().copied().collect();
    for t in times.iter_mut() {
        if t.is_infinite() {
            *t = f64::NEG_INFINITY;
        }
    }
    verts.extend(fwd.curve.vertices.iter());
    times.extend(fwd.times.iter());
    values.extend(fwd.curve.values.iter());
    grads.extend(fwd.curve.grad_norms.iter());
    let mut curve = PlanarCurve::open(verts);
    curve.values = values;
    curve.grad_norms = grads;
    Ok(Orbit { curve, times, direction: FlowDirection::Forward, head: bwd.tail, tail: fwd.tail })
}

/// Normal-derivative report for a candidate Neumann boundary.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FluxReport {
    /// `max |grad v . nu|` over vertices (both one-sided normals at corners).
    pub max_flux: f64,
    /// Vertex where the maximum occurs.
    pub worst_vertex: usize,
    /// `max |grad v|` over vertices, for scale.
    pub max_grad: f64,
}

/// Maximum normal derivative of `v` along `curve`, with normals from local
/// high-order tangent fits.
pub fn neumann_flux_check(field: &HelmholtzField, curve: &PlanarCurve) -> Result<FluxReport> {
    if curve.len() < 3 {
        return Err(Error::DegenerateCurve("fewer than three vertices".into()));
    }
    for i in 0..curve.segment_count() {
        let (a, b) = curve.segment(i);
        if (b - a).norm() == 0.0 {
            return Err(Error::DegenerateCurve(format!("repeated vertex at index {i}")));
        }
    }
    let mut rep = FluxReport { max_flux: 0.0, worst_vertex: 0, max_grad: 0.0 };
    for i in 0..curve.len() {
        let g = field.jet(&curve.vertices[i])?.grad;
        rep.max_grad = rep.max_grad.max(g.norm());
        for t in curve.tangents_at(i) {
            let flux = (g.x * t.y - g.y * t.x).abs();
            if flux > rep.max_flux {
                rep.max_flux = flux;
                rep.worst_vertex = i;
            }
        }
    }
    Ok(rep)
}

/// A Neumann domain: boundary made of orbits, with corner apertures and cusps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeumannDomain {
    /// Closed counter-clockwise boundary.
    pub boundary: PlanarCurve,
    /// `(vertex, interior angle)` at each corner and stationary-point
    /// junction, from secants at radius `1e-3`.
    pub corner_apertures: Vec<(usize, f64)>,
    /// Corners whose aperture is within 0.05 rad of 0 or `2 pi`.
    pub cusp_tags: Vec<usize>,
    pub area: f64,
}

/// Interior angle at vertex `i` of a counter-clockwise closed curve, measured
/// with secants to the curve points at distance `r`.
pub fn interior_angle(curve: &PlanarCurve, i: usize, r: f64) -> Option<f64> {
    let c = curve.vertices[i];
    let a_in = curve.point_at_radius(i, r, false)? - c;
    let a_out = curve.point_at_radius(i, r, true)? - c;
    let ang = (a_out.x * a_in.y - a_out.y * a_in.x).atan2(a_out.dot(&a_in));
    Some(ang.rem_euclid(2.0 * PI))
}

/// Chain orbits and separatrices into a closed domain boundary.
pub fn assemble_neumann_domain(arcs: &[PlanarCurve], join_tol: f64) -> Result<NeumannDomain> {
    let mut boundary = assemble_loop(arcs, join_tol, 1e-3)?;
    if boundary.len() < 3 {
        return Err(Error::DegenerateCurve("boundary has fewer than three vertices".into()));
    }
    if boundary.signed_area() < 0.0 {
        boundary = boundary.reversed();
    }
    // Junctions at stationary points are reported even when the two arcs
    // meet at a straight angle.
    let gmax = boundary.grad_norms.iter().copied().fold(0.0, f64::max);
    let mut junctions = boundary.corner_tags.clone();
    if boundary.grad_norms.len() == boundary.len() {
        junctions.extend((0..boundary.len()).filter(|&i| boundary.grad_norms[i] <= 1e-9 * gmax));
    }
    junctions.sort_unstable();
    junctions.dedup();
    let mut corner_apertures = Vec::new();
    let mut cusp_tags = Vec::new();
    for &c in &junctions {
        if let Some(a) = interior_angle(&boundary, c, 1e-3) {
            corner_apertures.push((c, a));
            if a < 0.05 || a > 2.0 * PI - 0.05 {
                cusp_tags.push(c);
            }
        }
    }
    // Inside a cusp the two arcs approach each other faster than any power of
    // the distance, so crossings there are below floating-point resolution.
    let near_cusp = |p: &Point| cusp_tags.iter().any(|&c| (boundary.vertices[c] - p).norm() < 1e-3);
    if let Some(p) = boundary.self_intersections(usize::MAX).into_iter().find(|p| !near_cusp(p)) {
        return Err(Error::SelfIntersecting { x: p.x, y: p.y });
    }
    let area = boundary.signed_area();
    Ok(NeumannDomain { boundary, corner_apertures, cusp_tags, area })
}

/// Closed-form example fields for the gradient flow.
pub mod examples {
    use super::*;
    use crate::fields::{FieldSpec, TrigFactor, TrigFn, TrigTerm, WaveTerm};

    fn cos(freq: f64) -> TrigFactor {
        TrigFactor { func: TrigFn::Cos, freq, phase: 0.0 }
    }

    /// `v = -(cos x + cos y)`, `k = 1`.
    pub fn cos_x_plus_cos_y() -> HelmholtzField {
        HelmholtzField::from_spec(&FieldSpec::Trig {
            k: 1.0,
            terms: vec![
                TrigTerm { weight: -1.0, x: cos(1.0), y: cos(0.0) },
                TrigTerm { weight: -1.0, x: cos(0.0), y: cos(1.0) },
            ],
        })
        .expect("valid field")
    }

    /// `v = cos x cos 2y`, `k = sqrt 5`.
    pub fn cos_x_cos_2y() -> HelmholtzField {
        HelmholtzField::from_spec(&FieldSpec::Trig { k: 5f64.sqrt(), terms: vec![TrigTerm { weight: 1.0, x: cos(1.0), y: cos(2.0) }] })
            .expect("valid field")
    }

    /// Antisymmetric pair of order-7/2 Bessel terms centred at `(-+cos(pi/7), 0)`.
    pub fn bessel_pair() -> HelmholtzField {
        let a = (PI / 7.0).cos();
        HelmholtzField::from_spec(&FieldSpec::BesselSum {
            k: None,
            terms: vec![
                WaveTerm { mu: 3.5, a, theta: 0.0, phi: 0.0, b: 1.0 },
                WaveTerm { mu: 3.5, a, theta: PI, phi: 0.0, b: -1.0 },
            ],
        })
        .expect("valid field")
    }

    /// Start point of the `-(cos x + cos y)` orbit through `(0, 0)` with
    /// constant `delta` (`tan(y/2) = delta tan(x/2)`) in the quadrant given by signs.
    pub fn cosxy_orbit_point(delta: f64, sx: f64, sy: f64) -> Point {
        Point::new(sx * PI / 2.0, sy * 2.0 * delta.atan())
    }

    /// Start point of the `cos x cos 2y` orbit with `sin 2y = delta sin^4 x`
    /// in `(0, pi) x (0, pi/4)`.
    pub fn cusp_orbit_point(delta: f64) -> Point {
        Point::new(PI / 2.0, 0.5 * delta.asin())
    }

    /// Limit direction at the origin of the `-(cos x + cos y)` orbit with
    /// constant `delta` in quadrant `q` (1 to 4, counter-clockwise).
    pub fn cosxy_limit_angle(delta: f64, q: u8) -> f64 {
        let a = delta.atan();
        match q {
            1 => a,
            2 => PI - a,
            3 => PI + a,
            _ => 2.0 * PI - a,
        }
    }

    fn quadrant_signs(q: u8) -> (f64, f64) {
        match q {
            1 => (1.0, 1.0),
            2 => (-1.0, 1.0),
            3 => (-1.0, -1.0),
            _ => (1.0, -1.0),
        }
    }

    /// Domain of `-(cos x + cos y)` bounded by the orbit `(delta_a, qa)`, the
    /// orbit `(delta_b, qb)` and the separatrix edges of `[-pi, pi]^2` swept
    /// counter-clockwise from quadrant `qa` to quadrant `qb`. Returns the
    /// domain and the boundary index of the origin.
    pub fn cosxy_corner_domain(delta_a: f64, qa: u8, delta_b: f64, qb: u8, opts: &OrbitOptions) -> Result<(NeumannDomain, usize)> {
        if !(1..=4).contains(&qa) || !(1..=4).contains(&qb) || (qa == qb && delta_b <= delta_a) {
            return Err(Error::InvalidParameter("quadrants must be 1..=4, and delta_b > delta_a within one quadrant".into()));
        }
        let f = cos_x_plus_cos_y();
        let orbit = |d: f64, q: u8| {
            let (sx, sy) = quadrant_signs(q);
            trace_full_orbit(&f, cosxy_orbit_point(d, sx, sy), opts).map(|o| o.curve)
        };
        let mut arcs = vec![orbit(delta_a, qa)?, orbit(delta_b, qb)?];
        // Separatrix edges in counter-clockwise order starting after the
        // corner of quadrant 1: (pi, pi) -> (0, pi) -> (-pi, pi) -> ...
        let edge_mids = [
            Point::new(PI / 2.0, PI),
            Point::new(-PI / 2.0, PI),
            Point::new(-PI, PI / 2.0),
            Point::new(-PI, -PI / 2.0),
            Point::new(-PI / 2.0, -PI),
            Point::new(PI / 2.0, -PI),
            Point::new(PI, -PI / 2.0),
            Point::new(PI, PI / 2.0),
        ];
        if qa != qb {
            let steps = (qb as usize + 4 - qa as usize) % 4;
            for e in 0..2 * steps {
                arcs.push(trace_full_orbit(&f, edge_mids[(2 * (qa as usize - 1) + e) % 8], opts)?.curve);
            }
        }
        let d = assemble_neumann_domain(&arcs, 1e-9)?;
        let origin = d
            .boundary
            .vertices
            .iter()
            .position(|p| p.norm() < 1e-9)
            .ok_or_else(|| Error::DegenerateCurve("origin is not a boundary vertex".into()))?;
        Ok((d, origin))
    }

    /// Orbit pair `(delta_a, qa, delta_b, qb)` whose corner domain has
    /// aperture `theta` at the origin, for `theta` in `(0, 2 pi)`.
    pub fn cosxy_aperture_config(theta: f64) -> (f64, u8, f64, u8) {
        if theta < PI / 2.0 - 0.1 {
            return ((PI / 4.0 - theta / 2.0).tan(), 1, (PI / 4.0 + theta / 2.0).tan(), 1);
        }
        // Keep both limit directions away from the axes.
        let off_axis = |d: f64| {
            let phi = d.rem_euclid(PI / 2.0);
            d < 2.0 * PI && phi > 0.02 && phi < PI / 2.0 - 0.02
        };
        let half_gap = 0.5 * (2.0 * PI - theta);
        let a = [0.3, 0.6, half_gap, 0.5 * half_gap].into_iter().find(|&a| a < PI / 2.0 && off_axis(a + theta)).unwrap_or(half_gap);
        let dir_b = a + theta;
        let q = ((dir_b / (PI / 2.0)).floor() as u8 % 4) + 1;
        let phi = dir_b - (q - 1) as f64 * PI / 2.0;
        let db = if q % 2 == 1 { phi.tan() } else { (PI / 2.0 - phi).tan() };
        (a.tan(), 1, db, q)
    }

    /// Root `t0` in `(0, a)` of `J'_mu(k(a + t)) + J'_mu(k(a - t)) = 0` for
    /// the order-7/2 pair with `a = cos(pi/7)`.
    pub fn bessel_pair_t0() -> f64 {
        let mu = 3.5;
        let a = (PI / 7.0).cos();
        let k = crate::bessel::bessel_first_zero(mu).expect("zero exists");
        let g = |t: f64| crate::bessel::bessel_j_jet(mu, k * (a + t)).1 + crate::bessel::bessel_j_jet(mu, k * (a - t)).1;
        let n = 400;
        let h = a / n as f64;
        for i in 1..n - 1 {
            let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
            if g(lo) * g(hi) <= 0.0 {
                return crate::bessel::bisect(g, lo, hi);
            }
        }
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;

    fn opts() -> OrbitOptions {
        OrbitOptions { window: Rect::centered(4.0), ..Default::default() }
    }

    #[test]
    fn cosxy_stationary_points_classified() {
        let f = cos_x_plus_cos_y();
        let sp = find_stationary_points(&f, &Rect::new(-0.5, 3.5, -0.5, 3.5)).unwrap();
        let kind_at = |x: f64, y: f64| sp.iter().find(|s| (s.point - Point::new(x, y)).norm() < 1e-9).map(|s| s.kind);
        assert_eq!(kind_at(0.0, 0.0), Some(StationaryKind::Source));
        assert_eq!(kind_at(PI, PI), Some(StationaryKind::Sink));
        assert_eq!(kind_at(PI, 0.0), Some(StationaryKind::Saddle));
        assert_eq!(kind_at(0.0, PI), Some(StationaryKind::Saddle));
        assert_eq!(sp.len(), 4);
    }

    #[test]
    fn cosxy_orbit_matches_closed_form() {
        let f = cos_x_plus_cos_y();
        for delta in [0.2, 0.5, 1.0, 2.0] {
            let o = trace_full_orbit(&f, cosxy_orbit_point(delta, 1.0, 1.0), &opts()).unwrap();
            assert!(matches!(o.head, OrbitEnd::Stationary(s) if s.point.norm() < 1e-12));
            assert!(matches!(o.tail, OrbitEnd::Stationary(s) if (s.point - Point::new(PI, PI)).norm() < 1e-12));
            for p in o.vertices() {
                let lhs = (p.y / 2.0).tan();
                let rhs = delta * (p.x / 2.0).tan();
                if p.x < PI - 1e-3 {
                    assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()), "delta {delta}: {lhs} vs {rhs}");
                }
            }
            // v increases along the forward orbit.
            for w in o.curve.values.windows(2) {
                assert!(w[1] >= w[0] - 1e-14);
            }
            let flux = neumann_flux_check(&f, &o.curve).unwrap();
            assert!(flux.max_flux < 1e-8, "flux {}", flux.max_flux);
        }
    }

    #[test]
    fn nodal_line_fails_flux_check() {
        let f = HelmholtzField::from_spec(&crate::fields::FieldSpec::Trig {
            k: 2f64.sqrt(),
            terms: vec![crate::fields::TrigTerm {
                weight: 1.0,
                x: crate::fields::TrigFactor { func: crate::fields::TrigFn::Sin, freq: 1.0, phase: 0.0 },
                y: crate::fields::TrigFactor { func: crate::fields::TrigFn::Sin, freq: 1.0, phase: 0.0 },
            }],
        })
        .unwrap();
        let c = PlanarCurve::open((0..=50).map(|i| Point::new(0.3 + 0.05 * i as f64, 0.0)).collect());
        assert!(neumann_flux_check(&f, &c).unwrap().max_flux > 0.1);
        assert!(matches!(neumann_flux_check(&f, &PlanarCurve::open(vec![Point::zeros()])), Err(Error::DegenerateCurve(_))));
    }

    #[test]
    fn stationary_start_is_rejected() {
        let f = cos_x_plus_cos_y();
        assert!(matches!(
            trace_orbit(&f, Point::new(PI, 0.0), FlowDirection::Forward, &opts()),
            Err(Error::StartIsStationary { .. })
        ));
    }

    #[test]
    fn lens_domain_between_two_orbits() {
        let f = cos_x_plus_cos_y();
        let a = trace_full_orbit(&f, cosxy_orbit_point(0.5, 1.0, 1.0), &opts()).unwrap();
        let b = trace_full_orbit(&f, cosxy_orbit_point(2.0, 1.0, 1.0), &opts()).unwrap();
        let d = assemble_neumann_domain(&[a.curve, b.curve], 1e-9).unwrap();
        assert_eq!(d.corner_apertures.len(), 2);
        assert!(d.cusp_tags.is_empty());
        // Isotropic source/sink: the aperture is the angle between the limit directions.
        let expected = 2f64.atan() - 0.5f64.atan();
        for (_, ap) in &d.corner_apertures {
            assert!((ap - expected).abs() < 0.01, "aperture {ap} vs {expected}");
        }
        let flux = neumann_flux_check(&f, &d.boundary).unwrap();
        assert!(flux.max_flux < 1e-8, "flux {}", flux.max_flux);
    }
}
