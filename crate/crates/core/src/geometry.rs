//! Planar geometry: points, rectangles, rays and polyline curves.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Rotation by `theta` (counter-clockwise).
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `p` rotated by +90 degrees.
pub fn perp(p: &Point) -> Point {
    Point::new(-p.y, p.x)
}

/// Angle of `p` in `(-pi, pi]`.
pub fn angle(p: &Point) -> f64 {
    p.y.atan2(p.x)
}

/// Reduce an angle to `[0, period)`.
pub fn wrap(theta: f64, period: f64) -> f64 {
    let r = theta.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Axis-aligned rectangle `[xmin, xmax] x [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Rect { xmin, xmax, ymin, ymax }
    }

    /// Square of half-width `r` centred at the origin.
    pub fn centered(r: f64) -> Self {
        Rect::new(-r, r, -r, r)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))
    }

    pub fn expand(&self, m: f64) -> Self {
        Rect::new(self.xmin - m, self.xmax + m, self.ymin - m, self.ymax + m)
    }

    pub fn is_valid(&self) -> bool {
        self.xmin.is_finite()
            && self.xmax.is_finite()
            && self.ymin.is_finite()
            && self.ymax.is_finite()
            && self.xmin < self.xmax
            && self.ymin < self.ymax
    }

    /// Bounding box of a point set.
    pub fn bounding(points: &[Point]) -> Self {
        let mut r = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            r.xmin = r.xmin.min(p.x);
            r.xmax = r.xmax.max(p.x);
            r.ymin = r.ymin.min(p.y);
            r.ymax = r.ymax.max(p.y);
        }
        r
    }
}

/// Closed half-line `{origin + t dir : t >= 0}` with unit `dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Point,
    pub dir: Point,
}

impl Ray {
    pub fn new(origin: Point, dir: Point) -> Self {
        Ray { origin, dir: dir.normalize() }
    }

    pub fn distance(&self, p: &Point) -> f64 {
        let d = p - self.origin;
        let t = d.dot(&self.dir);
        if t <= 0.0 {
            d.norm()
        } else {
            (d - t * self.dir).norm()
        }
    }

    pub fn distance_to_segment(&self, a: &Point, b: &Point) -> f64 {
        // The ray is truncated far beyond the segment, then segment-segment distance.
        let far = (a - self.origin).norm().max((b - self.origin).norm()) + 1.0;
        segment_distance(&self.origin, &(self.origin + far * self.dir), a, b)
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / l2).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Proper crossing of segments `[a, b]` and `[c, d]` (touching endpoints excluded).
pub fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Distance between segments `[a, b]` and `[c, d]`.
pub fn segment_distance(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Polyline with optional closure, corner tags and per-vertex field metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarCurve {
    pub vertices: Vec<Point>,
    pub closed: bool,
    /// Indices of vertices where the boundary is not smooth.
    pub corner_tags: Vec<usize>,
    /// Field value at each vertex (empty when not recorded).
    pub values: Vec<f64>,
    /// Gradient norm at each vertex (empty when not recorded).
    pub grad_norms: Vec<f64>,
}

impl PlanarCurve {
    pub fn open(vertices: Vec<Point>) -> Self {
        PlanarCurve { vertices, closed: false, corner_tags: Vec::new(), values: Vec::new(), grad_norms: Vec::new() }
    }

    pub fn closed(vertices: Vec<Point>) -> Self {
        PlanarCurve { closed: true, ..PlanarCurve::open(vertices) }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_corner(&self, i: usize) -> bool {
        self.corner_tags.contains(&i)
    }

    /// Number of segments (including the closing one for closed curves).
    pub fn segment_count(&self) -> usize {
        let n = self.vertices.len();
        if n < 2 {
            0
        } else if self.closed {
            n
        } else {
            n - 1
        }
    }

    pub fn segment(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn arc_length(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                (b - a).norm()
            })
            .sum()
    }

    pub fn max_segment(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                (b - a).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Shoelace signed area (positive for counter-clockwise), closing implicitly.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            s += a.x * b.y - b.x * a.y;
        }
        0.5 * s
    }

    /// Winding number of the (implicitly closed) polygon around `p`.
    pub fn winding_number(&self, p: &Point) -> i32 {
        let n = self.vertices.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = self.vertices[i] - p;
            let b = self.vertices[(i + 1) % n] - p;
            total += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        }
        (total / std::f64::consts::TAU).round() as i32
    }

    /// Even-odd point-in-polygon test for the implicitly closed polygon.
    pub fn contains(&self, p: &Point) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// First proper self-intersection between non-adjacent segments, if any.
    pub fn self_intersection(&self) -> Option<Point> {
        self.self_intersections(1).into_iter().next()
    }

    /// Up to `limit` proper self-intersections (midpoints of the first crossing segment).
    pub fn self_intersections(&self, limit: usize) -> Vec<Point> {
        let mut out = Vec::new();
        let m = self.segment_count();
        let n = self.vertices.len();
        let boxes: Vec<Rect> = (0..m)
            .map(|i| {
                let (a, b) = self.segment(i);
                Rect::bounding(&[a, b])
            })
            .collect();
        for i in 0..m {
            for j in (i + 2)..m {
                if self.closed && i == 0 && j == n - 1 {
                    continue;
                }
                let (bi, bj) = (&boxes[i], &boxes[j]);
                if bi.xmax < bj.xmin || bj.xmax < bi.xmin || bi.ymax < bj.ymin || bj.ymax < bi.ymin {
                    continue;
                }
                let (a, b) = self.segment(i);
                let (c, d) = self.segment(j);
                if segments_cross(&a, &b, &c, &d) {
                    out.push(0.5 * (a + b));
                    if out.len() >= limit {
                        return out;
                    }
                }
            }
        }
        out
    }

    /// Reverse vertex order, keeping corner tags and metadata consistent.
    pub fn reversed(&self) -> PlanarCurve {
        let n = self.vertices.len();
        let mut out = self.clone();
        out.vertices.reverse();
        out.values.reverse();
        out.grad_norms.reverse();
        out.corner_tags = self.corner_tags.iter().map(|&i| n - 1 - i).collect();
        out.corner_tags.sort_unstable();
        out
    }

    /// Minimum distance between the polyline and a ray.
    pub fn distance_to_ray(&self, ray: &Ray) -> f64 {
        if self.vertices.len() == 1 {
            return ray.distance(&self.vertices[0]);
        }
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                ray.distance_to_segment(&a, &b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance from `p` to the polyline.
    pub fn distance_to_point(&self, p: &Point) -> f64 {
        if self.vertices.len() == 1 {
            return (p - self.vertices[0]).norm();
        }
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                point_segment_distance(p, &a, &b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Stencil of vertex indices around `i` for derivative estimation.
    ///
    /// `side` = 0 gives a centred stencil that stops at corners and open ends,
    /// `side` = 1 a forward one-sided stencil, `side` = -1 a backward one.
    fn stencil(&self, i: usize, half: usize, side: i32) -> Vec<usize> {
        let n = self.vertices.len();
        let step = |j: usize, fwd: bool| -> Option<usize> {
            if fwd {
                if j + 1 < n {
                    Some(j + 1)
                } else if self.closed {
                    Some(0)
                } else {
                    None
                }
            } else if j > 0 {
                Some(j - 1)
            } else if self.closed {
                Some(n - 1)
            } else {
                None
            }
        };
        let collect = |fwd: bool, max: usize| -> Vec<usize> {
            let mut out = Vec::new();
            let mut j = i;
            while out.len() < max {
                match step(j, fwd) {
                    Some(nj) if nj != i => {
                        out.push(nj);
                        if self.is_corner(nj) {
                            break;
                        }
                        j = nj;
                    }
                    _ => break,
                }
            }
            out
        };
        let total = 2 * half;
        let (back, fwd) = match side {
            1 => (Vec::new(), collect(true, total)),
            -1 => (collect(false, total), Vec::new()),
            _ => {
                let b = collect(false, total);
                let f = collect(true, total);
                let nb = b.len().min(half.max(total.saturating_sub(f.len())));
                let nf = f.len().min(total - nb);
                (b[..nb].to_vec(), f[..nf].to_vec())
            }
        };
        let mut idx: Vec<usize> = back.into_iter().rev().collect();
        idx.push(i);
        idx.extend(fwd);
        idx
    }

    /// Unit tangents at vertex `i` from a local polynomial fit in chord length.
    ///
    /// Regular vertices yield one tangent; corner vertices yield the incoming
    /// and outgoing one-sided tangents, in that order.
    pub fn tangents_at(&self, i: usize) -> Vec<Point> {
        let sides: Vec<i32> = if self.is_corner(i) { vec![-1, 1] } else { vec![0] };
        let mut out = Vec::new();
        for side in sides {
            let idx = self.stencil(i, 3, side);
            if idx.len() < 2 {
                continue;
            }
            let pts: Vec<Point> = idx.iter().map(|&j| self.vertices[j]).collect();
            let centre = idx.iter().position(|&j| j == i).unwrap();
            if let Some(t) = graph_tangent(&pts, centre) {
                out.push(t);
                continue;
            }
            let mut s = vec![0.0; pts.len()];
            for m in 1..pts.len() {
                s[m] = s[m - 1] + (pts[m] - pts[m - 1]).norm();
            }
            let w = lagrange_derivative_weights(&s, s[centre]);
            let mut t = Point::zeros();
            for (wm, p) in w.iter().zip(&pts) {
                t += *wm * p;
            }
            let nrm = t.norm();
            if nrm > 0.0 {
                out.push(t / nrm);
            }
        }
        out
    }

    /// Point on the curve at arc distance `r` (Euclidean) from vertex `i`, walking
    /// forward (`fwd`) or backward. Returns `None` if the curve ends first.
    pub fn point_at_radius(&self, i: usize, r: f64, fwd: bool) -> Option<Point> {
        let n = self.vertices.len();
        let p0 = self.vertices[i];
        let mut j = i;
        for _ in 0..n {
            let nj = if fwd {
                if j + 1 < n {
                    j + 1
                } else if self.closed {
                    0
                } else {
                    return None;
                }
            } else if j > 0 {
                j - 1
            } else if self.closed {
                n - 1
            } else {
                return None;
            };
            let a = self.vertices[j];
            let b = self.vertices[nj];
            if (b - p0).norm() >= r {
                // Solve |a + t (b - a) - p0| = r for t in [0, 1].
                let d = b - a;
                let f = a - p0;
                let qa = d.norm_squared();
                let qb = 2.0 * f.dot(&d);
                let qc = f.norm_squared() - r * r;
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                let t = ((-qb + disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0);
                return Some(a + t * d);
            }
            j = nj;
        }
        None
    }

    /// One JSON object per vertex, newline separated.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.vertices.iter().enumerate() {
            let mut obj = serde_json::Map::new();
            obj.insert("i".into(), i.into());
            obj.insert("x".into(), round_sig(p.x).into());
            obj.insert("y".into(), round_sig(p.y).into());
            if let Some(v) = self.values.get(i) {
                obj.insert("value".into(), round_sig(*v).into());
            }
            if let Some(g) = self.grad_norms.get(i) {
                obj.insert("grad_norm".into(), round_sig(*g).into());
            }
            obj.insert("corner".into(), self.is_corner(i).into());
            s.push_str(&serde_json::Value::Object(obj).to_string());
            s.push('\n');
        }
        s
    }
}

/// Round to 15 significant digits so that JSON output is reproducible.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.14e}", x).parse().unwrap_or(x)
}

/// Tangent at `pts[centre]` from interpolating the stencil as a graph over
/// the chord joining its end points. Independent of how the vertices are
/// spaced along the curve; `None` if the stencil is not a graph.
fn graph_tangent(pts: &[Point], centre: usize) -> Option<Point> {
    let chord = pts[pts.len() - 1] - pts[0];
    let len = chord.norm();
    if len == 0.0 {
        return None;
    }
    let e = chord / len;
    let o = pts[centre];
    let xs: Vec<f64> = pts.iter().map(|p| (p - o).dot(&e)).collect();
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return None;
    }
    let ys: Vec<f64> = pts.iter().map(|p| e.x * (p.y - o.y) - e.y * (p.x - o.x)).collect();
    let w = lagrange_derivative_weights(&xs, 0.0);
    let slope: f64 = w.iter().zip(&ys).map(|(a, b)| a * b).sum();
    let t = e + slope * Point::new(-e.y, e.x);
    Some(t / t.norm())
}

/// Radical inverse of `i` in `base` (the Halton sequence).
pub fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

/// The first `n` points of the 2-3 Halton sequence mapped into `rect`.
pub fn halton_points(rect: &Rect, n: usize) -> Vec<Point> {
    (1..=n)
        .map(|i| Point::new(rect.xmin + rect.width() * radical_inverse(i, 2), rect.ymin + rect.height() * radical_inverse(i, 3)))
        .collect()
}

/// Weights `w` with `sum_j w_j f(s_j) = p'(s0)` for the interpolating polynomial `p`.
pub fn lagrange_derivative_weights(s: &[f64], s0: f64) -> Vec<f64> {
    let n = s.len();
    let mut w = vec![0.0; n];
    for j in 0..n {
        let mut acc = 0.0;
        for m in 0..n {
            if m == j {
                continue;
            }
            let mut prod = 1.0 / (s[j] - s[m]);
            for l in 0..n {
                if l != j && l != m {
                    prod *= (s0 - s[l]) / (s[j] - s[l]);
                }
            }
            acc += prod;
        }
        w[j] = acc;
    }
    w
}

/// Render polylines (and marker points) as a standalone SVG document.
pub fn curves_to_svg(curves: &[PlanarCurve], markers: &[Point], window: Option<Rect>) -> String {
    let all: Vec<Point> = curves.iter().flat_map(|c| c.vertices.iter().copied()).chain(markers.iter().copied()).collect();
    let bb = window.unwrap_or_else(|| {
        let b = Rect::bounding(&all);
        let m = 0.05 * b.width().max(b.height()).max(1e-9);
        b.expand(m)
    });
    let size = 600.0;
    let scale = size / bb.width().max(bb.height());
    let tx = |p: &Point| ((p.x - bb.xmin) * scale, (bb.ymax - p.y) * scale);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\">\n",
        bb.width() * scale,
        bb.height() * scale
    );
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    for (ci, c) in curves.iter().enumerate() {
        let pts: Vec<String> = c
            .vertices
            .iter()
            .map(|p| {
                let (x, y) = tx(p);
                format!("{:.3},{:.3}", x, y)
            })
            .collect();
        let tag = if c.closed { "polygon" } else { "polyline" };
        s.push_str(&format!(
            "  <{} fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            tag,
            colors[ci % colors.len()],
            pts.join(" ")
        ));
        for &k in &c.corner_tags {
            let (x, y) = tx(&c.vertices[k]);
            s.push_str(&format!("  <circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"black\"/>\n", x, y));
        }
    }
    for m in markers {
        let (x, y) = tx(m);
        s.push_str(&format!("  <circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"#d62728\"/>\n", x, y));
    }
    s.push_str("</svg>\n");
    s
}

/// Join open arcs end to end into a single closed loop.
///
/// Arcs may be used in either orientation. Junctions whose incoming and
/// outgoing directions differ by more than `corner_angle` radians are tagged
/// as corners. Duplicate junction vertices are merged.
pub fn assemble_loop(arcs: &[PlanarCurve], join_tol: f64, corner_angle: f64) -> Result<PlanarCurve> {
    if arcs.is_empty() {
        return Err(Error::DegenerateCurve("no arcs to assemble".into()));
    }
    if arcs.len() == 1 && arcs[0].closed {
        return Ok(arcs[0].clone());
    }
    let mut used = vec![false; arcs.len()];
    let mut verts: Vec<Point> = arcs[0].vertices.clone();
    let mut values = arcs[0].values.clone();
    let mut grads = arcs[0].grad_norms.clone();
    let mut corners: Vec<usize> = arcs[0].corner_tags.clone();
    let mut junctions = Vec::new();
    used[0] = true;
    for _ in 1..arcs.len() {
        let end = *verts.last().unwrap();
        let mut best: Option<(usize, bool, f64)> = None;
        for (j, arc) in arcs.iter().enumerate() {
            if used[j] || arc.vertices.is_empty() {
                continue;
            }
            let ds = (arc.vertices[0] - end).norm();
            let de = (arc.vertices[arc.len() - 1] - end).norm();
            for (d, rev) in [(ds, false), (de, true)] {
                if d <= join_tol && best.map_or(true, |b| d < b.2) {
                    best = Some((j, rev, d));
                }
            }
        }
        let (j, rev, gap) = best.ok_or(Error::DomainNotClosed {
            gap: arcs
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .flat_map(|(_, a)| [(a.vertices[0] - end).norm(), (a.vertices[a.len() - 1] - end).norm()])
                .fold(f64::INFINITY, f64::min),
        })?;
        let _ = gap;
        used[j] = true;
        let arc = if rev { arcs[j].reversed() } else { arcs[j].clone() };
        let offset = verts.len() - 1;
        junctions.push(offset);
        verts.extend_from_slice(&arc.vertices[1..]);
        if values.len() == offset + 1 && arc.values.len() == arc.len() {
            values.extend_from_slice(&arc.values[1..]);
        }
        if grads.len() == offset + 1 && arc.grad_norms.len() == arc.len() {
            grads.extend_from_slice(&arc.grad_norms[1..]);
        }
        corners.extend(arc.corner_tags.iter().filter(|&&c| c > 0).map(|c| c + offset));
    }
    let gap = (verts[verts.len() - 1] - verts[0]).norm();
    if gap > join_tol {
        return Err(Error::DomainNotClosed { gap });
    }
    verts.pop();
    if values.len() == verts.len() + 1 {
        values.pop();
    }
    if grads.len() == verts.len() + 1 {
        grads.pop();
    }
    junctions.push(0);
    let n = verts.len();
    for &jn in &junctions {
        if n < 3 {
            break;
        }
        let p = verts[jn % n];
        let a = verts[(jn + n - 1) % n];
        let b = verts[(jn + 1) % n];
        let tin = (p - a).normalize();
        let tout = (b - p).normalize();
        let turn = (tin.x * tout.y - tin.y * tout.x).atan2(tin.dot(&tout)).abs();
        if turn > corner_angle {
            corners.push(jn % n);
        }
    }
    corners.retain(|&c| c < n);
    corners.sort_unstable();
    corners.dedup();
    let mut curve = PlanarCurve::closed(verts);
    curve.corner_tags = corners;
    if values.len() == n {
        curve.values = values;
    }
    if grads.len() == n {
        curve.grad_norms = grads;
    }
    Ok(curve)
}
