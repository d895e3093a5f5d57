//! Implicit curves for embedded boundaries and interfaces.

use crate::basis::gauss_legendre;
use crate::error::{Error, Result};
use std::sync::Arc;

pub type SdfFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Region described by a signed distance (negative inside).
#[derive(Clone)]
pub enum Shape {
    /// 1D open interval.
    Interval { lo: f64, hi: f64 },
    /// 1D or 2D half-space {(x - point)·normal < 0}.
    HalfSpace { point: [f64; 2], normal: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
    /// Union of axis-aligned boxes `(lo, hi)`.
    BoxUnion { boxes: Vec<([f64; 2], [f64; 2])> },
    Complement(Box<Shape>),
    /// Generic signed distance (approximately unit gradient near the zero set).
    Custom(SdfFn),
}

impl std::fmt::Debug for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Interval { lo, hi } => write!(f, "Interval({lo}, {hi})"),
            Shape::HalfSpace { point, normal } => write!(f, "HalfSpace({point:?}, {normal:?})"),
            Shape::Circle { center, radius } => write!(f, "Circle({center:?}, {radius})"),
            Shape::BoxUnion { boxes } => write!(f, "BoxUnion({boxes:?})"),
            Shape::Complement(s) => write!(f, "Complement({s:?})"),
            Shape::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// One quadrature point on a curve (2D) or the point itself (1D).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub x: [f64; 2],
    pub normal: [f64; 2],
    pub weight: f64,
}

fn box_sdf(x: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let r = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
    let q = [(x[0] - c[0]).abs() - r[0], (x[1] - c[1]).abs() - r[1]];
    let outside = q[0].max(0.0).hypot(q[1].max(0.0));
    outside + q[0].max(q[1]).min(0.0)
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

impl Shape {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Shape::Circle { center, radius }
    }

    pub fn distance(&self, x: [f64; 2]) -> f64 {
        match self {
            Shape::Interval { lo, hi } => (lo - x[0]).max(x[0] - hi),
            Shape::HalfSpace { point, normal } => {
                let n = norm2(*normal);
                ((x[0] - point[0]) * normal[0] + (x[1] - point[1]) * normal[1]) / n
            }
            Shape::Circle { center, radius } => (x[0] - center[0]).hypot(x[1] - center[1]) - radius,
            Shape::BoxUnion { boxes } => boxes.iter().map(|(lo, hi)| box_sdf(x, *lo, *hi)).fold(f64::INFINITY, f64::min),
            Shape::Complement(s) => -s.distance(x),
            Shape::Custom(f) => f(x),
        }
    }

    /// Outward unit normal (gradient direction of the signed distance).
    pub fn normal(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Shape::Interval { lo, hi } => {
                if (x[0] - lo).abs() < (x[0] - hi).abs() {
                    [-1.0, 0.0]
                } else {
                    [1.0, 0.0]
                }
            }
            Shape::HalfSpace { normal, .. } => {
                let n = norm2(*normal);
                [normal[0] / n, normal[1] / n]
            }
            Shape::Circle { center, .. } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                let n = norm2(d);
                if n == 0.0 {
                    [1.0, 0.0]
                } else {
                    [d[0] / n, d[1] / n]
                }
            }
            Shape::Complement(s) => {
                let n = s.normal(x);
                [-n[0], -n[1]]
            }
            _ => {
                let e = 1e-7;
                let g = [
                    (self.distance([x[0] + e, x[1]]) - self.distance([x[0] - e, x[1]])) / (2.0 * e),
                    (self.distance([x[0], x[1] + e]) - self.distance([x[0], x[1] - e])) / (2.0 * e),
                ];
                let n = norm2(g);
                if n == 0.0 {
                    [1.0, 0.0]
                } else {
                    [g[0] / n, g[1] / n]
                }
            }
        }
    }

    /// Closest point on the zero set.
    pub fn closest_point(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Shape::Interval { lo, hi } => {
                if (x[0] - lo).abs() <= (x[0] - hi).abs() {
                    [*lo, x[1]]
                } else {
                    [*hi, x[1]]
                }
            }
            Shape::HalfSpace { .. } | Shape::Circle { .. } => {
                let d = self.distance(x);
                let n = self.normal(x);
                [x[0] - d * n[0], x[1] - d * n[1]]
            }
            Shape::Complement(s) => s.closest_point(x),
            Shape::BoxUnion { boxes } => {
                let mut best = x;
                let mut bd = f64::INFINITY;
                for (lo, hi) in boxes {
                    let inside = x[0] > lo[0] && x[0] < hi[0] && x[1] > lo[1] && x[1] < hi[1];
                    let mut cands = vec![];
                    if inside {
                        cands.push([lo[0], x[1]]);
                        cands.push([hi[0], x[1]]);
                        cands.push([x[0], lo[1]]);
                        cands.push([x[0], hi[1]]);
                    } else {
                        cands.push([x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])]);
                    }
                    for c in cands {
                        if self.distance(c) < -1e-12 {
                            continue;
                        }
                        let d = (c[0] - x[0]).hypot(c[1] - x[1]);
                        if d < bd {
                            bd = d;
                            best = c;
                        }
                    }
                }
                best
            }
            Shape::Custom(_) => {
                let mut p = x;
                for _ in 0..50 {
                    let d = self.distance(p);
                    let n = self.normal(p);
                    p = [p[0] - d * n[0], p[1] - d * n[1]];
                    if d.abs() < 1e-14 {
                        break;
                    }
                }
                p
            }
        }
    }

    /// Quadrature on the part of the zero set inside the box `[lo, hi]`,
    /// `n` Gauss points per parameter piece. In 1D the trace is the crossing
    /// point(s) with weight 1.
    pub fn trace_in_box(&self, dims: usize, lo: [f64; 2], hi: [f64; 2], n: usize) -> Result<Vec<TracePoint>> {
        if dims == 1 {
            return Ok(self.trace_1d(lo[0], hi[0]));
        }
        let rule = gauss_legendre(n)?;
        let mut out = vec![];
        match self {
            Shape::Circle { center, radius } => {
                let r = *radius;
                let mut cuts = vec![0.0, 2.0 * std::f64::consts::PI];
                for axis in 0..2 {
                    for &edge in &[lo[axis], hi[axis]] {
                        let c = (edge - center[axis]) / r;
                        if c.abs() <= 1.0 {
                            let a = c.acos();
                            for th in [a, -a] {
                                let th = if axis == 0 { th } else { std::f64::consts::FRAC_PI_2 - th };
                                cuts.push(th.rem_euclid(2.0 * std::f64::consts::PI));
                            }
                        }
                    }
                }
                cuts.sort_by(f64::total_cmp);
                cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                for w in cuts.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b - a < 1e-15 {
                        continue;
                    }
                    let mid = 0.5 * (a + b);
                    let p = [center[0] + r * mid.cos(), center[1] + r * mid.sin()];
                    if !inside_box(p, lo, hi) {
                        continue;
                    }
                    let (ts, ws) = rule.mapped(a, b);
                    for (t, w) in ts.into_iter().zip(ws) {
                        out.push(TracePoint {
                            x: [center[0] + r * t.cos(), center[1] + r * t.sin()],
                            normal: [t.cos(), t.sin()],
                            weight: r * w,
                        });
                    }
                }
            }
            Shape::HalfSpace { point, normal } => {
                let nn = norm2(*normal);
                let nu = [normal[0] / nn, normal[1] / nn];
                let dir = [-nu[1], nu[0]];
                if let Some((a, b)) = clip_line(*point, dir, lo, hi) {
                    push_segment(&mut out, &rule, *point, dir, a, b, nu);
                }
            }
            Shape::BoxUnion { boxes } => {
                for (blo, bhi) in boxes {
                    let corners = [[blo[0], blo[1]], [bhi[0], blo[1]], [bhi[0], bhi[1]], [blo[0], bhi[1]]];
                    for e in 0..4 {
                        let p0 = corners[e];
                        let p1 = corners[(e + 1) % 4];
                        let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
                        let dir = [(p1[0] - p0[0]) / len, (p1[1] - p0[1]) / len];
                        let nu = [dir[1], -dir[0]];
                        let Some((a, b)) = clip_line(p0, dir, lo, hi) else { continue };
                        let (a, b) = (a.max(0.0), b.min(len));
                        if b <= a {
                            continue;
                        }
                        // split where the edge enters other boxes
                        let mut cuts = vec![a, b];
                        for (olo, ohi) in boxes {
                            if let Some((c, d)) = clip_line(p0, dir, *olo, *ohi) {
                                cuts.push(c.clamp(a, b));
                                cuts.push(d.clamp(a, b));
                            }
                        }
                        cuts.sort_by(f64::total_cmp);
                        for w in cuts.windows(2) {
                            if w[1] - w[0] < 1e-14 {
                                continue;
                            }
                            let m = 0.5 * (w[0] + w[1]);
                            let pm = [p0[0] + m * dir[0], p0[1] + m * dir[1]];
                            let covered = boxes.iter().any(|(olo, ohi)| box_sdf(pm, *olo, *ohi) < -1e-12);
                            if !covered {
                                push_segment(&mut out, &rule, p0, dir, w[0], w[1], nu);
                            }
                        }
                    }
                }
            }
            Shape::Complement(s) => {
                out = s.trace_in_box(dims, lo, hi, n)?;
                for p in out.iter_mut() {
                    p.normal = [-p.normal[0], -p.normal[1]];
                }
            }
            Shape::Custom(_) | Shape::Interval { .. } => {
                for (a, b) in self.marching_squares(lo, hi, 64) {
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    if len < 1e-15 {
                        continue;
                    }
                    let dir = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                    let (ts, ws) = rule.mapped(0.0, len);
                    for (t, w) in ts.into_iter().zip(ws) {
                        let x = [a[0] + t * dir[0], a[1] + t * dir[1]];
                        out.push(TracePoint { x, normal: self.normal(x), weight: w });
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Patch { node: format!("box {lo:?}-{hi:?}"), reason: "empty trace".into() });
        }
        Ok(out)
    }

    fn trace_1d(&self, lo: f64, hi: f64) -> Vec<TracePoint> {
        let mut pts = vec![];
        let mut push = |x: f64, n: f64| {
            if x >= lo - 1e-14 && x <= hi + 1e-14 {
                pts.push(TracePoint { x: [x, 0.0], normal: [n, 0.0], weight: 1.0 });
            }
        };
        match self {
            Shape::Interval { lo: a, hi: b } => {
                push(*a, -1.0);
                push(*b, 1.0);
            }
            Shape::HalfSpace { point, normal } => push(point[0], normal[0].signum()),
            Shape::Complement(s) => {
                return s.trace_1d(lo, hi).into_iter().map(|p| TracePoint { normal: [-p.normal[0], 0.0], ..p }).collect();
            }
            _ => {
                let m = 256;
                let dx = (hi - lo) / m as f64;
                for i in 0..m {
                    let (a, b) = (lo + i as f64 * dx, lo + (i + 1) as f64 * dx);
                    let (fa, fb) = (self.distance([a, 0.0]), self.distance([b, 0.0]));
                    if fa.signum() != fb.signum() {
                        let x = a - fa * (b - a) / (fb - fa);
                        push(x, if fb > fa { 1.0 } else { -1.0 });
                    }
                }
            }
        }
        pts
    }

    fn marching_squares(&self, lo: [f64; 2], hi: [f64; 2], m: usize) -> Vec<([f64; 2], [f64; 2])> {
        let dx = (hi[0] - lo[0]) / m as f64;
        let dy = (hi[1] - lo[1]) / m as f64;
        let p = |i: usize, j: usize| [lo[0] + i as f64 * dx, lo[1] + j as f64 * dy];
        let f: Vec<f64> = (0..=m).flat_map(|j| (0..=m).map(move |i| (i, j))).map(|(i, j)| self.distance(p(i, j))).collect();
        let at = |i: usize, j: usize| f[j * (m + 1) + i];
        let lerp = |a: [f64; 2], b: [f64; 2], fa: f64, fb: f64| {
            let t = fa / (fa - fb);
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        };
        let mut segs = vec![];
        for j in 0..m {
            for i in 0..m {
                let c = [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)];
                let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
                let mut cross = vec![];
                for e in 0..4 {
                    let (a, b) = (e, (e + 1) % 4);
                    if (v[a] < 0.0) != (v[b] < 0.0) {
                        cross.push(lerp(c[a], c[b], v[a], v[b]));
                    }
                }
                match cross.len() {
                    2 => segs.push((cross[0], cross[1])),
                    4 => {
                        segs.push((cross[0], cross[1]));
                        segs.push((cross[2], cross[3]));
                    }
                    _ => {}
                }
            }
        }
        segs
    }
}

fn inside_box(p: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> bool {
    p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]
}

/// Parameter interval of the line p + s·dir inside the box, if any.
fn clip_line(p: [f64; 2], dir: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> Option<(f64, f64)> {
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::INFINITY;
    for k in 0..2 {
        if dir[k].abs() < 1e-300 {
            if p[k] < lo[k] || p[k] > hi[k] {
                return None;
            }
        } else {
            let s0 = (lo[k] - p[k]) / dir[k];
            let s1 = (hi[k] - p[k]) / dir[k];
            a = a.max(s0.min(s1));
            b = b.min(s0.max(s1));
        }
    }
    (b > a).then_some((a, b))
}

fn push_segment(
    out: &mut Vec<TracePoint>,
    rule: &crate::basis::QuadratureRule,
    p: [f64; 2],
    dir: [f64; 2],
    a: f64,
    b: f64,
    normal: [f64; 2],
) {
    let (ts, ws) = rule.mapped(a, b);
    for (t, w) in ts.into_iter().zip(ws) {
        out.push(TracePoint { x: [p[0] + t * dir[0], p[1] + t * dir[1]], normal, weight: w });
    }
}

/// Physical domain Ω = {boundary < 0} (the whole computational box when no
/// boundary is given) split by an optional interface into Ω⁻ = {interface < 0}
/// and Ω⁺.
#[derive(Clone, Debug, Default)]
pub struct Domain {
    pub boundary: Option<Shape>,
    pub interface: Option<Shape>,
}

impl Domain {
    /// Subdomain containing `x`, or `None` outside Ω. Points within `tol` of a
    /// curve count as interior to Ω⁺.
    pub fn locate(&self, x: [f64; 2], tol: f64) -> Option<crate::mesh::Subdomain> {
        if let Some(b) = &self.boundary {
            if b.distance(x) >= tol {
                return None;
            }
        }
        match &self.interface {
            Some(i) if i.distance(x) <= -tol => Some(crate::mesh::Subdomain::Minus),
            _ => Some(crate::mesh::Subdomain::Plus),
        }
    }
}
