//! Convex polygons, half-plane clipping and exact integration of product
//! polynomial densities over them.

use crate::dist::ProductDistribution;
use crate::poly::Poly;

/// Half-plane incidence tolerance and vertex snapping distance.
pub const CLIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangle `[lo1, hi1] x [lo2, hi2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo1: f64,
    pub lo2: f64,
    pub hi1: f64,
    pub hi2: f64,
}

impl Rect {
    pub const fn new(lo1: f64, lo2: f64, hi1: f64, hi2: f64) -> Self {
        Self { lo1, lo2, hi1, hi2 }
    }

    pub const fn unit() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn of(d: &ProductDistribution) -> Self {
        let (lo1, lo2, hi1, hi2) = d.support();
        Self::new(lo1, lo2, hi1, hi2)
    }

    pub fn area(&self) -> f64 {
        (self.hi1 - self.lo1) * (self.hi2 - self.lo2)
    }
}

/// `a x + b y + c >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }
}

/// Convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        let mut p = Self { vertices };
        p.snap();
        if p.signed_area() < 0.0 {
            p.vertices.reverse();
        }
        p
    }

    pub fn rect(r: Rect) -> Self {
        Self::new(vec![
            Point::new(r.lo1, r.lo2),
            Point::new(r.hi1, r.lo2),
            Point::new(r.hi1, r.hi2),
            Point::new(r.lo1, r.hi2),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            s += p.x * q.y - q.x * p.y;
        }
        0.5 * s
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let a = self.signed_area();
        if n == 0 {
            return Point::new(f64::NAN, f64::NAN);
        }
        if a.abs() < 1e-300 {
            let sx: f64 = self.vertices.iter().map(|p| p.x).sum();
            let sy: f64 = self.vertices.iter().map(|p| p.y).sum();
            return Point::new(sx / n as f64, sy / n as f64);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let w = p.x * q.y - q.x * p.y;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Drops consecutive vertices closer than [`CLIP_TOL`] in both coordinates.
    fn snap(&mut self) {
        let close = |p: &Point, q: &Point| (p.x - q.x).abs() <= CLIP_TOL && (p.y - q.y).abs() <= CLIP_TOL;
        let mut out: Vec<Point> = Vec::with_capacity(self.vertices.len());
        for &p in &self.vertices {
            if out.last().is_none_or(|q| !close(&p, q)) {
                out.push(p);
            }
        }
        while out.len() > 1 && close(&out[0], &out[out.len() - 1]) {
            out.pop();
        }
        self.vertices = out;
    }

    /// Sutherland–Hodgman clip against one half-plane. Vertices within
    /// [`CLIP_TOL`] of the boundary count as inside.
    pub fn clip(&self, h: &HalfPlane) -> Polygon {
        let n = self.vertices.len();
        if n == 0 {
            return Polygon::default();
        }
        let vals: Vec<f64> = self.vertices.iter().map(|&p| h.eval(p)).collect();
        if vals.iter().all(|&v| v >= -CLIP_TOL) {
            return self.clone();
        }
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (p, q) = (self.vertices[i], self.vertices[j]);
            let (vp, vq) = (vals[i], vals[j]);
            let (p_in, q_in) = (vp >= -CLIP_TOL, vq >= -CLIP_TOL);
            if p_in {
                out.push(p);
            }
            if p_in != q_in {
                let s = (vp / (vp - vq)).clamp(0.0, 1.0);
                out.push(Point::new(p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)));
            }
        }
        let mut poly = Polygon { vertices: out };
        poly.snap();
        poly
    }

    /// Strict interior test with margin `eps` from every edge.
    pub fn contains_interior(&self, p: Point, eps: f64) -> bool {
        let n = self.vertices.len();
        n >= 3
            && (0..n).all(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
                let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
                cross > eps * len
            })
    }
}

/// Bivariate polynomial in `(s, t)`; `c[i][j]` multiplies `s^i t^j`.
#[derive(Debug, Clone)]
struct Bivariate {
    c: Vec<Vec<f64>>,
}

impl Bivariate {
    fn constant(v: f64, deg: usize) -> Self {
        let mut c = vec![vec![0.0; deg + 1]; deg + 1];
        c[0][0] = v;
        Self { c }
    }

    /// `p(x0 + a s + b t)` via Horner's rule.
    fn compose(p: &Poly, x0: f64, a: f64, b: f64) -> Self {
        let deg = p.degree();
        let mut acc = Self::constant(0.0, deg);
        for &coef in p.coeffs().iter().rev() {
            let mut next = Self::constant(0.0, deg);
            for i in 0..=deg {
                for j in 0..=deg - i {
                    let v = acc.c[i][j];
                    if v == 0.0 {
                        continue;
                    }
                    next.c[i][j] += v * x0;
                    if i < deg {
                        next.c[i + 1][j] += v * a;
                    }
                    if j < deg {
                        next.c[i][j + 1] += v * b;
                    }
                }
            }
            next.c[0][0] += coef;
            acc = next;
        }
        acc
    }

    fn mul(&self, other: &Self) -> Self {
        let (n, m) = (self.c.len() - 1, other.c.len() - 1);
        let mut out = Self::constant(0.0, n + m);
        for i in 0..=n {
            for j in 0..=n - i {
                let a = self.c[i][j];
                if a == 0.0 {
                    continue;
                }
                for k in 0..=m {
                    for l in 0..=m - k {
                        out.c[i + k][j + l] += a * other.c[k][l];
                    }
                }
            }
        }
        out
    }

    /// Integral over the reference triangle `s, t >= 0, s + t <= 1`, using
    /// `int s^i t^j = i! j! / (i + j + 2)!`.
    fn integrate_reference(&self) -> f64 {
        let deg = self.c.len() - 1;
        let mut total = 0.0;
        for i in 0..=deg {
            for j in 0..=deg - i {
                let v = self.c[i][j];
                if v != 0.0 {
                    total += v * reference_moment(i, j);
                }
            }
        }
        total
    }
}

/// `i! j! / (i + j + 2)!` computed as a running product to stay in range.
fn reference_moment(i: usize, j: usize) -> f64 {
    // i! j! / (i+j+2)! = 1 / ((i+j+2)(i+j+1) C(i+j, i))
    let n = i + j;
    let mut binom = 1.0;
    for k in 0..i.min(j) {
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    1.0 / ((n + 2) as f64 * (n + 1) as f64 * binom)
}

fn triangle_mass(p0: Point, p1: Point, p2: Point, d: &ProductDistribution) -> f64 {
    let (ax, ay) = (p1.x - p0.x, p1.y - p0.y);
    let (bx, by) = (p2.x - p0.x, p2.y - p0.y);
    let det = (ax * by - ay * bx).abs();
    if det == 0.0 {
        return 0.0;
    }
    let f1 = Bivariate::compose(d.m1.density_poly(), p0.x, ax, bx);
    let f2 = Bivariate::compose(d.m2.density_poly(), p0.y, ay, by);
    det * f1.mul(&f2).integrate_reference()
}

/// Exact probability mass of `poly` under the product density, by fan
/// triangulation from the first vertex. The polygon must lie in the support.
pub fn polygon_mass(poly: &Polygon, d: &ProductDistribution) -> f64 {
    let v = poly.vertices();
    if v.len() < 3 {
        return 0.0;
    }
    (1..v.len() - 1)
        .map(|k| triangle_mass(v[0], v[k], v[k + 1], d))
        .sum()
}
