//! The contour `T` of a menu and its deviation from `S`.

use super::{instance_constants, s_of};
use crate::error::{Error, Result};
use crate::model::{Menu, MenuEntry};
use crate::poly::bisect;
use crate::revenue::{regions, Rect};

/// One linear piece of a contour over `[x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Segment {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn slope(&self) -> f64 {
        if self.x1 > self.x0 {
            (self.y1 - self.y0) / (self.x1 - self.x0)
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.y0 + self.slope() * (x - self.x0)
    }

    pub fn len(&self) -> f64 {
        self.x1 - self.x0
    }
}

/// Piecewise-linear function on `[0, x']`, possibly discontinuous at
/// breakpoints. Segments are sorted and tile the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PLContour {
    segments: Vec<Segment>,
}

impl PLContour {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Precondition("contour needs at least one segment".into()));
        }
        for w in segments.windows(2) {
            if (w[0].x1 - w[1].x0).abs() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "segments must tile the domain: gap between {} and {}",
                    w[0].x1, w[1].x0
                )));
            }
        }
        if segments.iter().any(|s| !(s.x1 >= s.x0)) {
            return Err(Error::Precondition("segment with x1 < x0".into()));
        }
        Ok(Self { segments })
    }

    pub fn constant(y: f64) -> Self {
        let xp = instance_constants().x_prime;
        Self { segments: vec![Segment::new(0.0, xp, y, y)] }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Right-continuous evaluation; the last segment is closed on the right.
    pub fn eval(&self, x: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| x < s.x1)
            .unwrap_or_else(|| self.segments.last().expect("nonempty"));
        seg.eval(x)
    }

    /// Largest `|S - T|`, from the per-segment extremes of the concave gap.
    pub fn sup_deviation(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let h = |x: f64| s_of(x) - s.eval(x);
                let xm = argmax_gap(s);
                h(s.x0).abs().max(h(s.x1).abs()).max(h(xm).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Merges neighbours that continue each other on the same line.
    fn merged(self) -> Self {
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in self.segments {
            if s.len() <= 0.0 && !out.is_empty() {
                continue;
            }
            if let Some(last) = out.last_mut() {
                let continuous = (last.y1 - s.y0).abs() <= 1e-12;
                let collinear = (last.slope() - s.slope()).abs() <= 1e-9;
                if continuous && collinear {
                    last.x1 = s.x1;
                    last.y1 = s.y1;
                    continue;
                }
            }
            out.push(s);
        }
        Self { segments: out }
    }
}

/// Where `S - line` peaks on the segment: `S'(x) = slope` solved in closed
/// form, clamped to the segment.
fn argmax_gap(seg: &Segment) -> f64 {
    let alpha = seg.slope();
    let x = if alpha < 0.0 {
        (4.0 - (-2.0 / alpha).sqrt()) / 5.0
    } else {
        f64::NEG_INFINITY
    };
    x.clamp(seg.x0, seg.x1)
}

/// Length of `{x in seg : S(x) - line(x) >= level}`; the gap is concave so
/// the set is an interval around its argmax.
fn superlevel_len(seg: &Segment, level: f64) -> f64 {
    let h = |x: f64| s_of(x) - seg.eval(x) - level;
    let xm = argmax_gap(seg);
    let hm = h(xm);
    if hm < 0.0 {
        return 0.0;
    }
    let left = if h(seg.x0) >= 0.0 { seg.x0 } else { bisect(h, seg.x0, xm, h(seg.x0)) };
    let right = if h(seg.x1) >= 0.0 { seg.x1 } else { bisect(h, xm, seg.x1, hm) };
    (right - left).max(0.0)
}

/// Measure of `{x in [seg.x0, seg.x1] : |S(x) - line(x)| <= delta}`.
pub fn close_measure(seg: &Segment, delta: f64) -> f64 {
    if seg.len() <= 0.0 {
        return 0.0;
    }
    (superlevel_len(seg, -delta) - superlevel_len(seg, delta)).max(0.0)
}

/// Measure of `{x1 in [0, x'] : |S(x1) - T(x1)| > delta}`.
pub fn deviation_measure(t: &PLContour, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::OutOfRange(format!("delta must be positive, got {delta}")));
    }
    Ok(t.segments().iter().map(|s| s.len() - close_measure(s, delta)).sum::<f64>().max(0.0))
}

/// A line `u = c + s x2` in one column; `index` is `None` for the null outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ColumnLine {
    pub c: f64,
    pub s: f64,
    pub index: Option<usize>,
}

/// One piece of the upper envelope on `[lo, hi]` in `x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub line: ColumnLine,
}

pub(crate) fn column_lines(entries: &[MenuEntry], x1: f64) -> Vec<ColumnLine> {
    let mut lines = Vec::with_capacity(entries.len() + 1);
    lines.push(ColumnLine { c: 0.0, s: 0.0, index: None });
    lines.extend(entries.iter().enumerate().map(|(i, e)| ColumnLine {
        c: e.q1() * x1 - e.t(),
        s: e.q2(),
        index: Some(i),
    }));
    lines
}

/// Upper envelope of `lines` over `x2 in [0, 1]`, walked left to right. At
/// every breakpoint the steepest line among those attaining the maximum is
/// taken, so slopes strictly increase from piece to piece.
pub(crate) fn envelope(lines: &[ColumnLine]) -> Vec<Piece> {
    let scale = lines.iter().fold(1.0f64, |m, l| m.max(l.c.abs()));
    let tol = 1e-15 * scale;
    let mut cur = 0;
    for (k, l) in lines.iter().enumerate() {
        let best = lines[cur];
        if l.c > best.c + tol || (l.c >= best.c - tol && l.s > best.s) {
            cur = k;
        }
    }
    let mut pieces = Vec::new();
    let mut x = 0.0;
    loop {
        let now = lines[cur];
        let mut next: Option<(f64, usize)> = None;
        for (j, l) in lines.iter().enumerate() {
            if l.s <= now.s {
                continue;
            }
            let xc = ((now.c - l.c) / (l.s - now.s)).max(x);
            let better = match next {
                None => true,
                Some((bx, bj)) => xc < bx || (xc == bx && l.s > lines[bj].s),
            };
            if better {
                next = Some((xc, j));
            }
        }
        match next {
            Some((xc, j)) if xc < 1.0 => {
                if xc > x {
                    pieces.push(Piece { lo: x, hi: xc, line: now });
                }
                x = xc;
                cur = j;
            }
            _ => {
                pieces.push(Piece { lo: x, hi: 1.0, line: now });
                return pieces;
            }
        }
    }
}

/// How `T` is determined on an open interval of columns.
enum Threshold {
    Constant(f64),
    /// Crossing of the lines of two entries (`None` is the null outcome).
    Cross(Option<usize>, Option<usize>),
}

fn threshold_at(entries: &[MenuEntry], x1: f64) -> Threshold {
    let pieces = envelope(&column_lines(entries, x1));
    match pieces.iter().position(|p| p.line.s > 0.5) {
        None => Threshold::Constant(1.0),
        Some(0) => Threshold::Constant(0.0),
        Some(k) => Threshold::Cross(pieces[k - 1].line.index, pieces[k].line.index),
    }
}

fn line_of(entries: &[MenuEntry], idx: Option<usize>, x1: f64) -> (f64, f64) {
    match idx {
        None => (0.0, 0.0),
        Some(i) => (entries[i].q1() * x1 - entries[i].t(), entries[i].q2()),
    }
}

/// Sorted breakpoints in `[0, x']`: the ends plus every region vertex strictly
/// inside. Between consecutive breakpoints the envelope keeps its structure.
pub(crate) fn region_breakpoints(menu: &Menu, x_prime: f64) -> Vec<f64> {
    let dec = regions(menu, Rect::unit());
    let mut xs = vec![0.0, x_prime];
    for r in &dec.regions {
        xs.extend(r.polygon.vertices().iter().map(|p| p.x).filter(|&x| x > 0.0 && x < x_prime));
    }
    sort_dedup(xs)
}

pub(crate) fn sort_dedup(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
    xs
}

/// The contour `T(x1) = inf {x2 : chosen q2 > 1/2}` on `[0, x']`, exact
/// piecewise-linear, with collinear neighbours merged.
pub fn t_contour(menu: &Menu) -> PLContour {
    let xp = instance_constants().x_prime;
    let entries = menu.entries();
    let xs = region_breakpoints(menu, xp);
    let mut segs = Vec::with_capacity(xs.len());
    for w in xs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = match threshold_at(entries, 0.5 * (a + b)) {
            Threshold::Constant(y) => (y, y),
            Threshold::Cross(k, j) => {
                let at = |x: f64| {
                    let (ck, sk) = line_of(entries, k, x);
                    let (cj, sj) = line_of(entries, j, x);
                    ((ck - cj) / (sj - sk)).clamp(0.0, 1.0)
                };
                (at(a), at(b))
            }
        };
        segs.push(Segment::new(a, b, ya, yb));
    }
    PLContour { segments: segs }.merged()
}
