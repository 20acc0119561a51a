//! Piecewise-linear approximation of `S`: the chord–sagitta bound, a greedy
//! approximator and adversarial contour families that probe the claim that
//! few segments cannot stay within `delta` of `S` on half of `[0, x']`.

use crate::duality::{
    close_measure, deviation_measure, instance_constants, PLContour, Segment,
};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordBound {
    /// Chord length with sagitta `2 delta` in a circle of radius `r`.
    pub exact: f64,
    pub bound: f64,
}

/// `(m/2)^2 = (2r - 2delta) 2delta` solved for `m`, and its simplification
/// `4 sqrt(r delta)`.
pub fn chord_bound(r: f64, delta: f64) -> Result<ChordBound> {
    if !(r > 0.0 && delta > 0.0) {
        return Err(Error::OutOfRange(format!("need r > 0 and delta > 0, got r={r}, delta={delta}")));
    }
    if delta > r {
        return Err(Error::OutOfRange(format!("delta = {delta} exceeds r = {r}")));
    }
    Ok(ChordBound {
        exact: (16.0 * r * delta - 16.0 * delta * delta).sqrt(),
        bound: 4.0 * (r * delta).sqrt(),
    })
}

/// Measure of the part of `seg`'s domain where the line is within `delta`
/// of `S`.
pub fn segment_close_measure(seg: &Segment, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::OutOfRange(format!("delta must be positive, got {delta}")));
    }
    Ok(close_measure(seg, delta))
}

fn s(x: f64) -> f64 {
    (2.0 - 3.0 * x) / (4.0 - 5.0 * x)
}

fn s_prime(x: f64) -> f64 {
    -2.0 / (4.0 - 5.0 * x).powi(2)
}

/// Largest vertical gap between `S` and its chord over `[a, b]`.
pub fn sagitta(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let alpha = (s(b) - s(a)) / (b - a);
    let xm = ((4.0 - (-2.0 / alpha).sqrt()) / 5.0).clamp(a, b);
    (s(xm) - (s(a) + alpha * (xm - a))).max(0.0)
}

/// Chord over `[a, b]` lifted by half its sagitta, so `|S - line| <= sag/2`.
fn lifted_chord(a: f64, b: f64) -> Segment {
    let h = 0.5 * sagitta(a, b);
    Segment::new(a, b, s(a) + h, s(b) + h)
}

/// Largest `b` in `(a, end]` whose chord from `a` has sagitta at most `target`.
fn longest_chord(a: f64, end: f64, target: f64) -> f64 {
    if sagitta(a, end) <= target {
        return end;
    }
    let (mut lo, mut hi) = (a, end);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sagitta(a, mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Greedy sup-norm `delta`-approximation of `S` on `[0, x']`: each segment is
/// the lifted chord of the longest interval whose sagitta stays below
/// `2 delta`.
pub fn greedy_pl_approx(delta: f64) -> Result<PLContour> {
    let k = instance_constants();
    if !(delta > 0.0 && delta <= k.delta_max) {
        return Err(Error::OutOfRange(format!(
            "delta must lie in (0, {}], got {delta}",
            k.delta_max
        )));
    }
    // the absolute margin keeps the endpoints inside the band after rounding
    // of `S` (values near 0.5, ulp about 1e-16)
    let target = 2.0 * delta * (1.0 - 1e-9) - 1e-14;
    let mut segs = Vec::new();
    let mut a = 0.0;
    while a < k.x_prime {
        let b = longest_chord(a, k.x_prime, target);
        if b <= a {
            return Err(Error::Audit(format!("greedy approximation stalled at {a}")));
        }
        segs.push(lifted_chord(a, b));
        a = b;
    }
    PLContour::new(segs)
}

/// `x' / (8 sqrt(r delta))`: contours with at most this many segments must
/// stray from `S` by more than `delta` on at least half of `[0, x']`.
pub fn segment_budget(delta: f64) -> f64 {
    let k = instance_constants();
    k.x_prime / (8.0 * (k.r * delta).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropApprox {
    /// The budget is below one segment, so the statement says nothing.
    Vacuous { budget: f64 },
    /// The contour has more segments than the budget allows.
    OutsideBudget { segments: usize, budget: f64 },
    Holds { measure: f64 },
    Violated { measure: f64 },
}

impl PropApprox {
    pub fn is_violation(&self) -> bool {
        matches!(self, PropApprox::Violated { .. })
    }
}

pub fn prop_approx_check(t: &PLContour, delta: f64) -> Result<PropApprox> {
    let k = instance_constants();
    let budget = segment_budget(delta);
    if budget < 1.0 || delta > k.delta_max {
        return Ok(PropApprox::Vacuous { budget });
    }
    if t.len() as f64 > budget {
        return Ok(PropApprox::OutsideBudget { segments: t.len(), budget });
    }
    let measure = deviation_measure(t, delta)?;
    Ok(if measure >= k.x_prime / 2.0 {
        PropApprox::Holds { measure }
    } else {
        PropApprox::Violated { measure }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    /// Random breakpoints; each piece near-tangent to `S` with jittered offset.
    Random,
    /// Greedy segments cut to the budget, the remainder one constant piece.
    GreedyTruncated,
    /// Greedy segments cut to the budget, the last one extended to `x'`.
    GreedyExtended,
    /// Pieces as long as the chord bound allows, each the tangent at its
    /// midpoint lowered by `delta`, started at a range of offsets.
    Osculating,
}

pub const ADVERSARIES: [Adversary; 4] = [
    Adversary::Random,
    Adversary::GreedyTruncated,
    Adversary::GreedyExtended,
    Adversary::Osculating,
];

impl std::fmt::Display for Adversary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Adversary::Random => "random",
            Adversary::GreedyTruncated => "greedy-truncated",
            Adversary::GreedyExtended => "greedy-extended",
            Adversary::Osculating => "osculating",
        })
    }
}

fn tangent_lowered(x0: f64, x1: f64, at: f64, shift: f64) -> Segment {
    let (y, m) = (s(at) + shift, s_prime(at));
    Segment::new(x0, x1, y + m * (x0 - at), y + m * (x1 - at))
}

/// Contours with at most `floor(budget)` segments from one family. Empty when
/// the budget is below one.
pub fn adversarial_contours(kind: Adversary, delta: f64, count: usize, seed: u64) -> Result<Vec<PLContour>> {
    let k = instance_constants();
    let xp = k.x_prime;
    let budget = segment_budget(delta).floor() as usize;
    if budget == 0 {
        return Ok(Vec::new());
    }
    let mut rng = SplitMix64::fork(seed, kind as u64);
    let mut out = Vec::new();
    match kind {
        Adversary::Random => {
            for _ in 0..count {
                let n = 1 + rng.below(budget);
                let mut cuts: Vec<f64> = (1..n).map(|_| rng.uniform(0.0, xp)).collect();
                cuts.sort_by(f64::total_cmp);
                let mut xs = vec![0.0];
                xs.extend(cuts);
                xs.push(xp);
                let segs = xs
                    .windows(2)
                    .map(|w| {
                        let at = rng.uniform(w[0], w[1]);
                        let shift = rng.uniform(-1.5 * delta, 1.5 * delta);
                        if rng.next_f64() < 0.5 {
                            tangent_lowered(w[0], w[1], at, shift)
                        } else {
                            let c = lifted_chord(w[0], w[1]);
                            Segment::new(c.x0, c.x1, c.y0 + shift, c.y1 + shift)
                        }
                    })
                    .collect();
                out.push(PLContour::new(segs)?);
            }
        }
        Adversary::GreedyTruncated | Adversary::GreedyExtended => {
            let greedy = greedy_pl_approx(delta)?;
            let g = greedy.segments();
            if g.len() <= budget {
                out.push(greedy.clone());
            } else {
                let mut segs: Vec<Segment> = g[..budget - 1].to_vec();
                let start = segs.last().map_or(0.0, |s| s.x1);
                if kind == Adversary::GreedyTruncated {
                    let y = s(0.5 * (start + xp));
                    segs.push(Segment::new(start, xp, y, y));
                } else {
                    let last = g[budget - 1];
                    segs.push(Segment::new(start, xp, last.eval(start), last.eval(xp)));
                }
                out.push(PLContour::new(segs)?);
            }
        }
        Adversary::Osculating => {
            let width = chord_bound(k.r, delta)?.exact;
            for j in 0..count.max(1) {
                let offset = width * j as f64 / count.max(1) as f64;
                let mut xs = vec![0.0];
                let mut x = offset;
                while xs.len() < budget && x + width < xp {
                    if x > 0.0 {
                        xs.push(x);
                    }
                    x += width;
                }
                if xs.len() < budget && x < xp && x > 0.0 {
                    xs.push(x);
                }
                xs.push(xp);
                let segs = xs
                    .windows(2)
                    .map(|w| tangent_lowered(w[0], w[1], 0.5 * (w[0] + w[1]), -delta))
                    .collect();
                out.push(PLContour::new(segs)?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaReport {
    pub delta: f64,
    pub segments: usize,
    /// Largest close measure seen, as a fraction of `4 sqrt(r delta)`.
    pub max_ratio: f64,
    pub violations: usize,
}

/// Random lines near tangent to `S` over all of `[0, x']`: none may stay
/// within `delta` of `S` on more than `4 sqrt(r delta)`.
pub fn segment_lemma_check(delta: f64, segments: usize, seed: u64) -> Result<LemmaReport> {
    let k = instance_constants();
    let bound = chord_bound(k.r, delta)?.bound;
    let mut rng = SplitMix64::fork(seed, 0x1e44a);
    let (mut max_ratio, mut violations) = (0.0f64, 0);
    for _ in 0..segments {
        let at = rng.uniform(0.0, k.x_prime);
        let tilt = rng.uniform(-1.0, 1.0) * delta.sqrt();
        let lift = rng.uniform(-delta, delta);
        let (y, m) = (s(at) + lift, s_prime(at) + tilt);
        let seg = Segment::new(0.0, k.x_prime, y - m * at, y + m * (k.x_prime - at));
        let c = segment_close_measure(&seg, delta)?;
        max_ratio = max_ratio.max(c / bound);
        if c > bound {
            violations += 1;
        }
    }
    Ok(LemmaReport { delta, segments, max_ratio, violations })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub budget: f64,
    pub greedy_segments: usize,
    /// Smallest deviation measure over all adversaries, `None` when vacuous.
    pub min_deviation: Option<f64>,
    pub violations: usize,
}

pub fn sweep_row(delta: f64, per_family: usize, seed: u64) -> Result<SweepRow> {
    let greedy = greedy_pl_approx(delta)?;
    let budget = segment_budget(delta);
    let mut min_dev: Option<f64> = None;
    let mut violations = 0;
    for kind in ADVERSARIES {
        for t in adversarial_contours(kind, delta, per_family, seed)? {
            match prop_approx_check(&t, delta)? {
                PropApprox::Holds { measure } | PropApprox::Violated { measure } => {
                    if measure < instance_constants().x_prime / 2.0 {
                        violations += 1;
                    }
                    min_dev = Some(min_dev.map_or(measure, |m| m.min(measure)));
                }
                PropApprox::Vacuous { .. } | PropApprox::OutsideBudget { .. } => {}
            }
        }
    }
    Ok(SweepRow { delta, budget, greedy_segments: greedy.len(), min_deviation: min_dev, violations })
}
