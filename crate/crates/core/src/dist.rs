//! Product valuation distributions with polynomial marginal densities.
//!
//! Everything downstream relies on the densities being polynomials: exact
//! polygon masses in [`crate::revenue`], exact gradients in [`hazard_check`]
//! and root-based optimization in [`myerson_price`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::BuyerType;
use crate::poly::Poly;
use crate::rng::SplitMix64;

const NORMALIZATION_TOL: f64 = 1e-12;
const NONNEG_TOL: f64 = 1e-12;

/// One-dimensional distribution on `[lo, hi]` with a polynomial density.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    lo: f64,
    hi: f64,
    density: Poly,
    cdf: Poly,
    label: String,
}

impl Marginal {
    /// Validates nonnegativity (grid sampling plus the density's minimum from
    /// its critical points) and unit mass.
    pub fn new(density: Poly, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo >= hi {
            return Err(Error::InvalidDistribution(format!(
                "support must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        if density.coeffs().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite density coefficient".into()));
        }
        let (min_val, argmin) = density.min_on(lo, hi);
        let grid_min = (0..=256)
            .map(|k| density.eval(lo + (hi - lo) * k as f64 / 256.0))
            .fold(f64::INFINITY, f64::min);
        if min_val.min(grid_min) < -NONNEG_TOL {
            return Err(Error::InvalidDistribution(format!(
                "density is negative ({min_val:.3e}) at x = {argmin}"
            )));
        }
        let mass = density.integrate(lo, hi);
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "density integrates to {mass} over [{lo}, {hi}], expected 1"
            )));
        }
        let anti = density.antiderivative();
        let cdf = anti.add(&Poly::constant(-anti.eval(lo)));
        let label = format!("poly:{density}@{lo},{hi}");
        Ok(Self { lo, hi, density, cdf, label })
    }

    /// Rescales `density` to unit mass before validating.
    pub fn normalized(density: Poly, lo: f64, hi: f64) -> Result<Self> {
        let mass = density.integrate(lo, hi);
        if !(mass > 0.0) {
            return Err(Error::InvalidDistribution(format!("density has mass {mass}")));
        }
        Self::new(density.scale(1.0 / mass), lo, hi)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let mut m = Self::new(Poly::constant(1.0 / (hi - lo)), lo, hi)?;
        m.label = if lo == 0.0 && hi == 1.0 {
            "uniform".into()
        } else {
            format!("uniform@{lo},{hi}")
        };
        Ok(m)
    }

    /// Beta(1,2): density `2(1-x)` on `[0,1]`.
    pub fn beta12() -> Self {
        let mut m = Self::new(Poly::new(vec![2.0, -2.0]), 0.0, 1.0)
            .expect("Beta(1,2) density is valid");
        m.label = "beta12".into();
        m
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn density_poly(&self) -> &Poly {
        &self.density
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            self.density.eval(x)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            self.cdf.eval(x).clamp(0.0, 1.0)
        }
    }

    pub fn mean(&self) -> f64 {
        self.density.shift_up().integrate(self.lo, self.hi)
    }

    /// Inverse CDF. Densities of degree at most one have a closed form; higher
    /// degrees use safeguarded Newton steps inside a bisection bracket.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let c = self.density.coeffs();
        let (lo, hi) = (self.lo, self.hi);
        match self.density.degree() {
            0 => lo + u * (hi - lo),
            1 => {
                // c0 (x-lo) + c1/2 (x^2 - lo^2) = u, solved in y = x - lo.
                let a = 0.5 * c[1];
                let b = c[0] + c[1] * lo;
                let y = if a == 0.0 {
                    u / b
                } else {
                    let disc = (b * b + 4.0 * a * u).max(0.0);
                    // numerically stable root of a y^2 + b y - u = 0
                    2.0 * u / (b + disc.sqrt())
                };
                (lo + y).clamp(lo, hi)
            }
            _ => {
                let (mut a, mut b) = (lo, hi);
                let mut x = lo + u * (hi - lo);
                for _ in 0..100 {
                    let fx = self.cdf.eval(x) - u;
                    if fx.abs() <= 1e-15 {
                        break;
                    }
                    if fx < 0.0 {
                        a = x;
                    } else {
                        b = x;
                    }
                    let d = self.density.eval(x);
                    let newton = x - fx / d;
                    x = if d > 0.0 && newton > a && newton < b {
                        newton
                    } else {
                        0.5 * (a + b)
                    };
                    if b - a <= 1e-15 {
                        break;
                    }
                }
                x
            }
        }
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for Marginal {
    type Err = Error;

    /// `beta12`, `uniform`, `uniform@lo,hi` or `poly:c0,c1,...@lo,hi`
    /// (coefficients ascending).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::InvalidDistribution(format!("`{s}`: {msg}"));
        let parse_nums = |txt: &str| -> Result<Vec<f64>> {
            txt.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
                .collect()
        };
        let parse_support = |txt: &str| -> Result<(f64, f64)> {
            match parse_nums(txt)?.as_slice() {
                [lo, hi] => Ok((*lo, *hi)),
                _ => Err(bad("support must be `lo,hi`")),
            }
        };
        if s == "beta12" {
            Ok(Marginal::beta12())
        } else if s == "uniform" {
            Marginal::uniform(0.0, 1.0)
        } else if let Some(rest) = s.strip_prefix("uniform@") {
            let (lo, hi) = parse_support(rest)?;
            Marginal::uniform(lo, hi)
        } else if let Some(rest) = s.strip_prefix("poly:") {
            let (coeffs, support) = rest.split_once('@').ok_or_else(|| bad("missing `@lo,hi`"))?;
            let (lo, hi) = parse_support(support)?;
            Marginal::new(Poly::new(parse_nums(coeffs)?), lo, hi)
        } else {
            Err(bad("unknown marginal"))
        }
    }
}

/// Two independent marginals; the joint density is `f1(v1) f2(v2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistribution {
    pub m1: Marginal,
    pub m2: Marginal,
}

impl ProductDistribution {
    pub fn new(m1: Marginal, m2: Marginal) -> Self {
        Self { m1, m2 }
    }

    pub fn iid(m: Marginal) -> Self {
        Self { m1: m.clone(), m2: m }
    }

    pub fn beta12_squared() -> Self {
        Self::iid(Marginal::beta12())
    }

    pub fn uniform_squared() -> Self {
        Self::iid(Marginal::uniform(0.0, 1.0).expect("unit uniform"))
    }

    pub fn density(&self, v: BuyerType) -> f64 {
        self.m1.density(v.v1) * self.m2.density(v.v2)
    }

    /// `(lo1, lo2, hi1, hi2)`.
    pub fn support(&self) -> (f64, f64, f64, f64) {
        (self.m1.lo, self.m2.lo, self.m1.hi, self.m2.hi)
    }

    /// Inverse-CDF sampling driven by [`SplitMix64`]: each draw consumes two
    /// consecutive doubles, the first for `v1`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<BuyerType> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| {
                let u1 = rng.next_f64();
                let u2 = rng.next_f64();
                BuyerType::new(self.m1.quantile(u1), self.m2.quantile(u2))
            })
            .collect()
    }

    pub fn is_iid(&self) -> bool {
        self.m1 == self.m2
    }
}

impl fmt::Display for ProductDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_iid() {
            write!(f, "iid:{}", self.m1)
        } else if self.m1.label.contains(',') || self.m2.label.contains(',') {
            write!(f, "product:{};{}", self.m1, self.m2)
        } else {
            write!(f, "product:{},{}", self.m1, self.m2)
        }
    }
}

impl FromStr for ProductDistribution {
    type Err = Error;

    /// `iid:<marginal>`, `product:<m1>,<m2>` or, when a marginal itself
    /// contains commas, `product:<m1>;<m2>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("iid:") {
            Ok(Self::iid(rest.parse()?))
        } else if let Some(rest) = s.strip_prefix("product:") {
            let (a, b) = rest
                .split_once(';')
                .or_else(|| rest.split_once(','))
                .ok_or_else(|| Error::InvalidDistribution(format!("`{s}`: expected two marginals")))?;
            Ok(Self::new(a.parse()?, b.parse()?))
        } else {
            Err(Error::InvalidDistribution(format!(
                "`{s}`: expected `iid:...` or `product:...`"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardReport {
    pub satisfied: bool,
    pub min_value: f64,
    pub argmin: BuyerType,
}

/// McAfee–McMillan hazard expression `3 f(x) + x . grad f(x)` for a product
/// density, evaluated literally (also on the boundary of the support).
pub fn hazard_expression(d: &ProductDistribution, v: BuyerType) -> f64 {
    let (p1, p2) = (d.m1.density_poly(), d.m2.density_poly());
    let (f1, f2) = (p1.eval(v.v1), p2.eval(v.v2));
    let (g1, g2) = (p1.derivative().eval(v.v1), p2.derivative().eval(v.v2));
    3.0 * f1 * f2 + v.v1 * g1 * f2 + v.v2 * f1 * g2
}

/// Minimizes the hazard expression over a `grid_n x grid_n` grid spanning the
/// support (boundary included), then polishes the best grid point by exact
/// one-dimensional minimization along each axis within one grid cell.
pub fn hazard_check(d: &ProductDistribution, grid_n: usize) -> HazardReport {
    let grid_n = grid_n.max(2);
    let (lo1, lo2, hi1, hi2) = d.support();
    let (h1, h2) = (
        (hi1 - lo1) / (grid_n - 1) as f64,
        (hi2 - lo2) / (grid_n - 1) as f64,
    );
    let mut best = (f64::INFINITY, BuyerType::new(lo1, lo2));
    for i in 0..grid_n {
        for j in 0..grid_n {
            let v = BuyerType::new(lo1 + i as f64 * h1, lo2 + j as f64 * h2);
            let val = hazard_expression(d, v);
            if val < best.0 {
                best = (val, v);
            }
        }
    }

    let (p1, p2) = (d.m1.density_poly(), d.m2.density_poly());
    let (dp1, dp2) = (p1.derivative(), p2.derivative());
    // Along axis 1 with v2 fixed: f2(v2) (3 f1 + x f1') + v2 f2'(v2) f1.
    let line1 = |v2: f64| {
        p1.scale(3.0 * p2.eval(v2))
            .add(&dp1.shift_up().scale(p2.eval(v2)))
            .add(&p1.scale(v2 * dp2.eval(v2)))
    };
    let line2 = |v1: f64| {
        p2.scale(3.0 * p1.eval(v1))
            .add(&dp2.shift_up().scale(p1.eval(v1)))
            .add(&p2.scale(v1 * dp1.eval(v1)))
    };
    for _ in 0..20 {
        let before = best.0;
        let v = best.1;
        let (val, x) = line1(v.v2).min_on((v.v1 - h1).max(lo1), (v.v1 + h1).min(hi1));
        if val < best.0 {
            best = (val, BuyerType::new(x, v.v2));
        }
        let v = best.1;
        let (val, y) = line2(v.v1).min_on((v.v2 - h2).max(lo2), (v.v2 + h2).min(hi2));
        if val < best.0 {
            best = (val, BuyerType::new(v.v1, y));
        }
        if best.0 >= before {
            break;
        }
    }
    HazardReport {
        satisfied: best.0 >= -1e-12,
        min_value: best.0,
        argmin: best.1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MyersonPrice {
    pub price: f64,
    pub revenue: f64,
}

/// Revenue-maximizing take-it-or-leave-it price for one good: maximizes
/// `p (1 - F(p))` over the support by comparing the endpoints with the roots
/// of the derivative `1 - F(p) - p f(p)`. Ties go to the lower price.
pub fn myerson_price(m: &Marginal) -> MyersonPrice {
    let revenue = |p: f64| p * (1.0 - m.cdf(p));
    let survival = Poly::constant(1.0).add(&m.cdf.scale(-1.0));
    let deriv = survival.add(&m.density.shift_up().scale(-1.0));
    let mut candidates = vec![m.lo];
    candidates.extend(deriv.real_roots(m.lo, m.hi));
    candidates.push(m.hi);
    let mut best = MyersonPrice { price: m.lo, revenue: revenue(m.lo) };
    for p in candidates {
        let r = revenue(p);
        if r > best.revenue * (1.0 + 1e-14) {
            best = MyersonPrice { price: p, revenue: r };
        }
    }
    best
}
