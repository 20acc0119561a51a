//! Duality machinery for two goods with i.i.d. Beta(1,2) values.
//!
//! On the strip `R = [0, x'] x [0, 1]` the optimal dual splits into an
//! exclusion region `Z` below the concave curve `S` and a region `A` above it.
//! `Z` receives mass from the unit atom at the origin; in `A` mass moves
//! straight down within each column. A finite menu cannot follow `S` exactly,
//! and the resulting complementary-slackness violation is a certified lower
//! bound on how much revenue the menu leaves on the table.

mod certificate;
mod contour;

pub use certificate::{
    certify_gap_coarse, certify_gap_exact, column_slack, CertificateKind, GapCertificate,
};
pub use contour::{close_measure, deviation_measure, t_contour, PLContour, Segment};

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Intercept of the diagonal piece of the exclusion boundary.
pub const C_DIAG: f64 = 0.5534938;

/// Tick value for `x'` printed alongside the exclusion boundary plot; used
/// only as a cross-check of the computed root.
pub const X_PRIME_REFERENCE: f64 = 0.06187679;

/// Half-width of the audited strip around `S`.
pub const STRIP_HALF_WIDTH: f64 = 0.02;

/// Upper bound on `|grad g|` over the unit square.
const G_LIPSCHITZ: f64 = 16.0 * std::f64::consts::SQRT_2;

const RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConstants {
    pub x_prime: f64,
    pub c_diag: f64,
    /// Largest radius of curvature of `S` on `[0, x']` and where it occurs.
    pub r: f64,
    pub r_argmax: f64,
    /// `g < -d` everywhere within `delta_max` of `S` (vertically) on `[0, x']`.
    pub d: f64,
    pub delta_max: f64,
    /// Smallest `|g|` seen on the audit grid, before the Lipschitz margin.
    pub audit_min_abs_g: f64,
    pub audit_grid: (usize, usize),
}

/// `S(x) = (2 - 3x) / (4 - 5x)` without range checks.
#[inline]
pub(crate) fn s_of(x: f64) -> f64 {
    (2.0 - 3.0 * x) / (4.0 - 5.0 * x)
}

#[inline]
pub(crate) fn s_prime(x: f64) -> f64 {
    -2.0 / (4.0 - 5.0 * x).powi(2)
}

#[inline]
pub(crate) fn s_second(x: f64) -> f64 {
    -20.0 / (4.0 - 5.0 * x).powi(3)
}

pub fn radius_of_curvature(x: f64) -> f64 {
    (1.0 + s_prime(x).powi(2)).powf(1.5) / s_second(x).abs()
}

/// Density of the transformed measure away from the origin:
/// `4a + 4b - 20ab` with `a = 1 - x1`, `b = 1 - x2`.
#[inline]
pub fn g(x1: f64, x2: f64) -> f64 {
    let (a, b) = (1.0 - x1, 1.0 - x2);
    4.0 * a + 4.0 * b - 20.0 * a * b
}

fn x_prime_by_bisection(c: f64) -> f64 {
    // S(x) + x - c is increasing on [0, 0.5]
    let f = |x: f64| s_of(x) + x - c;
    crate::poly::bisect(f, 0.0, 0.5, f(0.0))
}

/// Audits `g` on a `n1 x n2` grid over the strip `|x2 - S(x1)| <= w`,
/// `x1 in [0, x']`, and returns `(min |g| on the grid, d)` where `d`
/// subtracts a Lipschitz margin covering the gaps between grid points.
fn audit_strip(x_prime: f64, w: f64, n1: usize, n2: usize) -> Result<(f64, f64)> {
    let hx = x_prime / (n1 - 1) as f64;
    let hs = 2.0 * w / (n2 - 1) as f64;
    let mut min_abs = f64::INFINITY;
    for i in 0..n1 {
        let x1 = i as f64 * hx;
        let s = s_of(x1);
        for j in 0..n2 {
            let x2 = s - w + j as f64 * hs;
            if !(0.0..=1.0).contains(&x2) {
                return Err(Error::Audit(format!("strip leaves R at ({x1}, {x2})")));
            }
            let v = g(x1, x2);
            if v >= 0.0 {
                return Err(Error::Audit(format!("g = {v} >= 0 at ({x1}, {x2})")));
            }
            min_abs = min_abs.min(-v);
        }
    }
    let slope = s_prime(x_prime).abs().max(s_prime(0.0).abs());
    let gap = ((0.5 * hx).powi(2) + (0.5 * slope * hx + 0.5 * hs).powi(2)).sqrt();
    let d = min_abs - G_LIPSCHITZ * gap;
    if d <= 0.0 {
        return Err(Error::Audit(format!("no positive density floor (min |g| = {min_abs})")));
    }
    Ok((min_abs, d))
}

/// Computes the instance constants from scratch.
pub fn compute_instance_constants(strip: f64, grid: (usize, usize)) -> Result<InstanceConstants> {
    let x_prime = x_prime_by_bisection(C_DIAG);
    let n = 4000;
    let (mut r, mut r_argmax) = (radius_of_curvature(0.0), 0.0);
    for k in 1..=n {
        let x = x_prime * k as f64 / n as f64;
        let rho = radius_of_curvature(x);
        if rho > r {
            r = rho;
            r_argmax = x;
        }
    }
    let (audit_min_abs_g, d) = audit_strip(x_prime, strip, grid.0.max(2), grid.1.max(2))?;
    Ok(InstanceConstants {
        x_prime,
        c_diag: C_DIAG,
        r,
        r_argmax,
        d,
        delta_max: strip,
        audit_min_abs_g,
        audit_grid: grid,
    })
}

/// Instance constants with the default audit (computed once).
pub fn instance_constants() -> &'static InstanceConstants {
    static K: OnceLock<InstanceConstants> = OnceLock::new();
    K.get_or_init(|| {
        compute_instance_constants(STRIP_HALF_WIDTH, (401, 401))
            .expect("default strip audit succeeds")
    })
}

/// The curve separating `Z` from `A`, defined on `[0, x']`.
pub fn s_curve(x1: f64) -> Result<f64> {
    let xp = instance_constants().x_prime;
    if !(x1 >= -RANGE_TOL && x1 <= xp + RANGE_TOL) {
        return Err(Error::OutOfRange(format!("S is defined on [0, {xp}], got {x1}")));
    }
    Ok(s_of(x1.clamp(0.0, xp)))
}

/// Lower boundary of the exclusion region on `[0, c_diag]`: the smaller of the
/// two curved branches and the diagonal, floored at zero (the second curved
/// branch turns negative past `x = 1/2`).
pub fn exclusion_boundary(x1: f64) -> Result<f64> {
    if !(-RANGE_TOL..=C_DIAG + RANGE_TOL).contains(&x1) {
        return Err(Error::OutOfRange(format!("boundary is defined on [0, {C_DIAG}], got {x1}")));
    }
    let x = x1.clamp(0.0, C_DIAG);
    let curved2 = (2.0 - 4.0 * x) / (3.0 - 5.0 * x);
    Ok(s_of(x).min(curved2).min(C_DIAG - x).max(0.0))
}

/// `int_{S(x1)}^1 g(x1, x2) dx2`, in closed form (g is linear in `x2`).
pub fn column_balance(x1: f64) -> Result<f64> {
    let s = s_curve(x1)?;
    let a = 1.0 - x1;
    // antiderivative of 4a + (4 - 20a)(1 - x2) in x2
    let anti = |x2: f64| 4.0 * a * x2 - (4.0 - 20.0 * a) * (1.0 - x2).powi(2) / 2.0;
    Ok(anti(1.0) - anti(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremLower {
    pub epsilon: f64,
    pub delta: f64,
    /// Menus with at most this many outcomes lose more than `epsilon`.
    pub c: f64,
}

/// `delta = sqrt(8 eps / (x' d))` and `C = x' / (8 sqrt(r delta))`.
pub fn theorem_lower_constants(epsilon: f64) -> Result<TheoremLower> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
    }
    let k = instance_constants();
    let delta = (8.0 * epsilon / (k.x_prime * k.d)).sqrt();
    if delta > k.delta_max {
        return Err(Error::Precondition(format!(
            "epsilon = {epsilon} gives delta = {delta} beyond the audited strip {}; \
             the bound only applies to small epsilon",
            k.delta_max
        )));
    }
    let c = k.x_prime / (8.0 * (k.r * delta).sqrt());
    Ok(TheoremLower { epsilon, delta, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{hazard_expression, ProductDistribution};
    use crate::model::BuyerType;
    use crate::rng::SplitMix64;

    #[test]
    fn x_prime_matches_quadratic_and_reference() {
        // S(x) + x = c  <=>  5x^2 - (1 + 5c)x - (2 - 4c) = 0, smaller root
        let c = C_DIAG;
        let (a, b, cc) = (5.0, -(1.0 + 5.0 * c), -(2.0 - 4.0 * c));
        let root = (-b - (b * b - 4.0 * a * cc).sqrt()) / (2.0 * a);
        let k = instance_constants();
        assert!((k.x_prime - root).abs() < 1e-14);
        assert!((k.x_prime - X_PRIME_REFERENCE).abs() < 1e-7);
        assert!((s_of(k.x_prime) + k.x_prime - C_DIAG).abs() < 1e-7);
    }

    #[test]
    fn curvature_radius_peaks_at_origin() {
        let k = instance_constants();
        // (1 + 1/64)^{3/2} / (20/64)
        let oracle = (1.0f64 + 1.0 / 64.0).powf(1.5) * 64.0 / 20.0;
        assert_eq!(k.r_argmax, 0.0);
        assert!((k.r - oracle).abs() < 1e-12);
        assert!((k.r - 3.2754).abs() < 1e-3);
    }

    #[test]
    fn audited_floor() {
        let k = instance_constants();
        assert!(k.d > 3.4 && k.d < 3.5, "{}", k.d);
        assert!(k.d < k.audit_min_abs_g);
        assert_eq!(g(0.0, 0.5), -4.0);
        // brute force: sample the strip densely off-grid
        let mut rng = SplitMix64::new(3);
        for _ in 0..100_000 {
            let x1 = rng.uniform(0.0, k.x_prime);
            let x2 = s_of(x1) + rng.uniform(-k.delta_max, k.delta_max);
            assert!(g(x1, x2) < -k.d);
        }
    }

    #[test]
    fn s_examples() {
        let k = instance_constants();
        assert_eq!(s_curve(0.0).unwrap(), 0.5);
        assert!((s_curve(k.x_prime).unwrap() - (C_DIAG - k.x_prime)).abs() < 1e-7);
        assert!((s_curve(k.x_prime).unwrap() - 0.49162).abs() < 1e-5);
        assert!(s_curve(-0.01).is_err());
        assert!(s_curve(0.07).is_err());
        for i in 0..=50 {
            let x = k.x_prime * i as f64 / 50.0;
            let s = s_curve(x).unwrap();
            assert!((x - (2.0 - 4.0 * s) / (3.0 - 5.0 * s)).abs() < 1e-14);
            assert!(s_second(x) < 0.0 && s_prime(x) < 0.0);
        }
    }

    #[test]
    fn exclusion_boundary_examples() {
        assert_eq!(exclusion_boundary(0.0).unwrap(), 0.5);
        let half = C_DIAG / 2.0;
        assert!((exclusion_boundary(half).unwrap() - half).abs() < 1e-15);
        assert!(exclusion_boundary(C_DIAG + 0.01).is_err());
        assert_eq!(exclusion_boundary(C_DIAG).unwrap(), 0.0);
        // swap symmetry on the curved branches
        let k = instance_constants();
        for i in 0..=20 {
            let x = k.x_prime * i as f64 / 20.0;
            let y = exclusion_boundary(x).unwrap();
            assert!((exclusion_boundary(y).unwrap() - x).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn column_balance_vanishes() {
        let k = instance_constants();
        for i in 0..50 {
            let x = k.x_prime * i as f64 / 49.0;
            let got = column_balance(x).unwrap();
            // closed form (4 - 20a) W^2 / 2 + 4a W with W = 2a / (5a - 1)
            let a = 1.0 - x;
            let w = 2.0 * a / (5.0 * a - 1.0);
            let oracle = (4.0 - 20.0 * a) * w * w / 2.0 + 4.0 * a * w;
            assert!(got.abs() < 1e-12 && oracle.abs() < 1e-12, "{got} {oracle}");
        }
        assert!(column_balance(0.03).unwrap().abs() < 1e-10);
    }

    #[test]
    fn g_matches_both_closed_forms() {
        let b = ProductDistribution::beta12_squared();
        let k = instance_constants();
        let mut rng = SplitMix64::new(17);
        for _ in 0..1000 {
            let (x1, x2) = (rng.uniform(0.0, k.x_prime), rng.uniform(0.0, 0.999));
            let f = |x: f64| 2.0 * (1.0 - x);
            let literal = f(x1) * f(x2) * (1.0 / (1.0 - x1) + 1.0 / (1.0 - x2) - 5.0);
            assert!((g(x1, x2) - literal).abs() < 1e-12);
            let hz = hazard_expression(&b, BuyerType::new(x1, x2));
            assert!((g(x1, x2) + hz).abs() < 1e-12);
        }
    }

    #[test]
    fn g_negative_in_exclusion_part_of_r() {
        let k = instance_constants();
        for i in 0..=60 {
            for j in 0..=60 {
                let x1 = k.x_prime * i as f64 / 60.0;
                let x2 = s_of(x1) * j as f64 / 60.0;
                assert!(g(x1, x2) < 0.0);
            }
        }
    }

    #[test]
    fn theorem_parameters() {
        let k = instance_constants();
        let t = theorem_lower_constants(1e-12).unwrap();
        assert!((t.delta - 6.1e-6).abs() < 1e-7, "{}", t.delta);
        assert!((t.c - 1.73).abs() < 0.01, "{}", t.c);
        for eps in [1e-14, 1e-12, 3e-10, 1e-8] {
            let t = theorem_lower_constants(eps).unwrap();
            let gap = (t.delta / 4.0) * (t.delta / 2.0) * (k.x_prime / 2.0) * k.d;
            assert!((gap - eps / 2.0).abs() <= 1e-12 * eps);
            let t16 = theorem_lower_constants(eps / 16.0).unwrap();
            assert!((t16.c / t.c - 2.0).abs() < 1e-9);
            let t4 = theorem_lower_constants(4.0 * eps).unwrap();
            assert!((t4.delta / t.delta - 2.0).abs() < 1e-12);
        }
        assert!(theorem_lower_constants(1e-3).is_err());
        assert!(theorem_lower_constants(0.0).is_err());
    }
}
