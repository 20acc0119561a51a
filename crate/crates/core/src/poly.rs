//! Dense univariate polynomials with real-root isolation on an interval.

use std::fmt;

/// Coefficients in ascending order: `coeffs[k]` multiplies `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(self.coeffs.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
        Poly::new(out)
    }

    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + other.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// The polynomial `x * self(x)`.
    pub fn shift_up(&self) -> Poly {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend_from_slice(&self.coeffs);
        Poly::new(out)
    }

    /// Sorted real roots in `[lo, hi]`.
    ///
    /// Roots of the derivative split the interval into monotone pieces, each of
    /// which holds at most one sign change that bisection then pins down. Even
    /// multiplicity roots are caught at the critical points themselves. The zero
    /// polynomial reports no roots.
    pub fn real_roots(&self, lo: f64, hi: f64) -> Vec<f64> {
        if lo > hi || self.is_zero() {
            return Vec::new();
        }
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let touch_tol = 1e-13 * scale;
        match self.degree() {
            0 => Vec::new(),
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if (lo..=hi).contains(&r) {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let mut knots = vec![lo];
                knots.extend(self.derivative().real_roots(lo, hi));
                knots.push(hi);
                let mut roots: Vec<f64> = Vec::new();
                let push = |r: f64, roots: &mut Vec<f64>| {
                    if roots.last().is_none_or(|&last| r - last > 1e-12) {
                        roots.push(r);
                    }
                };
                for w in knots.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let (fa, fb) = (self.eval(a), self.eval(b));
                    if fa.abs() <= touch_tol {
                        push(a, &mut roots);
                    }
                    if fa.abs() > touch_tol && fb.abs() > touch_tol && fa.signum() != fb.signum() {
                        push(bisect(|x| self.eval(x), a, b, fa), &mut roots);
                    }
                }
                if self.eval(hi).abs() <= touch_tol {
                    push(hi, &mut roots);
                }
                roots
            }
        }
    }

    /// Minimum over `[lo, hi]` and the point attaining it (lowest such point).
    pub fn min_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (self.eval(lo), lo);
        for x in self
            .derivative()
            .real_roots(lo, hi)
            .into_iter()
            .chain(std::iter::once(hi))
        {
            let v = self.eval(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        best
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Bisection for a sign change of `f` on `[a, b]`, given `f(a)`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sa = fa.signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
