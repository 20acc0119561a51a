//! Revenue-optimal mechanisms over finitely many types, by linear programming.

use super::simplex::{Simplex, Status};
use crate::dist::ProductDistribution;
use crate::error::{Error, Result};
use crate::model::BuyerType;

/// IC rows whose violation exceeds this are added to the LP.
const IC_TOL: f64 = 1e-9;
/// Violated IC rows added per type and round.
const ROWS_PER_TYPE: usize = 3;
const MAX_PIVOTS: usize = 2_000_000;
pub const MAX_GRID: usize = 20;

/// A direct mechanism on finitely many types.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMechanism {
    pub types: Vec<BuyerType>,
    pub masses: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub t: Vec<f64>,
}

impl GridMechanism {
    pub fn revenue(&self) -> f64 {
        self.masses.iter().zip(&self.t).map(|(m, t)| m * t).sum()
    }

    fn utility_of(&self, i: usize, j: usize) -> f64 {
        let v = self.types[i];
        self.q1[j] * v.v1 + self.q2[j] * v.v2 - self.t[j]
    }

    /// Largest violation of IC, IR, `t >= 0` or `q in [0,1]`, over all type
    /// pairs.
    pub fn max_violation(&self) -> f64 {
        let n = self.types.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let own = self.utility_of(i, i);
            worst = worst.max(-own).max(-self.t[i]);
            for q in [self.q1[i], self.q2[i]] {
                worst = worst.max(-q).max(q - 1.0);
            }
            for j in 0..n {
                worst = worst.max(self.utility_of(i, j) - own);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub mechanism: GridMechanism,
    pub value: f64,
    /// [`GridMechanism::max_violation`] of the returned mechanism.
    pub residual: f64,
    pub rows: usize,
    pub pivots: usize,
}

/// Maximizes `sum_i m_i t_i` over `(u_i, q_i)` with `t_i = q_i.v_i - u_i`,
/// subject to `q <= 1`, `u >= 0`, `t >= 0` and IC between all pairs. IC rows
/// start from a few per type and are added while violated.
pub fn solve_type_lp(types: &[BuyerType], masses: &[f64]) -> Result<LpSolution> {
    let n = types.len();
    if n == 0 || masses.len() != n {
        return Err(Error::OutOfRange("need one mass per type and at least one type".into()));
    }
    let nv = 3 * n;
    let (u, q1, q2) = (|i: usize| 3 * i, |i: usize| 3 * i + 1, |i: usize| 3 * i + 2);
    let mut c = vec![0.0; nv];
    for (i, v) in types.iter().enumerate() {
        c[u(i)] = -masses[i];
        c[q1(i)] = masses[i] * v.v1;
        c[q2(i)] = masses[i] * v.v2;
    }
    let mut lp = Simplex::new(&c);
    let mut row = vec![0.0; nv];
    let mut add = |lp: &mut Simplex, entries: &[(usize, f64)], b: f64| {
        for &(k, a) in entries {
            row[k] = a;
        }
        lp.add_row(&row, b);
        for &(k, _) in entries {
            row[k] = 0.0;
        }
    };
    for (i, v) in types.iter().enumerate() {
        add(&mut lp, &[(q1(i), 1.0)], 1.0);
        add(&mut lp, &[(q2(i), 1.0)], 1.0);
        add(&mut lp, &[(u(i), 1.0), (q1(i), -v.v1), (q2(i), -v.v2)], 0.0);
    }
    let ic = |i: usize, j: usize| -> [(usize, f64); 4] {
        let (vi, vj) = (types[i], types[j]);
        [(u(j), 1.0), (q1(j), vi.v1 - vj.v1), (q2(j), vi.v2 - vj.v2), (u(i), -1.0)]
    };
    // seed: each type against its nearest few others
    for i in 0..n {
        let mut near: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((types[i].v1 - types[j].v1).abs() + (types[i].v2 - types[j].v2).abs(), j))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in near.iter().take(4) {
            add(&mut lp, &ic(i, j), 0.0);
        }
    }
    if lp.solve_primal(MAX_PIVOTS)? != Status::Optimal {
        return Err(Error::Audit("type LP did not reach an optimum".into()));
    }
    loop {
        let x = lp.solution();
        let mut added = 0;
        for i in 0..n {
            let mut viol: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let s: f64 = ic(i, j).iter().map(|&(k, a)| a * x[k]).sum();
                    (s, j)
                })
                .filter(|&(s, _)| s > IC_TOL)
                .collect();
            viol.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, j) in viol.iter().take(ROWS_PER_TYPE) {
                add(&mut lp, &ic(i, j), 0.0);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
        if lp.solve_dual(MAX_PIVOTS)? != Status::Optimal {
            return Err(Error::Audit("type LP became infeasible after adding IC rows".into()));
        }
    }
    let x = lp.solution();
    let q1v: Vec<f64> = (0..n).map(|i| x[q1(i)]).collect();
    let q2v: Vec<f64> = (0..n).map(|i| x[q2(i)]).collect();
    let tv: Vec<f64> = (0..n).map(|i| q1v[i] * types[i].v1 + q2v[i] * types[i].v2 - x[u(i)]).collect();
    let mechanism = GridMechanism { types: types.to_vec(), masses: masses.to_vec(), q1: q1v, q2: q2v, t: tv };
    let residual = mechanism.max_violation();
    Ok(LpSolution { value: lp.objective(), residual, rows: lp.num_rows(), pivots: lp.pivots, mechanism })
}

/// Lower-left corners of an `n x n` grid over the support, with the exact
/// mass of each cell. Also returns the cell sides.
pub fn grid_types(d: &ProductDistribution, n_grid: usize) -> (Vec<BuyerType>, Vec<f64>, (f64, f64)) {
    let (lo1, lo2, hi1, hi2) = d.support();
    let (h1, h2) = ((hi1 - lo1) / n_grid as f64, (hi2 - lo2) / n_grid as f64);
    let edges = |lo: f64, h: f64, hi: f64| -> Vec<f64> {
        (0..=n_grid).map(|k| if k == n_grid { hi } else { lo + k as f64 * h }).collect()
    };
    let (e1, e2) = (edges(lo1, h1, hi1), edges(lo2, h2, hi2));
    let mut types = Vec::with_capacity(n_grid * n_grid);
    let mut masses = Vec::with_capacity(n_grid * n_grid);
    for a in 0..n_grid {
        let m1 = d.m1.cdf(e1[a + 1]) - d.m1.cdf(e1[a]);
        for b in 0..n_grid {
            let m2 = d.m2.cdf(e2[b + 1]) - d.m2.cdf(e2[b]);
            types.push(BuyerType::new(e1[a], e2[b]));
            masses.push(m1 * m2);
        }
    }
    (types, masses, (h1, h2))
}

/// Optimal mechanism for the distribution rounded down to an `n x n` grid.
pub fn opt_grid_lp(d: &ProductDistribution, n_grid: usize) -> Result<LpSolution> {
    if !(1..=MAX_GRID).contains(&n_grid) {
        return Err(Error::OutOfRange(format!("n_grid must lie in 1..={MAX_GRID}, got {n_grid}")));
    }
    let (types, masses, _) = grid_types(d, n_grid);
    solve_type_lp(&types, &masses)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    pub lp_value: f64,
    /// `lp_value + h1 + h2`.
    pub additive: f64,
    /// `min_tau lp / (1 - tau) + (h1 + h2) / tau`, from discounting every
    /// price by `1 - tau` before moving types down to the grid.
    pub nudged: f64,
    pub residual: f64,
}

/// `min_tau a/(1-tau) + b/tau` is attained at `tau = sqrt(b)/(sqrt(a)+sqrt(b))`
/// with value `(sqrt(a) + sqrt(b))^2`.
fn nudged_bound(a: f64, b: f64) -> f64 {
    (a.max(0.0).sqrt() + b.sqrt()).powi(2)
}

pub fn opt_upper_bounds(d: &ProductDistribution, n_grid: usize) -> Result<UpperBound> {
    let sol = opt_grid_lp(d, n_grid)?;
    let (_, _, (h1, h2)) = grid_types(d, n_grid);
    Ok(UpperBound {
        lp_value: sol.value,
        additive: sol.value + h1 + h2,
        nudged: nudged_bound(sol.value, h1 + h2),
        residual: sol.residual,
    })
}

/// Grid LP value plus the rounding correction `h1 + h2` (`2h` on the unit
/// square).
pub fn opt_upper_bound(d: &ProductDistribution, n_grid: usize) -> Result<f64> {
    Ok(opt_upper_bounds(d, n_grid)?.additive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Menu;

    /// Best deterministic mechanism by enumeration: for each allocation
    /// profile the least utilities satisfying IC and IR come from a
    /// longest-path fixed point; a positive cycle means no IC prices exist.
    fn deterministic_optimum(types: &[BuyerType], masses: &[f64]) -> f64 {
        let n = types.len();
        let allocs = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let mut best = 0.0f64;
        for code in 0..4usize.pow(n as u32) {
            let q: Vec<(f64, f64)> = (0..n).map(|i| allocs[(code / 4usize.pow(i as u32)) % 4]).collect();
            let mut u = vec![0.0f64; n];
            let mut stable = false;
            for _ in 0..=n + 1 {
                let mut changed = false;
                for i in 0..n {
                    for j in 0..n {
                        let cand = u[j] + q[j].0 * (types[i].v1 - types[j].v1) + q[j].1 * (types[i].v2 - types[j].v2);
                        if cand > u[i] + 1e-12 {
                            u[i] = cand;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    stable = true;
                    break;
                }
            }
            if !stable {
                continue;
            }
            let rev: f64 = (0..n).map(|i| masses[i] * (q[i].0 * types[i].v1 + q[i].1 * types[i].v2 - u[i])).sum();
            best = best.max(rev);
        }
        best
    }

    #[test]
    fn single_good_two_values() {
        let types = [BuyerType::new(0.5, 0.0), BuyerType::new(1.0, 0.0)];
        let s = solve_type_lp(&types, &[0.5, 0.5]).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn two_by_two_matches_enumeration() {
        let types = [
            BuyerType::new(0.5, 0.5),
            BuyerType::new(0.5, 1.0),
            BuyerType::new(1.0, 0.5),
            BuyerType::new(1.0, 1.0),
        ];
        let masses = [0.25; 4];
        let s = solve_type_lp(&types, &masses).unwrap();
        let brute = deterministic_optimum(&types, &masses);
        assert!((brute - 1.125).abs() < 1e-12);
        assert!((s.value - brute).abs() < 1e-9, "{} vs {brute}", s.value);
        assert!((s.mechanism.revenue() - s.value).abs() < 1e-9);
    }

    #[test]
    fn lp_dominates_deterministic_mechanisms_on_random_instances() {
        let mut rng = crate::rng::SplitMix64::new(4);
        for _ in 0..20 {
            let n = 2 + rng.below(2);
            let types: Vec<BuyerType> = (0..n).map(|_| BuyerType::new(rng.next_f64(), rng.next_f64())).collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
            let total: f64 = raw.iter().sum();
            let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
            let s = solve_type_lp(&types, &masses).unwrap();
            assert!(s.residual < 1e-8);
            assert!(s.value >= deterministic_optimum(&types, &masses) - 1e-9);
        }
    }

    #[test]
    fn grid_masses_sum_to_one() {
        let (types, masses, (h1, h2)) = grid_types(&ProductDistribution::beta12_squared(), 7);
        assert_eq!(types.len(), 49);
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((h1 - 1.0 / 7.0).abs() < 1e-15 && h1 == h2);
        assert_eq!(types[0], BuyerType::new(0.0, 0.0));
    }

    #[test]
    fn degenerate_grid_bound() {
        let u = ProductDistribution::uniform_squared();
        assert_eq!(opt_upper_bound(&u, 1).unwrap(), 2.0);
        assert!(opt_grid_lp(&u, 0).is_err());
        assert!(opt_grid_lp(&u, 21).is_err());
    }

    #[test]
    fn grid_lp_beats_menus_restricted_to_the_grid() {
        // any menu induces a feasible grid mechanism through best responses
        let b = ProductDistribution::beta12_squared();
        let sol = opt_grid_lp(&b, 6).unwrap();
        assert!(sol.residual < 1e-8);
        let (types, masses, _) = grid_types(&b, 6);
        for m in crate::model::random_corpus(20, 8, 2).iter().chain([Menu::from_triples(&[(1.0, 1.0, 0.5)]).unwrap()].iter()) {
            let rev: f64 = types.iter().zip(&masses).map(|(v, w)| w * m.payment(*v)).sum();
            assert!(sol.value >= rev - 1e-9, "{} < {rev}", sol.value);
        }
    }

    #[test]
    fn nudged_bound_is_the_minimum_over_tau() {
        let (a, b) = (0.3, 0.1);
        let direct = (1..10_000).map(|k| k as f64 / 10_000.0).map(|t| a / (1.0 - t) + b / t).fold(f64::INFINITY, f64::min);
        assert!((nudged_bound(a, b) - direct).abs() < 1e-6);
    }
}
