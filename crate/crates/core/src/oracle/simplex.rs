//! Dense simplex on a compact (Tucker) tableau.
//!
//! Solves `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`, so the slack basis
//! is feasible at the start. Rows can be appended after a solve; the dual
//! simplex then restores primal feasibility from the previous optimal basis.
//!
//! Every row reads `x_B = rhs - sum_k T[k] x_N[k]`, and the objective row
//! reads `z = z0 - sum_k d[k] x_N[k]`, so the basis is optimal once `d >= 0`.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const TOL: f64 = 1e-9;
/// Consecutive degenerate pivots after which Bland's rule takes over.
const DEGENERATE_RUN: usize = 50;
/// Scale of the random perturbations of right-hand sides and reduced costs.
const PERTURB: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct Simplex {
    n: usize,
    /// `rows[r]` holds the coefficients of the nonbasic columns, then `rhs`,
    /// then the perturbation of `rhs`.
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    /// Perturbation of the reduced costs, carried through pivots like a row.
    obj_pert: Vec<f64>,
    /// Variable id of each row's basic variable. Ids `0..n` are structural,
    /// `n + r` is the slack of the `r`-th row ever added.
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    slacks: usize,
    rng: SplitMix64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Unbounded,
    Infeasible,
}

impl Simplex {
    pub fn new(c: &[f64]) -> Self {
        let n = c.len();
        let mut obj: Vec<f64> = c.iter().map(|v| -v).collect();
        obj.extend([0.0, 0.0]);
        Self {
            n,
            rows: Vec::new(),
            obj,
            obj_pert: vec![0.0; n + 2],
            basic: Vec::new(),
            nonbasic: (0..n).collect(),
            slacks: 0,
            rng: SplitMix64::new(0x5eed),
            pivots: 0,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> f64 {
        self.obj[self.n]
    }

    /// Adds `a.x <= b` (dense in the structural variables), rewritten in
    /// terms of the current nonbasic columns.
    pub fn add_row(&mut self, a: &[f64], b: f64) {
        assert_eq!(a.len(), self.n);
        let mut row = vec![0.0; self.n + 2];
        for (k, &v) in self.nonbasic.iter().enumerate() {
            if v < self.n {
                row[k] = a[v];
            }
        }
        row[self.n] = b;
        for (r, &v) in self.basic.iter().enumerate() {
            if v < self.n && a[v] != 0.0 {
                let coef = a[v];
                for (dst, src) in row.iter_mut().zip(&self.rows[r]) {
                    *dst -= coef * src;
                }
            }
        }
        self.basic.push(self.n + self.slacks);
        self.slacks += 1;
        self.rows.push(row);
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let p = self.rows[r][k];
        let prow: Vec<f64> = {
            let row = &mut self.rows[r];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[k] = 1.0 / p;
            row.clone()
        };
        let update = |row: &mut Vec<f64>| {
            let f = row[k];
            if f != 0.0 {
                for (j, v) in row.iter_mut().enumerate() {
                    if j != k {
                        *v -= f * prow[j];
                    }
                }
                row[k] = -f / p;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                update(row);
            }
        }
        update(&mut self.obj);
        update(&mut self.obj_pert);
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[k]);
        self.pivots += 1;
    }

    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.n] + self.rows[r][self.n + 1]
    }

    fn cost(&self, k: usize) -> f64 {
        self.obj[k] + self.obj_pert[k]
    }

    /// Primal pivots until no reduced cost is negative. Returns the number of
    /// pivots, or `None` if unbounded.
    fn primal_core(&mut self, budget: usize) -> Result<Option<usize>> {
        let n = self.n;
        let mut degenerate = 0;
        for it in 0..budget {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter: Option<usize> = None;
            for k in 0..n {
                if self.cost(k) < -TOL {
                    enter = match enter {
                        None => Some(k),
                        Some(e) if bland && self.nonbasic[k] < self.nonbasic[e] => Some(k),
                        Some(e) if !bland && self.cost(k) < self.cost(e) => Some(k),
                        keep => keep,
                    };
                }
            }
            let Some(k) = enter else { return Ok(Some(it)) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][k];
                if a > TOL {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        Some((l, best)) if ratio > best || (ratio == best && self.basic[r] > self.basic[l]) => {
                            Some((l, best))
                        }
                        _ => Some((r, ratio)),
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Ok(None) };
            degenerate = if ratio <= TOL { degenerate + 1 } else { 0 };
            self.pivot(r, k);
        }
        Err(Error::Audit(format!("simplex exceeded {budget} pivots")))
    }

    /// Dual pivots until no right-hand side is negative. Returns the number
    /// of pivots, or `None` if the rows are infeasible.
    fn dual_core(&mut self, budget: usize) -> Result<Option<usize>> {
        let n = self.n;
        let mut degenerate = 0;
        for it in 0..budget {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut leave: Option<usize> = None;
            for r in 0..self.rows.len() {
                if self.rhs(r) < -TOL {
                    leave = match leave {
                        None => Some(r),
                        Some(l) if bland && self.basic[r] < self.basic[l] => Some(r),
                        Some(l) if !bland && self.rhs(r) < self.rhs(l) => Some(r),
                        keep => keep,
                    };
                }
            }
            let Some(r) = leave else { return Ok(Some(it)) };
            let mut enter: Option<(usize, f64)> = None;
            for k in 0..n {
                let a = self.rows[r][k];
                if a < -TOL {
                    let ratio = self.cost(k).max(0.0) / -a;
                    enter = match enter {
                        Some((e, best))
                            if ratio > best || (ratio == best && self.nonbasic[k] > self.nonbasic[e]) =>
                        {
                            Some((e, best))
                        }
                        _ => Some((k, ratio)),
                    };
                }
            }
            let Some((k, ratio)) = enter else { return Ok(None) };
            degenerate = if ratio <= TOL { degenerate + 1 } else { 0 };
            self.pivot(r, k);
        }
        Err(Error::Audit(format!("dual simplex exceeded {budget} pivots")))
    }

    fn perturb_rhs(&mut self) {
        let n = self.n;
        for r in 0..self.rows.len() {
            self.rows[r][n + 1] = PERTURB * (1.0 + self.rng.next_f64());
        }
    }

    fn perturb_costs(&mut self) {
        for k in 0..self.n {
            self.obj_pert[k] = PERTURB * (1.0 + self.rng.next_f64());
        }
    }

    fn clear_perturbations(&mut self) {
        let n = self.n;
        for row in &mut self.rows {
            row[n + 1] = 0.0;
        }
        self.obj_pert.iter_mut().for_each(|v| *v = 0.0);
    }

    /// With perturbations removed, alternates dual and primal passes until
    /// the basis is both primal and dual feasible.
    fn clean_up(&mut self, budget: usize) -> Result<Status> {
        self.clear_perturbations();
        for _ in 0..100 {
            let Some(d) = self.dual_core(budget)? else { return Ok(Status::Infeasible) };
            let Some(p) = self.primal_core(budget)? else { return Ok(Status::Unbounded) };
            if d == 0 && p == 0 {
                return Ok(Status::Optimal);
            }
        }
        Err(Error::Audit("simplex clean-up did not settle".into()))
    }

    /// Primal simplex from a feasible basis. Right-hand sides are perturbed
    /// at random while pivoting so that degenerate vertices are left quickly;
    /// the perturbation is then removed and the basis repaired exactly.
    /// Dantzig pricing, with Bland's rule during long degenerate stretches.
    pub fn solve_primal(&mut self, budget: usize) -> Result<Status> {
        self.perturb_rhs();
        if self.primal_core(budget)?.is_none() {
            return Ok(Status::Unbounded);
        }
        self.clean_up(budget)
    }

    /// Dual simplex from a dual-feasible basis, used after rows were added to
    /// an optimal tableau. Reduced costs are perturbed while pivoting.
    pub fn solve_dual(&mut self, budget: usize) -> Result<Status> {
        self.perturb_costs();
        if self.dual_core(budget)?.is_none() {
            self.clear_perturbations();
            return Ok(Status::Infeasible);
        }
        self.clean_up(budget)
    }

    /// Values of the structural variables at the current basis.
    pub fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (r, &v) in self.basic.iter().enumerate() {
            if v < self.n {
                x[v] = self.rows[r][self.n];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut s = Simplex::new(&[3.0, 5.0]);
        s.add_row(&[1.0, 0.0], 4.0);
        s.add_row(&[0.0, 2.0], 12.0);
        s.add_row(&[3.0, 2.0], 18.0);
        assert_eq!(s.solve_primal(100).unwrap(), Status::Optimal);
        assert!((s.objective() - 36.0).abs() < 1e-12);
        let x = s.solution();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        // cut y <= 5 and warm start: optimum (8/3, 5), 33
        s.add_row(&[0.0, 1.0], 5.0);
        assert_eq!(s.solve_dual(100).unwrap(), Status::Optimal);
        assert!((s.objective() - 33.0).abs() < 1e-12);
        let x = s.solution();
        assert!((x[0] - 8.0 / 3.0).abs() < 1e-12 && (x[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let mut s = Simplex::new(&[1.0, 1.0]);
        s.add_row(&[1.0, -1.0], 1.0);
        assert_eq!(s.solve_primal(100).unwrap(), Status::Unbounded);

        let mut s = Simplex::new(&[1.0]);
        s.add_row(&[1.0], 1.0);
        s.solve_primal(100).unwrap();
        s.add_row(&[-1.0], -2.0);
        assert_eq!(s.solve_dual(100).unwrap(), Status::Infeasible);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig pricing without a guard
        let c = [0.75, -150.0, 0.02, -6.0];
        let mut s = Simplex::new(&c);
        s.add_row(&[0.25, -60.0, -0.04, 9.0], 0.0);
        s.add_row(&[0.5, -90.0, -0.02, 3.0], 0.0);
        s.add_row(&[0.0, 0.0, 1.0, 0.0], 1.0);
        assert_eq!(s.solve_primal(10_000).unwrap(), Status::Optimal);
        assert!((s.objective() - 0.05).abs() < 1e-12);
    }

    /// Brute force over all vertices of small random LPs.
    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = crate::rng::SplitMix64::new(17);
        for _ in 0..200 {
            let n = 2;
            let m = 1 + rng.below(4);
            let c: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 2.0)).collect();
            let mut rows: Vec<(Vec<f64>, f64)> =
                (0..m).map(|_| ((0..n).map(|_| rng.uniform(-1.0, 2.0)).collect(), rng.uniform(0.0, 3.0))).collect();
            // keep the problem bounded
            rows.push((vec![1.0, 1.0], 5.0));
            let mut s = Simplex::new(&c);
            for (a, b) in &rows {
                s.add_row(a, *b);
            }
            assert_eq!(s.solve_primal(1000).unwrap(), Status::Optimal);
            // all pairs of tight constraints among rows and axes
            let mut lines: Vec<(Vec<f64>, f64)> = rows.clone();
            lines.push((vec![-1.0, 0.0], 0.0));
            lines.push((vec![0.0, -1.0], 0.0));
            let mut best = f64::NEG_INFINITY;
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    let (a, b) = (&lines[i], &lines[j]);
                    let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let x = (a.1 * b.0[1] - a.0[1] * b.1) / det;
                    let y = (a.0[0] * b.1 - a.1 * b.0[0]) / det;
                    let ok = lines.iter().all(|(r, rb)| r[0] * x + r[1] * y <= rb + 1e-9);
                    if ok {
                        best = best.max(c[0] * x + c[1] * y);
                    }
                }
            }
            assert!((s.objective() - best).abs() < 1e-9, "{} vs {best}", s.objective());
        }
    }
}
