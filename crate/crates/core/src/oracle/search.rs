//! Local search for good menus under a menu-size budget.

use super::baselines::baseline_menus;
use crate::dist::ProductDistribution;
use crate::error::{Error, Result};
use crate::model::{Menu, MenuEntry};
use crate::revenue::revenue_exact;
use crate::rng::SplitMix64;

const STEPS: [f64; 9] = [0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5];
const MAX_PASSES: usize = 40;
const GAIN: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Keep `q2 = 0` in every entry.
    pub single_good: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { restarts: 4, seed: 1, single_good: false }
    }
}

struct Search<'a> {
    d: &'a ProductDistribution,
    single_good: bool,
}

impl Search<'_> {
    fn revenue(&self, es: &[[f64; 3]]) -> f64 {
        revenue_exact(&self.menu(es), self.d)
    }

    fn menu(&self, es: &[[f64; 3]]) -> Menu {
        Menu::new(es.iter().map(|e| MenuEntry::new(e[0], e[1], e[2]).expect("search keeps entries valid")))
    }

    fn random_entry(&self, rng: &mut SplitMix64) -> [f64; 3] {
        let q1 = rng.next_f64();
        let q2 = if self.single_good { 0.0 } else { rng.next_f64() };
        [q1, q2, rng.next_f64() * (q1 + q2).min(1.0)]
    }

    fn coords(&self) -> &'static [usize] {
        if self.single_good {
            &[0, 2]
        } else {
            &[0, 1, 2]
        }
    }

    /// Coordinate moves with a shrinking step; also shifts a whole entry's
    /// price together with one allocation so that ridges along which
    /// `q.v - t` stays fixed are followed.
    fn polish(&self, mut es: Vec<[f64; 3]>) -> (Vec<[f64; 3]>, f64) {
        let mut best = self.revenue(&es);
        for step in STEPS {
            for _ in 0..MAX_PASSES {
                let mut improved = false;
                for i in 0..es.len() {
                    for &c in self.coords() {
                        for dir in [1.0, -1.0] {
                            let mut trial = es.clone();
                            let x = &mut trial[i][c];
                            *x = (*x + dir * step).clamp(0.0, if c == 2 { f64::MAX } else { 1.0 });
                            if trial[i][2] > 2.0 {
                                continue;
                            }
                            let r = self.revenue(&trial);
                            if r > best + GAIN {
                                (es, best, improved) = (trial, r, true);
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        (es, best)
    }

    /// Drops entries whose removal costs nothing.
    fn trim(&self, mut es: Vec<[f64; 3]>, rev: f64) -> Vec<[f64; 3]> {
        let mut i = 0;
        while i < es.len() {
            let mut trial = es.clone();
            trial.remove(i);
            if self.revenue(&trial) >= rev {
                es = trial;
            } else {
                i += 1;
            }
        }
        es
    }
}

fn entries_of(m: &Menu) -> Vec<[f64; 3]> {
    m.entries().iter().map(|e| [e.q1(), e.q2(), e.t()]).collect()
}

/// Best menus for budgets `1..=c_max`. Each budget starts from the previous
/// winner plus one entry, from the baselines that fit, and from random
/// menus, so revenue never decreases with the budget.
pub fn opt_menu_sweep(d: &ProductDistribution, c_max: usize, opts: &SearchOptions) -> Result<Vec<(Menu, f64)>> {
    if c_max == 0 {
        return Err(Error::OutOfRange("menu-size budget must be at least 1".into()));
    }
    let s = Search { d, single_good: opts.single_good };
    let baselines: Vec<Vec<[f64; 3]>> = baseline_menus(d)
        .into_iter()
        .map(|(_, m)| entries_of(&m))
        .filter(|es| !opts.single_good || es.iter().all(|e| e[1] == 0.0))
        .collect();
    let mut out: Vec<(Menu, f64)> = vec![(Menu::empty(), 0.0)];
    let mut prev: Vec<[f64; 3]> = Vec::new();
    for c in 2..=c_max {
        let k = c - 1;
        let mut rng = SplitMix64::fork(opts.seed, c as u64);
        let mut starts: Vec<Vec<[f64; 3]>> = Vec::new();
        // previous winner plus the most useful of a few random entries
        let mut extended = prev.clone();
        if extended.len() < k {
            let mut best_extra: Option<([f64; 3], f64)> = None;
            for _ in 0..16 {
                let e = s.random_entry(&mut rng);
                let mut t = prev.clone();
                t.push(e);
                let r = s.revenue(&t);
                if best_extra.is_none_or(|(_, b)| r > b) {
                    best_extra = Some((e, r));
                }
            }
            extended.push(best_extra.expect("candidates drawn").0);
        }
        starts.push(prev.clone());
        starts.push(extended);
        for b in &baselines {
            if b.len() <= k {
                starts.push(b.clone());
            }
        }
        for _ in 0..opts.restarts {
            starts.push((0..k).map(|_| s.random_entry(&mut rng)).collect());
        }
        let mut best: Option<(Vec<[f64; 3]>, f64)> = None;
        for st in starts {
            let (es, r) = s.polish(st);
            if best.as_ref().is_none_or(|(_, b)| r > *b) {
                best = Some((es, r));
            }
        }
        let (es, r) = best.expect("at least one start");
        let es = s.trim(es, r);
        let r = s.revenue(&es);
        out.push((s.menu(&es), r));
        prev = es;
    }
    Ok(out)
}

/// Best menu found with `menu_size <= c`.
pub fn opt_menu_search(d: &ProductDistribution, c: usize, opts: &SearchOptions) -> Result<Menu> {
    Ok(opt_menu_sweep(d, c, opts)?.pop().expect("nonempty sweep").0)
}
