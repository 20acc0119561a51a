//! Menu compression by rounding prices down to a grid and discounting them.
//!
//! The additive scheme replaces every price `t` by `(1-eps) floor_{eps^2}(t)`.
//! A buyer may switch to another entry after rounding, but never to one that
//! was more than `eps` cheaper in the original menu, because the discount
//! makes cheaper entries relatively less attractive. So every type pays at
//! least `(1-eps) t - eps` and the menu collapses to `O(1/eps^2)` price levels.

use std::path::Path;

use crate::dist::ProductDistribution;
use crate::error::{Error, Result};
use crate::model::{random_corpus, Menu, MenuEntry};
use crate::revenue::revenue_exact;

/// Slack added before flooring so that grid prices stay on their own level.
const FLOOR_SLACK: f64 = 1e-9;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("epsilon must lie in (0,1), got {epsilon}")))
    }
}

/// `t` rounded down to a multiple of `step`. When `1/step` is an integer `n`
/// the result is `k / n`, so grids such as `0.1` land on the decimal values.
pub fn floor_to(t: f64, step: f64) -> f64 {
    let n = (1.0 / step).round();
    if (1.0 / step - n).abs() <= 1e-9 * n {
        (t * n + FLOOR_SLACK).floor() / n
    } else {
        step * (t / step + FLOOR_SLACK).floor()
    }
}

fn map_prices(menu: &Menu, f: impl Fn(f64) -> f64) -> Result<Menu> {
    let entries = menu
        .entries()
        .iter()
        .map(|e| MenuEntry::new(e.q1(), e.q2(), f(e.t())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Menu::new(entries))
}

fn check_unit_prices(menu: &Menu) -> Result<()> {
    match menu.entries().iter().find(|e| e.t() > 1.0) {
        Some(e) => Err(Error::Precondition(format!("price {} exceeds 1", e.t()))),
        None => Ok(()),
    }
}

/// Prices become `(1-eps)` times `t` rounded down to a multiple of `eps^2`;
/// allocations are kept and exact duplicates merged.
pub fn nudge_round_additive(menu: &Menu, epsilon: f64) -> Result<Menu> {
    check_epsilon(epsilon)?;
    check_unit_prices(menu)?;
    let step = epsilon * epsilon;
    map_prices(menu, |t| (1.0 - epsilon) * floor_to(t, step))
}

/// The same price grid without the discount. Used to show that the discount
/// cannot be dropped.
pub fn round_without_discount(menu: &Menu, epsilon: f64) -> Result<Menu> {
    check_epsilon(epsilon)?;
    check_unit_prices(menu)?;
    let step = epsilon * epsilon;
    map_prices(menu, |t| floor_to(t, step))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub menu: Menu,
    /// Set when some entry awards both goods with probability strictly
    /// inside `(0,1)`; the menu is then returned unchanged.
    pub warning: Option<String>,
}

fn on_boundary(e: &MenuEntry) -> bool {
    let edge = |q: f64| q == 0.0 || q == 1.0;
    edge(e.q1()) || edge(e.q2())
}

/// Keeps, at every price level, only entries not dominated by another entry
/// at the same price. For boundary menus this leaves at most one entry per
/// boundary case (`q1 = 1`, `q2 = 1`, `q1 = 0`, `q2 = 0`) and price level,
/// and no type changes what it pays.
pub fn boundary_prune(menu: &Menu) -> PruneOutcome {
    if let Some(e) = menu.entries().iter().find(|e| !on_boundary(e)) {
        return PruneOutcome {
            menu: menu.clone(),
            warning: Some(format!("entry ({e}) has both allocations strictly inside (0,1)")),
        };
    }
    let es = menu.entries();
    let dominated = |i: usize| {
        let e = &es[i];
        es.iter().enumerate().any(|(j, f)| {
            j != i
                && f.t() == e.t()
                && f.q1() >= e.q1()
                && f.q2() >= e.q2()
                // among equal entries keep the first
                && (f.q1() > e.q1() || f.q2() > e.q2() || j < i)
        })
    };
    let kept: Vec<MenuEntry> = (0..es.len()).filter(|&i| !dominated(i)).map(|i| es[i]).collect();
    PruneOutcome { menu: Menu::new(kept), warning: None }
}

/// Allocations rounded down to multiples of `eps`, then the additive price
/// rounding. A reconstruction: only its size bound is asserted.
pub fn nudge_round_full(menu: &Menu, epsilon: f64) -> Result<Menu> {
    check_epsilon(epsilon)?;
    let entries = menu
        .entries()
        .iter()
        .map(|e| MenuEntry::new(floor_to(e.q1(), epsilon).min(1.0), floor_to(e.q2(), epsilon).min(1.0), e.t()))
        .collect::<Result<Vec<_>>>()?;
    nudge_round_additive(&Menu::new(entries), epsilon)
}

/// `(floor(1/eps) + 1)^2 (floor(1/eps^2) + 1) + 1`.
pub fn full_size_bound(epsilon: f64) -> usize {
    let a = (1.0 / epsilon + FLOOR_SLACK).floor() as usize + 1;
    let p = (1.0 / (epsilon * epsilon) + FLOOR_SLACK).floor() as usize + 1;
    a * a * p + 1
}

/// `4 (floor(1/eps^2) + 1) + 1`.
pub fn pruned_size_bound(epsilon: f64) -> usize {
    4 * ((1.0 / (epsilon * epsilon) + FLOOR_SLACK).floor() as usize + 1) + 1
}

/// Geometric price grid `(1+eps^2)^k`, `k = -1..=K`, with `K` the largest
/// exponent keeping the point at most `h`.
pub fn multiplicative_grid(epsilon: f64, h: f64) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    if !(h > 1.0 && h.is_finite()) {
        return Err(Error::OutOfRange(format!("H must exceed 1, got {h}")));
    }
    let base = 1.0 + epsilon * epsilon;
    let mut k_max = (h.ln() / base.ln()).floor() as i32;
    while base.powi(k_max + 1) <= h {
        k_max += 1;
    }
    while base.powi(k_max) > h {
        k_max -= 1;
    }
    Ok((-1..=k_max).map(|k| base.powi(k)).collect())
}

/// Prices rounded down to the geometric grid (below its first point: to 0),
/// then multiplied by `1-eps`. A reconstruction for values in `[1, H]`.
pub fn nudge_round_multiplicative(menu: &Menu, epsilon: f64, h: f64) -> Result<Menu> {
    let grid = multiplicative_grid(epsilon, h)?;
    if let Some(e) = menu.entries().iter().find(|e| e.t() > h) {
        return Err(Error::Precondition(format!("price {} exceeds H = {h}", e.t())));
    }
    map_prices(menu, |t| {
        let k = grid.partition_point(|&g| g <= t);
        (1.0 - epsilon) * if k == 0 { 0.0 } else { grid[k - 1] }
    })
}

/// A menu and distribution where rounding prices down without the discount
/// loses more than `eps` of revenue.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountWitness {
    pub menu: Menu,
    pub dist: ProductDistribution,
    pub epsilon: f64,
    pub revenue: f64,
    pub revenue_plain: f64,
    pub revenue_discounted: f64,
    /// Where the witness came from: `corpus` or `structured`.
    pub source: &'static str,
}

impl DiscountWitness {
    pub fn loss_plain(&self) -> f64 {
        self.revenue - self.revenue_plain
    }

    /// Menu file with the context in leading comment lines, readable by
    /// [`Menu::parse`].
    pub fn to_text(&self) -> String {
        format!(
            "# discount witness\n# source={}\n# dist={}\n# epsilon={}\n# revenue={}\n# revenue_rounded_plain={}\n# revenue_rounded_discounted={}\n# loss_plain={}\n{}",
            self.source,
            self.dist,
            self.epsilon,
            self.revenue,
            self.revenue_plain,
            self.revenue_discounted,
            self.loss_plain(),
            self.menu.to_text()
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn witness_for(menu: &Menu, dist: &ProductDistribution, epsilon: f64, source: &'static str) -> Result<Option<DiscountWitness>> {
    let revenue = revenue_exact(menu, dist);
    let revenue_plain = revenue_exact(&round_without_discount(menu, epsilon)?, dist);
    if revenue - revenue_plain <= epsilon {
        return Ok(None);
    }
    let revenue_discounted = revenue_exact(&nudge_round_additive(menu, epsilon)?, dist);
    Ok(Some(DiscountWitness {
        menu: menu.clone(),
        dist: dist.clone(),
        epsilon,
        revenue,
        revenue_plain,
        revenue_discounted,
        source,
    }))
}

/// Searches `corpus` under the uniform and beta12 squares first, then a
/// two-entry family on values concentrated near `(1,1)`: a bundle `(1,1)`
/// and a cheaper scaled-down bundle priced just above a grid point. Rounding
/// shrinks the price gap below the allocation gap times the value, and the
/// whole population slides to the cheap entry.
pub fn find_discount_witness(corpus: &[Menu], epsilon: f64) -> Result<Option<DiscountWitness>> {
    check_epsilon(epsilon)?;
    let standard = [ProductDistribution::uniform_squared(), ProductDistribution::beta12_squared()];
    for m in corpus {
        for d in &standard {
            if let Some(w) = witness_for(m, d, epsilon, "corpus")? {
                return Ok(Some(w));
            }
        }
    }
    let step = epsilon * epsilon;
    for width in [0.05, 0.02, 0.1, 0.2] {
        let dist = ProductDistribution::iid(crate::dist::Marginal::uniform(1.0 - width, 1.0)?);
        for lambda in [0.9, 0.8, 0.95, 0.7] {
            for top in [0.7, 0.8, 0.9, 1.0, 0.6] {
                // cheap price: just above the grid point that makes the
                // rounded gap exactly `(1 - lambda) * 2`
                let cheap = floor_to(top - (1.0 - lambda) * 2.0, step) + 0.9 * step;
                if cheap <= 0.0 || cheap >= top {
                    continue;
                }
                let m = Menu::from_triples(&[(1.0, 1.0, top), (lambda, lambda, cheap)])?;
                if let Some(w) = witness_for(&m, &dist, epsilon, "structured")? {
                    return Ok(Some(w));
                }
            }
        }
    }
    Ok(None)
}

/// Convenience for corpus-driven searches.
pub fn find_discount_witness_in_random_corpus(count: usize, seed: u64, epsilon: f64) -> Result<Option<DiscountWitness>> {
    find_discount_witness(&random_corpus(count, 20, seed), epsilon)
}
