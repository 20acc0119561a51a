//! Expected revenue of a menu, exactly via best-response regions and
//! approximately via Monte Carlo.

mod polygon;

pub use polygon::{polygon_mass, HalfPlane, Point, Polygon, Rect, CLIP_TOL};

use crate::dist::ProductDistribution;
use crate::error::{Error, Result};
use crate::model::{Menu, MenuEntry};

/// Regions below this area are dropped as clipping slivers.
const MIN_REGION_AREA: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Position in the menu's entry list; `None` for the null outcome.
    pub index: Option<usize>,
    pub entry: MenuEntry,
    pub polygon: Polygon,
}

/// Best-response regions of a menu over a rectangle, null region included.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDecomposition {
    pub support: Rect,
    pub regions: Vec<Region>,
}

impl RegionDecomposition {
    pub fn total_area(&self) -> f64 {
        self.regions.iter().map(|r| r.polygon.area()).sum()
    }
}

/// `u_e - u_f >= 0` as a half-plane in `(v1, v2)`.
fn prefers(e: &MenuEntry, f: &MenuEntry) -> HalfPlane {
    HalfPlane::new(e.q1() - f.q1(), e.q2() - f.q2(), f.t() - e.t())
}

/// Best-response regions by iterated half-plane clipping of `support`.
///
/// Entries are processed in a canonical order (price, then allocations) so
/// the decomposition, and every sum over it, does not depend on how the menu
/// happens to be listed. Shared boundaries have measure zero and are left in
/// both neighbours.
pub fn regions(menu: &Menu, support: Rect) -> RegionDecomposition {
    let entries = menu.entries();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].total_cmp(&entries[b]));

    let null = MenuEntry::null();
    let mut out = Vec::with_capacity(entries.len() + 1);
    let base = Polygon::rect(support);

    let mut null_poly = base.clone();
    for &k in &order {
        null_poly = null_poly.clip(&prefers(&null, &entries[k]));
        if null_poly.is_empty() {
            break;
        }
    }
    if null_poly.area() > MIN_REGION_AREA {
        out.push(Region { index: None, entry: null, polygon: null_poly });
    }

    for &i in &order {
        let e = &entries[i];
        let mut poly = base.clip(&prefers(e, &null));
        for &k in &order {
            if k == i || poly.is_empty() {
                continue;
            }
            poly = poly.clip(&prefers(e, &entries[k]));
        }
        if poly.area() > MIN_REGION_AREA {
            out.push(Region { index: Some(i), entry: *e, polygon: poly });
        }
    }
    RegionDecomposition { support, regions: out }
}

/// Exact expected payment: the sum over regions of price times mass.
pub fn revenue_exact(menu: &Menu, d: &ProductDistribution) -> f64 {
    revenue_of_regions(&regions(menu, Rect::of(d)), d)
}

pub fn revenue_of_regions(dec: &RegionDecomposition, d: &ProductDistribution) -> f64 {
    dec.regions
        .iter()
        .filter(|r| r.entry.t() > 0.0)
        .map(|r| r.entry.t() * polygon_mass(&r.polygon, d))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Sample mean and standard error of the payment over `n` draws.
pub fn revenue_mc(menu: &Menu, d: &ProductDistribution, n: usize, seed: u64) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("Monte Carlo needs n >= 2, got {n}")));
    }
    if menu.is_empty() {
        return Ok(McEstimate { estimate: 0.0, stderr: 0.0 });
    }
    // Welford's running mean and variance
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, v) in d.sample(n, seed).into_iter().enumerate() {
        let x = menu.payment(v);
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = m2 / (n - 1) as f64;
    Ok(McEstimate { estimate: mean, stderr: (var / n as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_corpus, BuyerType};
    use proptest::prelude::*;

    fn menu(t: &[(f64, f64, f64)]) -> Menu {
        Menu::from_triples(t).unwrap()
    }

    #[test]
    fn region_examples() {
        let dec = regions(&menu(&[(1.0, 1.0, 0.5)]), Rect::unit());
        assert_eq!(dec.regions.len(), 2);
        let null = dec.regions.iter().find(|r| r.index.is_none()).unwrap();
        assert_eq!(null.polygon.vertices().len(), 3);
        assert!((null.polygon.area() - 0.125).abs() < 1e-15);
        let sold = dec.regions.iter().find(|r| r.index == Some(0)).unwrap();
        assert_eq!(sold.polygon.vertices().len(), 5);

        let dec = regions(&Menu::empty(), Rect::unit());
        assert_eq!(dec.regions.len(), 1);
        assert_eq!(dec.regions[0].polygon, Polygon::rect(Rect::unit()));
    }

    #[test]
    fn two_single_good_entries() {
        let dec = regions(&menu(&[(1.0, 0.0, 0.3), (0.0, 1.0, 0.3)]), Rect::unit());
        assert_eq!(dec.regions.len(), 3);
        // null: [0,0.3]^2; each good region: half of the rest by v1 = v2
        let area = |i: Option<usize>| dec.regions.iter().find(|r| r.index == i).unwrap().polygon.area();
        assert!((area(None) - 0.09).abs() < 1e-15);
        assert!((area(Some(0)) - 0.455).abs() < 1e-15);
        assert!((area(Some(1)) - 0.455).abs() < 1e-15);
    }

    #[test]
    fn revenue_examples() {
        let u = ProductDistribution::uniform_squared();
        let b = ProductDistribution::beta12_squared();
        let m = menu(&[(1.0, 1.0, 0.5)]);
        assert!((revenue_exact(&m, &u) - 0.4375).abs() < 1e-15);
        assert!((revenue_exact(&m, &b) - 0.328125).abs() < 1e-14);
        assert_eq!(revenue_exact(&Menu::empty(), &b), 0.0);
    }

    #[test]
    fn bundle_revenue_matches_brute_force_integral() {
        // midpoint rule on a fine grid, with the best response evaluated per cell
        let b = ProductDistribution::beta12_squared();
        let m = menu(&[(1.0, 1.0, 0.5), (1.0, 0.0, 0.35), (0.3, 0.9, 0.3)]);
        let n = 1500;
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = BuyerType::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                acc += m.payment(v) * b.density(v);
            }
        }
        let brute = acc * h * h;
        assert!((revenue_exact(&m, &b) - brute).abs() < 2e-4, "{} vs {brute}", revenue_exact(&m, &b));
    }

    #[test]
    fn mc_examples() {
        let u = ProductDistribution::uniform_squared();
        let e = revenue_mc(&Menu::empty(), &u, 10, 3).unwrap();
        assert_eq!((e.estimate, e.stderr), (0.0, 0.0));
        let m = menu(&[(1.0, 1.0, 0.5)]);
        let a = revenue_mc(&m, &u, 1_000_000, 11).unwrap();
        assert!((a.estimate - 0.4375).abs() <= 3.0 * a.stderr);
        assert_eq!(a, revenue_mc(&m, &u, 1_000_000, 11).unwrap());
        assert!(revenue_mc(&m, &u, 1, 0).is_err());
    }

    #[test]
    fn regions_tile_the_square_and_match_best_response() {
        for m in random_corpus(40, 20, 5) {
            let dec = regions(&m, Rect::unit());
            assert!((dec.total_area() - 1.0).abs() < 1e-9);
            for r in &dec.regions {
                let c = r.polygon.centroid();
                if r.polygon.contains_interior(c, 1e-7) {
                    let chosen = m.best_index(BuyerType::new(c.x, c.y));
                    assert_eq!(chosen, r.index, "menu {m:?} at {c:?}");
                }
            }
        }
    }

    fn arb_menu() -> impl Strategy<Value = Menu> {
        prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64), 1..=12)
            .prop_map(|v| Menu::from_triples(&v).unwrap())
    }

    proptest! {
        #[test]
        fn revenue_is_permutation_invariant(m in arb_menu(), seed in any::<u64>()) {
            let b = ProductDistribution::beta12_squared();
            let mut e = m.entries().to_vec();
            let mut rng = crate::rng::SplitMix64::new(seed);
            for i in (1..e.len()).rev() {
                e.swap(i, rng.below(i + 1));
            }
            prop_assert_eq!(revenue_exact(&m, &b), revenue_exact(&Menu::new(e), &b));
        }

        #[test]
        fn scaled_prices_keep_a_proportional_share(m in arb_menu(), eps in 0.0..1.0f64) {
            let lambda = 1.0 - eps;
            let scaled = Menu::new(m.entries().iter().map(|e| MenuEntry::new(e.q1(), e.q2(), lambda * e.t()).unwrap()));
            for d in [ProductDistribution::uniform_squared(), ProductDistribution::beta12_squared()] {
                prop_assert!(revenue_exact(&scaled, &d) >= lambda * revenue_exact(&m, &d) - 1e-12);
            }
        }

        #[test]
        fn dominated_entry_changes_nothing(m in arb_menu(), k in any::<prop::sample::Index>(), bump in 0.01..0.5f64) {
            // same allocations as an existing entry, strictly higher price
            let e = m.entries()[k.index(m.len())];
            let extra = MenuEntry::new(e.q1(), e.q2(), e.t() + bump).unwrap();
            let b = ProductDistribution::beta12_squared();
            let a = revenue_exact(&m, &b);
            let c = revenue_exact(&m.with_entry(extra), &b);
            prop_assert!((a - c).abs() < 1e-12, "{} vs {}", a, c);
        }

        #[test]
        fn region_areas_sum_to_support(m in arb_menu()) {
            let r = Rect::new(0.0, 0.0, 1.0, 1.0);
            prop_assert!((regions(&m, r).total_area() - 1.0).abs() < 1e-9);
        }
    }
}
