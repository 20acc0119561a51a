use crate::dist::{myerson_price, ProductDistribution};
use crate::model::Menu;
use crate::revenue::revenue_exact;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baselines {
    /// Sum of the per-good Myerson revenues.
    pub srev: f64,
    /// Best revenue from one bundle price.
    pub brev: f64,
    pub bundle_price: f64,
}

fn bundle_revenue(d: &ProductDistribution, p: f64) -> f64 {
    Menu::from_triples(&[(1.0, 1.0, p)]).map_or(0.0, |m| revenue_exact(&m, d))
}

/// Best bundle price: a scan over the support of `v1 + v2`, then golden
/// section inside the best scan cell.
pub fn bundle_price(d: &ProductDistribution) -> (f64, f64) {
    let (lo1, lo2, hi1, hi2) = d.support();
    let (lo, hi) = (lo1 + lo2, hi1 + hi2);
    let n = 2000;
    let step = (hi - lo) / n as f64;
    let (mut best_p, mut best_r) = (lo, bundle_revenue(d, lo));
    for k in 1..=n {
        let p = lo + k as f64 * step;
        let r = bundle_revenue(d, p);
        if r > best_r {
            (best_p, best_r) = (p, r);
        }
    }
    let (mut a, mut b) = ((best_p - step).max(lo), (best_p + step).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (bundle_revenue(d, x1), bundle_revenue(d, x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + phi * (b - a);
            f2 = bundle_revenue(d, x2);
        } else {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - phi * (b - a);
            f1 = bundle_revenue(d, x1);
        }
    }
    for (p, r) in [(x1, f1), (x2, f2)] {
        if r > best_r {
            (best_p, best_r) = (p, r);
        }
    }
    (best_p, best_r)
}

pub fn baselines(d: &ProductDistribution) -> Baselines {
    let srev = myerson_price(&d.m1).revenue + myerson_price(&d.m2).revenue;
    let (bundle_price, brev) = bundle_price(d);
    Baselines { srev, brev, bundle_price }
}

/// Named baseline menus: bundle only, each good alone, and separate sales
/// (which need the bundle entry priced at the sum to stay a menu).
pub fn baseline_menus(d: &ProductDistribution) -> Vec<(&'static str, Menu)> {
    let (p1, p2) = (myerson_price(&d.m1).price, myerson_price(&d.m2).price);
    let (pb, _) = bundle_price(d);
    let menu = |t: &[(f64, f64, f64)]| Menu::from_triples(t).expect("baseline entries are valid");
    vec![
        ("bundle", menu(&[(1.0, 1.0, pb)])),
        ("good1", menu(&[(1.0, 0.0, p1)])),
        ("good2", menu(&[(0.0, 1.0, p2)])),
        ("separate", menu(&[(1.0, 0.0, p1), (0.0, 1.0, p2), (1.0, 1.0, p1 + p2)])),
    ]
}
