//! The nine acceptance criteria, one test each. Every test prints a single
//! PASS/FAIL line to the real stdout (so it shows without `--nocapture`) and
//! then asserts.

use std::io::Write as _;
use std::time::Instant;

use menusize::dist::{myerson_price, Marginal, ProductDistribution};
use menusize::duality::{
    certify_gap_coarse, certify_gap_exact, column_balance, g, instance_constants, theorem_lower_constants,
};
use menusize::model::random_corpus;
use menusize::oracle::{opt_menu_sweep, opt_upper_bound, SearchOptions};
use menusize::plapprox::{greedy_pl_approx, loglog_slope, segment_lemma_check, sweep_row};
use menusize::revenue::{polygon_mass, revenue_exact, revenue_mc, Polygon, Rect};
use menusize::rng::SplitMix64;
use menusize::rounding::{
    boundary_prune, find_discount_witness, nudge_round_additive, pruned_size_bound, round_without_discount,
};
use menusize::{comm_complexity, Menu};
use menusize_cli::commands::{curve_rows, SLOPE_BAND};

const CORPUS_SEED: u64 = 2024;

fn corpus() -> Vec<Menu> {
    random_corpus(100, 20, CORPUS_SEED)
}

/// Writes past the test harness's output capture where the platform allows.
fn say(line: &str) {
    match std::fs::OpenOptions::new().append(true).open("/dev/stdout") {
        Ok(mut f) => {
            let _ = writeln!(f, "{line}");
        }
        Err(_) => println!("{line}"),
    }
}

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("{} criterion {n} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    say(&line);
    assert!(pass, "{line}");
}

fn dists() -> [ProductDistribution; 2] {
    [ProductDistribution::uniform_squared(), ProductDistribution::beta12_squared()]
}

#[test]
fn criterion_1_exact_revenue_agrees_with_monte_carlo() {
    let start = Instant::now();
    let mut agree = 0;
    let mut total = 0;
    for (i, m) in corpus().iter().enumerate() {
        for (j, d) in dists().iter().enumerate() {
            let exact = revenue_exact(m, d);
            let mc = revenue_mc(m, d, 1_000_000, 1000 + 2 * i as u64 + j as u64).unwrap();
            total += 1;
            if (exact - mc.estimate).abs() <= 3.0 * mc.stderr {
                agree += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "exact revenue vs Monte Carlo",
        agree >= 95 && secs <= 300.0,
        &format!("{agree}/{total} within 3 stderr (need >= 95), {secs:.1}s (limit 300s)"),
    );
}

#[test]
fn criterion_2_normalization_and_balance() {
    let mass = polygon_mass(&Polygon::rect(Rect::unit()), &ProductDistribution::beta12_squared());
    let xp = instance_constants().x_prime;
    let balance = (0..50)
        .map(|i| column_balance(xp * i as f64 / 49.0).unwrap().abs())
        .fold(0.0f64, f64::max);
    // f = 4(1 - x1)(1 - x2), written out by hand
    let hazard = |x1: f64, x2: f64| {
        let f = 4.0 * (1.0 - x1) * (1.0 - x2);
        let (f1, f2) = (-4.0 * (1.0 - x2), -4.0 * (1.0 - x1));
        3.0 * f + x1 * f1 + x2 * f2
    };
    let mut rng = SplitMix64::new(5);
    let mut worst_g = 0.0f64;
    for _ in 0..1000 {
        let (x1, x2) = (rng.uniform(0.0, xp), rng.next_f64());
        worst_g = worst_g.max((g(x1, x2) + hazard(x1, x2)).abs());
    }
    report(
        2,
        "normalization and balance",
        (mass - 1.0).abs() <= 1e-12 && balance <= 1e-8 && worst_g <= 1e-12,
        &format!("mass-1 = {:e}, max |column_balance| = {balance:e}, max |g + 3f + x.grad f| = {worst_g:e}", mass - 1.0),
    );
}

fn boundary_menu(rng: &mut SplitMix64) -> Menu {
    let n = 1 + rng.below(60);
    let triples: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            let (q, t) = (rng.next_f64(), rng.next_f64());
            match rng.below(4) {
                0 => (1.0, q, t),
                1 => (q, 1.0, t),
                2 => (0.0, q, t),
                _ => (q, 0.0, t),
            }
        })
        .collect();
    Menu::from_triples(&triples).unwrap()
}

#[test]
fn criterion_3_nudge_and_round_guarantee() {
    let corpus = corpus();
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for m in &corpus {
        for eps in [0.05, 0.1, 0.2] {
            let r = nudge_round_additive(m, eps).unwrap();
            for d in dists() {
                let slack = revenue_exact(&r, &d) - ((1.0 - eps) * revenue_exact(m, &d) - eps);
                worst = worst.min(slack);
                if slack < -1e-10 {
                    violations += 1;
                }
            }
        }
    }

    let mut rng = SplitMix64::new(17);
    let mut size_failures = 0;
    let mut largest = (0, 0);
    for _ in 0..300 {
        let m = boundary_menu(&mut rng);
        // 1/eps^2 is exactly 400, 100, 25
        for (eps, inv_sq) in [(0.05, 400), (0.1, 100), (0.2, 25)] {
            let p = boundary_prune(&nudge_round_additive(&m, eps).unwrap());
            let bound = 4 * (inv_sq + 1) + 1;
            assert_eq!(bound, pruned_size_bound(eps));
            if p.warning.is_some() || p.menu.menu_size() > bound {
                size_failures += 1;
            }
            largest = largest.max((p.menu.menu_size(), bound));
        }
    }

    let eps = 0.1;
    let w = find_discount_witness(&corpus, eps).unwrap();
    let witness_ok = match &w {
        Some(w) => {
            let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("discount_witness.txt");
            w.save(&path).unwrap();
            let back = Menu::read(&path).unwrap();
            let loss = revenue_exact(&back, &w.dist) - revenue_exact(&round_without_discount(&back, eps).unwrap(), &w.dist);
            say(&format!("  witness ({}) persisted to {}, plain loss {loss}", w.source, path.display()));
            back == w.menu && loss > eps
        }
        None => false,
    };
    report(
        3,
        "nudge-and-round guarantee",
        violations == 0 && size_failures == 0 && witness_ok,
        &format!(
            "{violations} guarantee violations (worst slack {worst:e}), {size_failures} pruned-size failures \
             (largest {} vs bound {}), discount witness found: {witness_ok}",
            largest.0, largest.1
        ),
    );
}

#[test]
fn criterion_4_approximation_suite() {
    let start = Instant::now();
    let k = instance_constants();
    let mut lemma_bad = 0;
    let mut adversary_bad = 0;
    let mut min_dev = f64::INFINITY;
    for (i, delta) in [1e-6, 1e-7, 1e-8].into_iter().enumerate() {
        lemma_bad += segment_lemma_check(delta, 10_000, 31 + i as u64).unwrap().violations;
        let row = sweep_row(delta, 50, 41 + i as u64).unwrap();
        adversary_bad += row.violations;
        if let Some(m) = row.min_deviation {
            min_dev = min_dev.min(m);
        }
    }
    let deltas: Vec<f64> = (0..13).map(|i| 1e-9 * 10f64.powf(i as f64 * 0.25)).collect();
    let counts: Vec<f64> = deltas.iter().map(|&d| greedy_pl_approx(d).unwrap().len() as f64).collect();
    let slope = loglog_slope(&deltas, &counts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        "approximation suite",
        lemma_bad == 0 && adversary_bad == 0 && (slope + 0.5).abs() <= 0.05 && secs <= 600.0,
        &format!(
            "{lemma_bad} lemma violations, {adversary_bad} adversary violations (min deviation {min_dev} vs x'/2 = {}), \
             greedy slope {slope:.4}, {secs:.1}s",
            k.x_prime / 2.0
        ),
    );
}

#[test]
fn criterion_5_parameter_identities() {
    let k = instance_constants();
    let mut worst_id = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for eps in [1e-12, 3e-11, 1e-10, 7e-9, 1e-7, 2e-6] {
        let t = theorem_lower_constants(eps).unwrap();
        let lhs = (t.delta / 4.0) * (t.delta / 2.0) * (k.x_prime / 2.0) * k.d;
        worst_id = worst_id.max((lhs / (eps / 2.0) - 1.0).abs());
        let t16 = theorem_lower_constants(eps / 16.0).unwrap();
        worst_ratio = worst_ratio.max((t16.c / t.c - 2.0).abs());
    }
    // radius of curvature of x2 = (2-3x)/(4-5x) at x = 0, where it peaks:
    // S' = -1/8, S'' = -5/16
    let r_oracle = (1.0f64 + 1.0 / 64.0).powf(1.5) / (5.0 / 16.0);
    let ok = worst_id <= 1e-12
        && worst_ratio <= 1e-9
        && (k.x_prime - 0.06187679).abs() <= 1e-7
        && (k.r - r_oracle).abs() <= 1e-3
        && (k.r - 3.2754).abs() <= 1e-3
        && k.d > 0.0;
    report(
        5,
        "parameter identities",
        ok,
        &format!(
            "identity rel err {worst_id:e}, |C(eps/16)/C(eps) - 2| = {worst_ratio:e}, x' = {}, r = {} (oracle {r_oracle}), \
             d = {} on strip |x2 - S(x1)| <= {} ({}x{} audit)",
            k.x_prime, k.r, k.d, k.delta_max, k.audit_grid.0, k.audit_grid.1
        ),
    );
}

#[test]
fn criterion_6_certificate_soundness() {
    let b = ProductDistribution::beta12_squared();
    let ub = opt_upper_bound(&b, 12).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut coarse_bad = 0;
    for m in corpus() {
        let cert = certify_gap_exact(&m, 64).unwrap().certified_gap;
        worst = worst.max(revenue_exact(&m, &b) + cert - ub);
        for delta in [1e-4, 1e-3, 5e-3, 1e-2, 2e-2] {
            if certify_gap_coarse(&m, delta).unwrap().certified_gap > cert {
                coarse_bad += 1;
            }
        }
    }
    report(
        6,
        "certificate soundness",
        worst <= 1e-6 && coarse_bad == 0,
        &format!("max (rev + cert - upper bound) = {worst:e} (upper bound {ub}), {coarse_bad} coarse > exact"),
    );
}

#[test]
fn criterion_7_finite_menus_are_suboptimal() {
    let b = ProductDistribution::beta12_squared();
    let sweep = opt_menu_sweep(&b, 6, &SearchOptions::default()).unwrap();
    let certs: Vec<f64> = sweep.iter().map(|(m, _)| certify_gap_exact(m, 64).unwrap().certified_gap).collect();
    // closed form of the empty-menu column slack integral, with u = 5a - 1
    let xp = instance_constants().x_prime;
    let prim = |u: f64| u * u / 2.0 + 3.0 * u + 3.0 * u.ln() - 1.0 / u;
    let closed = 8.0 / 1875.0 * (prim(4.0) - prim(4.0 - 5.0 * xp));
    let empty = certify_gap_exact(&Menu::empty(), 64).unwrap().certified_gap;
    let below: Vec<usize> = certs.iter().enumerate().filter(|(_, &c)| c <= 1e-5).map(|(i, _)| i + 1).collect();
    let list = certs.iter().enumerate().map(|(i, c)| format!("C={}: {c:.3e}", i + 1)).collect::<Vec<_>>().join(", ");
    report(
        7,
        "finite menus are suboptimal",
        below.is_empty() && (empty - closed).abs() <= 1e-4 && (closed - 0.0101).abs() <= 1e-4,
        &format!("certificates {list}; at or below 1e-5 for C in {below:?}; empty menu {empty} vs closed form {closed}"),
    );
}

fn ceil_log2(n: usize) -> u32 {
    let mut bits = 0;
    while (1usize << bits) < n {
        bits += 1;
    }
    bits
}

#[test]
fn criterion_8_myerson_and_conversions() {
    let p = myerson_price(&Marginal::beta12());
    let myerson_ok = (p.price - 1.0 / 3.0).abs() <= 1e-9 && (p.revenue - 4.0 / 27.0).abs() <= 1e-9;
    let cc2 = comm_complexity(2).unwrap();
    let mut mismatches = 0;
    let mut checked = 0;
    for m in corpus().iter().take(30) {
        for eps in [0.05, 0.1, 0.2] {
            let size = nudge_round_additive(m, eps).unwrap().menu_size();
            checked += 1;
            if comm_complexity(size).unwrap() != ceil_log2(size) {
                mismatches += 1;
            }
        }
    }
    report(
        8,
        "Myerson and conversions",
        myerson_ok && cc2 == 1 && mismatches == 0,
        &format!("price {} revenue {}, comm_complexity(2) = {cc2}, {mismatches}/{checked} size mismatches", p.price, p.revenue),
    );
}

#[test]
fn criterion_9_gap_curve() {
    let b = ProductDistribution::beta12_squared();
    let cv = curve_rows(&b, 6, 12, &SearchOptions::default()).unwrap();
    let gaps: Vec<f64> = cv.rows.iter().map(|r| r.gap_vs_upper_bound).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let band = if cv.slope_in_band() { "inside" } else { "WARNING: outside" };
    report(
        9,
        "gap curve",
        monotone,
        &format!(
            "gaps {:?} nonincreasing: {monotone}; log-log slope {:?} {band} [{}, {}] (soft)",
            gaps, cv.slope, SLOPE_BAND.0, SLOPE_BAND.1
        ),
    );
}
