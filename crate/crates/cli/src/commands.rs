//! Subcommand bodies. Each writes its CSV and a manifest into the output
//! directory.

use menusize::dist::{hazard_check, myerson_price, ProductDistribution};
use menusize::duality::{
    certify_gap_coarse, certify_gap_exact, column_balance, instance_constants, X_PRIME_REFERENCE,
};
use menusize::model::random_corpus;
use menusize::oracle::{baselines, opt_grid_lp, opt_menu_sweep, opt_upper_bounds, SearchOptions};
use menusize::plapprox::{chord_bound, loglog_slope, segment_lemma_check, sweep_row};
use menusize::revenue::{polygon_mass, revenue_exact, revenue_mc, Polygon, Rect};
use menusize::rounding::{
    boundary_prune, nudge_round_additive, nudge_round_full, nudge_round_multiplicative,
};
use menusize::{comm_complexity, Menu};

use crate::output::{num, Output};
use crate::plot::{render_svg, PlotSpec};
use crate::{
    CertifyArgs, Cli, CliError, CliResult, Command, CurveArgs, EvalArgs, HazardArgs, OptimizeArgs, OracleArgs,
    PlapproxArgs, PlotArgs, RoundArgs, RoundMode, SelftestArgs,
};

/// Band for the log-log slope of the gap curve; outside it only warns.
pub const SLOPE_BAND: (f64, f64) = (-4.0, -0.4);

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let out = Output::new(cli.out_dir)?;
    match cli.command {
        Command::Eval(a) => eval(&a, &out),
        Command::Round(a) => round(&a, &out),
        Command::Certify(a) => certify(&a, &out),
        Command::Plapprox(a) => plapprox(&a, &out),
        Command::Optimize(a) => optimize(&a, &out),
        Command::Oracle(a) => oracle(&a, &out),
        Command::Hazard(a) => hazard(&a, &out),
        Command::Curve(a) => curve(&a, &out),
        Command::Selftest(a) => selftest(&a, &out),
        Command::Plot(a) => plot(&a, &out),
    }
}

fn dist(spec: &str) -> CliResult<ProductDistribution> {
    Ok(spec.parse()?)
}

fn read_menu(path: &std::path::Path) -> CliResult<Menu> {
    Menu::read(path).map_err(|e| match e {
        menusize::Error::Io(io) => CliError::Input(format!("{}: {io}", path.display())),
        other => CliError::Core(other),
    })
}


fn eval(a: &EvalArgs, out: &Output) -> CliResult<()> {
    let d = dist(&a.dist)?;
    let m = read_menu(&a.menu)?;
    let exact = revenue_exact(&m, &d);
    let (mc, se, z) = if a.mc == 0 {
        (String::new(), String::new(), String::new())
    } else {
        let e = revenue_mc(&m, &d, a.mc, a.seed)?;
        let z = if e.stderr > 0.0 { (exact - e.estimate) / e.stderr } else { 0.0 };
        (num(e.estimate), num(e.stderr), num(z))
    };
    let row = vec![
        a.menu.display().to_string(),
        d.to_string(),
        m.menu_size().to_string(),
        comm_complexity(m.menu_size())?.to_string(),
        num(exact),
        mc,
        se,
        z,
    ];
    out.write_csv(
        "eval.csv",
        &["menu", "dist", "menu_size", "comm_bits", "revenue_exact", "revenue_mc", "mc_stderr", "z_score"],
        &[row],
    )?;
    out.write_manifest(
        "eval.csv",
        "eval",
        &[("menu", a.menu.display().to_string()), ("dist", a.dist.clone()), ("mc", a.mc.to_string()), ("seed", a.seed.to_string())],
        &[],
    )?;
    println!("revenue_exact={exact}");
    Ok(())
}

fn round(a: &RoundArgs, out: &Output) -> CliResult<()> {
    let d = dist(&a.dist)?;
    let m = read_menu(&a.menu)?;
    let eps = a.epsilon;
    let rounded = match a.mode {
        RoundMode::Additive => nudge_round_additive(&m, eps)?,
        RoundMode::Full => nudge_round_full(&m, eps)?,
        RoundMode::Multiplicative => {
            let h = a.h.ok_or_else(|| CliError::Usage("--h is required for the multiplicative mode".into()))?;
            nudge_round_multiplicative(&m, eps, h)?
        }
    };
    let (rounded, warning) = if a.prune {
        let p = boundary_prune(&rounded);
        if let Some(w) = &p.warning {
            eprintln!("warning: boundary_prune skipped: {w}");
        }
        (p.menu, p.warning)
    } else {
        (rounded, None)
    };
    let before = revenue_exact(&m, &d);
    let after = revenue_exact(&rounded, &d);
    // the additive guarantee is a theorem; the other targets are empirical
    let target = match a.mode {
        RoundMode::Multiplicative => (1.0 - 3.0 * eps) * before,
        _ => (1.0 - eps) * before - eps,
    };
    let slack = after - target;
    out.write_text(&a.output, &rounded.to_text())?;
    let mode = format!("{:?}", a.mode).to_lowercase();
    out.write_csv(
        "round.csv",
        &["epsilon", "mode", "size_before", "size_after", "revenue_before", "revenue_after", "guarantee_slack", "pruned", "prune_warning"],
        &[vec![
            num(eps),
            mode.clone(),
            m.menu_size().to_string(),
            rounded.menu_size().to_string(),
            num(before),
            num(after),
            num(slack),
            a.prune.to_string(),
            warning.unwrap_or_default(),
        ]],
    )?;
    let mut flags = vec![
        ("menu", a.menu.display().to_string()),
        ("epsilon", num(eps)),
        ("mode", mode),
        ("prune", a.prune.to_string()),
        ("dist", a.dist.clone()),
        ("output", a.output.clone()),
    ];
    if let Some(h) = a.h {
        flags.push(("h", num(h)));
    }
    out.write_manifest("round.csv", "round", &flags, &[])?;
    if a.mode == RoundMode::Additive && slack < -1e-10 {
        return Err(CliError::Invariant(format!("additive guarantee violated by {}", -slack)));
    }
    Ok(())
}

fn certify(a: &CertifyArgs, out: &Output) -> CliResult<()> {
    let m = read_menu(&a.menu)?;
    let b = ProductDistribution::beta12_squared();
    let rev = revenue_exact(&m, &b);
    let exact = certify_gap_exact(&m, a.quad_n)?;
    let mut rows = vec![vec![
        exact.kind.to_string(),
        String::new(),
        String::new(),
        num(exact.certified_gap),
        num(rev),
        num(exact.audit_value("z_term").unwrap_or(f64::NAN)),
        num(exact.audit_value("a_term").unwrap_or(f64::NAN)),
        num(exact.audit_value("quad_error").unwrap_or(f64::NAN)),
    ]];
    for &delta in &a.deltas {
        let c = certify_gap_coarse(&m, delta)?;
        if c.certified_gap > exact.certified_gap {
            return Err(CliError::Invariant(format!("coarse certificate exceeds exact at delta={delta}")));
        }
        rows.push(vec![
            c.kind.to_string(),
            num(delta),
            num(c.deviation_measure.unwrap_or(f64::NAN)),
            num(c.certified_gap),
            num(rev),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    out.write_csv(
        "certify.csv",
        &["kind", "delta", "deviation_measure", "certified_gap", "revenue", "z_term", "a_term", "quad_error"],
        &rows,
    )?;
    let mut flags = vec![("menu", a.menu.display().to_string()), ("quad-n", a.quad_n.to_string())];
    flags.extend(a.deltas.iter().map(|d| ("delta", num(*d))));
    out.write_manifest("certify.csv", "certify", &flags, &[])?;
    println!("certified_gap={}", exact.certified_gap);
    Ok(())
}

fn plapprox(a: &PlapproxArgs, out: &Output) -> CliResult<()> {
    let k = instance_constants();
    let mut rows = Vec::new();
    let mut bad = 0;
    for &delta in &a.deltas {
        let s = sweep_row(delta, a.per_family, a.seed)?;
        let l = segment_lemma_check(delta, a.lemma_segments, a.seed)?;
        bad += s.violations + l.violations;
        rows.push(vec![
            num(delta),
            num(s.budget),
            s.greedy_segments.to_string(),
            num(chord_bound(k.r, delta)?.bound),
            s.min_deviation.map(num).unwrap_or_default(),
            num(k.x_prime / 2.0),
            s.violations.to_string(),
            num(l.max_ratio),
            l.violations.to_string(),
        ]);
    }
    out.write_csv(
        "plapprox.csv",
        &["delta", "budget", "greedy_segments", "chord_bound", "min_deviation", "half_x_prime", "violations", "lemma_max_ratio", "lemma_violations"],
        &rows,
    )?;
    let mut flags = vec![
        ("per-family", a.per_family.to_string()),
        ("lemma-segments", a.lemma_segments.to_string()),
        ("seed", a.seed.to_string()),
    ];
    flags.extend(a.deltas.iter().map(|d| ("delta", num(*d))));
    out.write_manifest("plapprox.csv", "plapprox", &flags, &[])?;
    if bad > 0 {
        return Err(CliError::Invariant(format!("{bad} approximation violations")));
    }
    Ok(())
}

fn search_opts(restarts: usize, seed: u64, single_good: bool) -> SearchOptions {
    SearchOptions { restarts, seed, single_good }
}

fn entries_text(m: &Menu) -> String {
    m.entries().iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";")
}

fn optimize(a: &OptimizeArgs, out: &Output) -> CliResult<()> {
    let d = dist(&a.dist)?;
    let sweep = opt_menu_sweep(&d, a.cmax, &search_opts(a.restarts, a.seed, a.single_good))?;
    let mut rows = Vec::new();
    for (i, (m, r)) in sweep.iter().enumerate() {
        let c = i + 1;
        out.write_text(&format!("optimize_C{c}.txt"), &m.to_text())?;
        rows.push(vec![c.to_string(), num(*r), m.menu_size().to_string(), entries_text(m)]);
    }
    out.write_csv("optimize.csv", &["C", "revenue", "menu_size", "entries"], &rows)?;
    out.write_manifest(
        "optimize.csv",
        "optimize",
        &[
            ("dist", a.dist.clone()),
            ("cmax", a.cmax.to_string()),
            ("restarts", a.restarts.to_string()),
            ("seed", a.seed.to_string()),
            ("single-good", a.single_good.to_string()),
        ],
        &[],
    )?;
    Ok(())
}

fn oracle(a: &OracleArgs, out: &Output) -> CliResult<()> {
    let d = dist(&a.dist)?;
    let sol = opt_grid_lp(&d, a.n_grid)?;
    let ub = opt_upper_bounds(&d, a.n_grid)?;
    let base = baselines(&d);
    let mech = &sol.mechanism;
    let rows: Vec<Vec<String>> = (0..mech.types.len())
        .map(|i| {
            vec![
                num(mech.types[i].v1),
                num(mech.types[i].v2),
                num(mech.masses[i]),
                num(mech.q1[i]),
                num(mech.q2[i]),
                num(mech.t[i]),
            ]
        })
        .collect();
    out.write_csv("oracle_mechanism.csv", &["v1", "v2", "mass", "q1", "q2", "t"], &rows)?;
    out.write_csv(
        "oracle.csv",
        &["n_grid", "lp_value", "upper_bound", "upper_bound_nudged", "residual", "rows", "pivots", "srev", "brev", "bundle_price"],
        &[vec![
            a.n_grid.to_string(),
            num(sol.value),
            num(ub.additive),
            num(ub.nudged),
            num(sol.residual),
            sol.rows.to_string(),
            sol.pivots.to_string(),
            num(base.srev),
            num(base.brev),
            num(base.bundle_price),
        ]],
    )?;
    out.write_manifest("oracle.csv", "oracle", &[("dist", a.dist.clone()), ("n-grid", a.n_grid.to_string())], &[])?;
    if sol.residual > 1e-8 {
        return Err(CliError::Invariant(format!("LP residual {} above 1e-8", sol.residual)));
    }
    Ok(())
}

fn hazard(a: &HazardArgs, out: &Output) -> CliResult<()> {
    let d = dist(&a.dist)?;
    let h = hazard_check(&d, a.grid);
    let (m1, m2) = (myerson_price(&d.m1), myerson_price(&d.m2));
    out.write_csv(
        "hazard.csv",
        &["dist", "satisfied", "min_value", "argmin_v1", "argmin_v2", "myerson_price_1", "myerson_revenue_1", "myerson_price_2", "myerson_revenue_2"],
        &[vec![
            d.to_string(),
            h.satisfied.to_string(),
            num(h.min_value),
            num(h.argmin.v1),
            num(h.argmin.v2),
            num(m1.price),
            num(m1.revenue),
            num(m2.price),
            num(m2.revenue),
        ]],
    )?;
    out.write_manifest("hazard.csv", "hazard", &[("dist", a.dist.clone()), ("grid", a.grid.to_string())], &[])?;
    println!("hazard_condition={}", h.satisfied);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub c: usize,
    pub best_revenue: f64,
    pub gap_vs_upper_bound: f64,
    /// Only defined for the Beta(1,2)^2 instance.
    pub cert_exact: Option<f64>,
    pub menu: Menu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub rows: Vec<CurveRow>,
    pub upper_bound: f64,
    pub slope: Option<f64>,
}

impl Curve {
    pub fn slope_in_band(&self) -> bool {
        self.slope.is_some_and(|s| (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&s))
    }
}

/// Best menus for `C = 1..=cmax`, their gap to the grid upper bound, and the
/// exact certificate when the distribution is Beta(1,2)^2.
pub fn curve_rows(d: &ProductDistribution, cmax: usize, n_grid: usize, opts: &SearchOptions) -> CliResult<Curve> {
    let ub = opt_upper_bounds(d, n_grid)?.additive;
    let beta = *d == ProductDistribution::beta12_squared();
    let mut rows = Vec::new();
    for (i, (m, r)) in opt_menu_sweep(d, cmax, opts)?.into_iter().enumerate() {
        let cert = if beta { Some(certify_gap_exact(&m, 64)?.certified_gap) } else { None };
        rows.push(CurveRow { c: i + 1, best_revenue: r, gap_vs_upper_bound: ub - r, cert_exact: cert, menu: m });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.c as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.gap_vs_upper_bound).collect();
    Ok(Curve { slope: loglog_slope(&xs, &ys), rows, upper_bound: ub })
}

fn curve(a: &CurveArgs, out: &Output) -> CliResult<()> {
    let d = dist(&a.dist)?;
    let cv = curve_rows(&d, a.cmax, a.n_grid, &search_opts(a.restarts, a.seed, false))?;
    let rows: Vec<Vec<String>> = cv
        .rows
        .iter()
        .map(|r| {
            vec![
                r.c.to_string(),
                num(r.best_revenue),
                num(r.gap_vs_upper_bound),
                r.cert_exact.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    out.write_csv("curve.csv", &["C", "best_revenue", "gap_vs_upper_bound", "cert_exact"], &rows)?;
    let slope = cv.slope.map(num).unwrap_or_default();
    out.write_manifest(
        "curve.csv",
        "curve",
        &[
            ("dist", a.dist.clone()),
            ("cmax", a.cmax.to_string()),
            ("n-grid", a.n_grid.to_string()),
            ("restarts", a.restarts.to_string()),
            ("seed", a.seed.to_string()),
        ],
        &[("upper_bound", num(cv.upper_bound)), ("loglog_slope", slope.clone())],
    )?;
    if !cv.slope_in_band() {
        eprintln!(
            "warning: log-log slope {slope} of the gap curve is outside [{}, {}]",
            SLOPE_BAND.0, SLOPE_BAND.1
        );
    }
    if cv.rows.windows(2).any(|w| w[1].gap_vs_upper_bound > w[0].gap_vs_upper_bound) {
        return Err(CliError::Invariant("gap curve increases with C".into()));
    }
    Ok(())
}

type Check = (&'static str, Box<dyn Fn(u64) -> Result<String, String>>);

fn checks() -> Vec<Check> {
    let b = || ProductDistribution::beta12_squared();
    let u = || ProductDistribution::uniform_squared();
    let e = |x: menusize::Error| x.to_string();
    vec![
        ("unit_mass", Box::new(move |_| {
            let m = polygon_mass(&Polygon::rect(Rect::unit()), &b());
            if (m - 1.0).abs() <= 1e-12 { Ok(num(m)) } else { Err(num(m)) }
        })),
        ("x_prime", Box::new(move |_| {
            let x = instance_constants().x_prime;
            if (x - X_PRIME_REFERENCE).abs() <= 1e-7 { Ok(num(x)) } else { Err(num(x)) }
        })),
        ("column_balance", Box::new(move |_| {
            let xp = instance_constants().x_prime;
            let mut worst = 0.0f64;
            for i in 0..50 {
                worst = worst.max(column_balance(xp * i as f64 / 49.0).map_err(e)?.abs());
            }
            if worst <= 1e-8 { Ok(num(worst)) } else { Err(num(worst)) }
        })),
        ("myerson_beta12", Box::new(move |_| {
            let p = myerson_price(&menusize::dist::Marginal::beta12());
            if (p.price - 1.0 / 3.0).abs() <= 1e-9 && (p.revenue - 4.0 / 27.0).abs() <= 1e-9 {
                Ok(format!("{} {}", p.price, p.revenue))
            } else {
                Err(format!("{} {}", p.price, p.revenue))
            }
        })),
        ("exact_vs_mc", Box::new(move |seed| {
            let corpus = random_corpus(20, 20, seed);
            let mut ok = 0;
            for (i, m) in corpus.iter().enumerate() {
                let d = if i % 2 == 0 { u() } else { b() };
                let est = revenue_mc(m, &d, 100_000, seed + i as u64).map_err(e)?;
                if (revenue_exact(m, &d) - est.estimate).abs() <= 3.0 * est.stderr + 1e-15 {
                    ok += 1;
                }
            }
            if ok >= 18 { Ok(format!("{ok}/20")) } else { Err(format!("{ok}/20")) }
        })),
        ("additive_rounding", Box::new(move |seed| {
            let mut worst = f64::INFINITY;
            for m in random_corpus(20, 20, seed) {
                for eps in [0.05, 0.1, 0.2] {
                    let r = nudge_round_additive(&m, eps).map_err(e)?;
                    for d in [u(), b()] {
                        worst = worst.min(revenue_exact(&r, &d) - ((1.0 - eps) * revenue_exact(&m, &d) - eps));
                    }
                }
            }
            if worst >= -1e-10 { Ok(num(worst)) } else { Err(num(worst)) }
        })),
        ("certificate_soundness", Box::new(move |seed| {
            let ub = opt_upper_bounds(&b(), 8).map_err(e)?.additive;
            for m in random_corpus(10, 12, seed) {
                let cert = certify_gap_exact(&m, 64).map_err(e)?.certified_gap;
                if revenue_exact(&m, &b()) + cert > ub + 1e-6 {
                    return Err(format!("menu {m:?}"));
                }
                let coarse = certify_gap_coarse(&m, 1e-3).map_err(e)?.certified_gap;
                if coarse > cert {
                    return Err(format!("coarse {coarse} > exact {cert}"));
                }
            }
            Ok(format!("upper_bound={ub}"))
        })),
        ("approximation", Box::new(move |seed| {
            let s = sweep_row(1e-7, 10, seed).map_err(e)?;
            let l = segment_lemma_check(1e-7, 1000, seed).map_err(e)?;
            if s.violations == 0 && l.violations == 0 {
                Ok(format!("min_deviation={}", s.min_deviation.unwrap_or(f64::NAN)))
            } else {
                Err(format!("{} + {} violations", s.violations, l.violations))
            }
        })),
        ("comm_complexity", Box::new(move |_| {
            let v = comm_complexity(2).map_err(e)?;
            if v == 1 { Ok("1".into()) } else { Err(v.to_string()) }
        })),
    ]
}

fn selftest(a: &SelftestArgs, out: &Output) -> CliResult<()> {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (name, check) in checks() {
        let (status, detail) = match check(a.seed) {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(name);
                ("FAIL", d)
            }
        };
        println!("{status} {name}: {detail}");
        rows.push(vec![name.to_string(), status.to_string(), detail]);
    }
    out.write_csv("selftest.csv", &["check", "status", "detail"], &rows)?;
    out.write_manifest("selftest.csv", "selftest", &[("seed", a.seed.to_string())], &[])?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("failed checks: {}", failed.join(", "))))
    }
}

fn plot(a: &PlotArgs, out: &Output) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.csv).map_err(|e| CliError::Input(format!("{}: {e}", a.csv.display())))?;
    let spec = PlotSpec {
        x: a.x.clone(),
        ys: a.y.clone(),
        loglog: a.loglog,
        title: a.title.clone().unwrap_or_else(|| a.csv.display().to_string()),
    };
    let svg = render_svg(&text, &spec)?;
    let path = match &a.out {
        Some(p) => p.clone(),
        None => {
            let stem = a.csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
            out.path(&format!("{stem}.svg"))
        }
    };
    crate::output::write_atomic(&path, svg.as_bytes())?;
    println!("{}", path.display());
    Ok(())
}
