//! Single-panel line plots of CSV columns, written as plain SVG.

use std::fmt::Write as _;

use crate::{CliError, CliResult};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub ys: Vec<String>,
    pub loglog: bool,
    pub title: String,
}

struct Series {
    name: String,
    pts: Vec<(f64, f64)>,
}

fn read_series(csv_text: &str, spec: &PlotSpec) -> CliResult<Vec<Series>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_text.as_bytes());
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("column `{name}` not in CSV header")))
    };
    let xi = col(&spec.x)?;
    let yis = spec.ys.iter().map(|y| col(y)).collect::<CliResult<Vec<_>>>()?;
    let mut series: Vec<Series> = spec.ys.iter().map(|n| Series { name: n.clone(), pts: Vec::new() }).collect();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> CliResult<Option<f64>> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Input(format!("row {}: `{s}` is not a number", line + 2)))
        };
        let Some(x) = field(xi)? else { continue };
        for (s, &yi) in series.iter_mut().zip(&yis) {
            if let Some(y) = field(yi)? {
                if !spec.loglog || (x > 0.0 && y > 0.0) {
                    s.pts.push(if spec.loglog { (x.log10(), y.log10()) } else { (x, y) });
                }
            }
        }
    }
    Ok(series)
}

fn range(vals: impl Iterator<Item = f64>, loglog: bool) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if loglog { 0.5 } else { lo.abs().max(1.0) * 0.5 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64, loglog: bool) -> Vec<(f64, String)> {
    if loglog {
        let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
        if b >= a {
            let stride = ((b - a) / 6 + 1).max(1);
            return (a..=b).step_by(stride as usize).map(|k| (k as f64, format!("1e{k}"))).collect();
        }
    }
    (0..=4)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / 4.0;
            let label = if loglog {
                format!("{:.3}", 10f64.powf(v))
            } else if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
                format!("{v:.2e}")
            } else {
                format!("{v:.4}")
            };
            (v, label)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the plot. Empty data gives empty axes; unknown columns and
/// non-numeric cells are errors.
pub fn render_svg(csv_text: &str, spec: &PlotSpec) -> CliResult<String> {
    let series = read_series(csv_text, spec)?;
    let (x0, x1) = range(series.iter().flat_map(|s| s.pts.iter().map(|p| p.0)), spec.loglog);
    let (y0, y1) = range(series.iter().flat_map(|s| s.pts.iter().map(|p| p.1)), spec.loglog);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&spec.title));
    let _ = writeln!(s, r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
    for (v, label) in ticks(x0, x1, spec.loglog) {
        let x = sx(v);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, escape(&label));
    }
    for (v, label) in ticks(y0, y1, spec.loglog) {
        let y = sy(v);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, escape(&label));
    }
    let axis = |name: &str| if spec.loglog { format!("{name} (log)") } else { name.to_string() };
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 14.0, escape(&axis(&spec.x)));
    let ylabel = axis(&spec.ys.join(", "));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&ylabel)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if ser.pts.len() > 1 {
            let pts: Vec<String> = ser.pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        for &(x, y) in &ser.pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}" text-anchor="end" fill="{color}">{}</text>"#, LEFT + pw - 8.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(loglog: bool) -> PlotSpec {
        PlotSpec { x: "C".into(), ys: vec!["gap".into()], loglog, title: "t".into() }
    }

    #[test]
    fn deterministic_and_complete() {
        let csv = "C,gap\n1,0.5\n2,0.1\n3,0.05\n";
        let a = render_svg(csv, &spec(true)).unwrap();
        assert_eq!(a, render_svg(csv, &spec(true)).unwrap());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<circle").count(), 3);
        assert!(a.contains("1e-1"));
    }

    #[test]
    fn empty_data_gives_axes() {
        let a = render_svg("C,gap\n", &spec(false)).unwrap();
        assert!(a.contains("<rect") && !a.contains("<circle"));
        // non-positive values are dropped on log axes
        let b = render_svg("C,gap\n1,0\n", &spec(true)).unwrap();
        assert!(!b.contains("<circle"));
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(render_svg("C,gap\n1,abc\n", &spec(false)).is_err());
        assert!(render_svg("C,other\n1,2\n", &spec(false)).is_err());
        assert!(render_svg("C,gap\n1,2,3\n", &spec(false)).is_err());
    }
}
