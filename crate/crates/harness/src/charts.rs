//! Log-scale line charts of the per-iteration curves, as plain SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::HarnessError;

/// `(file stem, column, y-axis label)` for each chart.
pub const CRITERIA: [(&str, usize, &str); 3] = [
    ("regret", 2, "regret L(x̄) - L(x_ref)"),
    ("fpr", 3, "fixed point residual"),
    ("dist", 4, "‖x̄ - x_true‖"),
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Series {
    name: String,
    points: Vec<(f64, [f64; 3])>,
}

fn parse_curves(text: &str) -> Result<Vec<Series>, HarnessError> {
    let mut series: Vec<Series> = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 5 {
            return Err(HarnessError::Runtime(format!(
                "curves line {} is malformed",
                n + 1
            )));
        }
        let num = |s: &str| -> Result<f64, HarnessError> {
            s.parse().map_err(|_| {
                HarnessError::Runtime(format!("curves line {}: bad number `{s}`", n + 1))
            })
        };
        let k = num(f[1])?;
        let vals = [num(f[2])?, num(f[3])?, num(f[4])?];
        match series.iter_mut().find(|s| s.name == f[0]) {
            Some(s) => s.points.push((k, vals)),
            None => series.push(Series {
                name: f[0].to_string(),
                points: vec![(k, vals)],
            }),
        }
    }
    Ok(series)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn render(series: &[Series], idx: usize, label: &str) -> Option<String> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1[idx]))
        .filter(|v| positive(*v))
        .collect();
    if ys.is_empty() {
        return None;
    }
    let k_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(1.0f64, f64::max);
    let lo = ys
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .log10()
        .floor();
    let mut hi = ys
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .log10()
        .ceil();
    if hi <= lo {
        hi = lo + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |k: f64| {
        LEFT + if k_max > 1.0 {
            (k - 1.0) / (k_max - 1.0) * plot_w
        } else {
            0.0
        }
    };
    let sy = |v: f64| TOP + (hi - v.log10()) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let mut e = lo;
    while e <= hi {
        let y = sy(10f64.powf(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
        e += 1.0;
    }
    for i in 0..=4 {
        let k = 1.0 + (k_max - 1.0) * i as f64 / 4.0;
        let x = sx(k);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            k.round()
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration k</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| positive(p.1[idx]))
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1[idx])))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Writes `regret.svg`, `fpr.svg` and `dist.svg` from curves CSV text.
/// Empty input writes nothing.
pub fn emit_charts(curves_csv: &str, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let series = parse_curves(curves_csv)?;
    if series.is_empty() {
        log::warn!("no curve data; charts skipped");
        return Ok(vec![]);
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (stem, col, label) in CRITERIA {
        match render(&series, col - 2, label) {
            Some(svg) => {
                let path = dir.join(format!("{stem}.svg"));
                std::fs::write(&path, svg)?;
                written.push(path);
            }
            None => log::warn!("{stem}: no positive values to plot"),
        }
    }
    Ok(written)
}
