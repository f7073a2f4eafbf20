//! Minimal self-contained line chart of a load curve.

use std::fmt::Write;

use lfr_core::analysis::LoadPoint;
use lfr_core::model::Rational;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    dash: Option<&'a str>,
    points: Vec<(f64, f64)>,
}

pub fn render(users: usize, lambda: &Rational, points: &[LoadPoint]) -> String {
    let series = [
        Series {
            name: "proposed",
            color: "#1f77b4",
            dash: None,
            points: points.iter().map(|p| (to_f64(&p.mu), to_f64(&p.rho_proposed))).collect(),
        },
        Series {
            name: "baseline",
            color: "#d62728",
            dash: Some("6 4"),
            points: points.iter().map(|p| (to_f64(&p.mu), to_f64(&p.rho_baseline))).collect(),
        },
        Series {
            name: "scalar",
            color: "#2ca02c",
            dash: Some("2 3"),
            points: points
                .iter()
                .filter_map(|p| p.rho_scalar.as_ref().map(|s| (to_f64(&p.mu), to_f64(s))))
                .collect(),
        },
    ];
    let y_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(_, y)| y))
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.05;
    let sx = |x: f64| MARGIN + x * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y / y_max * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">K = {users}, lambda = {lambda}</text>"#,
        WIDTH / 2.0
    );
    // axes and ticks
    let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(1.0), sy(y_max));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" stroke="black" fill="none"/>"#
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t:.1}</text>"#,
            sx(t),
            y0 + 18.0
        );
        let v = y_max * t;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            x0 - 6.0,
            sy(v) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">mu</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">rho</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = s
            .dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
            path.join(" "),
            s.color
        );
        let ly = MARGIN + 16.0 * i as f64;
        let lx = WIDTH - MARGIN - 110.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            s.color,
            lx + 30.0,
            ly + 4.0,
            s.name
        );
    }
    out.push_str("</svg>\n");
    out
}
