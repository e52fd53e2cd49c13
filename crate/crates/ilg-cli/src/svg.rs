//! Self-contained SVG convergence plots: error, both estimator parts, their
//! sum and the effectivity index against the element count, on log-log axes,
//! with a slope -1/2 reference line.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use ilg::AdaptRunRecord;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 180.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
}

pub fn render_svg(record: &AdaptRunRecord, title: &str) -> String {
    let levels = &record.levels;
    let mut series: Vec<Series> = Vec::new();
    let collect = |f: &dyn Fn(&ilg::LevelRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        levels
            .iter()
            .filter_map(|r| f(r).map(|v| (r.elements as f64, v)))
            .filter(|&(_, v)| v > 0.0)
            .collect()
    };
    series.push(Series {
        label: "error (H1)",
        color: "#d62728",
        points: collect(&|r| r.error_h1),
    });
    series.push(Series {
        label: "E_Galerkin",
        color: "#1f77b4",
        points: collect(&|r| Some(r.e_galerkin)),
    });
    series.push(Series {
        label: "E_Linear",
        color: "#2ca02c",
        points: collect(&|r| Some(r.e_linear)),
    });
    series.push(Series {
        label: "E_total",
        color: "#9467bd",
        points: collect(&|r| Some(r.e_total())),
    });
    series.push(Series {
        label: "effectivity",
        color: "#8c564b",
        points: collect(&|r| r.effectivity),
    });

    // Slope -1/2 reference anchored at the first error (or estimator) value.
    let anchor = series
        .iter()
        .find(|s| !s.points.is_empty())
        .map(|s| s.points[0]);
    if let Some((n0, y0)) = anchor {
        let n_max = levels.last().map(|r| r.elements as f64).unwrap_or(n0);
        let reference = vec![(n0, y0), (n_max, y0 * (n_max / n0).powf(-0.5))];
        series.push(Series {
            label: "slope -1/2",
            color: "#7f7f7f",
            points: reference,
        });
    }

    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &series {
        for &(x, y) in &s.points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi) = (1.0, 10.0, 0.1, 1.0);
    }
    if x_lo == x_hi {
        x_hi = x_lo * 10.0;
    }
    if y_lo == y_hi {
        y_hi = y_lo * 10.0;
    }
    let (lx0, lx1) = (x_lo.log10(), x_hi.log10());
    let (ly0, ly1) = (y_lo.log10(), y_hi.log10());
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let map_x = |x: f64| MARGIN_L + (x.log10() - lx0) / (lx1 - lx0) * plot_w;
    let map_y = |y: f64| MARGIN_T + (ly1 - y.log10()) / (ly1 - ly0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        xml_escape(title)
    );

    // Axes frame and decade ticks.
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for d in (lx0.floor() as i64)..=(lx1.ceil() as i64) {
        let x = 10f64.powi(d as i32);
        if x < x_lo * 0.999 || x > x_hi * 1.001 {
            continue;
        }
        let px = map_x(x);
        let _ = writeln!(
            svg,
            r##"<line x1="{px}" y1="{MARGIN_T}" x2="{px}" y2="{}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">1e{d}</text>"#,
            MARGIN_T + plot_h + 18.0
        );
    }
    for d in (ly0.floor() as i64)..=(ly1.ceil() as i64) {
        let y = 10f64.powi(d as i32);
        if y < y_lo * 0.999 || y > y_hi * 1.001 {
            continue;
        }
        let py = map_y(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_L}" y1="{py}" x2="{}" y2="{py}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">1e{d}</text>"#,
            MARGIN_L - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">elements</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    );

    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        if s.points.len() >= 2 {
            let path: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", map_x(x), map_y(y)))
                .collect();
            let dash = if s.label == "slope -1/2" {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
                path.join(" "),
                s.color
            );
        }
        if s.label != "slope -1/2" {
            for &(x, y) in &s.points {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.6" fill="{}"/>"#,
                    map_x(x),
                    map_y(y),
                    s.color
                );
            }
        }
        // Legend entry.
        let ly = MARGIN_T + 14.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#,
            lx + 22.0,
            s.color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            xml_escape(s.label)
        );
    }

    svg.push_str("</svg>\n");
    svg
}

pub fn emit_convergence_svg(
    record: &AdaptRunRecord,
    title: &str,
    path: &Path,
) -> io::Result<()> {
    crate::csv::write_atomic(path, &render_svg(record, title))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
