//! Static SVG line charts: stacked rows sharing a time axis, each with an
//! optional dashed overlay on its own scale (used for the midprice).

use std::fmt::Write;

use crate::time::{format_time_of_day, Micros};

const WIDTH: f64 = 960.0;
const ROW_HEIGHT: f64 = 240.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 80.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 34.0;
/// Above this many points a row is reduced to a min/max envelope per pixel.
const MAX_POINTS: usize = 4_000;

pub struct Row<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub times: &'a [Micros],
    pub rows: Vec<Row<'a>>,
    pub overlay: Option<Row<'a>>,
}

fn range(values: &[f64]) -> (f64, f64) {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    (lo, hi)
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

/// Points for one series, thinned to at most two per pixel column.
fn points(times: &[Micros], values: &[f64], x: impl Fn(Micros) -> f64, y: impl Fn(f64) -> f64) -> String {
    let mut out = String::new();
    let mut push = |px: f64, v: f64| {
        let _ = write!(out, "{:.1},{:.1} ", px, y(v));
    };
    if values.len() <= MAX_POINTS {
        for (&t, &v) in times.iter().zip(values) {
            push(x(t), v);
        }
    } else {
        let per = values.len().div_ceil(MAX_POINTS / 2);
        for (ts, vs) in times.chunks(per).zip(values.chunks(per)) {
            let (lo, hi) = range(vs);
            push(x(ts[0]), lo);
            push(x(ts[ts.len() - 1]), hi);
        }
    }
    out.pop();
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the chart. Output depends only on the inputs.
pub fn render(chart: &Chart<'_>) -> String {
    let rows = chart.rows.len().max(1);
    let height = MARGIN_TOP + rows as f64 * ROW_HEIGHT + MARGIN_BOTTOM;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let (t0, t1) = match (chart.times.first(), chart.times.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a, a + 1),
        _ => (0, 1),
    };
    let x = |t: Micros| MARGIN_LEFT + (t - t0) as f64 / (t1 - t0) as f64 * plot_w;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(chart.title)
    );
    for (i, row) in chart.rows.iter().enumerate() {
        let top = MARGIN_TOP + i as f64 * ROW_HEIGHT;
        let (inner_top, inner_bottom) = (top + 8.0, top + ROW_HEIGHT - 16.0);
        let (lo, hi) = range(row.values);
        let y = |v: f64| inner_bottom - (v - lo) / (hi - lo) * (inner_bottom - inner_top);
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_LEFT}" y="{inner_top:.1}" width="{plot_w:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
            inner_bottom - inner_top
        );
        if lo < 0.0 && hi > 0.0 {
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_LEFT}" x2="{:.1}" y1="{z:.1}" y2="{z:.1}" stroke="#ccc"/>"##,
                MARGIN_LEFT + plot_w,
                z = y(0.0)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            inner_top + 10.0,
            fmt_num(hi),
            MARGIN_LEFT - 6.0,
            inner_bottom,
            fmt_num(lo)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
            14,
            (inner_top + inner_bottom) / 2.0,
            (inner_top + inner_bottom) / 2.0,
            escape(row.label)
        );
        let _ = writeln!(
            svg,
            r##"<polyline fill="none" stroke="#1f5fbf" stroke-width="1" points="{}"/>"##,
            points(chart.times, row.values, x, y)
        );
        if let Some(over) = &chart.overlay {
            let (olo, ohi) = range(over.values);
            let oy = |v: f64| inner_bottom - (v - olo) / (ohi - olo) * (inner_bottom - inner_top);
            let _ = writeln!(
                svg,
                r##"<polyline fill="none" stroke="#d0451b" stroke-width="1" stroke-dasharray="4 3" points="{}"/>"##,
                points(chart.times, over.values, x, oy)
            );
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{:.1}" fill="#d0451b">{}</text><text x="{}" y="{:.1}" fill="#d0451b">{}</text>"##,
                MARGIN_LEFT + plot_w + 4.0,
                inner_top + 10.0,
                fmt_num(ohi),
                MARGIN_LEFT + plot_w + 4.0,
                inner_bottom,
                fmt_num(olo)
            );
        }
    }
    let axis_y = height - MARGIN_BOTTOM + 14.0;
    for i in 0..=4 {
        let t = t0 + (t1 - t0) * i / 4;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{axis_y:.1}" text-anchor="middle">{}</text>"#,
            x(t),
            format_time_of_day(t)
        );
    }
    if let Some(over) = &chart.overlay {
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{:.1}" text-anchor="end" fill="#d0451b">- - {}</text>"##,
            WIDTH - 8.0,
            axis_y + 12.0,
            escape(over.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_rows_and_overlay() {
        let times: Vec<Micros> = (0..10).map(|i| i * 100_000).collect();
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b = vec![0.0; 10];
        let mid = vec![1.745; 10];
        let chart = Chart {
            title: "a & b",
            times: &times,
            rows: vec![
                Row {
                    label: "limit",
                    values: &a,
                },
                Row {
                    label: "market",
                    values: &b,
                },
            ],
            overlay: Some(Row {
                label: "midprice",
                values: &mid,
            }),
        };
        let svg = render(&chart);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("a &amp; b"));
        assert_eq!(svg, render(&chart));
    }

    #[test]
    fn long_series_are_thinned() {
        let n = 50_000;
        let times: Vec<Micros> = (0..n).map(|i| i * 100_000).collect();
        let v: Vec<f64> = (0..n).map(|i| (i % 7) as f64).collect();
        let pts = points(&times, &v, |t| t as f64, |y| y);
        assert!(pts.split(' ').count() <= MAX_POINTS + 2);
    }

    #[test]
    fn empty_chart_is_valid() {
        let chart = Chart {
            title: "empty",
            times: &[],
            rows: vec![Row {
                label: "total",
                values: &[],
            }],
            overlay: None,
        };
        assert!(render(&chart).ends_with("</svg>\n"));
    }
}
