//! Minimal standalone SVG line chart: linear SNR axis, log₁₀ metric axis,
//! one polyline per estimator.

use std::fmt::Write as _;

use thiserror::Error;

use crate::config::Metric;
use crate::csv::CsvRow;

/// Zero values are drawn at this level with a marker.
pub const FLOOR: f64 = 1e-7;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Error, PartialEq)]
pub enum SvgError {
    #[error("no rows to plot")]
    EmptyInput,
    #[error("no finite {0} values to plot")]
    NothingToPlot(&'static str),
}

struct Point {
    snr: f64,
    value: f64,
    floored: bool,
}

fn value_of(row: &CsvRow, metric: Metric) -> f64 {
    match metric {
        Metric::Ber => row.ber,
        Metric::Mse => row.mse,
    }
}

pub fn render_svg(rows: &[CsvRow], metric: Metric) -> Result<String, SvgError> {
    if rows.is_empty() {
        return Err(SvgError::EmptyInput);
    }
    let mut series: Vec<(&str, Vec<Point>)> = Vec::new();
    for row in rows {
        let idx = match series.iter().position(|(name, _)| *name == row.estimator) {
            Some(i) => i,
            None => {
                series.push((&row.estimator, Vec::new()));
                series.len() - 1
            }
        };
        let v = value_of(row, metric);
        if !v.is_finite() || v < 0.0 {
            continue;
        }
        let floored = v < FLOOR;
        series[idx].1.push(Point {
            snr: row.snr_db,
            value: if floored { FLOOR } else { v },
            floored,
        });
    }
    for (_, pts) in &mut series {
        pts.sort_by(|a, b| a.snr.total_cmp(&b.snr));
    }
    let all: Vec<&Point> = series.iter().flat_map(|(_, p)| p).collect();
    if all.is_empty() {
        return Err(SvgError::NothingToPlot(metric.as_str()));
    }

    let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.snr), hi.max(p.snr))
    });
    if x1 - x0 < 1e-12 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let (vmin, vmax) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.value), hi.max(p.value))
    });
    let d0 = vmin.log10().floor() as i32;
    let mut d1 = vmax.log10().ceil() as i32;
    if d1 <= d0 {
        d1 = d0 + 1;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |v: f64| TOP + (d1 as f64 - v.log10()) / (d1 - d0) as f64 * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );

    for d in d0..=d1 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line class="grid" x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut ticks: Vec<f64> = all.iter().map(|p| p.snr).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    let stride = ticks.len().div_ceil(11).max(1);
    for x in ticks.iter().step_by(stride) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            sx(*x),
            TOP + plot_h + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR (dB)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        metric.as_str().to_uppercase()
    );

    if all.iter().any(|p| p.floored) {
        let y = sy(FLOOR);
        let _ = writeln!(
            s,
            r##"<line class="floor" x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            LEFT + plot_w
        );
    }

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let coords: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.snr), sy(p.value)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-estimator="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
            for p in pts.iter().filter(|p| p.floored) {
                let _ = writeln!(
                    s,
                    r#"<circle class="floor-marker" cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="{color}"/>"#,
                    sx(p.snr),
                    sy(p.value)
                );
            }
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{:.2}" y="{ly:.2}">{name}</text>"#,
            lx + 26.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
