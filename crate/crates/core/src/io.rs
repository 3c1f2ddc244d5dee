//! Exports: JSON results, trajectory CSV and small SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path as FsPath;

use serde::Serialize;

use crate::bohmengine::Path;
use crate::error::Result;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &FsPath, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// Trajectories as CSV, header `traj_id,t,c1,...,cK`. Keeps every `every`-th
/// sample of each path plus its last one.
pub fn trajectories_csv(paths: &[Path], every: usize) -> String {
    let every = every.max(1);
    let dim = paths.iter().map(Path::dim).max().unwrap_or(0);
    let mut s = String::from("traj_id,t");
    for k in 1..=dim {
        let _ = write!(s, ",c{k}");
    }
    s.push('\n');
    for (id, p) in paths.iter().enumerate() {
        for i in 0..p.len() {
            if i % every != 0 && i + 1 != p.len() {
                continue;
            }
            let _ = write!(s, "{id},{}", p.times[i]);
            for c in &p.points[i] {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
    }
    s
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const COLOURS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn bounds<'a>(pts: impl Iterator<Item = &'a (f64, f64)>) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        if x.is_finite() && y.is_finite() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    (x0, x1, y0, y1)
}

/// Line plot of labelled `(x, y)` series.
pub fn line_plot_svg(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let (x0, x1, y0, y1) = bounds(series.iter().flat_map(|(_, p)| p.iter()));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );
    for (label, v) in [
        (format!("{x0:.3}"), (MARGIN, HEIGHT - MARGIN + 15.0)),
        (format!("{x1:.3}"), (WIDTH - MARGIN, HEIGHT - MARGIN + 15.0)),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{label}</text>"#,
            v.0, v.1
        );
    }
    for (label, y) in [
        (format!("{y0:.3}"), HEIGHT - MARGIN),
        (format!("{y1:.3}"), MARGIN),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{label}</text>"#,
            MARGIN - 4.0,
            y + 4.0
        );
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let mut d = String::new();
        for &(x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1" points="{}"/>"#,
            d.trim_end()
        );
        if !name.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
                WIDTH - MARGIN - 110.0,
                MARGIN + 16.0 * (i + 1) as f64,
                escape(name)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Overlaid normalized histograms on common bins.
pub fn histogram_svg(
    title: &str,
    xlabel: &str,
    series: &[(String, &[f64])],
    bins: usize,
) -> String {
    let bins = bins.max(1);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, v) in series {
        for &x in v.iter() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if !(lo.is_finite() && hi > lo) {
        lo = 0.0;
        hi = 1.0;
    }
    let w = (hi - lo) / bins as f64;
    let lines: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(name, v)| {
            let mut counts = vec![0usize; bins];
            for &x in v.iter() {
                counts[(((x - lo) / w) as usize).min(bins - 1)] += 1;
            }
            let norm = 1.0 / (v.len().max(1) as f64 * w);
            let mut pts = Vec::with_capacity(2 * bins);
            for (i, c) in counts.iter().enumerate() {
                let y = *c as f64 * norm;
                pts.push((lo + i as f64 * w, y));
                pts.push((lo + (i + 1) as f64 * w, y));
            }
            (name.clone(), pts)
        })
        .collect();
    line_plot_svg(title, xlabel, "density", &lines)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut p = Path::new();
        for i in 0..5 {
            p.push(i as f64, vec![i as f64, -(i as f64)], vec![1.0, -1.0]);
        }
        let csv = trajectories_csv(&[p.clone(), p], 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "traj_id,t,c1,c2");
        assert_eq!(lines[1], "0,0,0,-0");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[6], "1,4,4,-4");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = histogram_svg("h", "x", &[("a".into(), &[0.0, 1.0, 1.5][..])], 4);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("polyline"));
    }
}
