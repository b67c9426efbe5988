//! Deterministic SVG rendering for the two chart kinds the experiments emit.
//!
//! Hand-rolled on purpose: identical input must give byte-identical output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::Error;
use crate::Result;

/// Chart type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// One miss-count distribution curve per victim access count; consumes
    /// the template store schema `victim_accesses,trial,miss_count`.
    HistogramOverlay,
    /// First-spill throws against bucket count; consumes the bucket-ball
    /// sweep schema `B,buckets,threshold,load_balanced,seed,throws_until_first_spill`.
    LineSweep,
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 60.0;

const PALETTE: [&str; 16] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#3182bd",
];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Strip comment lines and the header row of a CSV body.
fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .skip(1)
        .collect()
}

fn parse_row(line: &str, want: usize, lineno: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != want {
        return Err(Error::parse(format!(
            "row {lineno}: expected {want} fields, got {}",
            fields.len()
        )));
    }
    Ok(fields)
}

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_min) / (self.x_max - self.x_min).max(1e-12) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN
            - (v - self.y_min) / (self.y_max - self.y_min).max(1e-12) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_open(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    // Axis frame.
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        w = WIDTH - 2.0 * MARGIN,
        h = HEIGHT - 2.0 * MARGIN
    );
    s
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let coords = points
        .iter()
        .map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y)))
        .collect::<Vec<_>>()
        .join(" ");
    format!(r#"<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>"#)
}

fn legend(s: &mut String, labels: &[String]) {
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64 + 12.0;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="10" height="10" fill="{color}"/><text x="{tx}" y="{ty}" font-family="sans-serif" font-size="11">{label}</text>"#,
            x = WIDTH - MARGIN - 130.0,
            y = y - 9.0,
            tx = WIDTH - MARGIN - 115.0,
            ty = y
        );
    }
}

/// Overlaid per-victim-access miss-count distributions.
fn histogram_overlay(csv: &str) -> Result<String> {
    let rows = data_rows(csv);
    if rows.is_empty() {
        return Err(Error::parse("empty CSV: nothing to plot"));
    }
    // victim_accesses -> miss_count -> frequency
    let mut groups: BTreeMap<u64, BTreeMap<u64, u64>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        let f = parse_row(row, 3, i + 2)?;
        let acc: u64 = f[0]
            .parse()
            .map_err(|e| Error::parse(format!("row {}: {e}", i + 2)))?;
        let miss: u64 = f[2]
            .parse()
            .map_err(|e| Error::parse(format!("row {}: {e}", i + 2)))?;
        *groups.entry(acc).or_default().entry(miss).or_insert(0) += 1;
    }
    let x_min = groups
        .values()
        .flat_map(|h| h.keys().next())
        .min()
        .copied()
        .unwrap_or(0) as f64;
    let x_max = groups
        .values()
        .flat_map(|h| h.keys().next_back())
        .max()
        .copied()
        .unwrap_or(1) as f64;
    let y_max = groups
        .values()
        .flat_map(|h| h.values())
        .max()
        .copied()
        .unwrap_or(1) as f64;
    let axes = Axes {
        x_min,
        x_max,
        y_min: 0.0,
        y_max,
    };
    let mut s = svg_open(
        "Probe miss-count distributions per victim access count",
        "probe misses",
        "frequency",
    );
    let mut labels = Vec::new();
    for (i, (acc, hist)) in groups.iter().enumerate() {
        let points: Vec<(f64, f64)> = hist
            .iter()
            .map(|(miss, freq)| (axes.x(*miss as f64), axes.y(*freq as f64)))
            .collect();
        let _ = writeln!(s, "{}", polyline(&points, PALETTE[i % PALETTE.len()]));
        labels.push(format!("{acc} accesses"));
    }
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Median first-spill throws per bucket count, one curve per
/// (threshold, load_balanced) pair.
fn line_sweep(csv: &str) -> Result<String> {
    let rows = data_rows(csv);
    if rows.is_empty() {
        return Err(Error::parse("empty CSV: nothing to plot"));
    }
    // (threshold, load_balanced) -> buckets -> first-spill samples
    let mut groups: BTreeMap<(u64, bool), BTreeMap<u64, Vec<u64>>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        let f = parse_row(row, 6, i + 2)?;
        let bad = |e: std::num::ParseIntError| Error::parse(format!("row {}: {e}", i + 2));
        let buckets: u64 = f[1].parse().map_err(bad)?;
        let threshold: u64 = f[2].parse().map_err(bad)?;
        let lb = f[3] == "true" || f[3] == "1";
        if f[5].is_empty() {
            continue; // run hit max_throws without a spill
        }
        let throws: u64 = f[5].parse().map_err(bad)?;
        groups
            .entry((threshold, lb))
            .or_default()
            .entry(buckets)
            .or_default()
            .push(throws);
    }
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let (mut x_max, mut y_max) = (1.0f64, 1.0f64);
    for ((threshold, lb), by_buckets) in &groups {
        let mut points = Vec::new();
        for (buckets, samples) in by_buckets {
            let mut sorted = samples.clone();
            sorted.sort_unstable();
            let median = sorted[sorted.len() / 2] as f64;
            x_max = x_max.max(*buckets as f64);
            y_max = y_max.max(median);
            points.push((*buckets as f64, median));
        }
        let lb_label = if *lb { "balanced" } else { "unbalanced" };
        curves.push((format!("t={threshold} {lb_label}"), points));
    }
    let axes = Axes {
        x_min: 0.0,
        x_max,
        y_min: 0.0,
        y_max,
    };
    let mut s = svg_open(
        "Median throws until first bucket spill",
        "buckets",
        "throws",
    );
    let mut labels = Vec::new();
    for (i, (label, raw)) in curves.iter().enumerate() {
        let points: Vec<(f64, f64)> = raw.iter().map(|(x, y)| (axes.x(*x), axes.y(*y))).collect();
        let _ = writeln!(s, "{}", polyline(&points, PALETTE[i % PALETTE.len()]));
        labels.push(label.clone());
    }
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Render `csv_input` (file contents) as an SVG document.
pub fn emit_plot(csv_input: &str, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::HistogramOverlay => histogram_overlay(csv_input),
        PlotKind::LineSweep => line_sweep(csv_input),
    }
}
