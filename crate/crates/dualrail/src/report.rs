//! Sweep reports: per-sample records, per-cell statistics, table-shaped
//! summaries, time-versus-failure data and scaling fits.

use std::fmt::Write as _;
use std::io::Write;

use dualrail_core::sweep::{summarize, CellSummary};
use dualrail_core::{ScalingFit, ScalingPoint, SweepRecord};

use crate::error::Result;

/// Failure probabilities used for time-to-reach data and fits.
pub const DEFAULT_FAILURE_GRID: [f64; 9] = [0.5, 0.3, 0.2, 0.1, 0.07, 0.05, 0.03, 0.02, 0.01];

/// Which parameter runs along the columns of a summary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// One column per disorder strength Δ.
    Strength,
    /// One column per sign correlation c.
    Correlation,
}

fn pm(mean: f64, std: Option<f64>) -> String {
    match std {
        Some(s) => format!("{mean:.1}±{s:.1}"),
        None if mean.is_nan() => "NA".into(),
        None => format!("{mean:.1}±NA"),
    }
}

pub fn write_records<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "N", "delta", "c", "sample", "seed", "M", "total_time", "achieved", "final_failure"])?;
    for r in records {
        w.write_record([
            r.cell_index.to_string(),
            r.cell.len.to_string(),
            r.cell.strength.to_string(),
            r.cell.correlation.to_string(),
            r.sample.to_string(),
            r.seed.to_string(),
            r.measurements.to_string(),
            r.total_time.to_string(),
            r.achieved.to_string(),
            r.final_failure.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or("NA".into(), |v| v.to_string())
}

pub fn write_cells<W: Write>(out: W, summaries: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "delta", "c", "samples", "achieved", "junk_fraction", "mean_t", "std_t", "mean_M", "std_M"])?;
    for s in summaries {
        w.write_record([
            s.cell.len.to_string(),
            s.cell.strength.to_string(),
            s.cell.correlation.to_string(),
            s.samples.to_string(),
            s.achieved.to_string(),
            s.junk_fraction().to_string(),
            s.mean_time.to_string(),
            opt(s.std_time),
            s.mean_measurements.to_string(),
            opt(s.std_measurements),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two data rows (`t`, `M`) with one `mean±std` column per value of `axis`.
/// All summaries are expected to share the coordinates off the axis.
pub fn write_table<W: Write>(out: W, summaries: &[CellSummary], axis: Axis) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (label, key): (&str, fn(&CellSummary) -> f64) = match axis {
        Axis::Strength => ("delta", |s| s.cell.strength),
        Axis::Correlation => ("c", |s| s.cell.correlation),
    };
    let mut header = vec![label.to_string()];
    header.extend(summaries.iter().map(|s| key(s).to_string()));
    w.write_record(&header)?;
    if !summaries.is_empty() {
        let mut t = vec!["t".to_string()];
        t.extend(summaries.iter().map(|s| pm(s.mean_time, s.std_time)));
        w.write_record(&t)?;
        let mut m = vec!["M".to_string()];
        m.extend(summaries.iter().map(|s| pm(s.mean_measurements, s.std_measurements)));
        w.write_record(&m)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean time needed to reach each failure probability, per chain length.
pub fn write_time_vs_failure<W: Write>(out: W, points: &[ScalingPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "P", "abs_ln_P", "t"])?;
    for p in points {
        w.write_record([
            p.len.to_string(),
            p.failure.to_string(),
            p.failure.ln().abs().to_string(),
            p.time.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per labelled fit of `t = a · N^b · |ln P|`.
pub fn write_fits<W: Write>(out: W, fits: &[(String, ScalingFit)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "a", "b", "log_rms", "points"])?;
    for (label, fit) in fits {
        w.write_record([
            label.clone(),
            fit.prefactor.to_string(),
            fit.exponent.to_string(),
            fit.log_rms.to_string(),
            fit.points.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Groups summaries into tables: for each fixed (N, c) a Δ-table and for
/// each fixed (N, Δ) a c-table. Returns `(file stem, summaries, axis)`.
pub fn table_groups(records: &[SweepRecord]) -> Vec<(String, Vec<CellSummary>, Axis)> {
    let summaries = summarize(records);
    let mut out: Vec<(String, Vec<CellSummary>, Axis)> = Vec::new();
    for s in &summaries {
        let stems = [
            (format!("table_delta_N{}_c{}", s.cell.len, s.cell.correlation), Axis::Strength),
            (format!("table_c_N{}_delta{}", s.cell.len, s.cell.strength), Axis::Correlation),
        ];
        for (stem, axis) in stems {
            match out.iter_mut().find(|(name, _, _)| *name == stem) {
                Some((_, group, _)) => group.push(s.clone()),
                None => out.push((stem, vec![s.clone()], axis)),
            }
        }
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal SVG line plot; each series is `(label, points)`.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let all = series.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    y0 = y0.min(0.0);
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#,
            sx(fx),
            HEIGHT - MARGIN + 16.0
        );
        let _ =
            writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.1}</text>"#, MARGIN - 4.0, sy(fy) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">{y_label}</text>"#,
        y = HEIGHT / 2.0
    );
    for (i, (label, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ =
            writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Time-to-reach curves, one series per chain length.
pub fn time_vs_failure_svg(points: &[ScalingPoint]) -> String {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for p in points {
        let label = format!("N={}", p.len);
        let xy = (p.failure.ln().abs(), p.time);
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(xy),
            None => series.push((label, vec![xy])),
        }
    }
    for (_, v) in &mut series {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    svg_plot("time to reach joint failure P", "|ln P|", "t", &series)
}
